//! Randomized verification of the Kronecker/vectorization identities.
//!
//! Each registry entry evaluates both sides of one identity on random
//! instances: one side through tensor operations (outer products, mode
//! products, unfoldings) and the other through matrix and Kronecker
//! algebra. The error of a trial is the relative Frobenius distance
//! `‖L − R‖ / max(‖L‖, 1e-30)`; an identity passes when the largest error
//! over all trials is within the tolerance.
//!
//! Every trial draws from its own ChaCha8 stream, seeded from
//! `(seed, identity, trial index)`, so reports are reproducible and a
//! failing trial can be replayed alone with [`run_trial`].

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::DenseMatrix;
use crate::models::CpModel;
use crate::products::{
    cp_jacobian, khatri_rao, khatri_rao_all, kron, kron_all, kron_determinant, mode_product, multilinear_apply, outer,
    sylvester_vec_operator,
};
use crate::shape::Shape;
use crate::tensor::DenseTensor;

/// Largest `Π n_i` used for the dense determinant comparison.
pub const DETERMINANT_MAX_PRODUCT: usize = 64;
/// Largest space dimension drawn for the operator-basis check.
pub const BASIS_MAX_DIM: usize = 3;
/// Size cap `n·n'·m·m'` for [`operator_basis_independence`].
pub const BASIS_MAX_SIZE: usize = 4096;
/// Relative singular-value threshold for numerical rank.
pub const RANK_THRESHOLD: f64 = 1e-8;
/// Central-difference step in the Jacobian trials. The map is linear in the
/// differentiated block, so a unit step is exact up to rounding.
pub const JACOBIAN_STEP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IdentityId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
    T10,
    T11,
    T12,
    T13,
    T14,
    T15,
    T16,
    T17,
    AppA,
}

impl IdentityId {
    pub const ALL: [IdentityId; 18] = [
        Self::T1,
        Self::T2,
        Self::T3,
        Self::T4,
        Self::T5,
        Self::T6,
        Self::T7,
        Self::T8,
        Self::T9,
        Self::T10,
        Self::T11,
        Self::T12,
        Self::T13,
        Self::T14,
        Self::T15,
        Self::T16,
        Self::T17,
        Self::AppA,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::T1 => "T1",
            Self::T2 => "T2",
            Self::T3 => "T3",
            Self::T4 => "T4",
            Self::T5 => "T5",
            Self::T6 => "T6",
            Self::T7 => "T7",
            Self::T8 => "T8",
            Self::T9 => "T9",
            Self::T10 => "T10",
            Self::T11 => "T11",
            Self::T12 => "T12",
            Self::T13 => "T13",
            Self::T14 => "T14",
            Self::T15 => "T15",
            Self::T16 => "T16",
            Self::T17 => "T17",
            Self::AppA => "APP-A",
        }
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|&i| i == self).expect("listed") as u64
    }

    pub fn case(self) -> &'static IdentityCase {
        &REGISTRY[self.index() as usize]
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IdentityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownIdentity(s.to_string()))
    }
}

/// One registry entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCase {
    pub id: IdentityId,
    pub description: &'static str,
    /// Set for identities checked in a corrected form.
    pub note: Option<&'static str>,
}

pub static REGISTRY: [IdentityCase; 18] = [
    IdentityCase { id: IdentityId::T1, description: "vec(a ⊗ b) = a ⊠ b", note: None },
    IdentityCase { id: IdentityId::T2, description: "vec(A X Bᵀ) = (A ⊠ B) vec(X)", note: None },
    IdentityCase { id: IdentityId::T3, description: "(A ⊠ B)(C ⊠ D) = AC ⊠ BD", note: None },
    IdentityCase { id: IdentityId::T4, description: "(⊗ U_i)(⊗ a_i) = ⊗ U_i a_i", note: None },
    IdentityCase { id: IdentityId::T5, description: "(A ⊠ B)(C ⊙ D) = AC ⊙ BD", note: None },
    IdentityCase { id: IdentityId::T6, description: "(A ⊠ B)ᵀ = Aᵀ ⊠ Bᵀ", note: None },
    IdentityCase {
        id: IdentityId::T7,
        description: "vec(AX + XB) = (A ⊠ I + I ⊠ Bᵀ) vec(X)",
        note: Some("corrected-form"),
    },
    IdentityCase { id: IdentityId::T8, description: "vec(⊗ a_i) = ⊠ a_i in the same order", note: None },
    IdentityCase { id: IdentityId::T9, description: "[X •_i U]_(i) = U X_(i)", note: None },
    IdentityCase { id: IdentityId::T10, description: "vec((⊗ U_i) Y) = (⊠ U_i) vec(Y)", note: None },
    IdentityCase { id: IdentityId::T11, description: "[(⊗ U_j) Y]_(i) = U_i Y_(i) (⊠_{j≠i} U_jᵀ)", note: None },
    IdentityCase {
        id: IdentityId::T12, description: "[(⊗ U_j) Y]_(i) = (U_i ⊗ ⊠_{j≠i} U_j) Y_(i)", note: None
    },
    IdentityCase {
        id: IdentityId::T13,
        description: "[Σ_r ⊗_j a_r^(j)]_(i) = Σ_r a_r^(i) ⊗ ⊠_{j≠i} a_r^(j)",
        note: None,
    },
    IdentityCase { id: IdentityId::T14, description: "Σ_r a_r ⊠ b_r = (A ⊙ B) 1", note: None },
    IdentityCase { id: IdentityId::T15, description: "Y_(i) = A_i (⊙_{j≠i} A_j)ᵀ", note: None },
    IdentityCase {
        id: IdentityId::T16, description: "∂(⊗_j a_j)/∂a_i = a_1 ⊠ … ⊠ I ⊠ … ⊠ a_N", note: None
    },
    IdentityCase { id: IdentityId::T17, description: "|⊗ U_i| = Π |U_i|^{Π_{j≠i} n_j}", note: None },
    IdentityCase {
        id: IdentityId::AppA,
        description: "Kronecker products of operator bases are linearly independent",
        note: None,
    },
];

/// Generator limits for random instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_order: usize,
    pub max_dim: usize,
    pub max_rank: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Self { max_order: 4, max_dim: 5, max_rank: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub bounds: Bounds,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self { trials: 100, seed: 0, tolerance: 1e-10, bounds: Bounds::default() }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Argument("at least one trial is required".into()));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::Argument(format!("tolerance {} must be non-negative", self.tolerance)));
        }
        let b = self.bounds;
        if b.max_order == 0 || b.max_dim == 0 || b.max_rank == 0 {
            return Err(Error::Argument("dimension bounds must be positive".into()));
        }
        Ok(())
    }
}

/// Deliberate convention bugs used to show the suite catches them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    None,
    /// Reverse the factor order on the Kronecker/Khatri-Rao side, as the
    /// column-major convention would require.
    FactorOrderSwap,
    /// Use the transpose of the analytic Jacobian.
    TransposedJacobian,
    /// Replace one operator-basis element by a copy of another.
    DuplicateBasisElement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub trial: usize,
    /// Seed of the trial's own stream; pass it to [`run_trial`].
    pub seed: u64,
    pub shapes: String,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub id: IdentityId,
    pub trials: usize,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub counterexample: Option<Counterexample>,
    pub note: Option<&'static str>,
}

impl CheckReport {
    fn from_outcomes(
        id: IdentityId,
        tolerance: f64,
        outcomes: impl Iterator<Item = (usize, u64, TrialOutcome)>,
    ) -> Self {
        let mut trials = 0;
        let mut max_rel_err = 0.0f64;
        let mut counterexample = None;
        for (trial, seed, outcome) in outcomes {
            trials += 1;
            let err = if outcome.rel_err.is_nan() { f64::INFINITY } else { outcome.rel_err };
            max_rel_err = max_rel_err.max(err);
            if err > tolerance && counterexample.is_none() {
                counterexample = Some(Counterexample { trial, seed, shapes: outcome.shapes, rel_err: err });
            }
        }
        Self {
            id,
            trials,
            max_rel_err,
            tolerance,
            passed: max_rel_err <= tolerance,
            counterexample,
            note: id.case().note,
        }
    }

    /// One line: `id=… trials=… max_rel_err=… pass=…`, then
    /// `counterexample_seed=…` and `shapes=…` on failure and `note=…` when set.
    /// The error is written with 17 significant digits.
    pub fn to_line(&self) -> String {
        let mut line =
            format!("id={} trials={} max_rel_err={:.16e} pass={}", self.id, self.trials, self.max_rel_err, self.passed);
        if let Some(c) = &self.counterexample {
            line.push_str(&format!(" counterexample_seed={} shapes={}", c.seed, c.shapes));
        }
        if let Some(note) = self.note {
            line.push_str(&format!(" note={note}"));
        }
        line
    }
}

/// A report line read back by [`parse_report_line`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRecord {
    pub id: IdentityId,
    pub trials: usize,
    pub max_rel_err: f64,
    pub passed: bool,
    pub counterexample_seed: Option<u64>,
    pub note: Option<String>,
}

pub fn parse_report_line(line: &str) -> Result<ReportRecord> {
    let mut id = None;
    let mut trials = None;
    let mut max_rel_err = None;
    let mut passed = None;
    let mut counterexample_seed = None;
    let mut note = None;
    let bad = |field: &str| Error::Argument(format!("bad report field `{field}`"));
    for field in line.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| bad(field))?;
        match key {
            "id" => id = Some(value.parse::<IdentityId>()?),
            "trials" => trials = Some(value.parse().map_err(|_| bad(field))?),
            "max_rel_err" => max_rel_err = Some(value.parse().map_err(|_| bad(field))?),
            "pass" => passed = Some(value.parse().map_err(|_| bad(field))?),
            "counterexample_seed" => counterexample_seed = Some(value.parse().map_err(|_| bad(field))?),
            "note" => note = Some(value.to_string()),
            "shapes" => {}
            _ => return Err(bad(field)),
        }
    }
    Ok(ReportRecord {
        id: id.ok_or_else(|| bad("id"))?,
        trials: trials.ok_or_else(|| bad("trials"))?,
        max_rel_err: max_rel_err.ok_or_else(|| bad("max_rel_err"))?,
        passed: passed.ok_or_else(|| bad("pass"))?,
        counterexample_seed,
        note,
    })
}

/// Result of a single trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub rel_err: f64,
    pub shapes: String,
}

/// `‖lhs − rhs‖_F / max(‖lhs‖_F, 1e-30)`; infinite when the sizes differ.
pub fn relative_error(lhs: &[f64], rhs: &[f64]) -> f64 {
    if lhs.len() != rhs.len() {
        return f64::INFINITY;
    }
    let num: f64 = lhs.iter().zip(rhs).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = lhs.iter().map(|a| a * a).sum();
    math::sqrt(num) / math::sqrt(den).max(1e-30)
}

fn matrix_error(lhs: &DenseMatrix, rhs: &DenseMatrix) -> f64 {
    if lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols() {
        return f64::INFINITY;
    }
    relative_error(lhs.as_slice(), rhs.as_slice())
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trial `trial` of identity `id` under run seed `seed`.
pub fn trial_seed(seed: u64, id: IdentityId, trial: usize) -> u64 {
    splitmix(splitmix(seed ^ splitmix(id.index() + 1)) ^ trial as u64)
}

pub fn run_identity(id: IdentityId, cfg: &TrialConfig) -> Result<CheckReport> {
    run_identity_mutated(id, cfg, Mutation::None)
}

pub fn run_identity_mutated(id: IdentityId, cfg: &TrialConfig, mutation: Mutation) -> Result<CheckReport> {
    cfg.validate()?;
    let outcomes = (0..cfg.trials)
        .map(|t| {
            let seed = trial_seed(cfg.seed, id, t);
            run_trial(id, seed, &cfg.bounds, mutation).map(|o| (t, seed, o))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_outcomes(id, cfg.tolerance, outcomes.into_iter()))
}

/// Runs the whole registry in order.
pub fn run_all(cfg: &TrialConfig) -> Result<Vec<CheckReport>> {
    IdentityId::ALL.iter().map(|&id| run_identity(id, cfg)).collect()
}

/// Runs one trial from its own seed.
pub fn run_trial(id: IdentityId, seed: u64, bounds: &Bounds, mutation: Mutation) -> Result<TrialOutcome> {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), bounds: *bounds };
    let swap = mutation == Mutation::FactorOrderSwap;
    match id {
        IdentityId::T1 => t1(&mut g, swap),
        IdentityId::T2 => t2(&mut g, swap),
        IdentityId::T3 => t3(&mut g),
        IdentityId::T4 => t4(&mut g),
        IdentityId::T5 => t5(&mut g),
        IdentityId::T6 => t6(&mut g),
        IdentityId::T7 => t7(&mut g),
        IdentityId::T8 => t8(&mut g, swap),
        IdentityId::T9 => t9(&mut g),
        IdentityId::T10 => t10(&mut g, swap),
        IdentityId::T11 => t11(&mut g, swap),
        IdentityId::T12 => t12(&mut g),
        IdentityId::T13 => t13(&mut g, swap),
        IdentityId::T14 => t14(&mut g),
        IdentityId::T15 => t15(&mut g, swap),
        IdentityId::T16 => t16(&mut g, mutation),
        IdentityId::T17 => t17(&mut g),
        IdentityId::AppA => app_a(&mut g, mutation),
    }
}

struct Gen {
    rng: ChaCha8Rng,
    bounds: Bounds,
}

impl Gen {
    fn upto(&mut self, max: usize) -> usize {
        self.rng.random_range(1..=max.max(1))
    }

    fn dim(&mut self) -> usize {
        self.upto(self.bounds.max_dim)
    }

    fn order(&mut self) -> usize {
        self.upto(self.bounds.max_order)
    }

    fn rank(&mut self) -> usize {
        self.upto(self.bounds.max_rank)
    }

    fn dims(&mut self, order: usize) -> Vec<usize> {
        (0..order).map(|_| self.dim()).collect()
    }

    fn values(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.rng.random_range(-1.0..=1.0)).collect()
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let v = self.values(rows * cols);
        DenseMatrix::from_vec(rows, cols, v).expect("sizes agree")
    }

    fn tensor(&mut self, dims: &[usize]) -> DenseTensor {
        let shape = Shape::new(dims.to_vec()).expect("positive dims");
        let v = self.values(shape.len());
        DenseTensor::new(shape, v).expect("sizes agree")
    }

    /// Random orthogonal matrix times a diagonal in [0.5, 1.5].
    fn well_conditioned(&mut self, n: usize) -> DenseMatrix {
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
        while q.len() < n {
            let mut v = self.values(n);
            for u in &q {
                let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= d * ui;
                }
            }
            let norm = math::sqrt(v.iter().map(|x| x * x).sum());
            if norm > 1e-3 {
                q.push(v.into_iter().map(|x| x / norm).collect());
            }
        }
        let mut m = DenseMatrix::zeros(n, n);
        for (j, col) in q.iter().enumerate() {
            let s = self.rng.random_range(0.5..=1.5);
            for (i, &x) in col.iter().enumerate() {
                m[(i, j)] = x * s;
            }
        }
        m
    }
}

fn dims_str(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

fn mat_str(ms: &[&DenseMatrix]) -> String {
    ms.iter().map(|m| format!("{}x{}", m.rows(), m.cols())).collect::<Vec<_>>().join(",")
}

fn outcome(rel_err: f64, shapes: String) -> Result<TrialOutcome> {
    Ok(TrialOutcome { rel_err, shapes })
}

fn col(v: &[f64]) -> DenseMatrix {
    DenseMatrix::column_vector(v.to_vec())
}

fn kron_or_one(factors: &[DenseMatrix]) -> Result<DenseMatrix> {
    if factors.is_empty() {
        Ok(DenseMatrix::identity(1))
    } else {
        kron_all(factors)
    }
}

fn maybe_reversed<T: Clone>(mut v: Vec<T>, reverse: bool) -> Vec<T> {
    if reverse {
        v.reverse();
    }
    v
}

fn t1(g: &mut Gen, swap: bool) -> Result<TrialOutcome> {
    let (n1, n2) = (g.dim(), g.dim());
    let a = g.values(n1);
    let b = g.values(n2);
    let lhs = outer(&[&a, &b])?.vec();
    let rhs = if swap { kron(&col(&b), &col(&a)) } else { kron(&col(&a), &col(&b)) };
    outcome(matrix_error(&lhs, &rhs), format!("{n1},{n2}"))
}

fn t2(g: &mut Gen, swap: bool) -> Result<TrialOutcome> {
    let (p1, q1, p2, q2) = (g.dim(), g.dim(), g.dim(), g.dim());
    let a = g.matrix(p1, q1);
    let b = g.matrix(p2, q2);
    let x = g.tensor(&[q1, q2]);
    let lhs = mode_product(&mode_product(&x, &a, 0)?, &b, 1)?.vec();
    let op = if swap { kron(&b, &a) } else { kron(&a, &b) };
    let rhs = op.matmul(&x.vec());
    let err = rhs.map_or(f64::INFINITY, |r| matrix_error(&lhs, &r));
    outcome(err, format!("A={p1}x{q1},B={p2}x{q2}"))
}

fn t3(g: &mut Gen) -> Result<TrialOutcome> {
    let (p1, q1, r1, p2, q2, r2) = (g.dim(), g.dim(), g.dim(), g.dim(), g.dim(), g.dim());
    let a = g.matrix(p1, q1);
    let b = g.matrix(p2, q2);
    let c = g.matrix(q1, r1);
    let d = g.matrix(q2, r2);
    let lhs = kron(&a, &b).matmul(&kron(&c, &d))?;
    let rhs = kron(&a.matmul(&c)?, &b.matmul(&d)?);
    outcome(matrix_error(&lhs, &rhs), mat_str(&[&a, &b, &c, &d]))
}

fn t4(g: &mut Gen) -> Result<TrialOutcome> {
    let order = g.order();
    let dims = g.dims(order);
    let vecs: Vec<Vec<f64>> = dims.iter().map(|&n| g.values(n)).collect();
    let us: Vec<DenseMatrix> = dims
        .iter()
        .map(|&n| {
            let q = g.dim();
            g.matrix(q, n)
        })
        .collect();
    let refs: Vec<&[f64]> = vecs.iter().map(Vec::as_slice).collect();
    let lhs = multilinear_apply(&us, &outer(&refs)?)?;
    let images: Vec<Vec<f64>> =
        us.iter().zip(&vecs).map(|(u, a)| u.matmul(&col(a)).map(DenseMatrix::into_vec)).collect::<Result<_>>()?;
    let refs: Vec<&[f64]> = images.iter().map(Vec::as_slice).collect();
    let rhs = outer(&refs)?;
    outcome(relative_error(lhs.as_slice(), rhs.as_slice()), dims_str(&dims))
}

fn t5(g: &mut Gen) -> Result<TrialOutcome> {
    let (p1, q1, p2, q2, r) = (g.dim(), g.dim(), g.dim(), g.dim(), g.rank());
    let a = g.matrix(p1, q1);
    let b = g.matrix(p2, q2);
    let c = g.matrix(q1, r);
    let d = g.matrix(q2, r);
    let lhs = kron(&a, &b).matmul(&khatri_rao(&c, &d)?)?;
    let rhs = khatri_rao(&a.matmul(&c)?, &b.matmul(&d)?)?;
    outcome(matrix_error(&lhs, &rhs), mat_str(&[&a, &b, &c, &d]))
}

fn t6(g: &mut Gen) -> Result<TrialOutcome> {
    let (p1, q1, p2, q2) = (g.dim(), g.dim(), g.dim(), g.dim());
    let a = g.matrix(p1, q1);
    let b = g.matrix(p2, q2);
    let lhs = kron(&a, &b).transpose();
    let rhs = kron(&a.transpose(), &b.transpose());
    outcome(matrix_error(&lhs, &rhs), mat_str(&[&a, &b]))
}

fn t7(g: &mut Gen) -> Result<TrialOutcome> {
    let (m, n) = (g.dim(), g.dim());
    let a = g.matrix(m, m);
    let b = g.matrix(n, n);
    let x = g.tensor(&[m, n]);
    // AX + XB = X •_1 A + X •_2 Bᵀ
    let lhs = mode_product(&x, &a, 0)?.add(&mode_product(&x, &b.transpose(), 1)?)?.vec();
    let rhs = sylvester_vec_operator(&a, &b)?.matmul(&x.vec())?;
    outcome(matrix_error(&lhs, &rhs), format!("X={m}x{n}"))
}

fn t8(g: &mut Gen, swap: bool) -> Result<TrialOutcome> {
    let order = g.order();
    let dims = g.dims(order);
    let vecs: Vec<Vec<f64>> = dims.iter().map(|&n| g.values(n)).collect();
    let refs: Vec<&[f64]> = vecs.iter().map(Vec::as_slice).collect();
    let lhs = outer(&refs)?.vec();
    let cols = maybe_reversed(vecs.iter().map(|v| col(v)).collect(), swap);
    let rhs = kron_all(&cols)?;
    outcome(matrix_error(&lhs, &rhs), dims_str(&dims))
}

fn t9(g: &mut Gen) -> Result<TrialOutcome> {
    let order = g.order();
    let dims = g.dims(order);
    let x = g.tensor(&dims);
    let mut worst = 0.0f64;
    for (mode, &n) in dims.iter().enumerate() {
        let q = g.dim();
        let u = g.matrix(q, n);
        let lhs = mode_product(&x, &u, mode)?.matricize(mode)?;
        let rhs = u.matmul(&x.matricize(mode)?)?;
        worst = worst.max(matrix_error(&lhs, &rhs));
    }
    outcome(worst, dims_str(&dims))
}

fn random_operator(g: &mut Gen, dims: &[usize]) -> Vec<DenseMatrix> {
    dims.iter()
        .map(|&n| {
            let q = g.dim();
            g.matrix(q, n)
        })
        .collect()
}

fn t10(g: &mut Gen, swap: bool) -> Result<TrialOutcome> {
    let order = g.order();
    let dims = g.dims(order);
    let y = g.tensor(&dims);
    let us = random_operator(g, &dims);
    let lhs = multilinear_apply(&us, &y)?.vec();
    let op = kron_all(&maybe_reversed(us.clone(), swap))?;
    let err = op.matmul(&y.vec()).map_or(f64::INFINITY, |r| matrix_error(&lhs, &r));
    outcome(err, dims_str(&dims))
}

fn t11(g: &mut Gen, swap: bool) -> Result<TrialOutcome> {
    let order = g.order();
    let dims = g.dims(order);
    let y = g.tensor(&dims);
    let us = random_operator(g, &dims);
    let image = multilinear_apply(&us, &y)?;
    let mut worst = 0.0f64;
    for mode in 0..order {
        let lhs = image.matricize(mode)?;
        let rest: Vec<DenseMatrix> =
            us.iter().enumerate().filter(|&(j, _)| j != mode).map(|(_, u)| u.transpose()).collect();
        let right = kron_or_one(&maybe_reversed(rest, swap))?;
        let rhs = us[mode].matmul(&y.matricize(mode)?)?.matmul(&right);
        worst = worst.max(rhs.map_or(f64::INFINITY, |r| matrix_error(&lhs, &r)));
    }
    outcome(worst, dims_str(&dims))
}

fn t12(g: &mut Gen) -> Result<TrialOutcome> {
    let order = g.order();
    let dims = g.dims(order);
    let y = g.tensor(&dims);
    let us = random_operator(g, &dims);
    let image = multilinear_apply(&us, &y)?;
    let mut worst = 0.0f64;
    for mode in 0..order {
        let lhs = image.matricize(mode)?;
        let rest: Vec<DenseMatrix> =
            us.iter().enumerate().filter(|&(j, _)| j != mode).map(|(_, u)| u.clone()).collect();
        let unfolded = y.matricize(mode)?;
        let as_tensor = DenseTensor::from_dims(vec![unfolded.rows(), unfolded.cols()], unfolded.into_vec())?;
        let rhs = multilinear_apply(&[us[mode].clone(), kron_or_one(&rest)?], &as_tensor)?;
        worst = worst.max(relative_error(lhs.as_slice(), rhs.as_slice()));
    }
    outcome(worst, dims_str(&dims))
}

fn random_cp(g: &mut Gen) -> (Vec<usize>, usize, Vec<DenseMatrix>) {
    let order = g.order();
    let dims = g.dims(order);
    let rank = g.rank();
    let factors = dims.iter().map(|&n| g.matrix(n, rank)).collect();
    (dims, rank, factors)
}

fn t13(g: &mut Gen, swap: bool) -> Result<TrialOutcome> {
    let (dims, rank, factors) = random_cp(g);
    let mut y = DenseTensor::zeros(Shape::new(dims.clone())?);
    for r in 0..rank {
        let cols: Vec<Vec<f64>> = factors.iter().map(|a| a.column(r)).collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        y = y.add(&outer(&refs)?)?;
    }
    let mut worst = 0.0f64;
    for mode in 0..dims.len() {
        let lhs = y.matricize(mode)?;
        let mut rhs = DenseMatrix::zeros(lhs.rows(), lhs.cols());
        for r in 0..rank {
            let rest: Vec<DenseMatrix> =
                factors.iter().enumerate().filter(|&(j, _)| j != mode).map(|(_, a)| col(&a.column(r))).collect();
            let tail = kron_or_one(&maybe_reversed(rest, swap))?;
            rhs = rhs.add(&col(&factors[mode].column(r)).matmul(&tail.transpose())?)?;
        }
        worst = worst.max(matrix_error(&lhs, &rhs));
    }
    outcome(worst, format!("{} R={rank}", dims_str(&dims)).replace(' ', ","))
}

fn t14(g: &mut Gen) -> Result<TrialOutcome> {
    let (n1, n2, rank) = (g.dim(), g.dim(), g.rank());
    let a = g.matrix(n1, rank);
    let b = g.matrix(n2, rank);
    let mut lhs = DenseMatrix::zeros(n1 * n2, 1);
    for r in 0..rank {
        lhs = lhs.add(&kron(&col(&a.column(r)), &col(&b.column(r))))?;
    }
    let rhs = khatri_rao(&a, &b)?.matmul(&DenseMatrix::from_vec(rank, 1, vec![1.0; rank])?)?;
    outcome(matrix_error(&lhs, &rhs), mat_str(&[&a, &b]))
}

fn t15(g: &mut Gen, swap: bool) -> Result<TrialOutcome> {
    let (dims, rank, factors) = random_cp(g);
    let y = CpModel::new(factors.clone())?.reconstruct()?;
    let mut worst = 0.0f64;
    for mode in 0..dims.len() {
        let lhs = y.matricize(mode)?;
        let rest: Vec<DenseMatrix> =
            factors.iter().enumerate().filter(|&(j, _)| j != mode).map(|(_, a)| a.clone()).collect();
        let kr = if rest.is_empty() {
            DenseMatrix::from_vec(1, rank, vec![1.0; rank])?
        } else {
            khatri_rao_all(&maybe_reversed(rest, swap))?
        };
        let rhs = factors[mode].matmul(&kr.transpose())?;
        worst = worst.max(matrix_error(&lhs, &rhs));
    }
    outcome(worst, format!("{},R={rank}", dims_str(&dims)))
}

/// Central differences of `vec(⊗ a_j)` with respect to `a_mode`.
pub fn jacobian_by_differences(vectors: &[&[f64]], mode: usize, step: f64) -> Result<DenseMatrix> {
    let n = vectors
        .get(mode)
        .ok_or_else(|| Error::Argument(format!("mode {mode} out of range for {} vectors", vectors.len())))?
        .len();
    let len: usize = vectors.iter().map(|v| v.len()).product();
    let mut jac = DenseMatrix::zeros(len, n);
    for k in 0..n {
        let mut plus: Vec<Vec<f64>> = vectors.iter().map(|v| v.to_vec()).collect();
        let mut minus = plus.clone();
        plus[mode][k] += step;
        minus[mode][k] -= step;
        let fp = outer(&plus.iter().map(Vec::as_slice).collect::<Vec<_>>())?;
        let fm = outer(&minus.iter().map(Vec::as_slice).collect::<Vec<_>>())?;
        for (row, (p, m)) in fp.as_slice().iter().zip(fm.as_slice()).enumerate() {
            jac[(row, k)] = (p - m) / (2.0 * step);
        }
    }
    Ok(jac)
}

fn t16(g: &mut Gen, mutation: Mutation) -> Result<TrialOutcome> {
    let order = g.order();
    let dims = g.dims(order);
    let vecs: Vec<Vec<f64>> = dims.iter().map(|&n| g.values(n)).collect();
    let refs: Vec<&[f64]> = vecs.iter().map(Vec::as_slice).collect();
    let mut worst = 0.0f64;
    for mode in 0..order {
        let lhs = jacobian_by_differences(&refs, mode, JACOBIAN_STEP)?;
        let rhs = match mutation {
            Mutation::TransposedJacobian => cp_jacobian(&refs, mode)?.transpose(),
            Mutation::FactorOrderSwap => {
                let rev: Vec<&[f64]> = refs.iter().rev().copied().collect();
                cp_jacobian(&rev, order - 1 - mode)?
            }
            _ => cp_jacobian(&refs, mode)?,
        };
        worst = worst.max(matrix_error(&lhs, &rhs));
    }
    outcome(worst, dims_str(&dims))
}

fn t17(g: &mut Gen) -> Result<TrialOutcome> {
    let order = g.order();
    let mut dims = Vec::with_capacity(order);
    let mut product = 1;
    for _ in 0..order {
        let cap = (DETERMINANT_MAX_PRODUCT / product).min(g.bounds.max_dim);
        let n = g.upto(cap);
        product *= n;
        dims.push(n);
    }
    let us: Vec<DenseMatrix> = dims.iter().map(|&n| g.matrix(n, n)).collect();
    let dense = kron_all(&us)?.determinant()?;
    let rule = kron_determinant(&us)?.value;
    let err = if dense == rule { 0.0 } else { (dense - rule).abs() / dense.abs().max(1e-30) };
    outcome(err, dims_str(&dims))
}

/// Elementary operators `E_ab` (`a < rows`, `b < cols`) sending `e_b` to
/// `e'_a`, conjugated as `P E_ab Q`.
fn operator_basis(rows: usize, cols: usize, p: &DenseMatrix, q: &DenseMatrix) -> Result<Vec<DenseMatrix>> {
    let mut basis = Vec::with_capacity(rows * cols);
    for a in 0..rows {
        for b in 0..cols {
            let mut e = DenseMatrix::zeros(rows, cols);
            e[(a, b)] = 1.0;
            basis.push(p.matmul(&e)?.matmul(q)?);
        }
    }
    Ok(basis)
}

/// Rank deficit of the family `{u_i ⊠ v_j}` relative to its size.
fn basis_family_deficit(us: &[DenseMatrix], vs: &[DenseMatrix], duplicate: bool) -> Result<f64> {
    let mut family: Vec<Vec<f64>> = us.iter().flat_map(|u| vs.iter().map(move |v| kron(u, v).into_vec())).collect();
    if duplicate {
        let copy = if family.len() > 1 { family[0].clone() } else { vec![0.0; family[0].len()] };
        let last = family.len() - 1;
        family[last] = copy;
    }
    let count = family.len();
    let len = family[0].len();
    let stacked = DenseMatrix::from_vec(count, len, family.concat())?;
    let rank = stacked.numerical_rank(RANK_THRESHOLD);
    Ok((count - rank) as f64 / count as f64)
}

fn app_a(g: &mut Gen, mutation: Mutation) -> Result<TrialOutcome> {
    let cap = g.bounds.max_dim.min(BASIS_MAX_DIM);
    let (n, n_out, m, m_out) = (g.upto(cap), g.upto(cap), g.upto(cap), g.upto(cap));
    let p = g.well_conditioned(n_out);
    let q = g.well_conditioned(n);
    let r = g.well_conditioned(m_out);
    let s = g.well_conditioned(m);
    let us = operator_basis(n_out, n, &p, &q)?;
    let vs = operator_basis(m_out, m, &r, &s)?;
    let deficit = basis_family_deficit(&us, &vs, mutation == Mutation::DuplicateBasisElement)?;
    outcome(deficit, format!("n={n},n'={n_out},m={m},m'={m_out}"))
}

/// Checks that `{u_i ⊠ v_j}` has full rank `n·n'·m·m'` for the elementary
/// bases of `L(R^n, R^{n'})` and `L(R^m, R^{m'})`.
pub fn operator_basis_independence(n: usize, n_out: usize, m: usize, m_out: usize) -> Result<CheckReport> {
    operator_basis_independence_mutated(n, n_out, m, m_out, Mutation::None)
}

pub fn operator_basis_independence_mutated(
    n: usize,
    n_out: usize,
    m: usize,
    m_out: usize,
    mutation: Mutation,
) -> Result<CheckReport> {
    if [n, n_out, m, m_out].contains(&0) {
        return Err(Error::Argument("space dimensions must be positive".into()));
    }
    let size = [n, n_out, m, m_out].iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    if size.is_none_or(|s| s > BASIS_MAX_SIZE) {
        return Err(Error::Capacity(format!("n·n'·m·m' exceeds {BASIS_MAX_SIZE}")));
    }
    let us = operator_basis(n_out, n, &DenseMatrix::identity(n_out), &DenseMatrix::identity(n))?;
    let vs = operator_basis(m_out, m, &DenseMatrix::identity(m_out), &DenseMatrix::identity(m))?;
    let deficit = basis_family_deficit(&us, &vs, mutation == Mutation::DuplicateBasisElement)?;
    let shapes = format!("n={n},n'={n_out},m={m},m'={m_out}");
    Ok(CheckReport::from_outcomes(
        IdentityId::AppA,
        0.0,
        core::iter::once((0, 0, TrialOutcome { rel_err: deficit, shapes })),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> TrialConfig {
        TrialConfig { trials: 20, seed: 11, ..TrialConfig::default() }
    }

    #[test]
    fn ids_round_trip_through_text() {
        for id in IdentityId::ALL {
            assert_eq!(id.as_str().parse::<IdentityId>().unwrap(), id);
            assert_eq!(id.case().id, id);
        }
        assert_eq!("app-a".parse::<IdentityId>().unwrap(), IdentityId::AppA);
        assert_eq!("T18".parse::<IdentityId>(), Err(Error::UnknownIdentity("T18".into())));
    }

    #[test]
    fn exact_identities_have_zero_error() {
        for id in [IdentityId::T1, IdentityId::T6, IdentityId::T8] {
            let r = run_identity(id, &quick()).unwrap();
            assert_eq!(r.max_rel_err, 0.0, "{id}");
            assert!(r.passed);
        }
    }

    #[test]
    fn every_identity_passes_a_short_run() {
        for report in run_all(&quick()).unwrap() {
            assert!(report.passed, "{}", report.to_line());
            assert_eq!(report.trials, 20);
            assert!(report.counterexample.is_none());
        }
    }

    #[test]
    fn transposed_jacobian_is_caught() {
        let r = run_identity_mutated(IdentityId::T16, &quick(), Mutation::TransposedJacobian).unwrap();
        assert!(!r.passed);
        let c = r.counterexample.clone().unwrap();
        // the recorded seed replays the failing trial on its own
        let replay = run_trial(IdentityId::T16, c.seed, &quick().bounds, Mutation::TransposedJacobian).unwrap();
        assert_eq!(replay.rel_err, c.rel_err);
        assert_eq!(replay.shapes, c.shapes);
        assert!(r.to_line().contains("counterexample_seed="));
    }

    #[test]
    fn basis_check_examples() {
        let r = operator_basis_independence(2, 2, 2, 2).unwrap();
        assert!(r.passed && r.max_rel_err == 0.0);
        assert!(operator_basis_independence(1, 1, 1, 1).unwrap().passed);
        let r = operator_basis_independence_mutated(2, 2, 2, 2, Mutation::DuplicateBasisElement).unwrap();
        assert!(!r.passed);
        assert!((r.max_rel_err - 1.0 / 16.0).abs() < 1e-15);
        assert!(!operator_basis_independence_mutated(1, 1, 1, 1, Mutation::DuplicateBasisElement).unwrap().passed);
        assert!(matches!(operator_basis_independence(8, 8, 8, 9), Err(Error::Capacity(_))));
    }

    #[test]
    fn report_lines_parse_back() {
        let r = run_identity(IdentityId::T7, &TrialConfig { trials: 3, ..quick() }).unwrap();
        let line = r.to_line();
        assert!(line.starts_with("id=T7 trials=3 max_rel_err="));
        assert!(line.ends_with("note=corrected-form"));
        let rec = parse_report_line(&line).unwrap();
        assert_eq!(rec.id, IdentityId::T7);
        assert_eq!(rec.max_rel_err.to_bits(), r.max_rel_err.to_bits());
        assert!(rec.passed);
        assert_eq!(rec.note.as_deref(), Some("corrected-form"));
        assert!(parse_report_line("id=T1 trials=x").is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrialConfig { trials: 0, ..TrialConfig::default() }.validate().is_err());
        assert!(TrialConfig { tolerance: f64::NAN, ..TrialConfig::default() }.validate().is_err());
        assert!(TrialConfig { tolerance: 0.0, ..TrialConfig::default() }.validate().is_ok());
    }

    #[test]
    fn relative_error_metric() {
        assert_eq!(relative_error(&[0.0], &[0.0]), 0.0);
        assert_eq!(relative_error(&[3.0, 4.0], &[3.0, 4.0]), 0.0);
        assert!((relative_error(&[3.0, 4.0], &[3.0, 5.0]) - 0.2).abs() < 1e-16);
        assert_eq!(relative_error(&[1.0], &[1.0, 2.0]), f64::INFINITY);
        assert!((relative_error(&[0.0], &[1e-40]) - 1e-10).abs() < 1e-20);
    }
}
