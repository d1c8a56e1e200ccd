//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! lines always show in `cargo test` output; exits non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use lextensor::normal::mvn_log_density;
use lextensor::products::{cp_jacobian, kron_all, kron_determinant, outer};
use lextensor::tensor::{classic_vec, classic_vec_permutation, matricize_oracle};
use lextensor::{CpModel, DenseMatrix, DenseTensor, SeparableGaussian, Shape, TuckerModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_lextensor")
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    num.sqrt() / den.sqrt().max(1e-30)
}

fn matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..=1.0)).collect()).unwrap()
}

fn tensor(rng: &mut ChaCha8Rng, dims: &[usize]) -> DenseTensor {
    let len = dims.iter().product();
    DenseTensor::from_dims(dims.to_vec(), (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect()).unwrap()
}

fn random_dims(rng: &mut ChaCha8Rng, max_order: usize, max_dim: usize) -> Vec<usize> {
    let order = rng.random_range(1..=max_order);
    (0..order).map(|_| rng.random_range(1..=max_dim)).collect()
}

fn spd(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let b = matrix(rng, n, n);
    b.matmul(&b.transpose()).unwrap().add(&DenseMatrix::identity(n).scale(0.5)).unwrap().symmetrized().unwrap()
}

fn identity_suite() -> Outcome {
    let start = Instant::now();
    let out = Command::new(binary()).arg("verify").output().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    let passing = lines.iter().filter(|l| l.contains(" pass=true")).count();
    let detail = format!(
        "{passing}/{} identities pass, exit {:?}, {:.2} s",
        lines.len(),
        out.status.code(),
        elapsed.as_secs_f64()
    );
    if out.status.success() && lines.len() == 18 && passing == 18 && elapsed <= Duration::from_secs(60) {
        Ok(detail)
    } else {
        Err(format!("{detail}\n{text}"))
    }
}

fn oracle_cross_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut shapes = 0;
    for a in 1..=6 {
        for b in 1..=6 {
            for c in 1..=6 {
                let t = tensor(&mut rng, &[a, b, c]);
                for mode in 0..3 {
                    let direct = t.matricize(mode).map_err(|e| e.to_string())?;
                    let oracle = matricize_oracle(&t, mode).map_err(|e| e.to_string())?;
                    if direct.rows() != oracle.rows()
                        || direct.as_slice().iter().zip(oracle.as_slice()).any(|(x, y)| x.to_bits() != y.to_bits())
                    {
                        return Err(format!("{a}×{b}×{c} mode {} differs", mode + 1));
                    }
                }
                shapes += 1;
            }
        }
    }
    if shapes < 200 {
        return Err(format!("only {shapes} shapes"));
    }
    Ok(format!("{shapes} order-3 shapes, all modes bit-identical"))
}

/// All shapes with `Π n_i ≤ limit`: orders 1 to 3 with any positive
/// dimensions, higher orders with dimensions ≥ 2 (unit dimensions would
/// make that set infinite).
fn small_shapes(limit: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, product: usize, limit: usize, out: &mut Vec<Vec<usize>>) {
        if !prefix.is_empty() {
            out.push(prefix.clone());
        }
        let min = if prefix.len() >= 3 { 2 } else { 1 };
        if prefix.len() >= 3 && prefix.contains(&1) {
            return;
        }
        for d in min..=limit / product {
            prefix.push(d);
            grow(prefix, product * d, limit, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), 1, limit, &mut out);
    out
}

/// Checks both vectorization formulas on every index of `dims`, 1-based:
/// lexicographic `Σ (i_k - 1) Π_{l>k} n_l + 1` (for order 3:
/// `(i-1)JK + (j-1)K + k`) and classic `Σ (i_k - 1) Π_{l<k} n_l + 1`
/// (for order 3: `(k-1)IJ + (j-1)I + i`).
fn check_formulas(dims: &[usize]) -> Result<(), String> {
    let shape = Shape::new(dims.to_vec()).unwrap();
    let len = shape.len();
    let t = DenseTensor::from_dims(dims.to_vec(), (0..len).map(|v| v as f64 * 0.5 + 1.0).collect()).unwrap();
    let classic = classic_vec(&t);
    let p = classic_vec_permutation(&shape);
    let mut idx = vec![1usize; dims.len()];
    let mut hit = vec![false; len];
    for _ in 0..len {
        let (lex, cls) = if let [ni, nj, nk] = *dims {
            let (i, j, k) = (idx[0], idx[1], idx[2]);
            ((i - 1) * nj * nk + (j - 1) * nk + k, (k - 1) * ni * nj + (j - 1) * ni + i)
        } else {
            let mut lex = 0;
            let mut cls = 0;
            for k in 0..dims.len() {
                lex += (idx[k] - 1) * dims[k + 1..].iter().product::<usize>();
                cls += (idx[k] - 1) * dims[..k].iter().product::<usize>();
            }
            (lex + 1, cls + 1)
        };
        let zero_based: Vec<usize> = idx.iter().map(|i| i - 1).collect();
        let value = t.get(&zero_based).unwrap();
        if shape.linear_index(&zero_based).unwrap() + 1 != lex || t.as_slice()[lex - 1] != value {
            return Err(format!("{dims:?}: lexicographic position of {idx:?}"));
        }
        if classic[cls - 1] != value || p[cls - 1] != lex - 1 {
            return Err(format!("{dims:?}: classic position of {idx:?}"));
        }
        hit[p[cls - 1]] = true;
        for k in (0..dims.len()).rev() {
            idx[k] += 1;
            if idx[k] <= dims[k] {
                break;
            }
            idx[k] = 1;
        }
    }
    if hit.iter().any(|h| !h) {
        return Err(format!("{dims:?}: permutation is not a bijection"));
    }
    Ok(())
}

fn vectorization_formulas() -> Outcome {
    let shapes = small_shapes(1000);
    let mut entries = 0;
    for dims in &shapes {
        check_formulas(dims)?;
        entries += dims.iter().product::<usize>();
    }
    Ok(format!("{} shapes with Π n_i ≤ 1000, {entries} index checks, permutations bijective", shapes.len()))
}

fn model_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let dims = random_dims(&mut rng, 4, 5);
        let rank = rng.random_range(0..=4);
        let cp = CpModel::new(dims.iter().map(|&n| matrix(&mut rng, n, rank)).collect()).unwrap();
        let y = cp.reconstruct().unwrap();
        worst = worst.max(rel(y.as_slice(), cp.vec().unwrap().as_slice()));
        for mode in 0..dims.len() {
            worst = worst.max(rel(y.matricize(mode).unwrap().as_slice(), cp.unfolding(mode).unwrap().as_slice()));
        }
        let core_dims: Vec<usize> = dims.iter().map(|_| rng.random_range(1..=4)).collect();
        let core = tensor(&mut rng, &core_dims);
        let us = dims.iter().zip(&core_dims).map(|(&n, &r)| matrix(&mut rng, n, r)).collect();
        let tucker = TuckerModel::new(core, us).unwrap();
        let y = tucker.reconstruct().unwrap();
        for mode in 0..dims.len() {
            worst = worst.max(rel(y.matricize(mode).unwrap().as_slice(), tucker.unfolding(mode).unwrap().as_slice()));
        }
    }
    let detail = format!("500 CP + 500 Tucker models, max relative error {worst:.3e}");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn density_triangle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut instances = 0;
    while instances < 100 {
        let dims = random_dims(&mut rng, 4, 5);
        if dims.iter().product::<usize>() > 64 {
            continue;
        }
        let covs: Vec<DenseMatrix> = dims.iter().map(|&n| spd(&mut rng, n)).collect();
        let law = SeparableGaussian::new(tensor(&mut rng, &dims), covs).unwrap();
        let x = tensor(&mut rng, &dims);
        let direct = law.log_density(&x).unwrap();
        let (mean, cov) = law.vec_law().unwrap();
        worst = worst.max((direct - mvn_log_density(&mean, &cov, &x.vec()).unwrap()).abs());
        for mode in 0..dims.len() {
            let mn = law.unfolding_law(mode).unwrap();
            worst = worst.max((direct - mn.log_density(&x.matricize(mode).unwrap()).unwrap()).abs());
        }
        instances += 1;
    }
    let detail = format!("100 SPD instances, max absolute difference {worst:.3e}");
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let covs: Vec<DenseMatrix> = (0..3).map(|_| spd(&mut rng, 2)).collect();
    let law = SeparableGaussian::new(tensor(&mut rng, &[2, 2, 2]), covs.clone()).unwrap();
    let count = 100_000;
    let samples = law.sample(2016, count);
    let mut mean = [0.0; 8];
    for s in &samples {
        for (m, v) in mean.iter_mut().zip(s.as_slice()) {
            *m += v / count as f64;
        }
    }
    let mut emp = vec![0.0; 64];
    for s in &samples {
        let v = s.as_slice();
        for i in 0..8 {
            for j in 0..8 {
                emp[i * 8 + j] += (v[i] - mean[i]) * (v[j] - mean[j]) / (count - 1) as f64;
            }
        }
    }
    let gamma = kron_all(&covs).unwrap();
    let err = rel(gamma.as_slice(), &emp);
    let elapsed = start.elapsed();
    let detail = format!("10^5 samples, relative Frobenius error {err:.4}, {:.2} s", elapsed.as_secs_f64());
    if err <= 0.05 && elapsed <= Duration::from_secs(30) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinant_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let order = rng.random_range(1..=4);
        let mut dims = Vec::new();
        let mut product = 1;
        for _ in 0..order {
            let n = rng.random_range(1..=(64 / product).min(5));
            product *= n;
            dims.push(n);
        }
        let us: Vec<DenseMatrix> = dims.iter().map(|&n| matrix(&mut rng, n, n)).collect();
        let dense = kron_all(&us).unwrap().determinant().unwrap();
        let rule = kron_determinant(&us).unwrap().value;
        worst = worst.max((dense - rule).abs() / dense.abs().max(1e-300));
    }
    let worked = [DenseMatrix::identity(2).scale(2.0), DenseMatrix::identity(3).scale(3.0)];
    let rule = kron_determinant(&worked).unwrap().value;
    let dense = kron_all(&worked).unwrap().determinant().unwrap();
    let detail = format!("50 trials, max relative error {worst:.3e}; 2I_2 ⊠ 3I_3 gives {rule} (dense {dense})");
    if worst <= 1e-10 && rule == 46656.0 && dense == 46656.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn jacobian_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let dims = random_dims(&mut rng, 4, 5);
        let vecs: Vec<Vec<f64>> =
            dims.iter().map(|&n| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect();
        let refs: Vec<&[f64]> = vecs.iter().map(Vec::as_slice).collect();
        for mode in 0..dims.len() {
            let jac = cp_jacobian(&refs, mode).unwrap();
            for k in 0..dims[mode] {
                let mut plus = vecs.clone();
                let mut minus = vecs.clone();
                plus[mode][k] += h;
                minus[mode][k] -= h;
                let fp = outer(&plus.iter().map(Vec::as_slice).collect::<Vec<_>>()).unwrap();
                let fm = outer(&minus.iter().map(Vec::as_slice).collect::<Vec<_>>()).unwrap();
                for (row, (p, m)) in fp.as_slice().iter().zip(fm.as_slice()).enumerate() {
                    worst = worst.max(((p - m) / (2.0 * h) - jac[(row, k)]).abs());
                }
            }
        }
    }
    let detail = format!("100 rank-1 instances, step 1e-6, max absolute error {worst:.3e}");
    if worst <= 1e-7 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mutation_sensitivity() -> Outcome {
    let mut caught = Vec::new();
    for id in ["T1", "T8", "T11", "T15"] {
        let out = Command::new(binary())
            .args(["verify", "--id", id, "--mutation", "swap"])
            .output()
            .map_err(|e| e.to_string())?;
        let text = String::from_utf8_lossy(&out.stdout);
        if out.status.code() != Some(1) || !text.contains("pass=false") {
            return Err(format!("{id} survived the factor-order swap: {text}"));
        }
        caught.push(id);
    }
    Ok(format!("factor-order swap detected in {}", caught.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("identity suite with defaults", identity_suite),
        ("unfolding equals permute-reshape construction", oracle_cross_check),
        ("vectorization index formulas", vectorization_formulas),
        ("model unfoldings match reconstructions", model_consistency),
        ("array normal density triangle", density_triangle),
        ("Monte Carlo covariance", monte_carlo),
        ("Kronecker determinant rule", determinant_rule),
        ("rank-1 Jacobian formula", jacobian_formula),
        ("mutation sensitivity", mutation_sensitivity),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {detail}", n + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
