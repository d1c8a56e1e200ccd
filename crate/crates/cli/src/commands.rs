use std::fmt::Write as _;
use std::path::Path;

use lextensor::harness::{self, IdentityId, Mutation, TrialConfig};
use lextensor::normal::validate_covariance;
use lextensor::tensor::{classic_vec, matricize_oracle};
use lextensor::{CpModel, DenseMatrix, DenseTensor, SeparableGaussian, TuckerModel};
use thiserror::Error;

use crate::format::{number, read_tensors, write_tensors, Format, FormatError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Parse { path: String, source: FormatError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Numeric(String),
    #[error("{0} identity check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::ChecksFailed(_) => 1,
            Self::Usage(_) | Self::Parse { .. } | Self::Io { .. } => 2,
            Self::Numeric(_) => 3,
        }
    }
}

impl From<lextensor::Error> for CliError {
    fn from(e: lextensor::Error) -> Self {
        use lextensor::Error as E;
        match e {
            E::Definiteness(_) | E::Capacity(_) => Self::Numeric(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        Self::Parse { path: "<output>".into(), source: e }
    }
}

pub enum View {
    Unfold(usize),
    Vec,
    Reconstruct,
}

fn load(path: &Path) -> Result<Vec<DenseTensor>, CliError> {
    let shown = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| CliError::Io { path: shown.clone(), source: e })?;
    read_tensors(&bytes).map_err(|e| CliError::Parse { path: shown, source: e })
}

fn load_one(path: &Path) -> Result<DenseTensor, CliError> {
    let mut tensors = load(path)?;
    if tensors.len() != 1 {
        return Err(CliError::Usage(format!("{}: expected one tensor, found {}", path.display(), tensors.len())));
    }
    Ok(tensors.pop().unwrap())
}

/// Order-2 tensors are matrices; an order-1 tensor is read as a column.
fn load_matrix(path: &Path) -> Result<DenseMatrix, CliError> {
    let t = load_one(path)?;
    match *t.dims() {
        [_] => Ok(DenseMatrix::column_vector(t.into_vec())),
        [r, c] => Ok(DenseMatrix::from_vec(r, c, t.into_vec())?),
        _ => Err(CliError::Usage(format!(
            "{}: expected a matrix, found a tensor of shape {}",
            path.display(),
            t.shape()
        ))),
    }
}

/// 1-based mode to 0-based, with the valid range in the message.
fn mode_index(k: usize, order: usize) -> Result<usize, CliError> {
    if k == 0 || k > order {
        return Err(CliError::Usage(format!("mode {k} out of range: valid modes are 1 to {order}")));
    }
    Ok(k - 1)
}

fn line(values: &[f64]) -> String {
    values.iter().map(|&v| number(v)).collect::<Vec<_>>().join(" ")
}

fn matrix_text(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        writeln!(out, "{}", line(m.row(i))).unwrap();
    }
    out
}

pub fn vec(input: &Path, classic: bool) -> Result<Vec<u8>, CliError> {
    let mut out = String::new();
    for t in load(input)? {
        let values = if classic { classic_vec(&t) } else { t.into_vec() };
        writeln!(out, "{}", line(&values)).unwrap();
    }
    Ok(out.into_bytes())
}

pub fn unfold(input: &Path, mode: usize, oracle: bool) -> Result<Vec<u8>, CliError> {
    let t = load_one(input)?;
    let m = mode_index(mode, t.order())?;
    let unfolding = if oracle { matricize_oracle(&t, m)? } else { t.matricize(m)? };
    Ok(matrix_text(&unfolding).into_bytes())
}

pub fn verify(
    trials: usize,
    seed: u64,
    tol: f64,
    ids: &[String],
    mutation: Mutation,
) -> Result<(Vec<u8>, usize), CliError> {
    let selected: Vec<IdentityId> = if ids.is_empty() {
        IdentityId::ALL.to_vec()
    } else {
        ids.iter().map(|s| s.parse()).collect::<Result<_, _>>()?
    };
    let cfg = TrialConfig { trials, seed, tolerance: tol, ..TrialConfig::default() };
    cfg.validate()?;
    let mut out = String::new();
    let mut failed = 0;
    for id in selected {
        let report = harness::run_identity_mutated(id, &cfg, mutation)?;
        failed += usize::from(!report.passed);
        writeln!(out, "{}", report.to_line()).unwrap();
    }
    Ok((out.into_bytes(), failed))
}

pub fn load_cp(paths: &[impl AsRef<Path>]) -> Result<CpModel, CliError> {
    let factors = paths.iter().map(|p| load_matrix(p.as_ref())).collect::<Result<Vec<_>, _>>()?;
    let rank = factors[0].cols();
    for (i, a) in factors.iter().enumerate().skip(1) {
        if a.cols() != rank {
            return Err(CliError::Usage(format!(
                "factor for mode {} has {} columns but mode 1 has {rank}",
                i + 1,
                a.cols()
            )));
        }
    }
    Ok(CpModel::new(factors)?)
}

pub fn load_tucker(core: &Path, paths: &[impl AsRef<Path>]) -> Result<TuckerModel, CliError> {
    let core = load_one(core)?;
    if paths.len() != core.order() {
        return Err(CliError::Usage(format!("core has order {} but {} factors were given", core.order(), paths.len())));
    }
    let factors = paths.iter().map(|p| load_matrix(p.as_ref())).collect::<Result<Vec<_>, _>>()?;
    for (i, (u, &r)) in factors.iter().zip(core.dims()).enumerate() {
        if u.cols() != r {
            return Err(CliError::Usage(format!(
                "factor for mode {} has {} columns but core dimension {} is {r}",
                i + 1,
                u.cols(),
                i + 1
            )));
        }
    }
    Ok(TuckerModel::new(core, factors)?)
}

fn view_output(
    view: View,
    order: usize,
    unfolding: impl Fn(usize) -> lextensor::Result<DenseMatrix>,
    reconstruct: impl Fn() -> lextensor::Result<DenseTensor>,
    vec: impl Fn() -> lextensor::Result<DenseMatrix>,
    format: Format,
) -> Result<Vec<u8>, CliError> {
    match view {
        View::Unfold(k) => Ok(matrix_text(&unfolding(mode_index(k, order)?)?).into_bytes()),
        View::Vec => Ok(format!("{}\n", line(vec()?.as_slice())).into_bytes()),
        View::Reconstruct => Ok(write_tensors(&[reconstruct()?], format)?),
    }
}

pub fn cp(model: &CpModel, view: View, format: Format) -> Result<Vec<u8>, CliError> {
    view_output(view, model.order(), |m| model.unfolding(m), || model.reconstruct(), || model.vec(), format)
}

pub fn tucker(model: &TuckerModel, view: View, format: Format) -> Result<Vec<u8>, CliError> {
    view_output(
        view,
        model.order(),
        |m| model.unfolding(m),
        || model.reconstruct(),
        || Ok(model.reconstruct()?.vec()),
        format,
    )
}

pub fn load_law(mean: &Path, covs: &[impl AsRef<Path>]) -> Result<SeparableGaussian, CliError> {
    let mean = load_one(mean)?;
    if covs.len() != mean.order() {
        return Err(CliError::Usage(format!(
            "mean has order {} but {} covariances were given",
            mean.order(),
            covs.len()
        )));
    }
    let mut sigmas = Vec::with_capacity(covs.len());
    for (i, path) in covs.iter().enumerate() {
        let sigma = load_matrix(path.as_ref())?;
        let n = mean.dims()[i];
        if sigma.rows() != n || sigma.cols() != n {
            return Err(CliError::Usage(format!(
                "covariance for mode {} is {}×{} but the mean needs {n}×{n}",
                i + 1,
                sigma.rows(),
                sigma.cols()
            )));
        }
        validate_covariance(&sigma).map_err(|e| CliError::Numeric(format!("covariance for mode {}: {e}", i + 1)))?;
        sigmas.push(sigma);
    }
    Ok(SeparableGaussian::new(mean, sigmas)?)
}

pub fn sample(law: &SeparableGaussian, count: usize, seed: u64, format: Format) -> Result<Vec<u8>, CliError> {
    Ok(write_tensors(&law.sample(seed, count), format)?)
}

pub fn logpdf(law: &SeparableGaussian, x: &Path) -> Result<Vec<u8>, CliError> {
    let mut out = String::new();
    for (i, t) in load(x)?.iter().enumerate() {
        if t.shape() != law.mean().shape() {
            return Err(CliError::Usage(format!(
                "{}: record {} has shape {} but the mean has shape {}",
                x.display(),
                i + 1,
                t.shape(),
                law.mean().shape()
            )));
        }
        writeln!(out, "{}", number(law.log_density(t)?)).unwrap();
    }
    Ok(out.into_bytes())
}

pub fn unfold_law(law: &SeparableGaussian, k: usize) -> Result<Vec<u8>, CliError> {
    let params = law.unfolding_law(mode_index(k, law.order())?)?;
    Ok(format!(
        "mean\n{}row covariance\n{}column covariance\n{}",
        matrix_text(&params.mean),
        matrix_text(&params.row_covariance),
        matrix_text(&params.col_covariance)
    )
    .into_bytes())
}
