use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("operator `{name}` is asymmetric: max |B - B*| = {asymmetry:e} exceeds {tolerance:e}")]
    Asymmetry {
        name: String,
        asymmetry: f64,
        tolerance: f64,
    },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("eigensolver did not converge for `{0}`")]
    EigenFailure(String),
    #[error("unknown cluster id {id} (decomposition has {count} clusters)")]
    UnknownCluster { id: usize, count: usize },
    #[error("atom at lambda = {lambda} has mass {mass:e} at or below tol_atom")]
    NegligibleAtom { lambda: f64, mass: f64 },
    #[error("Gram matrix is not positive semi-definite: step {step} residual {residual:e} below -{tolerance:e}")]
    NotPsd {
        step: usize,
        residual: f64,
        tolerance: f64,
    },
    #[error("measure mismatch: {0}")]
    MeasureMismatch(String),
    #[error("ill-conditioned range Gram matrix: condition estimate {0:e}")]
    IllConditioned(f64),
    #[error(
        "polynomial fit did not reach sup-error {target:e} by degree {max_degree}; best {best:e}"
    )]
    DegreeExhausted {
        target: f64,
        max_degree: usize,
        best: f64,
    },
    #[error("invalid set: {0}")]
    InvalidSet(String),
}
