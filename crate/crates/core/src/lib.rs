//! Finite-dimensional realization of the spectral construction for symmetric
//! operators presented in an orthonormal basis.
//!
//! The pipeline for a single truncation dimension `N` is
//!
//! ```text
//! OperatorSpec --truncate--> QuasiSampling --eigendecompose--> EigenDecomposition
//!     --> SpectralMeasure (mu) --> GramField --> FiberFrame --> DirectIntegral
//!     --> spectral projections / functional calculus / probes
//! ```
//!
//! Cross-`N` behaviour (Kolmogorov distances, binned pushforwards) stands in
//! for the limit objects that only exist in infinite dimension.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod direct_integral;
pub use direct_integral::{DirectIntegral, RangeProjector, Section};
pub mod error;
pub mod linalg;
pub mod operator;
pub mod par;
pub mod probe;
pub mod pvm;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod sections;
pub use sections::{build_fibers, gram_to_sections, measurable_projection, FiberFrame};
pub mod spectral_measure;

pub use config::{load_config, RunConfig, Tolerances, WeightsMode};

pub use error::{Error, Result};
pub use operator::{registry, scale_weights, truncate, OperatorKind, OperatorSpec, ScalarField};
pub use par::Execution;
pub use probe::{fit_ramp_polynomial, ramp_eval, ChebyshevPoly, RampSpec};
pub use pvm::{
    functional_calculus, spectral_projection, BorelSet, Interval, PiecewisePolynomial, Polynomial,
};
pub use report::CheckRow;
pub use sampling::{eigendecompose, Cluster, EigenDecomposition, QuasiSampling};

pub use spectral_measure::{AtomicMeasure, GramField, MeasureKind, SpectralMeasure};

/// Field scalar. Real operators carry zero imaginary parts throughout.
pub type Scalar = num_complex::Complex64;
pub type Matrix = nalgebra::DMatrix<Scalar>;
pub type Vector = nalgebra::DVector<Scalar>;
