//! Symmetric operators presented in an orthonormal basis, and their
//! truncation to the span of the first `N` basis vectors.
//!
//! Indices are zero-based: column `j` is `A e_{j+1}` in one-based notation.

use std::fmt;
use std::sync::Arc;

use crate::linalg::{asymmetry, max_abs};
use crate::{Error, Matrix, Result, Scalar};

pub mod registry;

pub use registry::ReferenceLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarField {
    Real,
    Complex,
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Real => f.write_str("real"),
            ScalarField::Complex => f.write_str("complex"),
        }
    }
}

pub type EntryFn = Arc<dyn Fn(usize, usize) -> Scalar + Send + Sync>;
pub type ColumnFn = Arc<dyn Fn(usize) -> Vec<Scalar> + Send + Sync>;

/// A real sequence, either stored or generated on demand (infinite).
#[derive(Clone)]
pub enum Sequence {
    Finite(Vec<f64>),
    Generated(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

#[allow(clippy::len_without_is_empty)]
impl Sequence {
    pub fn generated(f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        Sequence::Generated(Arc::new(f))
    }

    pub fn constant(value: f64) -> Self {
        Self::generated(move |_| value)
    }

    pub fn get(&self, j: usize) -> Option<f64> {
        match self {
            Sequence::Finite(v) => v.get(j).copied(),
            Sequence::Generated(f) => Some(f(j)),
        }
    }

    pub fn len(&self) -> Option<usize> {
        match self {
            Sequence::Finite(v) => Some(v.len()),
            Sequence::Generated(_) => None,
        }
    }
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sequence::Finite(v) => f.debug_tuple("Finite").field(v).finish(),
            Sequence::Generated(_) => f.write_str("Generated(..)"),
        }
    }
}

#[derive(Clone)]
pub enum OperatorKind {
    Diagonal(Sequence),
    /// Symmetric tridiagonal; `offdiag[j]` couples columns `j` and `j + 1`.
    Jacobi {
        diag: Sequence,
        offdiag: Sequence,
    },
    /// Entries `entry(i, j)` for `|i - j| <= bandwidth`, zero elsewhere.
    Banded {
        bandwidth: usize,
        entry: EntryFn,
        size: Option<usize>,
    },
    Dense(Matrix),
    /// `action(j)` returns the coefficients of `A e_j`.
    Callable {
        action: ColumnFn,
        size: Option<usize>,
    },
}

impl fmt::Debug for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Diagonal(d) => f.debug_tuple("Diagonal").field(d).finish(),
            OperatorKind::Jacobi { diag, offdiag } => f
                .debug_struct("Jacobi")
                .field("diag", diag)
                .field("offdiag", offdiag)
                .finish(),
            OperatorKind::Banded {
                bandwidth, size, ..
            } => f
                .debug_struct("Banded")
                .field("bandwidth", bandwidth)
                .field("size", size)
                .finish_non_exhaustive(),
            OperatorKind::Dense(m) => write!(f, "Dense({}x{})", m.nrows(), m.ncols()),
            OperatorKind::Callable { size, .. } => f
                .debug_struct("Callable")
                .field("size", size)
                .finish_non_exhaustive(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub name: String,
    pub kind: OperatorKind,
    pub field: ScalarField,
    /// Known limit law of the spectral measure of the first basis vector.
    pub reference: Option<ReferenceLaw>,
}

pub fn tol_sym(max_entry: f64) -> f64 {
    1e-12 * (1.0 + max_entry)
}

impl OperatorSpec {
    pub fn diagonal(name: impl Into<String>, entries: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            kind: OperatorKind::Diagonal(Sequence::Finite(entries)),
            field: ScalarField::Real,
            reference: None,
        }
    }

    pub fn jacobi(name: impl Into<String>, diag: Sequence, offdiag: Sequence) -> Result<Self> {
        if let (Some(d), Some(o)) = (diag.len(), offdiag.len()) {
            if o + 1 < d {
                return Err(Error::Validation(format!(
                    "jacobi operator with {d} diagonal entries needs {} off-diagonal entries, got {o}",
                    d - 1
                )));
            }
        }
        if diag.len().is_none() && offdiag.len().is_some() {
            return Err(Error::Validation(
                "infinite jacobi diagonal with finite off-diagonal".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            kind: OperatorKind::Jacobi { diag, offdiag },
            field: ScalarField::Real,
            reference: None,
        })
    }

    /// Dense Hermitian operator. Rejected unless `m` equals its conjugate
    /// transpose within `tol_sym`.
    pub fn dense(name: impl Into<String>, m: Matrix, field: ScalarField) -> Result<Self> {
        let name = name.into();
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "dense operator `{name}` is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if field == ScalarField::Real && m.iter().any(|z| z.im != 0.0) {
            return Err(Error::Validation(format!(
                "real operator `{name}` has imaginary entries"
            )));
        }
        let asym = asymmetry(&m);
        let tol = tol_sym(max_abs(&m));
        if asym > tol {
            return Err(Error::Asymmetry {
                name,
                asymmetry: asym,
                tolerance: tol,
            });
        }
        Ok(Self {
            name,
            kind: OperatorKind::Dense(m),
            field,
            reference: None,
        })
    }

    pub fn banded(
        name: impl Into<String>,
        bandwidth: usize,
        size: Option<usize>,
        field: ScalarField,
        entry: impl Fn(usize, usize) -> Scalar + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            kind: OperatorKind::Banded {
                bandwidth,
                entry: Arc::new(entry),
                size,
            },
            field,
            reference: None,
        }
    }

    pub fn callable(
        name: impl Into<String>,
        size: Option<usize>,
        field: ScalarField,
        action: impl Fn(usize) -> Vec<Scalar> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            kind: OperatorKind::Callable {
                action: Arc::new(action),
                size,
            },
            field,
            reference: None,
        }
    }

    pub fn with_reference(mut self, law: ReferenceLaw) -> Self {
        self.reference = Some(law);
        self
    }

    /// Dimension of the underlying Hilbert space; `None` for `l^2`.
    pub fn dimension(&self) -> Option<usize> {
        match &self.kind {
            OperatorKind::Diagonal(d) => d.len(),
            OperatorKind::Jacobi { diag, .. } => diag.len(),
            OperatorKind::Banded { size, .. } | OperatorKind::Callable { size, .. } => *size,
            OperatorKind::Dense(m) => Some(m.nrows()),
        }
    }

    /// Band half-width when the operator is banded (diagonal: 0, Jacobi: 1).
    pub fn bandwidth(&self) -> Option<usize> {
        match &self.kind {
            OperatorKind::Diagonal(_) => Some(0),
            OperatorKind::Jacobi { .. } => Some(1),
            OperatorKind::Banded { bandwidth, .. } => Some(*bandwidth),
            OperatorKind::Dense(_) | OperatorKind::Callable { .. } => None,
        }
    }

    /// Coefficients of `A e_j` over its full (finite) support.
    pub fn column(&self, j: usize) -> Result<Vec<Scalar>> {
        if let Some(dim) = self.dimension() {
            if j >= dim {
                return Err(Error::Dimension(format!(
                    "basis index {j} outside the {dim}-dimensional space of `{}`",
                    self.name
                )));
            }
        }
        let missing = |what: &str, idx: usize| {
            Error::Dimension(format!("`{}` has no {what} entry {idx}", self.name))
        };
        let re = |x: f64| Scalar::new(x, 0.0);
        match &self.kind {
            OperatorKind::Diagonal(d) => {
                let mut col = vec![Scalar::default(); j + 1];
                col[j] = re(d.get(j).ok_or_else(|| missing("diagonal", j))?);
                Ok(col)
            }
            OperatorKind::Jacobi { diag, offdiag } => {
                let has_next = diag.len().is_none_or(|d| j + 1 < d);
                let mut col = vec![Scalar::default(); if has_next { j + 2 } else { j + 1 }];
                if j > 0 {
                    col[j - 1] = re(offdiag
                        .get(j - 1)
                        .ok_or_else(|| missing("off-diagonal", j - 1))?);
                }
                col[j] = re(diag.get(j).ok_or_else(|| missing("diagonal", j))?);
                if has_next {
                    col[j + 1] = re(offdiag.get(j).ok_or_else(|| missing("off-diagonal", j))?);
                }
                Ok(col)
            }
            OperatorKind::Banded {
                bandwidth,
                entry,
                size,
            } => {
                let last = match size {
                    Some(s) => (j + bandwidth).min(s - 1),
                    None => j + bandwidth,
                };
                let first = j.saturating_sub(*bandwidth);
                let mut col = vec![Scalar::default(); last + 1];
                for (i, slot) in col.iter_mut().enumerate().skip(first) {
                    *slot = entry(i, j);
                }
                Ok(col)
            }
            OperatorKind::Dense(m) => Ok(m.column(j).iter().copied().collect()),
            OperatorKind::Callable { action, .. } => Ok(action(j)),
        }
    }
}

/// Leading `N x N` block `<A e_j, e_i>` after symmetrization, plus the
/// asymmetry of the raw block.
#[derive(Debug, Clone)]
pub struct Truncation {
    pub matrix: Matrix,
    pub asymmetry: f64,
    pub tolerance: f64,
}

pub fn truncate(spec: &OperatorSpec, n: usize) -> Result<Truncation> {
    if n < 2 {
        return Err(Error::Dimension(format!(
            "truncation dimension must be at least 2, got {n}"
        )));
    }
    if let Some(dim) = spec.dimension() {
        if n > dim {
            return Err(Error::Dimension(format!(
                "cannot truncate `{}` (dimension {dim}) to N = {n}",
                spec.name
            )));
        }
    }
    let mut raw = Matrix::zeros(n, n);
    for j in 0..n {
        let col = spec.column(j)?;
        for (i, v) in col.into_iter().take(n).enumerate() {
            raw[(i, j)] = v;
        }
    }
    if spec.field == ScalarField::Real && raw.iter().any(|z| z.im != 0.0) {
        return Err(Error::Validation(format!(
            "real operator `{}` produced imaginary entries",
            spec.name
        )));
    }
    let asym = asymmetry(&raw);
    let tolerance = tol_sym(max_abs(&raw));
    if asym > tolerance {
        return Err(Error::Asymmetry {
            name: spec.name.clone(),
            asymmetry: asym,
            tolerance,
        });
    }
    let matrix = (&raw + raw.adjoint()).unscale(2.0);
    Ok(Truncation {
        matrix,
        asymmetry: asym,
        tolerance,
    })
}

/// Default scale weights `c_j = 2^-j / (1 - 2^-N)` for `j = 1..=N`.
pub fn scale_weights(n: usize) -> Vec<f64> {
    let norm = 1.0 - 0.5f64.powi(n as i32);
    (1..=n).map(|j| 0.5f64.powi(j as i32) / norm).collect()
}

/// Positivity and `sum c_j = 1` for an orthonormal basis.
pub fn validate_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::Validation(format!(
            "expected {n} weights, got {}",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::Validation(format!(
            "weights must be strictly positive, found {w}"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "weights must sum to 1, got {total}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn c(re: f64, im: f64) -> Scalar {
        Scalar::new(re, im)
    }

    #[test]
    fn weights_match_closed_form() {
        let w = scale_weights(2);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-16);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-16);
        let w = scale_weights(3);
        for (got, want) in w.iter().zip([4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]) {
            assert!((got - want).abs() < 1e-16);
        }
        assert_eq!(scale_weights(1), vec![1.0]);
    }

    #[test]
    fn diagonal_truncation() {
        let t = truncate(&OperatorSpec::diagonal("d", vec![1.0, 2.0, 3.0]), 3).unwrap();
        let want = Matrix::from_diagonal(&crate::Vector::from_vec(vec![
            c(1.0, 0.0),
            c(2.0, 0.0),
            c(3.0, 0.0),
        ]));
        assert_eq!(t.matrix, want);
        assert_eq!(t.asymmetry, 0.0);
    }

    #[test]
    fn jacobi_truncation() {
        let spec =
            OperatorSpec::jacobi("fj", Sequence::constant(0.0), Sequence::constant(1.0)).unwrap();
        let t = truncate(&spec, 3).unwrap().matrix;
        let want = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t[(i, j)], c(want[i][j], 0.0));
            }
        }
    }

    #[test]
    fn dense_truncation_matches_entrywise_oracle() {
        let entries = [
            [c(2.0, 0.0), c(1.0, 1.0), c(0.0, -0.5), c(3.0, 0.0)],
            [c(1.0, -1.0), c(-1.0, 0.0), c(0.25, 0.0), c(0.0, 2.0)],
            [c(0.0, 0.5), c(0.25, 0.0), c(4.0, 0.0), c(1.0, 1.0)],
            [c(3.0, 0.0), c(0.0, -2.0), c(1.0, -1.0), c(0.5, 0.0)],
        ];
        let m = Matrix::from_fn(4, 4, |i, j| entries[i][j]);
        let spec = OperatorSpec::dense("h4", m.clone(), ScalarField::Complex).unwrap();
        let t = truncate(&spec, 3).unwrap().matrix;
        for j in 0..3 {
            // <A e_j, e_i> computed as the i-th coefficient of A e_j.
            let mut e_j = crate::Vector::zeros(4);
            e_j[j] = c(1.0, 0.0);
            let ae = &m * e_j;
            for i in 0..3 {
                let mut e_i = crate::Vector::zeros(4);
                e_i[i] = c(1.0, 0.0);
                assert_eq!(t[(i, j)], crate::linalg::inner(&ae, &e_i));
            }
        }
    }

    #[test]
    fn asymmetric_dense_rejected() {
        let m = Matrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            OperatorSpec::dense("bad", m, ScalarField::Real),
            Err(Error::Asymmetry { .. })
        ));
    }

    #[test]
    fn callable_is_symmetrized_and_reports_asymmetry() {
        let spec = OperatorSpec::callable("cb", None, ScalarField::Real, |j| {
            let mut col = vec![Scalar::default(); j + 2];
            col[j] = c(j as f64, 0.0);
            col[j + 1] = c(1.0 + 1e-14, 0.0);
            if j > 0 {
                col[j - 1] = c(1.0, 0.0);
            }
            col
        });
        let t = truncate(&spec, 4).unwrap();
        assert!(t.asymmetry > 0.0 && t.asymmetry < t.tolerance);
        assert!(asymmetry(&t.matrix) == 0.0);

        let broken = OperatorSpec::callable("broken", None, ScalarField::Real, |j| {
            let mut col = vec![Scalar::default(); j + 2];
            col[j + 1] = c(1.0, 0.0);
            col
        });
        assert!(matches!(truncate(&broken, 3), Err(Error::Asymmetry { .. })));
    }

    #[test]
    fn dimension_errors() {
        let spec = OperatorSpec::diagonal("d", vec![1.0, 2.0, 3.0]);
        assert!(matches!(truncate(&spec, 4), Err(Error::Dimension(_))));
        assert!(matches!(truncate(&spec, 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn banded_truncation_is_prefix_stable() {
        let spec = OperatorSpec::banded("b2", 2, None, ScalarField::Real, |i, j| {
            c(1.0 / (1.0 + i as f64 + j as f64), 0.0)
        });
        let big = truncate(&spec, 9).unwrap().matrix;
        let small = truncate(&spec, 5).unwrap().matrix;
        assert_eq!(
            max_abs_diff(&big.view((0, 0), (5, 5)).into_owned(), &small),
            0.0
        );
        assert_eq!(big[(0, 3)], Scalar::default());
    }
}
