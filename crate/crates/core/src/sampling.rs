//! Truncated operator, its eigendecomposition, and the clustering of
//! eigenvalues into eigenspaces.

use crate::linalg::{asymmetry, hermitian_eigen, inner, max_abs, max_abs_diff};
use crate::operator::{truncate, validate_weights, OperatorSpec, ScalarField};
use crate::{Error, Matrix, Result, Scalar, Vector};

/// Truncated operator together with its scale weights.
#[derive(Debug, Clone)]
pub struct QuasiSampling {
    pub name: String,
    pub n: usize,
    pub matrix: Matrix,
    pub weights: Vec<f64>,
    pub field: ScalarField,
    /// Max-entry asymmetry of the raw block before symmetrization.
    pub raw_asymmetry: f64,
}

impl QuasiSampling {
    pub fn new(spec: &OperatorSpec, n: usize, weights: Vec<f64>) -> Result<Self> {
        let t = truncate(spec, n)?;
        validate_weights(&weights, n)?;
        Ok(Self {
            name: spec.name.clone(),
            n,
            matrix: t.matrix,
            weights,
            field: spec.field,
            raw_asymmetry: t.asymmetry,
        })
    }

    pub fn from_matrix(
        name: impl Into<String>,
        matrix: Matrix,
        weights: Vec<f64>,
        field: ScalarField,
    ) -> Result<Self> {
        let name = name.into();
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::Dimension(format!("`{name}` is not square")));
        }
        let asym = asymmetry(&matrix);
        let tol = crate::operator::tol_sym(max_abs(&matrix));
        if asym > tol {
            return Err(Error::Asymmetry {
                name,
                asymmetry: asym,
                tolerance: tol,
            });
        }
        validate_weights(&weights, n)?;
        Ok(Self {
            name,
            n,
            matrix,
            weights,
            field,
            raw_asymmetry: asym,
        })
    }

    pub fn max_entry(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.matrix * x
    }

    pub fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!(
                "vector of length {} does not match N = {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Cluster {
    /// Mean of the member eigenvalues.
    pub lambda: f64,
    pub multiplicity: usize,
    /// Orthonormal columns spanning the eigenspace.
    pub basis: Matrix,
}

impl Cluster {
    /// Orthogonal projector onto the eigenspace.
    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.adjoint()
    }

    pub fn project(&self, x: &Vector) -> Vector {
        &self.basis * (self.basis.adjoint() * x)
    }

    /// Coordinates `<x, u_k>` of `x` in the cluster basis.
    pub fn coordinates(&self, x: &Vector) -> Vector {
        self.basis.adjoint() * x
    }
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub n: usize,
    /// All eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub clusters: Vec<Cluster>,
    pub tol_cluster: f64,
    pub tol_recon: f64,
}

pub const DEFAULT_CLUSTER_FLOOR: f64 = 1e-10;

pub fn eigendecompose(s: &QuasiSampling) -> Result<EigenDecomposition> {
    eigendecompose_with(s, DEFAULT_CLUSTER_FLOOR)
}

/// Clusters eigenvalues whose distance to the first member of the running
/// cluster is at most `max(floor, 1e-12 * spread)`.
pub fn eigendecompose_with(s: &QuasiSampling, cluster_floor: f64) -> Result<EigenDecomposition> {
    let real = s.field == ScalarField::Real;
    let (values, vectors) =
        hermitian_eigen(&s.matrix, real).ok_or_else(|| Error::EigenFailure(s.name.clone()))?;
    let n = s.n;
    let spread = values[n - 1] - values[0];
    let tol_cluster = cluster_floor.max(1e-12 * spread);

    let mut clusters = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[start] <= tol_cluster {
            end += 1;
        }
        let members = &values[start..end];
        clusters.push(Cluster {
            lambda: members.iter().sum::<f64>() / members.len() as f64,
            multiplicity: end - start,
            basis: vectors.columns(start, end - start).into_owned(),
        });
        start = end;
    }
    Ok(EigenDecomposition {
        n,
        eigenvalues: values,
        clusters,
        tol_cluster,
        tol_recon: 1e-10 * (1.0 + s.max_entry() * n as f64),
    })
}

impl EigenDecomposition {
    pub fn cluster(&self, id: usize) -> Result<&Cluster> {
        self.clusters.get(id).ok_or(Error::UnknownCluster {
            id,
            count: self.clusters.len(),
        })
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.lambda).collect()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues
            .first()
            .map_or(0.0, |lo| lo.abs().max(self.eigenvalues[self.n - 1].abs()))
    }

    /// `<P_lambda x, P_lambda y>` for every cluster, in cluster order.
    pub fn pairings(&self, x: &Vector, y: &Vector) -> Vec<Scalar> {
        self.clusters
            .iter()
            .map(|c| inner(&c.coordinates(x), &c.coordinates(y)))
            .collect()
    }

    /// `sum_lambda f(lambda) P_lambda` over the clusters selected by `keep`.
    pub fn weighted_projector_sum(
        &self,
        keep: impl Fn(usize) -> bool,
        f: impl Fn(f64) -> Scalar,
    ) -> Matrix {
        let mut out = Matrix::zeros(self.n, self.n);
        for (id, c) in self.clusters.iter().enumerate() {
            if !keep(id) {
                continue;
            }
            let w = f(c.lambda);
            if w == Scalar::default() {
                continue;
            }
            out += c.projector() * w;
        }
        out
    }

    /// `max |A - sum lambda P_lambda|`.
    pub fn reconstruction_error(&self, matrix: &Matrix) -> f64 {
        let recon = self.weighted_projector_sum(|_| true, |l| Scalar::new(l, 0.0));
        max_abs_diff(&recon, matrix)
    }
}

pub fn eigenprojection_apply(d: &EigenDecomposition, cluster: usize, x: &Vector) -> Result<Vector> {
    let c = d.cluster(cluster)?;
    if x.len() != d.n {
        return Err(Error::Dimension(format!(
            "vector of length {} does not match N = {}",
            x.len(),
            d.n
        )));
    }
    Ok(c.project(x))
}

/// `max_lambda || P_lambda A x - A P_lambda x ||`.
pub fn commutation_defect(s: &QuasiSampling, d: &EigenDecomposition, x: &Vector) -> Result<f64> {
    s.check_dim(x)?;
    let ax = s.apply(x);
    Ok(d.clusters
        .iter()
        .map(|c| (c.project(&ax) - s.apply(&c.project(x))).norm())
        .fold(0.0, f64::max))
}

/// `|| A_N xbar - A x ||` where `xbar` is `x` zero-padded to length `N` and
/// `A x` is evaluated over its full support. Nonzero values measure how much
/// of `A x` leaks out of the truncation space.
pub fn graph_residual(spec: &OperatorSpec, x: &Vector, n: usize) -> Result<f64> {
    if x.len() > n {
        return Err(Error::Dimension(format!(
            "vector of length {} exceeds N = {n}",
            x.len()
        )));
    }
    let t = truncate(spec, n)?;
    let mut padded = Vector::zeros(n);
    padded.rows_mut(0, x.len()).copy_from(x);
    let truncated = &t.matrix * &padded;

    let mut full: Vec<Scalar> = vec![Scalar::default(); n];
    for (j, &xj) in x.iter().enumerate() {
        if xj == Scalar::default() {
            continue;
        }
        let col = spec.column(j)?;
        if col.len() > full.len() {
            full.resize(col.len(), Scalar::default());
        }
        for (slot, v) in full.iter_mut().zip(col) {
            *slot += v * xj;
        }
    }
    let inside: f64 = (0..n).map(|i| (truncated[i] - full[i]).norm_sqr()).sum();
    let outside: f64 = full[n..].iter().map(|z| z.norm_sqr()).sum();
    Ok((inside + outside).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::basis_vector;
    use crate::operator::registry::{free_jacobi, harmonic_oscillator};
    use crate::operator::scale_weights;

    fn r(x: f64) -> Scalar {
        Scalar::new(x, 0.0)
    }

    fn sampling(rows: &[&[f64]]) -> QuasiSampling {
        let n = rows.len();
        let m = Matrix::from_fn(n, n, |i, j| r(rows[i][j]));
        QuasiSampling::from_matrix("m", m, scale_weights(n), ScalarField::Real).unwrap()
    }

    #[test]
    fn diagonal_clusters_are_canonical() {
        let d = eigendecompose(&sampling(&[
            &[1.0, 0.0, 0.0],
            &[0.0, 2.0, 0.0],
            &[0.0, 0.0, 3.0],
        ]))
        .unwrap();
        assert_eq!(d.lambdas(), vec![1.0, 2.0, 3.0]);
        for (k, c) in d.clusters.iter().enumerate() {
            assert_eq!(c.multiplicity, 1);
            assert!((c.basis[(k, 0)].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn swap_matrix_hand_oracle() {
        let d = eigendecompose(&sampling(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!((d.clusters[0].lambda + 1.0).abs() < 1e-14);
        assert!((d.clusters[1].lambda - 1.0).abs() < 1e-14);
        // P_{+1} = [[1,1],[1,1]]/2, P_{-1} = [[1,-1],[-1,1]]/2
        let p_plus = d.clusters[1].projector();
        let p_minus = d.clusters[0].projector();
        for i in 0..2 {
            for j in 0..2 {
                assert!((p_plus[(i, j)] - r(0.5)).norm() < 1e-14);
                let sign = if i == j { 0.5 } else { -0.5 };
                assert!((p_minus[(i, j)] - r(sign)).norm() < 1e-14);
            }
        }
        let px = eigenprojection_apply(&d, 1, &basis_vector(2, 0)).unwrap();
        assert!((px[0] - r(0.5)).norm() < 1e-14 && (px[1] - r(0.5)).norm() < 1e-14);
    }

    #[test]
    fn repeated_entry_forms_one_cluster() {
        let d = eigendecompose(&sampling(&[
            &[2.0, 0.0, 0.0],
            &[0.0, 2.0, 0.0],
            &[0.0, 0.0, 5.0],
        ]))
        .unwrap();
        assert_eq!(d.clusters.len(), 2);
        assert_eq!(d.clusters[0].multiplicity, 2);
        assert_eq!(d.clusters[0].lambda, 2.0);
    }

    #[test]
    fn projection_onto_eigenvectors() {
        let d = eigendecompose(&sampling(&[
            &[1.0, 0.0, 0.0],
            &[0.0, 2.0, 0.0],
            &[0.0, 0.0, 3.0],
        ]))
        .unwrap();
        let e1 = basis_vector(3, 0);
        assert_eq!(eigenprojection_apply(&d, 0, &e1).unwrap(), e1);
        let p = eigenprojection_apply(&d, 0, &basis_vector(3, 1)).unwrap();
        assert_eq!(p.norm(), 0.0);
        assert!(matches!(
            eigenprojection_apply(&d, 7, &e1),
            Err(Error::UnknownCluster { id: 7, .. })
        ));
    }

    #[test]
    fn projectors_resolve_identity_and_commute() {
        let spec = harmonic_oscillator(1.0);
        let s = QuasiSampling::new(&spec, 24, scale_weights(24)).unwrap();
        let d = eigendecompose(&s).unwrap();
        let sum = d.weighted_projector_sum(|_| true, |_| r(1.0));
        assert!(max_abs_diff(&sum, &Matrix::identity(24, 24)) <= d.tol_recon);
        assert!(d.reconstruction_error(&s.matrix) <= d.tol_recon);
        let x = Vector::from_fn(24, |i, _| r(((i * 7 + 3) % 11) as f64 - 5.0));
        for c in &d.clusters {
            let lhs = c.project(&s.apply(&x));
            let rhs = s.apply(&c.project(&x));
            assert!((lhs - rhs).norm() <= d.tol_recon * x.norm());
        }
        for (a, ca) in d.clusters.iter().enumerate() {
            for cb in d.clusters.iter().skip(a + 1) {
                let prod = ca.projector() * cb.projector();
                assert!(max_abs(&prod) <= d.tol_recon);
            }
        }
    }

    #[test]
    fn graph_residual_examples() {
        let diag = OperatorSpec::diagonal("d", vec![1.0, 2.0, 3.0, 4.0]);
        let x = Vector::from_vec(vec![r(1.0), r(-2.0)]);
        assert_eq!(graph_residual(&diag, &x, 3).unwrap(), 0.0);

        let fj = free_jacobi(0.0, 1.0);
        let n = 6;
        let inner_vec = basis_vector(3, 2);
        assert_eq!(graph_residual(&fj, &inner_vec, n).unwrap(), 0.0);
        let last = basis_vector(n, n - 1);
        assert!((graph_residual(&fj, &last, n).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn graph_residual_nonincreasing_in_n() {
        let spec = harmonic_oscillator(1.0);
        let x = Vector::from_fn(5, |i, _| r(1.0 / (1.0 + i as f64)));
        let mut prev = f64::INFINITY;
        for n in 5..12 {
            let g = graph_residual(&spec, &x, n).unwrap();
            assert!(g <= prev);
            prev = g;
        }
        assert_eq!(prev, 0.0);
    }
}
