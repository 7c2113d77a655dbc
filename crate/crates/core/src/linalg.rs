//! Small dense helpers shared across modules.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Matrix, Scalar, Vector};

/// `<x, y>`: linear in `x`, conjugate-linear in `y`.
pub fn inner(x: &Vector, y: &Vector) -> Scalar {
    y.dotc(x)
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Max-entry distance between a matrix and its conjugate transpose.
pub fn asymmetry(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_real(m: &Matrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

pub fn basis_vector(n: usize, j: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[j] = Scalar::new(1.0, 0.0);
    v
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending and eigenvectors
/// in the matching columns. `real` selects the real symmetric solver.
pub fn hermitian_eigen(m: &Matrix, real: bool) -> Option<(Vec<f64>, Matrix)> {
    let n = m.nrows();
    let (values, vectors): (Vec<f64>, Matrix) = if real {
        let re = DMatrix::from_fn(n, n, |i, j| m[(i, j)].re);
        let eig = SymmetricEigen::try_new(re, f64::EPSILON, 0)?;
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|x| Scalar::new(x, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)?;
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    if values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted_vectors = Matrix::from_fn(n, n, |i, c| vectors[(i, order[c])]);
    Some((sorted_values, sorted_vectors))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    hermitian_eigen(m, is_real(m))
        .map(|(v, _)| v[0])
        .unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_is_conjugate_linear_in_second_slot() {
        let x = Vector::from_vec(vec![Scalar::new(1.0, 1.0), Scalar::new(0.0, 2.0)]);
        let y = Vector::from_vec(vec![Scalar::new(2.0, 0.0), Scalar::new(1.0, -1.0)]);
        let i = Scalar::new(0.0, 1.0);
        let lhs = inner(&x, &(y.clone() * i));
        let rhs = inner(&x, &y) * i.conj();
        assert!((lhs - rhs).norm() < 1e-14);
        let direct: Scalar = x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum();
        assert!((inner(&x, &y) - direct).norm() < 1e-14);
    }

    #[test]
    fn complex_hermitian_eigen_reconstructs() {
        let m = Matrix::from_row_slice(
            2,
            2,
            &[
                Scalar::new(1.0, 0.0),
                Scalar::new(0.0, -1.0),
                Scalar::new(0.0, 1.0),
                Scalar::new(1.0, 0.0),
            ],
        );
        let (vals, vecs) = hermitian_eigen(&m, false).unwrap();
        assert!((vals[0] - 0.0).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        let d = Matrix::from_diagonal(&Vector::from_iterator(
            2,
            vals.iter().map(|&v| Scalar::new(v, 0.0)),
        ));
        let back = &vecs * d * vecs.adjoint();
        assert!(max_abs_diff(&back, &m) < 1e-12);
    }
}
