//! The direct integral over the atoms of `mu`, the isometry `U` sending
//! `e_j` to the section `lambda -> V_j(lambda)`, and multiplication operators.

use std::io::{self, Write};

use crate::linalg::{hermitian_eigen, inner};
use crate::par::{self, Execution};
use crate::sampling::{EigenDecomposition, QuasiSampling};
use crate::sections::{build_fibers_with, FiberFrame};
use crate::spectral_measure::{gram_field_with, AtomicMeasure, SpectralMeasure};
use crate::{Error, Matrix, Result, Scalar, Vector};

#[derive(Debug, Clone)]
pub struct DirectIntegral {
    pub n: usize,
    pub measure: AtomicMeasure,
    pub fibers: Vec<FiberFrame>,
}

/// A section: one vector in `g_1..g_N` coordinates per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub lambdas: Vec<f64>,
    pub values: Vec<Vector>,
}

impl Section {
    pub fn zeros(di: &DirectIntegral) -> Self {
        Self {
            lambdas: di.lambdas(),
            values: vec![Vector::zeros(di.n); di.fibers.len()],
        }
    }

    pub fn scale(&self, a: Scalar) -> Self {
        Self {
            lambdas: self.lambdas.clone(),
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }

    pub fn sub(&self, other: &Section) -> Result<Self> {
        same_atoms(self, other)?;
        Ok(Self {
            lambdas: self.lambdas.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &Section) -> Result<Self> {
        same_atoms(self, other)?;
        Ok(Self {
            lambdas: self.lambdas.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Section dump: `lambda,coord_index,value_re,value_im` with 1-based
    /// coordinate indices; exact zeros are omitted.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "lambda,coord_index,value_re,value_im")?;
        for (lambda, v) in self.lambdas.iter().zip(&self.values) {
            for (k, z) in v.iter().enumerate() {
                if *z != Scalar::default() {
                    writeln!(w, "{:e},{},{:e},{:e}", lambda, k + 1, z.re, z.im)?;
                }
            }
        }
        Ok(())
    }
}

fn same_atoms(a: &Section, b: &Section) -> Result<()> {
    if a.lambdas != b.lambdas {
        return Err(Error::MeasureMismatch(
            "sections live over different atom sets".into(),
        ));
    }
    Ok(())
}

impl DirectIntegral {
    pub fn new(n: usize, mu: &SpectralMeasure, fibers: Vec<FiberFrame>) -> Result<Self> {
        if fibers.len() != mu.measure.len() {
            return Err(Error::MeasureMismatch(format!(
                "{} fibers for {} atoms",
                fibers.len(),
                mu.measure.len()
            )));
        }
        for (f, a) in fibers.iter().zip(&mu.measure.atoms) {
            if f.lambda != a.lambda || f.vectors.nrows() != n || f.vectors.ncols() != n {
                return Err(Error::MeasureMismatch(format!(
                    "fiber at {} does not match atom at {}",
                    f.lambda, a.lambda
                )));
            }
            if f.rank == 0 {
                return Err(Error::MeasureMismatch(format!(
                    "fiber at {} has rank 0",
                    f.lambda
                )));
            }
        }
        Ok(Self {
            n,
            measure: mu.measure.clone(),
            fibers,
        })
    }

    /// Gram field, fibers and direct integral in one go.
    pub fn build(d: &EigenDecomposition, mu: &SpectralMeasure, tol_psd_rel: f64) -> Result<Self> {
        Self::build_with(d, mu, tol_psd_rel, Execution::default())
    }

    pub fn build_with(
        d: &EigenDecomposition,
        mu: &SpectralMeasure,
        tol_psd_rel: f64,
        exec: Execution,
    ) -> Result<Self> {
        let gf = gram_field_with(d, mu, exec)?;
        let fibers = build_fibers_with(&gf, tol_psd_rel, exec)?;
        Self::new(d.n, mu, fibers)
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.fibers.iter().map(|f| f.lambda).collect()
    }

    fn mass(&self, atom: usize) -> f64 {
        self.fibers[atom].mass
    }

    fn check(&self, x: &Section) -> Result<()> {
        if x.values.len() != self.fibers.len()
            || x.lambdas
                .iter()
                .zip(&self.fibers)
                .any(|(l, f)| *l != f.lambda)
        {
            return Err(Error::MeasureMismatch(
                "section does not live over this direct integral".into(),
            ));
        }
        Ok(())
    }
}

/// `U(x)(lambda) = sum_j x_j V_j(lambda)`.
pub fn apply_u(di: &DirectIntegral, x: &Vector) -> Result<Section> {
    if x.len() != di.n {
        return Err(Error::Dimension(format!(
            "vector of length {} does not match N = {}",
            x.len(),
            di.n
        )));
    }
    Ok(Section {
        lambdas: di.lambdas(),
        values: di.fibers.iter().map(|f| &f.vectors * x).collect(),
    })
}

/// [`apply_u`] over many vectors, one task per vector.
pub fn apply_u_many(di: &DirectIntegral, xs: &[Vector], exec: Execution) -> Result<Vec<Section>> {
    par::try_map_slice(exec, xs, |x| apply_u(di, x))
}

/// `sum_lambda <X(lambda), Y(lambda)> mu(lambda)`.
pub fn inner_product_mu(di: &DirectIntegral, x: &Section, y: &Section) -> Result<Scalar> {
    di.check(x)?;
    di.check(y)?;
    Ok(x.values
        .iter()
        .zip(&y.values)
        .enumerate()
        .map(|(a, (u, v))| inner(u, v) * di.mass(a))
        .sum())
}

pub fn norm_mu(di: &DirectIntegral, x: &Section) -> Result<f64> {
    Ok(inner_product_mu(di, x, x)?.re.max(0.0).sqrt())
}

/// `(T_f X)(lambda) = f(lambda) X(lambda)`.
pub fn multiply(f: impl Fn(f64) -> f64, x: &Section) -> Section {
    Section {
        lambdas: x.lambdas.clone(),
        values: x
            .lambdas
            .iter()
            .zip(&x.values)
            .map(|(&l, v)| v * Scalar::new(f(l), 0.0))
            .collect(),
    }
}

/// `|| U(A x) - id * U(x) ||_mu`.
pub fn intertwining_residual(di: &DirectIntegral, s: &QuasiSampling, x: &Vector) -> Result<f64> {
    s.check_dim(x)?;
    let lhs = apply_u(di, &s.apply(x))?;
    let rhs = multiply(|t| t, &apply_u(di, x)?);
    norm_mu(di, &lhs.sub(&rhs)?)
}

pub const MAX_RANGE_CONDITION: f64 = 1e12;

/// Orthogonal projection onto `span{U(e_1), ..., U(e_m)}` in `<.,.>_mu`,
/// via the normal equations on the Gram matrix of those sections.
#[derive(Debug, Clone)]
pub struct RangeProjector {
    pub m: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
    pub condition: f64,
}

impl RangeProjector {
    pub fn new(di: &DirectIntegral, m: usize) -> Result<Self> {
        if m == 0 || m > di.n {
            return Err(Error::Dimension(format!(
                "range size m = {m} must lie in 1..={}",
                di.n
            )));
        }
        let mut gram = Matrix::zeros(m, m);
        for f in &di.fibers {
            let vm = f.vectors.columns(0, m);
            gram += (vm.adjoint() * vm) * Scalar::new(f.mass, 0.0);
        }
        let (eigenvalues, eigenvectors) =
            hermitian_eigen(&gram, false).ok_or(Error::IllConditioned(f64::INFINITY))?;
        let lo = eigenvalues[0];
        let hi = eigenvalues[m - 1];
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if condition > MAX_RANGE_CONDITION {
            return Err(Error::IllConditioned(condition));
        }
        Ok(Self {
            m,
            eigenvalues,
            eigenvectors,
            condition,
        })
    }

    pub fn project(&self, di: &DirectIntegral, x: &Section) -> Result<Section> {
        di.check(x)?;
        let m = self.m;
        // b_i = <X, U(e_i)>_mu
        let mut b = Vector::zeros(m);
        for (f, v) in di.fibers.iter().zip(&x.values) {
            b += (f.vectors.columns(0, m).adjoint() * v) * Scalar::new(f.mass, 0.0);
        }
        let q = &self.eigenvectors;
        let mut coeffs = q.adjoint() * b;
        for (c, l) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c /= *l;
        }
        let coeffs = q * coeffs;
        Ok(Section {
            lambdas: x.lambdas.clone(),
            values: di
                .fibers
                .iter()
                .map(|f| f.vectors.columns(0, m) * &coeffs)
                .collect(),
        })
    }
}

pub fn project_onto_range(di: &DirectIntegral, m: usize, x: &Section) -> Result<Section> {
    RangeProjector::new(di, m)?.project(di, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::basis_vector;
    use crate::operator::registry::free_jacobi;
    use crate::operator::{scale_weights, ScalarField};
    use crate::rng::VectorGenerator;
    use crate::sampling::eigendecompose;
    use crate::spectral_measure::{nu_measure, spectral_probability_measure, DEFAULT_TOL_ATOM};

    fn r(x: f64) -> Scalar {
        Scalar::new(x, 0.0)
    }

    struct Fixture {
        s: QuasiSampling,
        d: EigenDecomposition,
        mu: SpectralMeasure,
        di: DirectIntegral,
    }

    fn fixture(s: QuasiSampling) -> Fixture {
        let d = eigendecompose(&s).unwrap();
        let mu = spectral_probability_measure(&s, &d, DEFAULT_TOL_ATOM);
        let di = DirectIntegral::build(&d, &mu, 1e-10).unwrap();
        Fixture { s, d, mu, di }
    }

    fn diag123() -> Fixture {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![r(1.0), r(2.0), r(3.0)]));
        fixture(QuasiSampling::from_matrix("d", m, scale_weights(3), ScalarField::Real).unwrap())
    }

    fn jacobi(n: usize) -> Fixture {
        fixture(QuasiSampling::new(&free_jacobi(0.0, 1.0), n, scale_weights(n)).unwrap())
    }

    #[test]
    fn u_of_basis_vector_is_its_section() {
        let f = diag123();
        let u = apply_u(&f.di, &basis_vector(3, 0)).unwrap();
        assert!((u.values[0][0] - r((7.0f64 / 4.0).sqrt())).norm() < 1e-15);
        assert_eq!(u.values[1].norm(), 0.0);
        assert_eq!(u.values[2].norm(), 0.0);
        assert!((norm_mu(&f.di, &u).unwrap() - 1.0).abs() < 1e-15);
        for (a, fiber) in f.di.fibers.iter().enumerate() {
            let uj = apply_u(&f.di, &basis_vector(3, 1)).unwrap();
            assert_eq!(uj.values[a], fiber.vectors.column(1).into_owned());
        }
    }

    #[test]
    fn isometry_on_random_vectors() {
        let f = jacobi(32);
        let mut gen = VectorGenerator::new(3, ScalarField::Real);
        for _ in 0..10 {
            let x = gen.unit(32);
            let y = gen.unit(32);
            let ux = apply_u(&f.di, &x).unwrap();
            let uy = apply_u(&f.di, &y).unwrap();
            assert!((norm_mu(&f.di, &ux).unwrap() - 1.0).abs() < 1e-10);
            let ip = inner_product_mu(&f.di, &ux, &uy).unwrap();
            assert!((ip - inner(&x, &y)).norm() < 1e-10);
        }
        for j in 0..4 {
            for l in 0..4 {
                let uj = apply_u(&f.di, &basis_vector(32, j)).unwrap();
                let ul = apply_u(&f.di, &basis_vector(32, l)).unwrap();
                let want = if j == l { 1.0 } else { 0.0 };
                assert!((inner_product_mu(&f.di, &uj, &ul).unwrap() - r(want)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_section_and_mismatch() {
        let f = diag123();
        let z = Section::zeros(&f.di);
        let u = apply_u(&f.di, &basis_vector(3, 0)).unwrap();
        assert_eq!(inner_product_mu(&f.di, &z, &u).unwrap(), Scalar::default());
        let other = jacobi(3);
        let foreign = apply_u(&other.di, &basis_vector(3, 0)).unwrap();
        assert!(matches!(
            inner_product_mu(&f.di, &foreign, &u),
            Err(Error::MeasureMismatch(_))
        ));
    }

    #[test]
    fn radon_nikodym_per_atom() {
        let f = jacobi(12);
        let mut gen = VectorGenerator::new(5, ScalarField::Real);
        let x = gen.unit(12);
        let y = gen.unit(12);
        let nu = nu_measure(&f.d, &f.mu, &x, &y).unwrap();
        let ux = apply_u(&f.di, &x).unwrap();
        let uy = apply_u(&f.di, &y).unwrap();
        for (a, atom) in nu.atoms.iter().enumerate() {
            let density = inner(&ux.values[a], &uy.values[a]) * f.di.fibers[a].mass;
            assert!((density - atom.mass).norm() < 1e-12);
        }
    }

    #[test]
    fn multiplication_examples() {
        let f = diag123();
        let u = apply_u(&f.di, &basis_vector(3, 0)).unwrap();
        assert_eq!(multiply(|_| 1.0, &u), u);
        let killed = multiply(|t| if (10.0..11.0).contains(&t) { 1.0 } else { 0.0 }, &u);
        assert_eq!(norm_mu(&f.di, &killed).unwrap(), 0.0);
        assert_eq!(multiply(|t| t, &u), u);
        let g = jacobi(8);
        let x = apply_u(&g.di, &Vector::from_fn(8, |i, _| r(i as f64 - 3.0))).unwrap();
        let y = apply_u(&g.di, &Vector::from_fn(8, |i, _| r(1.0 / (1.0 + i as f64)))).unwrap();
        let fg = multiply(|t| t * t + 1.0, &x);
        let f_then_g = multiply(|t| t, &multiply(|t| t + 1.0 / t, &x));
        for (a, b) in fg.values.iter().zip(&f_then_g.values) {
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
        let lhs = inner_product_mu(&g.di, &multiply(|t| t.sin(), &x), &y).unwrap();
        let rhs = inner_product_mu(&g.di, &x, &multiply(|t| t.sin(), &y)).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn intertwining_examples() {
        let f = diag123();
        let x = Vector::from_element(3, r(1.0 / 3f64.sqrt()));
        assert!(intertwining_residual(&f.di, &f.s, &x).unwrap() <= 1e-10);
        let g = jacobi(16);
        let eig = g.d.clusters[4].basis.column(0).into_owned();
        assert!(intertwining_residual(&g.di, &g.s, &eig).unwrap() <= 1e-9);
    }

    #[test]
    fn range_projection_examples() {
        let f = jacobi(10);
        let x = apply_u(&f.di, &Vector::from_fn(10, |i, _| r((i as f64).cos()))).unwrap();
        let full = project_onto_range(&f.di, 10, &x).unwrap();
        assert!(norm_mu(&f.di, &full.sub(&x).unwrap()).unwrap() < 1e-10);
        let u1 = apply_u(&f.di, &basis_vector(10, 0)).unwrap();
        for m in [1, 4, 10] {
            let p = project_onto_range(&f.di, m, &u1).unwrap();
            assert!(norm_mu(&f.di, &p.sub(&u1).unwrap()).unwrap() < 1e-10);
        }
        let orth = apply_u(&f.di, &basis_vector(10, 7)).unwrap();
        let p = project_onto_range(&f.di, 4, &orth).unwrap();
        assert!(norm_mu(&f.di, &p).unwrap() < 1e-10);

        // idempotent and self-adjoint on a section outside the range
        let z = multiply(|t| if t > 0.3 { 1.0 } else { 0.0 }, &x);
        let rp = RangeProjector::new(&f.di, 4).unwrap();
        let pz = rp.project(&f.di, &z).unwrap();
        let ppz = rp.project(&f.di, &pz).unwrap();
        assert!(norm_mu(&f.di, &ppz.sub(&pz).unwrap()).unwrap() < 1e-10);
        let w = multiply(|t| t * t, &x);
        let lhs = inner_product_mu(&f.di, &pz, &w).unwrap();
        let rhs = inner_product_mu(&f.di, &z, &rp.project(&f.di, &w).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn section_csv_skips_zeros() {
        let f = diag123();
        let u = apply_u(&f.di, &basis_vector(3, 0)).unwrap();
        let mut out = Vec::new();
        u.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("1e0,1,"));
    }
}
