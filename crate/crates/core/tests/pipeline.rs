use approx::assert_relative_eq;
use specint::direct_integral::{apply_u, inner_product_mu, intertwining_residual, norm_mu};
use specint::linalg::{basis_vector, max_abs, max_abs_diff};
use specint::operator::registry::{discrete_laplacian, free_jacobi, harmonic_oscillator};
use specint::rng::VectorGenerator;
use specint::spectral_measure::{
    gram_field_with, nu_measure, spectral_probability_measure, DEFAULT_TOL_ATOM,
};
use specint::*;

fn c(re: f64, im: f64) -> Scalar {
    Scalar::new(re, im)
}

struct Cell {
    s: QuasiSampling,
    d: EigenDecomposition,
    mu: SpectralMeasure,
    di: DirectIntegral,
}

fn cell(spec: &OperatorSpec, n: usize) -> Cell {
    let s = QuasiSampling::new(spec, n, scale_weights(n)).unwrap();
    let d = eigendecompose(&s).unwrap();
    let mu = spectral_probability_measure(&s, &d, DEFAULT_TOL_ATOM);
    let di = DirectIntegral::build(&d, &mu, 1e-10).unwrap();
    Cell { s, d, mu, di }
}

fn catalan(m: usize) -> f64 {
    // number of Dyck paths of length 2m by the ballot recursion
    let mut row = vec![1.0_f64];
    for _ in 0..2 * m {
        let mut next = vec![0.0; row.len() + 1];
        for (h, v) in row.iter().enumerate() {
            next[h + 1] += v;
            if h > 0 {
                next[h - 1] += v;
            }
        }
        row = next;
    }
    row[0]
}

#[test]
fn free_jacobi_moments_count_paths() {
    let cl = cell(&free_jacobi(0.0, 1.0), 16);
    let e1 = basis_vector(16, 0);
    let nu = nu_measure(&cl.d, &cl.mu, &e1, &e1).unwrap();
    let mut power = e1.clone();
    for k in 1..=8u32 {
        power = &cl.s.matrix * power;
        let direct = power.dotc(&e1).re;
        let paths = if k % 2 == 0 {
            catalan(k as usize / 2)
        } else {
            0.0
        };
        assert_eq!(direct, paths);
        assert!((nu.moment(k).re - paths).abs() <= 1e-9, "k = {k}");
    }
}

fn hermitian_fixture() -> OperatorSpec {
    let n = 6;
    let m = Matrix::from_fn(n, n, |i, j| {
        let (i, j) = (i as f64, j as f64);
        if i == j {
            c((i * 0.37).sin() * 3.0, 0.0)
        } else {
            let re = 1.0 / (1.0 + (i - j).abs());
            let im = if i < j {
                0.3 * (i + j) / 10.0
            } else {
                -0.3 * (i + j) / 10.0
            };
            c(re, im)
        }
    });
    OperatorSpec::dense("hermitian6", m, ScalarField::Complex).unwrap()
}

#[test]
fn complex_cell_is_isometric_and_intertwines() {
    let cl = cell(&hermitian_fixture(), 6);
    assert!(!cl.mu.has_dropped());
    let mut gen = VectorGenerator::new(11, ScalarField::Complex);
    let xs = gen.units(6, 20);
    for x in &xs {
        let ux = apply_u(&cl.di, x).unwrap();
        assert_relative_eq!(norm_mu(&cl.di, &ux).unwrap(), 1.0, epsilon = 1e-9);
        let res = intertwining_residual(&cl.di, &cl.s, x).unwrap();
        assert!(res <= 1e-9 * (1.0 + cl.s.max_entry()));
    }
    // d nu^{x,y} / d mu = <U x (lambda), U y (lambda)> atom by atom
    let (x, y) = (&xs[0], &xs[1]);
    let nu = nu_measure(&cl.d, &cl.mu, x, y).unwrap();
    let (ux, uy) = (apply_u(&cl.di, x).unwrap(), apply_u(&cl.di, y).unwrap());
    for (a, atom) in nu.atoms.iter().enumerate() {
        let density = uy.values[a].dotc(&ux.values[a]);
        let mass = cl.di.measure.atoms[a].mass.re;
        assert!((density * mass - atom.mass).norm() < 1e-12);
    }
    let ip = inner_product_mu(&cl.di, &ux, &uy).unwrap();
    assert!((ip - y.dotc(x)).norm() < 1e-12);
}

#[test]
fn degenerate_spectrum_has_full_rank_fibers() {
    let spec = OperatorSpec::diagonal("deg", vec![1.0, 2.0, 1.0, 3.0, 2.0, 1.0]);
    let cl = cell(&spec, 6);
    let ranks: Vec<(f64, usize, usize)> = cl
        .di
        .fibers
        .iter()
        .map(|f| (f.lambda, f.rank, f.multiplicity))
        .collect();
    assert_eq!(ranks, vec![(1.0, 3, 3), (2.0, 2, 2), (3.0, 1, 1)]);
    let gf = gram_field_with(&cl.d, &cl.mu, Execution::Sequential).unwrap();
    for (f, g) in cl.di.fibers.iter().zip(&gf.atoms) {
        let err = max_abs_diff(&f.gram(), &g.matrix);
        assert!(err <= 1e-9 * (1.0 + max_abs(&g.matrix)));
    }
}

#[test]
fn reconstruction_across_registry() {
    for spec in [
        free_jacobi(0.0, 1.0),
        discrete_laplacian(),
        harmonic_oscillator(1.0),
    ] {
        let cl = cell(&spec, 24);
        let id = functional_calculus(
            &cl.d,
            &cl.mu,
            &PiecewisePolynomial::polynomial(Polynomial::identity()),
        );
        assert!(
            max_abs_diff(&id, &cl.s.matrix) <= 1e-9 * (1.0 + cl.s.max_entry()),
            "{}",
            spec.name
        );
    }
}

#[test]
fn oscillator_tracks_dropped_mass() {
    let n = 96;
    let s = QuasiSampling::new(&harmonic_oscillator(1.0), n, scale_weights(n)).unwrap();
    let d = eigendecompose(&s).unwrap();
    let mu = spectral_probability_measure(&s, &d, DEFAULT_TOL_ATOM);
    let total = mu.measure.total().re + mu.dropped_mass;
    assert!((total - 1.0).abs() <= 1e-12);
    assert!(mu
        .measure
        .atoms
        .iter()
        .all(|a| a.mass.re > DEFAULT_TOL_ATOM));
    assert!(mu.has_dropped());
    let residual = specint::pvm::reconstruction_residual(&s, &d, &mu);
    assert!(residual <= 1e-9 * (1.0 + s.max_entry()));
}

#[test]
fn execution_policies_are_bitwise_equal() {
    let spec = free_jacobi(0.5, 1.0);
    let s = QuasiSampling::new(&spec, 40, scale_weights(40)).unwrap();
    let d = eigendecompose(&s).unwrap();
    let mu = spectral_probability_measure(&s, &d, DEFAULT_TOL_ATOM);
    let seq = DirectIntegral::build_with(&d, &mu, 1e-10, Execution::Sequential).unwrap();
    let par = DirectIntegral::build_with(&d, &mu, 1e-10, Execution::default()).unwrap();
    for (a, b) in seq.fibers.iter().zip(&par.fibers) {
        assert_eq!(a.vectors, b.vectors);
    }
}
