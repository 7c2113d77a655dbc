//! One (operator, N) cell of a run: every check, convergence metric and
//! experiment for a single truncation size, plus its CSV dumps.

use specint::direct_integral::{apply_u, intertwining_residual, norm_mu};
use specint::linalg::{basis_vector, max_abs, max_abs_diff};
use specint::operator::tol_sym;
use specint::probe::{range_indicator_experiment, tk_commutation_check, DEFAULT_MAX_DEGREE};
use specint::pvm::{
    interval_family, moment_defect, projection_consistency, pvm_axiom_report,
    reconstruction_residual, retained_part,
};
use specint::rng::VectorGenerator;
use specint::sampling::{commutation_defect, eigendecompose_with, graph_residual};
use specint::sections::build_fibers_with;
use specint::spectral_measure::{
    bin_pushforward, cauchy_schwarz_check, gram_field_with, kolmogorov_distance, nu_measure,
    perturbation_bound, s_integrability_profile, spectral_probability_measure, tail_mass_check,
    AtomicMeasure, Reference,
};
use specint::{
    CheckRow, DirectIntegral, EigenDecomposition, Execution, QuasiSampling, RunConfig, Scalar,
    SpectralMeasure, Vector,
};

pub const RANDOM_VECTORS: usize = 16;
pub const MOMENT_K: u32 = 6;
pub const RANGE_KS: [u32; 4] = [2, 4, 8, 16];
pub const TK_MAX: u32 = 3;
pub const SUBFRAME: usize = 8;
/// Widest fit interval for the ramp polynomials; beyond it the degree
/// needed for `k = 16` exceeds [`DEFAULT_MAX_DEGREE`].
pub const PROBE_MAX_SPAN: f64 = 16.0;
pub const BINS: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub experiment: &'static str,
    pub m: usize,
    pub k: u32,
    pub value: f64,
}

#[derive(Debug, Default)]
pub struct CellOutput {
    pub n: usize,
    pub checks: Vec<CheckRow>,
    pub convergence: Vec<Row>,
    pub experiments: Vec<ExperimentRow>,
    /// `(file suffix, body)`; the runner prefixes the operator and N.
    pub files: Vec<(String, Vec<u8>)>,
    /// Normalized `nu^{e_1,e_1}`, kept for cross-N comparisons.
    pub nu_e1: Option<AtomicMeasure>,
    pub wall_time: f64,
}

fn csv<F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>>(f: F) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

pub fn run_cell(
    config: &RunConfig,
    n: usize,
    seed: u64,
    exec: Execution,
) -> specint::Result<CellOutput> {
    let started = std::time::Instant::now();
    let spec = &config.operator;
    let tol = config.tolerances;
    let mut out = CellOutput {
        n,
        ..Default::default()
    };

    let s = QuasiSampling::new(spec, n, config.weights.weights(n)?)?;
    out.checks.push(CheckRow::at_most(
        "symmetry",
        s.raw_asymmetry,
        tol_sym(s.max_entry()),
    ));

    let d = eigendecompose_with(&s, tol.tol_cluster)?;
    out.checks.push(CheckRow::at_most(
        "eigen_reconstruction",
        d.reconstruction_error(&s.matrix),
        d.tol_recon,
    ));

    let mu = spectral_probability_measure(&s, &d, tol.tol_atom);
    out.checks.push(CheckRow::at_most(
        "mu_normalization",
        (mu.measure.total().re + mu.dropped_mass - 1.0).abs(),
        1e-12,
    ));
    out.files
        .push(("mu.csv".into(), csv(|w| mu.measure.write_csv(w))));
    let lambdas = d.lambdas();
    let spread = lambdas.last().unwrap_or(&0.0) - lambdas.first().unwrap_or(&0.0);
    let width = if spread > 0.0 { spread / BINS } else { 1.0 };
    out.files.push((
        "mu_binned.csv".into(),
        csv(|w| {
            bin_pushforward(&mu.measure, width)
                .expect("positive width")
                .write_csv(w)
        }),
    ));

    let e1 = basis_vector(n, 0);
    let nu_e1 = nu_measure(&d, &mu, &e1, &e1)?;
    out.files
        .push(("nu_e1.csv".into(), csv(|w| nu_e1.write_csv(w))));
    if let Ok(p) = nu_e1.normalized_probability() {
        if let Some(law) = &spec.reference {
            let cdf = |t| law.cdf(t);
            out.convergence.push(Row {
                metric: format!("ks_{}", law.name()),
                value: kolmogorov_distance(&p, Reference::Cdf(&cdf))?,
            });
        }
        out.nu_e1 = Some(p);
    }
    out.convergence.push(Row {
        metric: "dropped_mass".into(),
        value: mu.dropped_mass,
    });
    out.convergence.push(Row {
        metric: "s_integrability_delta_0.01".into(),
        value: s_integrability_profile(&d, &mu, &e1, &e1, &[0.01])?[0],
    });

    let xs = VectorGenerator::new(seed, s.field).units(n, RANDOM_VECTORS);
    out.convergence.push(Row {
        metric: "graph_residual".into(),
        value: graph_residual(spec, &xs[0], n)?,
    });
    scalar_checks(&mut out, &s, &d, &mu, &xs)?;

    if n <= config.section_max_n {
        section_checks(&mut out, &s, &d, &mu, &xs, tol.tol_psd, exec)?;
    }
    out.wall_time = started.elapsed().as_secs_f64();
    Ok(out)
}

fn scalar_checks(
    out: &mut CellOutput,
    s: &QuasiSampling,
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
    xs: &[Vector],
) -> specint::Result<()> {
    let mut moment: f64 = 0.0;
    let mut commute: f64 = 0.0;
    let mut cs = f64::INFINITY;
    let mut pert = f64::INFINITY;
    for (i, x) in xs.iter().enumerate() {
        moment = moment.max(moment_defect(s, d, mu, x, MOMENT_K)?);
        commute = commute.max(commutation_defect(s, d, x)?);
        let y = &xs[(i + 1) % xs.len()];
        cs = cs.min(cauchy_schwarz_check(d, x, y)?.slack());
        let x2 = x + y * Scalar::new(1e-3, 0.0);
        let y2 = y - x * Scalar::new(2e-3, 0.0);
        pert = pert.min(perturbation_bound(d, x, &x2, y, &y2)?.slack());
    }
    out.checks
        .push(CheckRow::at_most("moment_identity", moment, 1e-9));
    out.checks
        .push(CheckRow::at_most("eigen_commutation", commute, d.tol_recon));
    out.checks
        .push(CheckRow::at_least("cauchy_schwarz_slack", cs, -1e-12));
    out.checks
        .push(CheckRow::at_least("perturbation_slack", pert, -1e-12));

    let rho = d.spectral_radius().max(1.0);
    let tail = [0.25, 0.5, 1.0, 2.0]
        .iter()
        .map(|f| tail_mass_check(s, d, mu, f * rho))
        .map(|t| t.bound - t.actual)
        .fold(f64::INFINITY, f64::min);
    out.checks
        .push(CheckRow::at_least("tail_bound_slack", tail, -1e-12));
    Ok(())
}

fn section_checks(
    out: &mut CellOutput,
    s: &QuasiSampling,
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
    xs: &[Vector],
    tol_psd: f64,
    exec: Execution,
) -> specint::Result<()> {
    let n = s.n;
    let gf = gram_field_with(d, mu, exec)?;
    let fibers = build_fibers_with(&gf, tol_psd, exec)?;
    let gram_err = fibers
        .iter()
        .zip(&gf.atoms)
        .map(|(f, g)| max_abs_diff(&f.gram(), &g.matrix) / (1.0 + max_abs(&g.matrix)))
        .fold(0.0, f64::max);
    out.checks
        .push(CheckRow::at_most("gram_reproduction", gram_err, 1e-9));
    let mismatched = fibers.iter().filter(|f| f.rank != f.multiplicity).count();
    out.checks.push(CheckRow::at_most(
        "fiber_rank_mismatch",
        mismatched as f64,
        0.0,
    ));

    let di = DirectIntegral::new(n, mu, fibers)?;
    let scale = 1.0 + s.max_entry();
    let mut iso: f64 = 0.0;
    let mut tw: f64 = 0.0;
    for x in xs {
        let ux = apply_u(&di, x)?;
        iso = iso.max((norm_mu(&di, &ux)? - retained_part(d, mu, x).norm()).abs());
        tw = tw.max(intertwining_residual(&di, s, x)?);
    }
    out.checks.push(CheckRow::at_most("isometry", iso, 1e-9));
    out.checks
        .push(CheckRow::at_most("intertwining", tw, 1e-9 * scale));
    out.files.push((
        "section_e1.csv".into(),
        csv(|w| {
            apply_u(&di, &basis_vector(n, 0))
                .expect("N matches")
                .write_csv(w)
        }),
    ));

    pvm_checks(out, s, d, mu, xs)?;
    probe_runs(out, d, &di, &xs[0], mu.has_dropped())
}

fn pvm_checks(
    out: &mut CellOutput,
    s: &QuasiSampling,
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
    xs: &[Vector],
) -> specint::Result<()> {
    let sets = interval_family(&d.lambdas());
    let rows = pvm_axiom_report(d, mu, &sets);
    for family in [
        "pvm_idempotent",
        "pvm_self_adjoint",
        "pvm_multiplicative",
        "pvm_additive",
    ] {
        let members: Vec<&CheckRow> = rows.iter().filter(|r| r.name.starts_with(family)).collect();
        if let Some(first) = members.first() {
            let worst = members.iter().map(|r| r.value).fold(0.0, f64::max);
            out.checks
                .push(CheckRow::at_most(family, worst, first.bound));
        }
    }
    let (mut diff, mut excess, mut min_eig) = (0.0_f64, f64::NEG_INFINITY, f64::INFINITY);
    for (i, set) in sets.iter().enumerate() {
        let (x, y) = (&xs[i % xs.len()], &xs[(i + 1) % xs.len()]);
        let (dv, ev, mv) = projection_consistency(d, mu, set, x, y)?;
        diff = diff.max(dv);
        excess = excess.max(ev);
        min_eig = min_eig.min(mv);
    }
    out.checks
        .push(CheckRow::at_most("pvm_nu_consistency", diff, 1e-10));
    out.checks
        .push(CheckRow::at_most("pvm_norm_bound", excess, 1e-12));
    out.checks
        .push(CheckRow::at_least("pvm_nonnegative", min_eig, -1e-10));
    out.checks.push(CheckRow::at_most(
        "pvm_reconstruction",
        reconstruction_residual(s, d, mu),
        1e-9 * (1.0 + s.max_entry()),
    ));
    Ok(())
}

/// Ramp/range experiment and `T^k` commutation at `m = N` (checked) and at
/// a sub-frame `m < N` (recorded only). With dropped atoms the sections
/// `U(e_1..e_N)` are linearly dependent, so the full frame is skipped.
fn probe_runs(
    out: &mut CellOutput,
    d: &EigenDecomposition,
    di: &DirectIntegral,
    x0: &Vector,
    dropped: bool,
) -> specint::Result<()> {
    let n = di.n;
    let lambdas = d.lambdas();
    let (lo, hi) = (lambdas[0], lambdas[lambdas.len() - 1]);
    let radius = 0.75 * d.spectral_radius().max(1e-3);
    let center = 0.5 * (lo + hi);
    let half = 0.25 * (hi - lo).max(1e-3);
    let (a, b) = (center - half, center + half);

    let m_sub = SUBFRAME.min(n - 1);
    let sub = {
        let mut c = x0.clone();
        c.rows_mut(m_sub, n - m_sub).fill(Scalar::default());
        let norm = c.norm();
        if norm > 0.0 {
            c / Scalar::new(norm, 0.0)
        } else {
            basis_vector(n, 0)
        }
    };

    let mut frames = vec![(n, x0.clone()), (m_sub, sub)];
    if dropped {
        log::info!("N = {n}: atoms dropped, full-frame probes skipped");
        frames.remove(0);
    }
    for (m, x) in frames {
        let section = apply_u(di, &x)?;
        let tk = tk_commutation_check(di, m, &section, radius, TK_MAX)?;
        for row in &tk {
            out.experiments.push(ExperimentRow {
                experiment: "tk_commutation",
                m,
                k: row.k,
                value: row.defect,
            });
            if m == n {
                out.checks.push(CheckRow::at_most(
                    format!("tk_commutation_k{}", row.k),
                    row.defect,
                    row.bound,
                ));
            }
        }

        let span = hi.max(radius).max(b + 0.5) - lo.min(-radius).min(a - 0.5);
        if span > PROBE_MAX_SPAN {
            log::info!(
                "N = {n}: ramp fits skipped, fit interval span {span:.1} exceeds {PROBE_MAX_SPAN}"
            );
            continue;
        }
        let exp = range_indicator_experiment(
            di,
            m,
            a,
            b,
            radius,
            &RANGE_KS,
            &section,
            DEFAULT_MAX_DEGREE,
        )?;
        for row in &exp.rows {
            out.experiments.push(ExperimentRow {
                experiment: "range_indicator",
                m,
                k: row.k,
                value: row.distance,
            });
            out.experiments.push(ExperimentRow {
                experiment: "range_indicator_limit",
                m,
                k: row.k,
                value: row.limit,
            });
        }
        if m == n {
            let slack = exp
                .rows
                .iter()
                .map(|r| r.distance - r.limit - r.norm / r.k as f64 - r.shoulder)
                .fold(f64::NEG_INFINITY, f64::max);
            out.checks
                .push(CheckRow::at_most("range_indicator_bound", slack, 1e-10));
        }
    }
    Ok(())
}
