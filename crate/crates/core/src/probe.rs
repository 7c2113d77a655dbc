//! Finite-scale probes of the surjectivity mechanism: ramp functions `c_k`,
//! polynomial approximations `p_k`, the range-indicator experiment, the
//! `T^k` commutation identity, and a cross-`N` stability heuristic.

use std::f64::consts::PI;

use crate::config::WeightsMode;
use crate::direct_integral::{multiply, norm_mu, DirectIntegral, RangeProjector, Section};
use crate::operator::OperatorSpec;
use crate::sampling::{eigendecompose, QuasiSampling};
use crate::spectral_measure::{
    kolmogorov_distance, nu_measure, spectral_probability_measure, Reference,
};
use crate::{Error, Result, Scalar, Vector};

/// Points of the uniform grid on which polynomial fits are judged.
pub const FIT_GRID: usize = 2048;
pub const DEFAULT_MAX_DEGREE: usize = 4096;
const ENDPOINT_NUDGE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSpec {
    pub a: f64,
    pub b: f64,
    pub k: u32,
}

impl RampSpec {
    pub fn new(a: f64, b: f64, k: u32) -> Result<Self> {
        if !(a < b) || k == 0 {
            return Err(Error::Validation(format!(
                "ramp needs a < b and k >= 1, got a = {a}, b = {b}, k = {k}"
            )));
        }
        Ok(Self { a, b, k })
    }

    /// Support `(a - 1/k, b + 1/k)`.
    pub fn support(&self) -> (f64, f64) {
        let w = 1.0 / self.k as f64;
        (self.a - w, self.b + w)
    }
}

/// `1 on [a, b]`, linear ramps of slope `k` on `(a - 1/k, a)` and
/// `(b, b + 1/k)`, zero elsewhere.
pub fn ramp_eval(r: RampSpec, t: f64) -> f64 {
    let k = r.k as f64;
    let (lo, hi) = r.support();
    if (r.a..=r.b).contains(&t) {
        1.0
    } else if t > lo && t < r.a {
        1.0 + k * (t - r.a)
    } else if t > r.b && t < hi {
        1.0 + k * (r.b - t)
    } else {
        0.0
    }
}

/// Polynomial in the Chebyshev basis of `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevPoly {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl ChebyshevPoly {
    /// Interpolates `f` at the `degree + 1` first-kind Chebyshev nodes.
    pub fn interpolate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, degree: usize) -> Self {
        let m = degree + 1;
        let values: Vec<f64> = (0..m)
            .map(|i| {
                let u = (PI * (i as f64 + 0.5) / m as f64).cos();
                f(0.5 * (hi + lo) + 0.5 * (hi - lo) * u)
            })
            .collect();
        let coeffs = (0..m)
            .map(|j| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * j as f64 * (i as f64 + 0.5) / m as f64).cos())
                    .sum();
                if j == 0 {
                    s / m as f64
                } else {
                    2.0 * s / m as f64
                }
            })
            .collect();
        Self { lo, hi, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Clenshaw recurrence. Defined on the whole line.
    pub fn eval(&self, t: f64) -> f64 {
        let u = (2.0 * t - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + 2.0 * u * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs.first().copied().unwrap_or(0.0) + u * b1 - b2
    }
}

/// A fitted `p_k` with its grid sup-error.
#[derive(Debug, Clone)]
pub struct RampFit {
    pub poly: ChebyshevPoly,
    pub sup_error: f64,
}

pub fn grid_sup_error(p: &ChebyshevPoly, f: impl Fn(f64) -> f64) -> f64 {
    let h = (p.hi - p.lo) / (FIT_GRID - 1) as f64;
    (0..FIT_GRID)
        .map(|i| {
            let t = if i + 1 == FIT_GRID {
                p.hi
            } else {
                p.lo + h * i as f64
            };
            (p.eval(t) - f(t)).abs()
        })
        .fold(0.0, f64::max)
}

/// Interpolation degrees 0, 1, 2, 4, ... and finally `max_degree`, stopping
/// at the first whose grid sup-error against `c_k` is at most `1/k`.
pub fn fit_ramp_polynomial(
    r: RampSpec,
    interval: (f64, f64),
    max_degree: usize,
) -> Result<RampFit> {
    let (lo, hi) = interval;
    let (slo, shi) = r.support();
    if !(lo < hi) || lo > slo || hi < shi {
        return Err(Error::Validation(format!(
            "fit interval [{lo}, {hi}] must contain [{slo}, {shi}]"
        )));
    }
    let target = 1.0 / r.k as f64;
    let f = |t| ramp_eval(r, t);
    let mut best = f64::INFINITY;
    let mut degree = 0;
    loop {
        let poly = ChebyshevPoly::interpolate(f, lo, hi, degree);
        let sup_error = grid_sup_error(&poly, f);
        if sup_error <= target {
            return Ok(RampFit { poly, sup_error });
        }
        best = best.min(sup_error);
        if degree >= max_degree {
            return Err(Error::DegreeExhausted {
                target,
                max_degree,
                best,
            });
        }
        degree = if degree == 0 {
            1
        } else {
            (2 * degree).min(max_degree)
        };
    }
}

/// Moves `n` outward off any atom closer than `1e-9 * spread`, so that
/// `[-n, n]` has boundary of measure zero.
pub fn nudge_radius(lambdas: &[f64], n: f64) -> f64 {
    let spread = match (lambdas.first(), lambdas.last()) {
        (Some(lo), Some(hi)) if hi > lo => hi - lo,
        _ => 1.0,
    };
    let eps = ENDPOINT_NUDGE * spread;
    let mut r = n;
    while lambdas.iter().any(|l| (l.abs() - r).abs() <= eps) {
        r += eps;
    }
    r
}

fn indicator(lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
    move |t| if (lo..=hi).contains(&t) { 1.0 } else { 0.0 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeRow {
    pub k: u32,
    pub degree: usize,
    pub sup_error: f64,
    /// `|| p_k X_n - proj(1_[a,b] Z_n) ||_mu`.
    pub distance: f64,
    /// `|| X_n ||_mu`.
    pub norm: f64,
    /// `|| (c_k - 1_[a,b]) X_n ||_mu`; zero when no atom of `X_n` sits on a
    /// ramp shoulder.
    pub shoulder: f64,
    /// `|| 1_[a,b] X_n - proj(1_[a,b] Z_n) ||_mu`, the value `d_k` tends to.
    /// Zero for `m = N`.
    pub limit: f64,
}

impl RangeRow {
    /// `d_k <= (1/k) ||X_n|| + 1e-10`.
    pub fn within_sup_bound(&self) -> bool {
        self.distance <= self.norm / self.k as f64 + 1e-10
    }

    /// `|d_k - limit| <= (1/k) ||X_n|| + shoulder + 1e-10`, which holds for
    /// every `m` by the triangle inequality.
    pub fn near_limit(&self) -> bool {
        (self.distance - self.limit).abs() <= self.norm / self.k as f64 + self.shoulder + 1e-10
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeExperiment {
    pub m: usize,
    pub radius: f64,
    pub rows: Vec<RangeRow>,
}

impl RangeExperiment {
    pub fn nonincreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].distance <= w[0].distance + 1e-12)
    }
}

/// With `Z_n = 1_[-n,n] X` and `X_n = proj(Z_n)`, records
/// `d_k = || p_k X_n - proj(1_[a,b] Z_n) ||_mu` for each `k`. Each `p_k` is
/// fitted on the hull of `[-n, n]`, the ramp support and the spectrum, since
/// for `m < N` the projection spreads `X_n` beyond `[-n, n]`.
#[allow(clippy::too_many_arguments)]
pub fn range_indicator_experiment(
    di: &DirectIntegral,
    m: usize,
    a: f64,
    b: f64,
    n: f64,
    k_list: &[u32],
    x: &Section,
    max_degree: usize,
) -> Result<RangeExperiment> {
    let proj = RangeProjector::new(di, m)?;
    let lambdas = di.lambdas();
    let radius = nudge_radius(&lambdas, n);
    let (spec_lo, spec_hi) = match (lambdas.first(), lambdas.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (-radius, radius),
    };
    let z = multiply(indicator(-radius, radius), x);
    let xn = proj.project(di, &z)?;
    let target = proj.project(di, &multiply(indicator(a, b), &z))?;
    let norm = norm_mu(di, &xn)?;
    let limit = norm_mu(di, &multiply(indicator(a, b), &xn).sub(&target)?)?;
    let rows = k_list
        .iter()
        .map(|&k| {
            let r = RampSpec::new(a, b, k)?;
            let (slo, shi) = r.support();
            let lo = slo.min(-radius).min(spec_lo);
            let hi = shi.max(radius).max(spec_hi);
            let fit = fit_ramp_polynomial(r, (lo, hi), max_degree)?;
            let pk = multiply(|t| fit.poly.eval(t), &xn);
            let distance = norm_mu(di, &pk.sub(&target)?)?;
            let shoulder = norm_mu(di, &multiply(|t| ramp_eval(r, t) - indicator(a, b)(t), &xn))?;
            Ok(RangeRow {
                k,
                degree: fit.poly.degree(),
                sup_error: fit.sup_error,
                distance,
                norm,
                shoulder,
                limit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RangeExperiment { m, radius, rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationRow {
    pub k: u32,
    /// `|| T^k X_n - proj(T^k Z_n) ||_mu`.
    pub defect: f64,
    /// `1e-8 (n + 1)^k ||X||_mu`.
    pub bound: f64,
}

impl CommutationRow {
    pub fn holds(&self) -> bool {
        self.defect <= self.bound
    }
}

/// `T^k X_n` against `proj(T^k Z_n)` for `k = 1..=k_max`. The identity needs a
/// `T`-invariant range, which at finite scale is guaranteed only for
/// `m = N`; for `m < N` the defect is a diagnostic.
pub fn tk_commutation_check(
    di: &DirectIntegral,
    m: usize,
    x: &Section,
    n: f64,
    k_max: u32,
) -> Result<Vec<CommutationRow>> {
    let proj = RangeProjector::new(di, m)?;
    let radius = nudge_radius(&di.lambdas(), n);
    let z = multiply(indicator(-radius, radius), x);
    let xn = proj.project(di, &z)?;
    let norm = norm_mu(di, x)?;
    (1..=k_max)
        .map(|k| {
            let power = |t: f64| t.powi(k as i32);
            let lhs = multiply(power, &xn);
            let rhs = proj.project(di, &multiply(power, &z))?;
            Ok(CommutationRow {
                k,
                defect: norm_mu(di, &lhs.sub(&rhs)?)?,
                bound: 1e-8 * (n + 1.0).powi(k as i32) * norm,
            })
        })
        .collect()
}

/// HEURISTIC: Kolmogorov distance between the normalized `nu^{x,x}` at
/// consecutive truncation sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub label: String,
    pub n_from: usize,
    pub n_to: usize,
    pub distance: f64,
}

/// Dictionary vectors are given by leading coefficients and padded with
/// zeros to each `N`.
pub fn essential_selfadjointness_heuristic(
    spec: &OperatorSpec,
    n_list: &[usize],
    dictionary: &[(String, Vec<Scalar>)],
    weights: &WeightsMode,
) -> Result<Vec<StabilityRow>> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation("N list must be increasing".into()));
    }
    if let Some((label, _)) = dictionary.iter().find(|(_, c)| c.len() > n_list[0]) {
        return Err(Error::Dimension(format!(
            "dictionary vector `{label}` is longer than N = {}",
            n_list[0]
        )));
    }
    let mut measures = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let s = QuasiSampling::new(spec, n, weights.weights(n)?)?;
        let d = eigendecompose(&s)?;
        let mu = spectral_probability_measure(&s, &d, crate::spectral_measure::DEFAULT_TOL_ATOM);
        let per_x = dictionary
            .iter()
            .map(|(_, c)| {
                let x = Vector::from_fn(n, |i, _| c.get(i).copied().unwrap_or_default());
                nu_measure(&d, &mu, &x, &x)?.normalized_probability()
            })
            .collect::<Result<Vec<_>>>()?;
        measures.push(per_x);
    }
    let mut rows = Vec::new();
    for (i, (label, _)) in dictionary.iter().enumerate() {
        for w in 0..n_list.len().saturating_sub(1) {
            rows.push(StabilityRow {
                label: label.clone(),
                n_from: n_list[w],
                n_to: n_list[w + 1],
                distance: kolmogorov_distance(
                    &measures[w][i],
                    Reference::Measure(&measures[w + 1][i]),
                )?,
            });
        }
    }
    Ok(rows)
}
