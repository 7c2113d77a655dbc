//! Projection-valued measure `P(B) = sum_{lambda in B} P_lambda` over the
//! retained atoms, its axioms, and the functional calculus for piecewise
//! polynomials.

use crate::linalg::{asymmetry, inner, max_abs, max_abs_diff, min_eigenvalue};
use crate::report::CheckRow;
use crate::sampling::{EigenDecomposition, QuasiSampling};
use crate::spectral_measure::{nu_measure, SpectralMeasure};
use crate::{Error, Matrix, Result, Scalar, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Self {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, true, true)
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, false, false)
    }

    /// `[lo, hi)`.
    pub fn left_closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, true, false)
    }

    pub fn real_line() -> Self {
        Self::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lo_closed {
            t >= self.lo
        } else {
            t > self.lo
        };
        let below = if self.hi_closed {
            t <= self.hi
        } else {
            t < self.hi
        };
        above && below
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        let i = Interval::new(lo, hi, lo_closed, hi_closed);
        (!i.is_empty()).then_some(i)
    }

    /// `true` when `self` lies entirely to the left of `other`.
    fn precedes(&self, other: &Interval) -> bool {
        self.hi < other.lo || (self.hi == other.lo && !(self.hi_closed && other.lo_closed))
    }
}

/// Finite union of disjoint intervals, sorted by left endpoint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BorelSet {
    intervals: Vec<Interval>,
}

impl BorelSet {
    pub fn new(mut intervals: Vec<Interval>) -> Result<Self> {
        if intervals.iter().any(|i| i.lo.is_nan() || i.hi.is_nan()) {
            return Err(Error::InvalidSet("NaN endpoint".into()));
        }
        intervals.retain(|i| !i.is_empty());
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        if intervals.windows(2).any(|w| !w[0].precedes(&w[1])) {
            return Err(Error::InvalidSet("intervals overlap".into()));
        }
        Ok(Self { intervals })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn interval(i: Interval) -> Self {
        Self::new(vec![i]).expect("single interval")
    }

    pub fn real_line() -> Self {
        Self::interval(Interval::real_line())
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(t))
    }

    pub fn intersection(&self, other: &BorelSet) -> BorelSet {
        let mut out = Vec::new();
        for a in &self.intervals {
            for b in &other.intervals {
                if let Some(i) = a.intersect(b) {
                    out.push(i);
                }
            }
        }
        BorelSet::new(out).expect("intersections of disjoint families are disjoint")
    }

    pub fn is_disjoint(&self, other: &BorelSet) -> bool {
        self.intersection(other).intervals.is_empty()
    }

    /// Union of two disjoint sets.
    pub fn disjoint_union(&self, other: &BorelSet) -> Result<BorelSet> {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        BorelSet::new(all)
    }
}

/// Twenty test sets adapted to the sorted atom positions `lambdas`: closed,
/// half-open and open windows on a padded grid, both rays, the whole line,
/// the empty set, a two-piece union, and a window with endpoints on atoms.
pub fn interval_family(lambdas: &[f64]) -> Vec<BorelSet> {
    let (lo, hi) = match (lambdas.first(), lambdas.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0.0, 0.0),
    };
    let pad = 0.1 * (hi - lo) + 0.1;
    let step = (hi - lo + 2.0 * pad) / 6.0;
    let p: Vec<f64> = (0..=6).map(|i| lo - pad + step * i as f64).collect();
    let mid = 0.5 * (lo + hi);
    let one = BorelSet::interval;
    let mut sets = Vec::with_capacity(20);
    sets.extend((0..6).map(|i| one(Interval::closed(p[i], p[i + 1]))));
    sets.extend((0..5).map(|i| one(Interval::left_closed(p[i], p[i + 2]))));
    sets.extend((0..3).map(|i| one(Interval::open(p[i], p[i + 3]))));
    sets.push(BorelSet::real_line());
    sets.push(BorelSet::empty());
    sets.push(one(Interval::new(f64::NEG_INFINITY, mid, false, true)));
    sets.push(one(Interval::new(mid, f64::INFINITY, false, false)));
    sets.push(
        BorelSet::new(vec![
            Interval::closed(p[0], p[1]),
            Interval::new(p[3], p[5], false, true),
        ])
        .expect("disjoint pieces"),
    );
    sets.push(one(Interval::closed(
        lo,
        lambdas.get(lambdas.len() / 2).copied().unwrap_or(lo),
    )));
    sets
}

#[derive(Debug, Clone)]
pub struct SpectralProjection {
    pub set: BorelSet,
    pub matrix: Matrix,
}

pub fn spectral_projection(
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
    set: &BorelSet,
) -> SpectralProjection {
    let matrix = d.weighted_projector_sum(
        |c| mu.is_retained(c) && set.contains(d.clusters[c].lambda),
        |_| Scalar::new(1.0, 0.0),
    );
    SpectralProjection {
        set: set.clone(),
        matrix,
    }
}

/// Idempotence and self-adjointness per set, multiplicativity for every
/// pair and additivity for every disjoint pair.
pub fn pvm_axiom_report(
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
    sets: &[BorelSet],
) -> Vec<CheckRow> {
    let projections: Vec<SpectralProjection> =
        sets.iter().map(|b| spectral_projection(d, mu, b)).collect();
    let mut rows = Vec::new();
    for (i, p) in projections.iter().enumerate() {
        let sq = &p.matrix * &p.matrix;
        rows.push(CheckRow::at_most(
            format!("pvm_idempotent[{i}]"),
            max_abs_diff(&sq, &p.matrix),
            1e-10,
        ));
        rows.push(CheckRow::at_most(
            format!("pvm_self_adjoint[{i}]"),
            asymmetry(&p.matrix),
            1e-12,
        ));
    }
    for i in 0..sets.len() {
        for j in (i + 1)..sets.len() {
            let (a, b) = (&projections[i], &projections[j]);
            let meet = spectral_projection(d, mu, &sets[i].intersection(&sets[j]));
            rows.push(CheckRow::at_most(
                format!("pvm_multiplicative[{i},{j}]"),
                max_abs_diff(&(&a.matrix * &b.matrix), &meet.matrix),
                1e-10,
            ));
            if sets[i].is_disjoint(&sets[j]) {
                let union = sets[i]
                    .disjoint_union(&sets[j])
                    .expect("disjoint sets have a disjoint union");
                let pu = spectral_projection(d, mu, &union);
                rows.push(CheckRow::at_most(
                    format!("pvm_additive[{i},{j}]"),
                    max_abs_diff(&(&a.matrix + &b.matrix), &pu.matrix),
                    1e-12,
                ));
            }
        }
    }
    rows
}

/// Polynomial in monomial coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn identity() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Self::new(c)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Polynomial::new(vec![]);
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

/// Polynomial pieces on disjoint intervals; zero off their union.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial {
    pieces: Vec<(Interval, Polynomial)>,
}

impl PiecewisePolynomial {
    pub fn new(pieces: Vec<(Interval, Polynomial)>) -> Result<Self> {
        BorelSet::new(pieces.iter().map(|(i, _)| *i).collect())?;
        Ok(Self { pieces })
    }

    pub fn polynomial(p: Polynomial) -> Self {
        Self {
            pieces: vec![(Interval::real_line(), p)],
        }
    }

    pub fn indicator(set: &BorelSet) -> Self {
        Self {
            pieces: set
                .intervals()
                .iter()
                .map(|i| (*i, Polynomial::constant(1.0)))
                .collect(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.pieces
            .iter()
            .find(|(i, _)| i.contains(t))
            .map_or(0.0, |(_, p)| p.eval(t))
    }

    pub fn mul(&self, other: &PiecewisePolynomial) -> PiecewisePolynomial {
        let mut pieces = Vec::new();
        for (a, p) in &self.pieces {
            for (b, q) in &other.pieces {
                if let Some(i) = a.intersect(b) {
                    pieces.push((i, p.mul(q)));
                }
            }
        }
        PiecewisePolynomial { pieces }
    }
}

/// `sum_lambda phi(lambda) P_lambda` over the retained atoms.
pub fn functional_calculus(
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
    phi: &PiecewisePolynomial,
) -> Matrix {
    d.weighted_projector_sum(|c| mu.is_retained(c), |l| Scalar::new(phi.eval(l), 0.0))
}

/// `max |A P(R) - int id dP|`. `P(R)` is the identity unless atoms were
/// dropped, in which case the comparison is on the retained subspace.
pub fn reconstruction_residual(
    s: &QuasiSampling,
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
) -> f64 {
    let id = functional_calculus(
        d,
        mu,
        &PiecewisePolynomial::polynomial(Polynomial::identity()),
    );
    if mu.has_dropped() {
        let whole = spectral_projection(d, mu, &BorelSet::real_line()).matrix;
        max_abs_diff(&(&s.matrix * whole), &id)
    } else {
        max_abs_diff(&s.matrix, &id)
    }
}

/// `sum_{lambda retained} P_lambda x`; equal to `x` when nothing was dropped.
pub fn retained_part(d: &EigenDecomposition, mu: &SpectralMeasure, x: &Vector) -> Vector {
    let mut out = Vector::zeros(x.len());
    for (id, c) in d.clusters.iter().enumerate() {
        if mu.is_retained(id) {
            out += c.project(x);
        }
    }
    out
}

/// `max_{1 <= k <= k_max} |int t^k d nu^{x,x} - <A^k x_r, x_r>| / max(1, rho)^k`
/// with `x_r` the retained part of `x` and `rho` the spectral radius. The
/// right side is computed by repeated matrix-vector products.
pub fn moment_defect(
    s: &QuasiSampling,
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
    x: &Vector,
    k_max: u32,
) -> Result<f64> {
    let nu = nu_measure(d, mu, x, x)?;
    let xr = retained_part(d, mu, x);
    let scale = d.spectral_radius().max(1.0);
    let mut power = xr.clone();
    let mut worst: f64 = 0.0;
    for k in 1..=k_max {
        power = s.apply(&power);
        let direct = inner(&power, &xr);
        worst = worst.max((nu.moment(k) - direct).norm() / scale.powi(k as i32));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPair {
    pub k: u32,
    /// `int t^k d nu^{x,x}`.
    pub lhs: f64,
    /// `<A x, x>` for `k = 1`, `||A x||^2` for `k = 2`.
    pub rhs: f64,
}

pub fn moment_identity_check(
    s: &QuasiSampling,
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
    x: &Vector,
) -> Result<[MomentPair; 2]> {
    let nu = nu_measure(d, mu, x, x)?;
    let ax = s.apply(x);
    Ok([
        MomentPair {
            k: 1,
            lhs: nu.moment(1).re,
            rhs: inner(&ax, x).re,
        },
        MomentPair {
            k: 2,
            lhs: nu.moment(2).re,
            rhs: ax.norm_squared(),
        },
    ])
}

/// `<P(B) x, y>` against `nu^{x,y}(B)`, the bound `|.| <= ||x|| ||y||`, and
/// nonnegativity of `P(B)`.
pub fn projection_consistency(
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
    set: &BorelSet,
    x: &Vector,
    y: &Vector,
) -> Result<(f64, f64, f64)> {
    let p = spectral_projection(d, mu, set);
    let nu = nu_measure(d, mu, x, y)?;
    let lhs = inner(&(&p.matrix * x), y);
    let rhs = nu.mass_of(|t| set.contains(t));
    let excess = lhs.norm() - x.norm() * y.norm();
    let min_eig = if max_abs(&p.matrix) == 0.0 {
        0.0
    } else {
        min_eigenvalue(&p.matrix)
    };
    Ok(((lhs - rhs).norm(), excess, min_eig))
}
