//! Atomic spectral measures induced by a quasi-sampling: the probability
//! measure `mu`, the signed measures `nu^{x,y}`, Radon-Nikodym Gram matrices,
//! and the inequalities and convergence metrics built on them.

use std::io::{self, Write};

use crate::linalg::{inner, is_real};
use crate::par::{self, Execution};
use crate::sampling::{EigenDecomposition, QuasiSampling};
use crate::{Error, Matrix, Result, Scalar, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Probability,
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub lambda: f64,
    pub mass: Scalar,
}

/// Finitely supported measure on the real line. `dropped` is mass that
/// belongs to the measure but is not carried by any listed atom.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
    pub kind: MeasureKind,
    pub dropped: Scalar,
}

impl AtomicMeasure {
    /// Builds a probability-kind measure from `(lambda, mass)` pairs.
    /// Positions must be strictly increasing and masses positive.
    pub fn probability(pairs: &[(f64, f64)]) -> Result<Self> {
        let atoms: Vec<Atom> = pairs
            .iter()
            .map(|&(lambda, m)| Atom {
                lambda,
                mass: Scalar::new(m, 0.0),
            })
            .collect();
        let m = Self {
            atoms,
            kind: MeasureKind::Probability,
            dropped: Scalar::default(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn signed(atoms: Vec<Atom>, dropped: Scalar) -> Result<Self> {
        let m = Self {
            atoms,
            kind: MeasureKind::Signed,
            dropped,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.atoms.windows(2).any(|w| !(w[0].lambda < w[1].lambda)) {
            return Err(Error::MeasureMismatch(
                "atom positions must be strictly increasing".into(),
            ));
        }
        if self.kind == MeasureKind::Probability
            && self
                .atoms
                .iter()
                .any(|a| !(a.mass.re > 0.0) || a.mass.im != 0.0)
        {
            return Err(Error::MeasureMismatch(
                "probability atoms must have positive real mass".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Sum of atom masses (excludes `dropped`).
    pub fn total(&self) -> Scalar {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Sum of `|mass|` over atoms.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass.norm()).sum()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.lambda).collect()
    }

    /// Mass of the atoms selected by `inside`.
    pub fn mass_of(&self, inside: impl Fn(f64) -> bool) -> Scalar {
        self.atoms
            .iter()
            .filter(|a| inside(a.lambda))
            .map(|a| a.mass)
            .sum()
    }

    /// `sum lambda^k mass`.
    pub fn moment(&self, k: u32) -> Scalar {
        self.atoms
            .iter()
            .map(|a| a.mass * a.lambda.powi(k as i32))
            .sum()
    }

    /// `sum f(lambda) mass`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> Scalar {
        self.atoms.iter().map(|a| a.mass * f(a.lambda)).sum()
    }

    /// Converts a nonnegative real signed measure (such as `nu^{x,x}`) into
    /// a probability measure normalized by its atom total. Zero atoms are
    /// removed.
    pub fn normalized_probability(&self) -> Result<Self> {
        if self
            .atoms
            .iter()
            .any(|a| a.mass.im != 0.0 || a.mass.re < 0.0)
        {
            return Err(Error::MeasureMismatch(
                "measure has negative or non-real atoms".into(),
            ));
        }
        let total = self.total().re;
        if !(total > 0.0) {
            return Err(Error::MeasureMismatch("measure has no mass".into()));
        }
        let atoms = self
            .atoms
            .iter()
            .filter(|a| a.mass.re > 0.0)
            .map(|a| Atom {
                lambda: a.lambda,
                mass: Scalar::new(a.mass.re / total, 0.0),
            })
            .collect();
        Ok(Self {
            atoms,
            kind: MeasureKind::Probability,
            dropped: Scalar::default(),
        })
    }

    fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.atoms
            .iter()
            .map(|a| {
                acc += a.mass.re;
                acc
            })
            .collect()
    }

    /// `mu((-inf, t])`.
    pub fn cdf(&self, t: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.lambda <= t);
        self.atoms[..k].iter().map(|a| a.mass.re).sum()
    }

    /// Measure CSV: `lambda,mass_re,mass_im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "lambda,mass_re,mass_im")?;
        for a in &self.atoms {
            writeln!(w, "{:e},{:e},{:e}", a.lambda, a.mass.re, a.mass.im)?;
        }
        Ok(())
    }
}

/// The spectral probability measure of a quasi-sampling, with the map from
/// atoms back to eigen-clusters.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    pub measure: AtomicMeasure,
    /// Cluster id of each retained atom.
    pub atom_cluster: Vec<usize>,
    /// Atom index of each cluster, `None` when the cluster was dropped.
    pub cluster_atom: Vec<Option<usize>>,
    /// Exact (pre-drop) mass of every cluster.
    pub cluster_mass: Vec<f64>,
    pub dropped_mass: f64,
    pub tol_atom: f64,
}

pub const DEFAULT_TOL_ATOM: f64 = 1e-14;

impl SpectralMeasure {
    pub fn is_retained(&self, cluster: usize) -> bool {
        self.cluster_atom.get(cluster).is_some_and(Option::is_some)
    }

    pub fn atom_mass(&self, atom: usize) -> f64 {
        self.measure.atoms[atom].mass.re
    }

    pub fn has_dropped(&self) -> bool {
        self.atom_cluster.len() < self.cluster_atom.len()
    }
}

/// `mu(lambda) = sum_j c_j ||P_lambda e_j||^2` per cluster. Clusters with
/// mass at or below `tol_atom` are dropped and their mass reported; the
/// remaining masses are not renormalized.
pub fn spectral_probability_measure(
    s: &QuasiSampling,
    d: &EigenDecomposition,
    tol_atom: f64,
) -> SpectralMeasure {
    // ||P e_j||^2 = sum_k |u_k[j]|^2 over the cluster basis.
    let cluster_mass: Vec<f64> = d
        .clusters
        .iter()
        .map(|c| {
            (0..d.n)
                .map(|j| {
                    let row: f64 = c.basis.row(j).iter().map(|z| z.norm_sqr()).sum();
                    s.weights[j] * row
                })
                .sum()
        })
        .collect();
    let mut atoms = Vec::new();
    let mut atom_cluster = Vec::new();
    let mut cluster_atom = vec![None; d.clusters.len()];
    let mut dropped = 0.0;
    for (id, (c, &m)) in d.clusters.iter().zip(&cluster_mass).enumerate() {
        if m > tol_atom {
            cluster_atom[id] = Some(atoms.len());
            atom_cluster.push(id);
            atoms.push(Atom {
                lambda: c.lambda,
                mass: Scalar::new(m, 0.0),
            });
        } else {
            dropped += m;
        }
    }
    SpectralMeasure {
        measure: AtomicMeasure {
            atoms,
            kind: MeasureKind::Probability,
            dropped: Scalar::new(dropped, 0.0),
        },
        atom_cluster,
        cluster_atom,
        cluster_mass,
        dropped_mass: dropped,
        tol_atom,
    }
}

fn check_len(d: &EigenDecomposition, v: &Vector) -> Result<()> {
    if v.len() != d.n {
        return Err(Error::Dimension(format!(
            "vector of length {} does not match N = {}",
            v.len(),
            d.n
        )));
    }
    Ok(())
}

/// `nu^{x,y}({lambda}) = <P_lambda x, P_lambda y>` on the atoms of `mu`;
/// contributions of dropped clusters are summed into `dropped`.
pub fn nu_measure(
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
    x: &Vector,
    y: &Vector,
) -> Result<AtomicMeasure> {
    check_len(d, x)?;
    check_len(d, y)?;
    let pairings = d.pairings(x, y);
    let atoms = mu
        .atom_cluster
        .iter()
        .map(|&c| Atom {
            lambda: d.clusters[c].lambda,
            mass: pairings[c],
        })
        .collect();
    let dropped = pairings
        .iter()
        .enumerate()
        .filter(|(c, _)| !mu.is_retained(*c))
        .map(|(_, p)| *p)
        .sum();
    Ok(AtomicMeasure {
        atoms,
        kind: MeasureKind::Signed,
        dropped,
    })
}

/// `U(lambda)_{j,l} = <P_lambda e_j, P_lambda e_l> / mu(lambda)`.
#[derive(Debug, Clone)]
pub struct GramAtom {
    pub lambda: f64,
    pub mass: f64,
    pub cluster: usize,
    pub multiplicity: usize,
    pub matrix: Matrix,
}

impl GramAtom {
    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Absolute PSD slack for relative tolerance `rel`.
    pub fn psd_tolerance(&self, rel: f64) -> f64 {
        rel * self.trace()
    }

    pub fn max_entry(&self) -> f64 {
        crate::linalg::max_abs(&self.matrix)
    }
}

#[derive(Debug, Clone)]
pub struct GramField {
    pub n: usize,
    pub atoms: Vec<GramAtom>,
}

pub fn gram_field(d: &EigenDecomposition, mu: &SpectralMeasure) -> Result<GramField> {
    gram_field_with(d, mu, Execution::default())
}

pub fn gram_field_with(
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
    exec: Execution,
) -> Result<GramField> {
    let atoms = par::try_map_slice(exec, &mu.atom_cluster, |&cluster| {
        let c = &d.clusters[cluster];
        let mass = mu.cluster_mass[cluster];
        if !(mass > mu.tol_atom) {
            return Err(Error::NegligibleAtom {
                lambda: c.lambda,
                mass,
            });
        }
        // U_{j,l} = sum_k conj(W_{jk}) W_{lk}
        let w = &c.basis;
        let matrix = (w.conjugate() * w.transpose()).unscale(mass);
        Ok(GramAtom {
            lambda: c.lambda,
            mass,
            cluster,
            multiplicity: c.multiplicity,
            matrix,
        })
    })?;
    Ok(GramField { n: d.n, atoms })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCheck {
    pub actual: f64,
    pub bound: f64,
}

impl TailCheck {
    pub fn holds(&self) -> bool {
        self.actual <= self.bound + 1e-12
    }
}

/// `mu(sigma \ [-n, n])` against `(1/n^2) sum_j c_j ||A e_j||^2`. The actual
/// tail includes clusters dropped from the atom list.
pub fn tail_mass_check(
    s: &QuasiSampling,
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
    n: f64,
) -> TailCheck {
    let actual = d
        .clusters
        .iter()
        .zip(&mu.cluster_mass)
        .filter(|(c, _)| c.lambda.abs() > n)
        .map(|(_, m)| m)
        .sum();
    let energy: f64 = (0..s.n)
        .map(|j| s.weights[j] * s.matrix.column(j).norm_squared())
        .sum();
    TailCheck {
        actual,
        bound: energy / (n * n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl InequalityCheck {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self) -> bool {
        self.slack() >= -1e-12
    }
}

/// `sum_lambda |<P x, P y>|` against `||x|| ||y||`.
pub fn cauchy_schwarz_check(
    d: &EigenDecomposition,
    x: &Vector,
    y: &Vector,
) -> Result<InequalityCheck> {
    check_len(d, x)?;
    check_len(d, y)?;
    Ok(InequalityCheck {
        lhs: d.pairings(x, y).iter().map(|p| p.norm()).sum(),
        rhs: x.norm() * y.norm(),
    })
}

/// `sum |<P x1, P y1> - <P x2, P y2>|` against
/// `||x1|| ||y1 - y2|| + ||x1 - x2|| ||y2||`.
pub fn perturbation_bound(
    d: &EigenDecomposition,
    x1: &Vector,
    x2: &Vector,
    y1: &Vector,
    y2: &Vector,
) -> Result<InequalityCheck> {
    for v in [x1, x2, y1, y2] {
        check_len(d, v)?;
    }
    let a = d.pairings(x1, y1);
    let b = d.pairings(x2, y2);
    Ok(InequalityCheck {
        lhs: a.iter().zip(&b).map(|(p, q)| (p - q).norm()).sum(),
        rhs: x1.norm() * (y1 - y2).norm() + (x1 - x2).norm() * y2.norm(),
    })
}

/// For each budget `delta`, the largest `sum_{E} |<P x, P y>|` found over
/// atom sets `E` with `mu(E) <= delta`. Atoms are visited by descending
/// density `|<P x, P y>| / mu`, ties by ascending lambda; an atom that does
/// not fit the remaining budget is skipped, and is never split.
pub fn s_integrability_profile(
    d: &EigenDecomposition,
    mu: &SpectralMeasure,
    x: &Vector,
    y: &Vector,
    deltas: &[f64],
) -> Result<Vec<f64>> {
    check_len(d, x)?;
    check_len(d, y)?;
    if let Some(bad) = deltas.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Validation(format!(
            "budget must be nonnegative, got {bad}"
        )));
    }
    let pairings = d.pairings(x, y);
    let mut items: Vec<(f64, f64, f64)> = mu
        .atom_cluster
        .iter()
        .enumerate()
        .map(|(atom, &c)| {
            let value = pairings[c].norm();
            let mass = mu.atom_mass(atom);
            (value / mass, mass, value)
        })
        .collect();
    // atoms are already in ascending lambda; a stable sort keeps that for ties
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(deltas
        .iter()
        .map(|&delta| {
            let mut used = 0.0;
            let mut value = 0.0;
            for &(_, mass, v) in &items {
                if used + mass <= delta {
                    used += mass;
                    value += v;
                }
            }
            value
        })
        .collect())
}

/// Second argument of [`kolmogorov_distance`].
#[derive(Clone, Copy)]
pub enum Reference<'a> {
    Measure(&'a AtomicMeasure),
    /// Continuous distribution function, nondecreasing from 0 to 1.
    Cdf(&'a dyn Fn(f64) -> f64),
}

/// `sup_t |F_1(t) - F_2(t)|`, evaluated at every atom position and its left
/// limit, which is exact for step functions against a continuous or step
/// reference.
pub fn kolmogorov_distance(m1: &AtomicMeasure, m2: Reference<'_>) -> Result<f64> {
    if m1.kind != MeasureKind::Probability {
        return Err(Error::MeasureMismatch(
            "kolmogorov distance needs probability measures".into(),
        ));
    }
    let c1 = m1.cumulative();
    let step = |m: &AtomicMeasure, c: &[f64], t: f64, left: bool| -> f64 {
        let k = if left {
            m.atoms.partition_point(|a| a.lambda < t)
        } else {
            m.atoms.partition_point(|a| a.lambda <= t)
        };
        if k == 0 {
            0.0
        } else {
            c[k - 1]
        }
    };
    match m2 {
        Reference::Measure(m2) => {
            if m2.kind != MeasureKind::Probability {
                return Err(Error::MeasureMismatch(
                    "kolmogorov distance needs probability measures".into(),
                ));
            }
            let c2 = m2.cumulative();
            let mut grid = m1.lambdas();
            grid.extend(m2.lambdas());
            let mut worst: f64 = 0.0;
            for &t in &grid {
                for left in [true, false] {
                    let diff = step(m1, &c1, t, left) - step(m2, &c2, t, left);
                    worst = worst.max(diff.abs());
                }
            }
            Ok(worst)
        }
        Reference::Cdf(f) => {
            let mut worst: f64 = 0.0;
            for &t in &m1.lambdas() {
                let ft = f(t);
                for left in [true, false] {
                    worst = worst.max((step(m1, &c1, t, left) - ft).abs());
                }
            }
            Ok(worst)
        }
    }
}

/// Groups atoms into half-open bins `[k w, (k + 1) w)` represented by their
/// midpoints.
pub fn bin_pushforward(m: &AtomicMeasure, bin_width: f64) -> Result<AtomicMeasure> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(Error::Validation(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let mut atoms: Vec<Atom> = Vec::new();
    let mut current: Option<i64> = None;
    for a in &m.atoms {
        let k = (a.lambda / bin_width).floor() as i64;
        if current == Some(k) {
            atoms.last_mut().expect("open bin").mass += a.mass;
        } else {
            current = Some(k);
            atoms.push(Atom {
                lambda: (k as f64 + 0.5) * bin_width,
                mass: a.mass,
            });
        }
    }
    Ok(AtomicMeasure {
        atoms,
        kind: m.kind,
        dropped: m.dropped,
    })
}

/// `true` when every mass is real (within exact zero imaginary parts).
pub fn is_real_measure(m: &AtomicMeasure) -> bool {
    m.atoms.iter().all(|a| a.mass.im == 0.0)
}

/// `<A^k x, x>` by direct matrix powering.
pub fn power_moment(s: &QuasiSampling, x: &Vector, k: u32) -> Scalar {
    let mut v = x.clone();
    for _ in 0..k {
        v = s.apply(&v);
    }
    inner(&v, x)
}

/// Checks that a Gram matrix is Hermitian with real diagonal.
pub fn gram_is_hermitian(m: &Matrix) -> bool {
    crate::linalg::asymmetry(m) <= 1e-12 * (1.0 + crate::linalg::max_abs(m))
        && (is_real(m) || m.diagonal().iter().all(|z| z.im.abs() <= 1e-12))
}
