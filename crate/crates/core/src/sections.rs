//! Fiber frames `V_1(lambda), ..., V_N(lambda)` synthesized from the Gram
//! field, one coordinate of `l^2` at a time.
//!
//! Step `n` represents the functional `T_n(sum a_j V_j) = sum a_j G_{j,n}`
//! on `E_n = span{V_1..V_{n-1}}` by its Riesz vector `R`, then sets
//! `V_n = R + sqrt(G_{n,n} - ||R||^2) g_n`. The representation goes through
//! the projection coefficients of [`ProjectionFrame`], so the result is a
//! lower-triangular factor of `G` with zero pivots skipped.

use crate::linalg::inner;
use crate::par::{self, Execution};
use crate::spectral_measure::GramField;
use crate::{Error, Matrix, Result, Scalar, Vector};

/// Relative size below which a Gram-Schmidt increment counts as zero.
pub const ZERO_INCREMENT: f64 = 1e-14;

/// An ordered family of vectors together with the Gram-Schmidt increments
/// `Vhat_n = V_n - proj_{E_{n-1}} V_n` used by the projection recursion.
#[derive(Debug, Clone, Default)]
pub struct ProjectionFrame {
    vectors: Vec<Vector>,
    increments: Vec<Vector>,
    increment_norms: Vec<f64>,
    /// Coefficients `a` with `Vhat_n = V_n - sum_j a_j V_j`.
    increment_coefficients: Vec<Vec<Scalar>>,
}

impl ProjectionFrame {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    /// Number of nonzero increments, i.e. the dimension of the span.
    pub fn rank(&self) -> usize {
        self.increment_norms.iter().filter(|&&h| h > 0.0).count()
    }

    /// Appends `v`; its increment is treated as zero when
    /// `||Vhat||^2 <= zero_norm_sq`.
    pub fn push(&mut self, v: Vector, zero_norm_sq: f64) {
        let a = self.coefficients(&v);
        let mut hat = v.clone();
        for (vj, aj) in self.vectors.iter().zip(&a) {
            hat.axpy(-*aj, vj, Scalar::new(1.0, 0.0));
        }
        let h = hat.norm_squared();
        if h > zero_norm_sq {
            self.increment_norms.push(h);
            self.increments.push(hat);
        } else {
            self.increment_norms.push(0.0);
            self.increments.push(Vector::zeros(v.len()));
        }
        self.increment_coefficients.push(a);
        self.vectors.push(v);
    }

    /// Coefficients `a_1..a_m` with `proj_{E_m} y = sum a_j V_j`, peeling
    /// one frame vector off at a time from the top:
    /// `a_n = <y', Vhat_n> / ||Vhat_n||^2` (0 when `Vhat_n` vanishes),
    /// then `y' <- y' - a_n V_n`.
    pub fn coefficients(&self, y: &Vector) -> Vec<Scalar> {
        let m = self.vectors.len();
        let mut a = vec![Scalar::default(); m];
        let mut rest = y.clone();
        for n in (0..m).rev() {
            let h = self.increment_norms[n];
            if h == 0.0 {
                continue;
            }
            a[n] = inner(&rest, &self.increments[n]) / h;
            rest.axpy(-a[n], &self.vectors[n], Scalar::new(1.0, 0.0));
        }
        a
    }

    /// `sum a_j V_j`.
    pub fn combine(&self, a: &[Scalar]) -> Vector {
        let len = self.vectors.first().map_or(0, |v| v.len());
        let mut out = Vector::zeros(len);
        for (v, c) in self.vectors.iter().zip(a) {
            out.axpy(*c, v, Scalar::new(1.0, 0.0));
        }
        out
    }
}

/// Projection coefficients of `y` onto `span(frame)`; an increment whose
/// norm is within `1e-14` of its vector's norm counts as zero.
pub fn measurable_projection(y: &Vector, frame: &[Vector]) -> Result<Vec<Scalar>> {
    let mut pf = ProjectionFrame::new();
    for v in frame {
        if v.len() != y.len() {
            return Err(Error::Dimension(format!(
                "frame vector of length {} does not match {}",
                v.len(),
                y.len()
            )));
        }
        let scale = ZERO_INCREMENT * v.norm();
        pf.push(v.clone(), scale * scale);
    }
    Ok(pf.coefficients(y))
}

/// Frame synthesized from a PSD Gram matrix. Column `n` of `vectors` is
/// `V_{n+1}`, supported on the first `n + 1` coordinates.
#[derive(Debug, Clone)]
pub struct SectionFactor {
    pub vectors: Matrix,
    pub rank: usize,
}

pub fn gram_to_sections(g: &Matrix, tol_psd: f64) -> Result<SectionFactor> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::Dimension("Gram matrix must be square".into()));
    }
    let mut frame = ProjectionFrame::new();
    let mut running_trace = 0.0;
    for col in 0..n {
        running_trace += g[(col, col)].re;
        // T_col(Vhat_i) = G[i, col] - sum_j a^(i)_j G[j, col]
        let mut riesz = Vector::zeros(n);
        for i in 0..col {
            let h = frame.increment_norms[i];
            if h == 0.0 {
                continue;
            }
            let a = &frame.increment_coefficients[i];
            let t: Scalar = g[(i, col)]
                - a.iter()
                    .enumerate()
                    .map(|(j, aj)| aj * g[(j, col)])
                    .sum::<Scalar>();
            riesz.axpy(t.conj() / h, &frame.increments[i], Scalar::new(1.0, 0.0));
        }
        let residual = g[(col, col)].re - riesz.norm_squared();
        if residual < -tol_psd {
            return Err(Error::NotPsd {
                step: col + 1,
                residual,
                tolerance: tol_psd,
            });
        }
        // zero pivot below 1e-14 of the running trace, else sqrt(max(res, 0))
        let pivot = if residual <= ZERO_INCREMENT * running_trace {
            0.0
        } else {
            residual.sqrt()
        };
        let mut v = riesz;
        v[col] += Scalar::new(pivot, 0.0);
        frame.push(v, ZERO_INCREMENT * running_trace);
    }
    let rank = frame.rank();
    let vectors = Matrix::from_columns(frame.vectors());
    Ok(SectionFactor {
        vectors: if n == 0 { Matrix::zeros(0, 0) } else { vectors },
        rank,
    })
}

/// `<V_j, V_l>` for all pairs.
pub fn frame_gram(vectors: &Matrix) -> Matrix {
    vectors.transpose() * vectors.conjugate()
}

#[derive(Debug, Clone)]
pub struct FiberFrame {
    pub lambda: f64,
    pub mass: f64,
    pub cluster: usize,
    pub multiplicity: usize,
    /// Column `j` holds `V_{j+1}(lambda)` in the coordinates `g_1..g_N`.
    pub vectors: Matrix,
    pub rank: usize,
}

impl FiberFrame {
    pub fn gram(&self) -> Matrix {
        frame_gram(&self.vectors)
    }
}

/// One frame per atom, PSD slack `tol_psd_rel * trace(U(lambda))`.
pub fn build_fibers(gf: &GramField, tol_psd_rel: f64) -> Result<Vec<FiberFrame>> {
    build_fibers_with(gf, tol_psd_rel, Execution::default())
}

pub fn build_fibers_with(
    gf: &GramField,
    tol_psd_rel: f64,
    exec: Execution,
) -> Result<Vec<FiberFrame>> {
    par::try_map_slice(exec, &gf.atoms, |atom| {
        let factor = gram_to_sections(&atom.matrix, atom.psd_tolerance(tol_psd_rel))?;
        Ok(FiberFrame {
            lambda: atom.lambda,
            mass: atom.mass,
            cluster: atom.cluster,
            multiplicity: atom.multiplicity,
            vectors: factor.vectors,
            rank: factor.rank,
        })
    })
}
