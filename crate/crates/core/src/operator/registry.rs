//! Compiled-in operators and the `dense_file:<path>` loader.

use std::f64::consts::PI;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::{OperatorSpec, ScalarField, Sequence};
use crate::{Error, Matrix, Result, Scalar};

pub const DENSE_FILE_PREFIX: &str = "dense_file:";

/// Closed-form limit law for the spectral measure of the first basis vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceLaw {
    Semicircle {
        center: f64,
        radius: f64,
    },
    /// Poisson(`mean`) placed on the points `offset + spacing * k`.
    Poisson {
        mean: f64,
        offset: f64,
        spacing: f64,
    },
}

impl ReferenceLaw {
    /// Right-continuous distribution function.
    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            ReferenceLaw::Semicircle { center, radius } => {
                let u = ((t - center) / radius).clamp(-1.0, 1.0);
                0.5 + (u * (1.0 - u * u).sqrt() + u.asin()) / PI
            }
            ReferenceLaw::Poisson {
                mean,
                offset,
                spacing,
            } => {
                if t < offset {
                    return 0.0;
                }
                let kmax = ((t - offset) / spacing).floor() as u64;
                let mut term = (-mean).exp();
                let mut total = term;
                for k in 1..=kmax {
                    term *= mean / k as f64;
                    total += term;
                    if term < 1e-300 {
                        break;
                    }
                }
                total.min(1.0)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReferenceLaw::Semicircle { .. } => "semicircle",
            ReferenceLaw::Poisson { .. } => "poisson",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegistryEntry {
    pub name: String,
    pub parameters: String,
    pub assumption: String,
}

const GRAPH_ASSUMPTION: &str =
    "finitely supported vectors form a core (the graph pairs (e_j, A e_j) are dense-spanning in G(A))";

pub fn builtin_entries() -> Vec<RegistryEntry> {
    let entry = |name: &str, parameters: &str, assumption: &str| RegistryEntry {
        name: name.into(),
        parameters: parameters.into(),
        assumption: assumption.into(),
    };
    vec![
        entry(
            "diag3",
            "diagonal (1, 2, 3) on C^3",
            "finite-dimensional; canonical basis is an eigenbasis",
        ),
        entry(
            "discrete_laplacian",
            "jacobi a_j = 2, b_j = -1 on l^2(N); spectrum [0, 4]",
            GRAPH_ASSUMPTION,
        ),
        entry(
            "free_jacobi",
            "jacobi a_j = a (default 0), b_j = b (default 1) on l^2(N); spectrum [a - 2|b|, a + 2|b|]",
            GRAPH_ASSUMPTION,
        ),
        entry(
            "harmonic_oscillator",
            "displaced oscillator 2 (a* + d)(a + d) + 1 in the number basis, displacement d (default 1): \
             jacobi a_j = 2j + 1 + 2d^2, b_j = 2d sqrt(j + 1) (j from 0); spectrum {1, 3, 5, ...}",
            GRAPH_ASSUMPTION,
        ),
    ]
}

/// Deterministic listing of the built-ins followed by any registered dense files.
pub fn list_registry(extra_dense_files: &[String]) -> String {
    let mut out = String::new();
    for e in builtin_entries() {
        out.push_str(&format!(
            "{}\n  parameters: {}\n  assumption: {}\n",
            e.name, e.parameters, e.assumption
        ));
    }
    let mut extra: Vec<&String> = extra_dense_files.iter().collect();
    extra.sort();
    extra.dedup();
    for path in extra {
        out.push_str(&format!(
            "{DENSE_FILE_PREFIX}{path}\n  parameters: dense Hermitian matrix loaded from JSON {{\"re\": [[..]], \"im\": [[..]]}}\n  assumption: finite-dimensional\n"
        ));
    }
    out
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FreeJacobiParams {
    a: f64,
    b: f64,
}

impl Default for FreeJacobiParams {
    fn default() -> Self {
        Self { a: 0.0, b: 1.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OscillatorParams {
    displacement: f64,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        Self { displacement: 1.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagonalParams {
    entries: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JacobiParams {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

/// Constant-coefficient symmetric band: `bands[d]` sits on the `d`-th
/// sub- and super-diagonal.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandedParams {
    bands: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DenseFile {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

fn params<T: for<'de> Deserialize<'de> + Default>(name: &str, value: &Value) -> Result<T> {
    match value {
        Value::Null => Ok(T::default()),
        v => serde_json::from_value(v.clone())
            .map_err(|e| Error::Validation(format!("parameters for `{name}`: {e}"))),
    }
}

fn required<T: for<'de> Deserialize<'de>>(name: &str, value: &Value) -> Result<T> {
    serde_json::from_value(value.clone())
        .map_err(|e| Error::Validation(format!("parameters for `{name}`: {e}")))
}

pub fn free_jacobi(a: f64, b: f64) -> OperatorSpec {
    OperatorSpec::jacobi("free_jacobi", Sequence::constant(a), Sequence::constant(b))
        .expect("infinite jacobi")
        .with_reference(ReferenceLaw::Semicircle {
            center: a,
            radius: 2.0 * b.abs(),
        })
}

pub fn discrete_laplacian() -> OperatorSpec {
    OperatorSpec::jacobi(
        "discrete_laplacian",
        Sequence::constant(2.0),
        Sequence::constant(-1.0),
    )
    .expect("infinite jacobi")
    .with_reference(ReferenceLaw::Semicircle {
        center: 2.0,
        radius: 2.0,
    })
}

pub fn harmonic_oscillator(displacement: f64) -> OperatorSpec {
    let d2 = displacement * displacement;
    OperatorSpec::jacobi(
        "harmonic_oscillator",
        Sequence::generated(move |j| 2.0 * j as f64 + 1.0 + 2.0 * d2),
        Sequence::generated(move |j| 2.0 * displacement * ((j + 1) as f64).sqrt()),
    )
    .expect("infinite jacobi")
    .with_reference(ReferenceLaw::Poisson {
        mean: d2,
        offset: 1.0,
        spacing: 2.0,
    })
}

pub fn diag3() -> OperatorSpec {
    OperatorSpec::diagonal("diag3", vec![1.0, 2.0, 3.0])
}

pub fn load_dense_file(path: &Path) -> Result<OperatorSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: DenseFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let n = file.re.len();
    let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
    if n == 0 || !rows_ok(&file.re) || file.im.as_ref().is_some_and(|im| !rows_ok(im)) {
        return Err(Error::Dimension(format!(
            "{} does not hold a square matrix",
            path.display()
        )));
    }
    let field = if file.im.is_some() {
        ScalarField::Complex
    } else {
        ScalarField::Real
    };
    let m = Matrix::from_fn(n, n, |i, j| {
        Scalar::new(file.re[i][j], file.im.as_ref().map_or(0.0, |im| im[i][j]))
    });
    OperatorSpec::dense(format!("{DENSE_FILE_PREFIX}{}", path.display()), m, field)
}

/// Resolves an operator name (registry name or explicit kind) with its
/// parameter table. `Value::Null` means "no parameters".
pub fn lookup(name: &str, value: &Value) -> Result<OperatorSpec> {
    if let Some(path) = name.strip_prefix(DENSE_FILE_PREFIX) {
        let _: NoParams = params(name, value)?;
        return load_dense_file(Path::new(path));
    }
    match name {
        "diag3" => {
            let _: NoParams = params(name, value)?;
            Ok(diag3())
        }
        "free_jacobi" => {
            let p: FreeJacobiParams = params(name, value)?;
            Ok(free_jacobi(p.a, p.b))
        }
        "discrete_laplacian" => {
            let _: NoParams = params(name, value)?;
            Ok(discrete_laplacian())
        }
        "harmonic_oscillator" => {
            let p: OscillatorParams = params(name, value)?;
            Ok(harmonic_oscillator(p.displacement))
        }
        "diagonal" => {
            let p: DiagonalParams = required(name, value)?;
            Ok(OperatorSpec::diagonal("diagonal", p.entries))
        }
        "jacobi" => {
            let p: JacobiParams = required(name, value)?;
            OperatorSpec::jacobi(
                "jacobi",
                Sequence::Finite(p.diag),
                Sequence::Finite(p.offdiag),
            )
        }
        "banded" => {
            let p: BandedParams = required(name, value)?;
            if p.bands.is_empty() {
                return Err(Error::Validation(
                    "banded operator needs at least one band".into(),
                ));
            }
            let bands = p.bands;
            Ok(OperatorSpec::banded(
                "banded",
                bands.len() - 1,
                None,
                ScalarField::Real,
                move |i, j| Scalar::new(bands[i.abs_diff(j)], 0.0),
            ))
        }
        other => Err(Error::UnknownOperator(other.to_string())),
    }
}
