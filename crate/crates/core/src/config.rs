//! Run configuration: TOML, or JSON when the file extension is `.json`.
//!
//! ```toml
//! [operator]
//! kind = "free_jacobi"          # registry name, dense_file:<path>, or diagonal/jacobi/banded
//! params = { a = 0.0, b = 1.0 }
//!
//! [run]
//! N_list = [32, 64, 128]
//! weights = "paper_default"     # alias "geometric"; or { user = [0.5, 0.5] }
//! tolerances = { tol_cluster = 1e-10, tol_atom = 1e-14, tol_psd = 1e-10 }
//! section_max_n = 128
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::operator::registry::{self, DENSE_FILE_PREFIX};
use crate::operator::{scale_weights, validate_weights, OperatorSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsMode {
    /// `c_j = 2^{-j} / (1 - 2^{-N})`.
    #[default]
    #[serde(rename = "paper_default", alias = "geometric")]
    Geometric,
    User(Vec<f64>),
}

impl WeightsMode {
    pub fn weights(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            WeightsMode::Geometric => Ok(scale_weights(n)),
            WeightsMode::User(w) => {
                validate_weights(w, n)?;
                Ok(w.clone())
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            WeightsMode::Geometric => "paper_default",
            WeightsMode::User(_) => "user",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Floor of the eigenvalue clustering radius; the radius is
    /// `max(tol_cluster, 1e-12 * spread)`.
    pub tol_cluster: f64,
    /// Atoms of the spectral probability measure at or below this mass are dropped.
    pub tol_atom: f64,
    /// Relative PSD slack; the absolute slack for a Gram matrix is `tol_psd * trace`.
    pub tol_psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_cluster: 1e-10,
            tol_atom: 1e-14,
            tol_psd: 1e-10,
        }
    }
}

pub const DEFAULT_SECTION_MAX_N: usize = 128;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub operator_name: String,
    pub operator: OperatorSpec,
    pub n_list: Vec<usize>,
    pub weights: WeightsMode,
    pub tolerances: Tolerances,
    /// Largest N for which Gram fields, fibers and direct-integral checks run.
    pub section_max_n: usize,
    pub output_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    operator: OperatorTable,
    run: RunTable,
    #[serde(default)]
    output: OutputTable,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorTable {
    kind: String,
    #[serde(default)]
    params: Value,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunTable {
    #[serde(rename = "N_list")]
    n_list: Vec<usize>,
    #[serde(default)]
    weights: WeightsMode,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default = "default_section_max_n")]
    section_max_n: usize,
}

fn default_section_max_n() -> usize {
    DEFAULT_SECTION_MAX_N
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputTable {
    #[serde(default = "default_dir")]
    dir: PathBuf,
}

impl Default for OutputTable {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("specint-out")
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let file: ConfigFile = if is_json {
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
    } else {
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
    };
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    build(file, base)
}

fn build(file: ConfigFile, base: &Path) -> Result<RunConfig> {
    let mut kind = file.operator.kind;
    if let Some(p) = kind.strip_prefix(DENSE_FILE_PREFIX) {
        let p = Path::new(p);
        if p.is_relative() {
            kind = format!("{DENSE_FILE_PREFIX}{}", base.join(p).display());
        }
    }
    let operator = registry::lookup(&kind, &file.operator.params)?;

    let run = file.run;
    if run.n_list.is_empty() {
        return Err(Error::Validation("run.N_list is empty".into()));
    }
    if let Some(n) = run.n_list.iter().find(|&&n| n < 2) {
        return Err(Error::Validation(format!(
            "every N must be >= 2, found {n}"
        )));
    }
    if let Some(dim) = operator.dimension() {
        if let Some(n) = run.n_list.iter().find(|&&n| n > dim) {
            return Err(Error::Validation(format!(
                "N = {n} exceeds the dimension {dim} of `{kind}`"
            )));
        }
    }
    for &n in &run.n_list {
        run.weights.weights(n)?;
    }
    let t = run.tolerances;
    for (name, v) in [
        ("tol_cluster", t.tol_cluster),
        ("tol_atom", t.tol_atom),
        ("tol_psd", t.tol_psd),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::Validation(format!(
                "{name} must be a finite nonnegative number"
            )));
        }
    }
    Ok(RunConfig {
        operator_name: kind,
        operator,
        n_list: run.n_list,
        weights: run.weights,
        tolerances: t,
        section_max_n: run.section_max_n,
        output_dir: file.output.dir,
    })
}
