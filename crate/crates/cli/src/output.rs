//! CSV tables and the run manifest.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cell::CellOutput;

pub fn file_stem(operator: &str, n: usize) -> String {
    let clean: String = operator
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{clean}_N{n}")
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn checks_csv(operator: &str, cells: &[&CellOutput]) -> String {
    let op = field(operator);
    let mut out = String::from("check_name,operator,N,value,bound,pass\n");
    for c in cells {
        for r in &c.checks {
            writeln!(
                out,
                "{},{op},{},{:e},{:e},{}",
                r.name, c.n, r.value, r.bound, r.pass
            )
            .unwrap();
        }
    }
    out
}

/// `extra` carries run-level rows as `(N, metric, value)`.
pub fn convergence_csv(
    operator: &str,
    cells: &[&CellOutput],
    extra: &[(usize, String, f64)],
) -> String {
    let op = field(operator);
    let mut out = String::from("operator,N,metric,value\n");
    for c in cells {
        for r in &c.convergence {
            writeln!(out, "{op},{},{},{:e}", c.n, r.metric, r.value).unwrap();
        }
    }
    for (n, metric, value) in extra {
        writeln!(out, "{op},{n},{metric},{value:e}").unwrap();
    }
    out
}

pub fn experiments_csv(operator: &str, cells: &[&CellOutput]) -> String {
    let op = field(operator);
    let mut out = String::from("experiment,operator,N,m,k,value\n");
    for c in cells {
        for r in &c.experiments {
            writeln!(
                out,
                "{},{op},{},{},{},{:e}",
                r.experiment, c.n, r.m, r.k, r.value
            )
            .unwrap();
        }
    }
    out
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct CellEntry {
    #[serde(rename = "N")]
    pub n: usize,
    pub status: String,
    pub wall_time_s: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub operator: String,
    pub weights_mode: &'static str,
    pub tolerances: specint::Tolerances,
    pub seed: u64,
    pub section_max_n: usize,
    pub started_unix_s: f64,
    pub wall_time_s: f64,
    pub cells: Vec<CellEntry>,
    pub all_checks_pass: bool,
    pub files: Vec<FileEntry>,
}

/// Writes `body` under `dir` and returns its manifest entry.
pub fn write_file(dir: &Path, name: &str, body: &[u8]) -> anyhow::Result<FileEntry> {
    let path = dir.join(name);
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(FileEntry {
        path: name.to_string(),
        bytes: body.len(),
        sha256: hex::encode(Sha256::digest(body)),
    })
}
