mod cell;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use specint::registry::{list_registry, lookup};
use specint::rng::seed_from_env;
use specint::spectral_measure::{kolmogorov_distance, Reference};
use specint::{load_config, Execution, RunConfig, Tolerances, WeightsMode};

use cell::{run_cell, CellOutput};
use output::{file_stem, write_file, CellEntry, Manifest};

#[derive(Parser)]
#[command(
    name = "specint",
    version,
    about = "Finite-N spectral measures, sections and direct integrals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every N of a config and write CSV reports plus a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List the operator registry.
    List {
        /// Also list a dense matrix file as `dense_file:<path>`.
        #[arg(long = "dense-file")]
        dense_files: Vec<String>,
    },
    /// Run the checks of a single (operator, N) cell and print them.
    Check {
        #[arg(long)]
        operator: String,
        #[arg(long = "N")]
        n: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, jobs } => run(&config, out, jobs),
        Command::List { dense_files } => {
            print!("{}", list_registry(&dense_files));
            Ok(true)
        }
        Command::Check { operator, n } => check(&operator, n),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(config_path: &Path, out: Option<PathBuf>, jobs: Option<usize>) -> anyhow::Result<bool> {
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64());
    let config = load_config(config_path)?;
    let dir = out.unwrap_or_else(|| config.output_dir.clone());
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let seed = seed_from_env();

    let mut ns = config.n_list.clone();
    ns.sort_unstable();
    ns.dedup();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .context("building thread pool")?;
    let results: Vec<(usize, specint::Result<CellOutput>)> = pool.install(|| {
        ns.par_iter()
            .map(|&n| (n, run_cell(&config, n, seed, Execution::default())))
            .collect()
    });

    let name = config.operator_name.as_str();
    let mut cells = Vec::new();
    let mut entries = Vec::new();
    let mut ok = true;
    for (n, r) in &results {
        match r {
            Ok(c) => {
                entries.push(CellEntry {
                    n: *n,
                    status: "ok".into(),
                    wall_time_s: c.wall_time,
                });
                cells.push(c);
            }
            Err(e) => {
                log::error!("{name} N = {n}: {e}");
                eprintln!("error: {name} N = {n}: {e}");
                entries.push(CellEntry {
                    n: *n,
                    status: format!("error: {e}"),
                    wall_time_s: 0.0,
                });
                ok = false;
            }
        }
    }

    let heuristic = successive_ks(&cells)?;
    let mut files = Vec::new();
    for c in &cells {
        let stem = file_stem(name, c.n);
        for (suffix, body) in &c.files {
            files.push(write_file(&dir, &format!("{stem}_{suffix}"), body)?);
        }
    }
    files.push(write_file(
        &dir,
        "checks.csv",
        output::checks_csv(name, &cells).as_bytes(),
    )?);
    files.push(write_file(
        &dir,
        "convergence.csv",
        output::convergence_csv(name, &cells, &heuristic).as_bytes(),
    )?);
    files.push(write_file(
        &dir,
        "experiments.csv",
        output::experiments_csv(name, &cells).as_bytes(),
    )?);

    let failed: Vec<String> = cells
        .iter()
        .flat_map(|c| {
            c.checks
                .iter()
                .filter(|r| !r.pass)
                .map(move |r| format!("N = {}: {}", c.n, r.name))
        })
        .collect();
    for f in &failed {
        eprintln!("check failed: {name} {f}");
    }
    ok &= failed.is_empty();

    let manifest = Manifest {
        tool: "specint",
        version: env!("CARGO_PKG_VERSION"),
        operator: name.to_string(),
        weights_mode: config.weights.label(),
        tolerances: config.tolerances,
        seed,
        section_max_n: config.section_max_n,
        started_unix_s: started_unix,
        wall_time_s: started.elapsed().as_secs_f64(),
        cells: entries,
        all_checks_pass: ok,
        files,
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    let total: usize = cells.iter().map(|c| c.checks.len()).sum();
    println!(
        "{name}: {} cells, {total} checks, {} failed; reports in {}",
        cells.len(),
        failed.len(),
        dir.display()
    );
    Ok(ok)
}

/// HEURISTIC rows: distance between `nu^{e_1,e_1}` at consecutive N.
fn successive_ks(cells: &[&CellOutput]) -> anyhow::Result<Vec<(usize, String, f64)>> {
    let mut rows = Vec::new();
    for w in cells.windows(2) {
        if let (Some(a), Some(b)) = (&w[0].nu_e1, &w[1].nu_e1) {
            rows.push((
                w[1].n,
                format!("HEURISTIC_successive_ks_from_N{}", w[0].n),
                kolmogorov_distance(a, Reference::Measure(b))?,
            ));
        }
    }
    Ok(rows)
}

fn check(operator: &str, n: usize) -> anyhow::Result<bool> {
    if n < 2 {
        anyhow::bail!("N must be >= 2, got {n}");
    }
    let spec = lookup(operator, &serde_json::Value::Null)?;
    if let Some(dim) = spec.dimension() {
        if n > dim {
            anyhow::bail!("N = {n} exceeds the dimension {dim} of `{operator}`");
        }
    }
    let config = RunConfig {
        operator_name: operator.to_string(),
        operator: spec,
        n_list: vec![n],
        weights: WeightsMode::Geometric,
        tolerances: Tolerances::default(),
        section_max_n: n,
        output_dir: PathBuf::new(),
    };
    let cell = run_cell(&config, n, seed_from_env(), Execution::default())?;
    let mut ok = true;
    for r in &cell.checks {
        ok &= r.pass;
        println!(
            "{:<4} {:<24} value {:>12.4e}  bound {:>12.4e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.value,
            r.bound
        );
    }
    for r in &cell.convergence {
        println!("     {:<24} {:>12.4e}", r.metric, r.value);
    }
    Ok(ok)
}
