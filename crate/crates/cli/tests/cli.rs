use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_specint");

fn specint(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("SPECINT_SEED", "0")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn run_config(dir: &Path, body: &str, extra: &[&str]) -> Output {
    let config = write_config(dir, body);
    let out = dir.join("out");
    let mut args = vec!["run", "--config", &config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    specint(&args)
}

#[test]
fn diag3_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(
        dir.path(),
        "[operator]\nkind = \"diag3\"\n[run]\nN_list = [3]\n",
        &[],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let mu = fs::read_to_string(dir.path().join("out/diag3_N3_mu.csv")).unwrap();
    let lines: Vec<&str> = mu.lines().collect();
    assert_eq!(lines[0], "lambda,mass_re,mass_im");
    assert_eq!(lines.len(), 4);

    let checks = fs::read_to_string(dir.path().join("out/checks.csv")).unwrap();
    assert!(checks.starts_with("check_name,operator,N,value,bound,pass\n"));
    assert!(checks.lines().skip(1).all(|l| l.ends_with(",true")));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["all_checks_pass"], true);
    for f in manifest["files"].as_array().unwrap() {
        let body = fs::read(dir.path().join("out").join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, body.len());
        assert_eq!(f["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn malformed_config_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), "[operator\nkind = diag3\n", &[]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("error") && stderr.contains("run.toml"),
        "{stderr}"
    );

    let out = run_config(
        dir.path(),
        "[operator]\nkind = \"no_such\"\n[run]\nN_list = [4]\n",
        &[],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such"));
}

#[test]
fn listing() {
    let out = specint(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().filter(|l| !l.starts_with(' ')).collect();
    assert_eq!(
        names,
        [
            "diag3",
            "discrete_laplacian",
            "free_jacobi",
            "harmonic_oscillator"
        ]
    );

    let out = specint(&["list", "--dense-file", "m.json"]);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("dense_file:m.json"));
}

fn convergence_column(path: &Path, metric: &str) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[2] == metric).then(|| f[3].parse().unwrap())
        })
        .collect()
}

#[test]
fn semicircle_distance_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(
        dir.path(),
        "[operator]\nkind = \"free_jacobi\"\n[run]\nN_list = [32, 64, 128]\nsection_max_n = 32\n",
        &[],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let ks = convergence_column(&dir.path().join("out/convergence.csv"), "ks_semicircle");
    assert_eq!(ks.len(), 3);
    assert!(ks[0] > ks[1] && ks[1] > ks[2], "{ks:?}");
}

#[test]
fn job_count_does_not_change_tables() {
    let body = "[operator]\nkind = \"discrete_laplacian\"\n[run]\nN_list = [8, 16, 24]\n";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_config(a.path(), body, &["--jobs", "1"])
        .status
        .success());
    assert!(run_config(b.path(), body, &["--jobs", "3"])
        .status
        .success());
    for name in [
        "checks.csv",
        "convergence.csv",
        "experiments.csv",
        "discrete_laplacian_N16_section_e1.csv",
    ] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn single_cell_check() {
    let out = specint(&["check", "--operator", "free_jacobi", "--N", "16"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text
        .lines()
        .any(|l| l.starts_with("PASS") && l.contains("gram_reproduction")));
    assert!(!text.contains("FAIL"));

    let out = specint(&["check", "--operator", "diag3", "--N", "5"]);
    assert!(!out.status.success());
}
