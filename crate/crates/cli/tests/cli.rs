use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hofstadter_cli::{read_manifest, RunConfig, EXIT_CONFIG, EXIT_OK};

fn butterfly(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_butterfly"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn run_dir(out: &Output) -> PathBuf {
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout.clone()).unwrap();
    PathBuf::from(stdout.lines().last().unwrap().trim())
}

fn write_config(dir: &Path, cfg: &RunConfig) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, cfg.to_toml()).unwrap();
    p
}

fn small_spectro() -> RunConfig {
    let mut c = RunConfig::default();
    c.lattice.qubits = 3;
    c.lattice.fluxes = 3;
    c.evolution.t_end_us = 0.2;
    c.evolution.dt_ns = 4.0;
    c
}

#[test]
fn help_and_version_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(butterfly(&["--help"], tmp.path()).status.code(), Some(0));
    assert_eq!(butterfly(&["--version"], tmp.path()).status.code(), Some(0));
    assert_eq!(butterfly(&["no-such-command"], tmp.path()).status.code(), Some(EXIT_CONFIG));
    assert_eq!(butterfly(&["evolve", "--n", "x"], tmp.path()).status.code(), Some(EXIT_CONFIG));
}

#[test]
fn default_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = butterfly(&["default-config"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let cfg = RunConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg, RunConfig::default());
}

#[test]
fn site_zero_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = butterfly(&["evolve", "--n", "5", "--site", "0"], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--site"));
    let out = butterfly(&["evolve", "--n", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn unknown_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("bad.toml");
    fs::write(&p, "[noise]\nt1_us = 20.0\nt3_us = 1.0\n").unwrap();
    let out = butterfly(&["butterfly-exact", "--config", p.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t3_us"));
}

#[test]
fn invalid_value_names_key() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = RunConfig::default();
    c.device.alpha = 2.5;
    let p = write_config(tmp.path(), &c);
    let out = butterfly(&["couplings", "--config", p.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("device.alpha"));
}

#[test]
fn single_qubit_trace_decays_at_t2_star() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_dir(&butterfly(&["evolve", "--n", "1", "--out-dir", "o"], tmp.path()));
    let text = fs::read_to_string(tmp.path().join(&dir).join("trace.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t_us,sx,sy"));
    let mut count = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - (-v[0] / 2.0).exp()).abs() <= 1e-6, "{line}");
        assert!(v[2].abs() <= 1e-6);
        count += 1;
    }
    assert_eq!(count, 2000);
    let spec = fs::read_to_string(tmp.path().join(&dir).join("spectrum.csv")).unwrap();
    assert!(spec.starts_with("flux_over_2pi,frequency_mhz,power\n"));
}

#[test]
fn couplings_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = butterfly(&["couplings", "--n", "6", "--flux-over-2pi", "0.3", "--out-dir", "o"], tmp.path());
    let stdout = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(stdout.starts_with("J/2π = 3.367"), "{stdout}");
    let dir = run_dir(&out);
    let csv = fs::read_to_string(tmp.path().join(&dir).join("couplings.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5 + 4);
    for r in &rows {
        assert!((r[2] - 3.367).abs() < 1e-3);
        let d = (r[3] - r[4]).rem_euclid(2.0);
        assert!(d < 1e-9 || d > 2.0 - 1e-9);
    }

    let out = butterfly(&["couplings", "--n", "4", "--alpha", "0", "--out-dir", "o"], tmp.path());
    let dir = run_dir(&out);
    let csv = fs::read_to_string(tmp.path().join(&dir).join("couplings.csv")).unwrap();
    for l in csv.lines().skip(1) {
        let abs: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(abs, 0.0);
    }
}

#[test]
fn exact_outputs_and_manifest_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["butterfly-exact", "--n", "8", "--fluxes", "5", "--model", "harper", "--boundary", "periodic"];
    let dir = run_dir(&butterfly(&[&args[..], &["--out-dir", "a"]].concat(), tmp.path()));
    let csv = fs::read_to_string(tmp.path().join(&dir).join("exact.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8 * 5);
    assert_eq!(csv.lines().next(), Some("flux_over_2pi,eigenvalue_over_J"));

    let m = read_manifest(&tmp.path().join(&dir).join("manifest.toml")).unwrap();
    assert_eq!(m.command, "butterfly-exact");
    assert_eq!(m.config.lattice.qubits, 8);
    assert!(m.sweep.is_some());
    let cfg_path = write_config(tmp.path(), &m.config);
    let again = run_dir(&butterfly(
        &["butterfly-exact", "--config", cfg_path.to_str().unwrap(), "--out-dir", "b"],
        tmp.path(),
    ));
    let m2 = read_manifest(&tmp.path().join(&again).join("manifest.toml")).unwrap();
    assert_eq!(m2.run_hash, m.run_hash);
    assert_eq!(fs::read(tmp.path().join(&again).join("exact.csv")).unwrap(), csv.as_bytes());
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), &small_spectro());
    let p = p.to_str().unwrap();
    let mut dirs = Vec::new();
    for (t, o) in [("1", "one"), ("2", "two")] {
        let args = ["butterfly-spectro", "--config", p, "--engine", "trajectories", "--trajectories", "10"];
        dirs.push(run_dir(&butterfly(&[&args[..], &["--threads", t, "--out-dir", o]].concat(), tmp.path())));
    }
    assert_eq!(dirs[0].file_name(), dirs[1].file_name());
    for f in ["spectrum.csv", "peaks.csv", "deviation.csv"] {
        let a = fs::read(tmp.path().join(&dirs[0]).join(f)).unwrap();
        let b = fs::read(tmp.path().join(&dirs[1]).join(f)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{f}");
    }
    let m = read_manifest(&tmp.path().join(&dirs[0]).join("manifest.toml")).unwrap();
    assert!(m.summary.contains_key("mean_abs_dev_mhz"));
}
