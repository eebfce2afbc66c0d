use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_spin1-mbqc");

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_in(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

/// CSV text with the trailing timing column removed.
fn without_timing(text: &str) -> Vec<String> {
    text.lines().map(|l| l.rsplit_once(',').expect("has columns").0.to_string()).collect()
}

fn fields_match(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => (x - y).abs() <= 1e-8 * (1.0 + x.abs().max(y.abs())),
        _ => false,
    }
}

#[test]
fn scan_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("scan", &data("small_scan.toml"), dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let got = without_timing(&fs::read_to_string(dir.path().join("scan.csv")).unwrap());
    let want: Vec<String> = fs::read_to_string(data("small_scan.golden.csv")).unwrap().lines().map(String::from).collect();
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        let (gf, wf): (Vec<_>, Vec<_>) = (g.split(',').collect(), w.split(',').collect());
        assert_eq!(gf.len(), wf.len(), "{g}");
        assert!(gf.iter().zip(&wf).all(|(a, b)| fields_match(a, b)), "\n got {g}\nwant {w}");
    }
    let manifest = fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    let m: toml::Table = toml::from_str(&manifest).unwrap();
    assert_eq!(m["command"].as_str(), Some("scan"));
    assert_eq!(m["rows"].as_integer(), Some(want.len() as i64 - 1));
    assert_eq!(m["csv_schema_version"].as_integer(), Some(1));
    assert_eq!(m["seed"].as_integer(), Some(5));
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn parallel_run_is_identical_to_serial() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = data("small_scan.toml");
    assert!(run_in("scan", &cfg, a.path(), &["--jobs", "1"]).status.success());
    assert!(run_in("scan", &cfg, b.path(), &["--jobs", "4"]).status.success());
    let read = |d: &Path| without_timing(&fs::read_to_string(d.join("scan.csv")).unwrap());
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("ground-state", &data("small_scan.toml"), dir.path(), &["--seed", "11"]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("ground-state.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.rsplit(',').nth(1) == Some("11")), "{text}");
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn second_ground_state_run_hits_cache() {
    let (out, cache) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = data("small_scan.toml");
    let c = cache.path().to_str().unwrap();
    let first = run_in("ground-state", &cfg, out.path(), &["--cache", c]);
    assert!(first.status.success());
    assert!(!String::from_utf8_lossy(&first.stderr).contains("cache hit"));
    let before = without_timing(&fs::read_to_string(out.path().join("ground-state.csv")).unwrap());
    let second = run_in("ground-state", &cfg, out.path(), &["--cache", c]);
    assert!(second.status.success());
    assert_eq!(String::from_utf8_lossy(&second.stderr).matches("cache hit").count(), 4);
    let after = without_timing(&fs::read_to_string(out.path().join("ground-state.csv")).unwrap());
    assert_eq!(before, after);
    let m: toml::Table = toml::from_str(&fs::read_to_string(out.path().join("manifest.toml")).unwrap()).unwrap();
    assert_eq!(m["cache_hits"].as_integer(), Some(4));
}

#[test]
fn oracle_check_passes_on_aklt() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/oracle_check_aklt.toml");
    let out = run_in("oracle-check", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches(" ok").count(), 7, "{stdout}");
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn oracle_check_fails_above_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "oracle_tolerance = 1e-20\nstate = \"exact\"\n[model]\nkind = \"xxz\"\nL = 3\nJ = 1.3\nD = -0.7\n[[gates]]\nkind = \"rz\"\ntheta = [0.3, 1.1, 2.9]\n",
    )
    .unwrap();
    let out = run_in("oracle-check", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["scan"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[model]\nkind = \"xxz\"\nL = 4\n").unwrap();
    assert_eq!(run_in("scan", &bad, dir.path(), &[]).status.code(), Some(2));
    assert_eq!(run_in("scan", &data("small_scan.toml"), dir.path(), &["--jobs", "0"]).status.code(), Some(2));

    let missing = dir.path().join("missing.toml");
    assert_eq!(run_in("scan", &missing, dir.path(), &[]).status.code(), Some(3));

    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = run_in("ground-state", &data("small_scan.toml"), &blocker.join("sub"), &[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn aklt_closed_form_prints_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/aklt_closed_form.toml");
    let out = run_in("aklt-closed-form", &cfg, dir.path(), &[]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 7 * 9);
    for line in stdout.lines() {
        let vals: Vec<f64> = line.split(' ').filter_map(|f| f.split_once('=')).skip(2).map(|(_, v)| v.parse().unwrap()).collect();
        assert_eq!(vals.len(), 3);
        assert!(vals.iter().all(|v| (v - vals[0]).abs() < 1e-9), "{line}");
    }
}
