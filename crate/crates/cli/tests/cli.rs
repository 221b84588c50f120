use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ratchet_lab::{run_experiment, LoadedConfig, Overrides};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ratchet_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratchet-lab"))
        .args(args)
        .env("RATCHET_LAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn run_config(name: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = configs().join(name);
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ratchet_lab(&args)
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn summary_value(dir: &Path, key: &str) -> String {
    let text = std::fs::read_to_string(dir.join("summary.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(String::from))
        .unwrap_or_else(|| panic!("{key} missing from summary"))
}

#[test]
fn conjugate_config_gives_equal_wells() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("conjugate.toml", dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&dir.path().join("wells.csv"));
    assert_eq!(header, ["i", "p_hat", "P_hat", "xi"]);
    assert_eq!(rows.len(), 2);
    for r in rows {
        let total: f64 = r[1].parse::<f64>().unwrap() + r[2].parse::<f64>().unwrap();
        assert!((total - 0.5).abs() < 1e-6, "well mass {total}");
    }
    let (header, rows) = csv_rows(&dir.path().join("densities.csv"));
    assert_eq!(header, ["x", "p", "P", "Q"]);
    assert_eq!(rows.len(), 2001);
}

#[test]
fn fixture_config_transports_left() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("transport_fixture.toml", dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(summary_value(dir.path(), "direction"), "left");
    assert_eq!(summary_value(dir.path(), "chain_direction"), "left");
    for key in ["chain_p", "chain_P", "shift_P_ok"] {
        assert_eq!(summary_value(dir.path(), key), "true", "{key}");
    }
    let gamma: f64 = summary_value(dir.path(), "gamma").parse().unwrap();
    assert!(gamma > 0.0);
    let (header, rows) = csv_rows(&dir.path().join("timeseries.csv"));
    assert_eq!(header, ["t", "mass", "gap", "w1", "w2"]);
    assert!(!rows.is_empty());
}

#[test]
fn minimum_outside_well_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(configs().join("transport_fixture.toml"))
        .unwrap()
        .replace("a = 0.15", "a = 0.5");
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, &src).unwrap();
    let line = src.lines().position(|l| l == "a = 0.5").unwrap() + 1;
    let out = ratchet_lab(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("potential.a"), "{err}");
    assert!(err.contains(&format!("bad.toml:{line}")), "{err}");
    assert!(err.contains("0 < a < 1/k"), "{err}");
}

#[test]
fn unknown_keys_and_bad_syntax_are_reported_with_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    let src = std::fs::read_to_string(configs().join("conjugate.toml"))
        .unwrap()
        .replace("varsigma", "varsgma");
    std::fs::write(&path, &src).unwrap();
    let out = ratchet_lab(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("varsgma"), "{err}");
    assert!(err.contains("typo.toml:"), "{err}");

    let missing = ratchet_lab(&["run", dir.path().join("none.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn sweep_writes_lattice_and_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("sweep.toml");
    let out = ratchet_lab(&["sweep", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(header, ["sigma", "kappa", "chain_p", "chain_P", "shift_P_ok", "min_margin"]);
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.1);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(summary_value(dir.path(), "satisfied"), "true");

    // The emitted fixture is itself a runnable config.
    let fixture = dir.path().join("fixture.toml");
    let loaded = LoadedConfig::load(&fixture).unwrap();
    assert_eq!(loaded.config.params.sigma, 0.1);
    assert_eq!(loaded.config.params.kappa, 1.0);
    assert!(loaded.config.sweep.is_none());
}

#[test]
fn symmetric_sweep_reports_best_margin() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(configs().join("sweep.toml"))
        .unwrap()
        .replace("a = 0.15", "a = 0.25")
        .replace(
            "kind = \"peaked\"\nsites = [0.35]\nwidth = 0.01\nbase = 0.1\nmass = 1.0",
            "kind = \"constant\"\nvalue = 2.0",
        );
    let path = dir.path().join("sym.toml");
    std::fs::write(&path, src).unwrap();
    let out = ratchet_lab(&["sweep", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(summary_value(dir.path(), "satisfied"), "false");
    let best: f64 = summary_value(dir.path(), "best_margin").parse().unwrap();
    assert!(best.abs() < 1e-8, "best margin {best}");
    assert!(!dir.path().join("fixture.toml").exists());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = run_config("particles.toml", dir.path(), &["--seed", "11", "--grid-n", "1001"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["summary.txt", "wells.csv", "histogram.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    assert_eq!(summary_value(a.path(), "seed"), "11");
    assert_eq!(summary_value(a.path(), "grid_n"), "1001");
}

#[test]
fn every_model_runs_in_process() {
    let dir = tempfile::tempdir().unwrap();
    for (name, files) in [
        ("squeezing.toml", &["transition.csv", "densities.csv", "wells.csv"][..]),
        ("collaborative.toml", &["densities.csv", "wells.csv"][..]),
        ("diffusive_mean.toml", &["sign_function.csv"][..]),
    ] {
        let mut cfg = LoadedConfig::load(&configs().join(name)).unwrap();
        let out_dir = dir.path().join(name);
        cfg.apply(&Overrides {
            output_dir: Some(out_dir.clone()),
            ..Overrides::default()
        });
        let outcome = run_experiment(&cfg).unwrap();
        for f in files {
            assert!(out_dir.join(f).exists(), "{name}: {f}");
        }
        assert_eq!(outcome.summary.get("model"), Some(cfg.config.model.name()));
    }
}

#[test]
fn deterministic_flashing_opposes_random_flashing() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("flashing.toml", dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(summary_value(dir.path(), "random_direction"), "right");
    assert_eq!(summary_value(dir.path(), "deterministic_direction"), "left");
    assert_eq!(summary_value(dir.path(), "agree"), "false");
    let (header, _) = csv_rows(&dir.path().join("densities.csv"));
    assert_eq!(header, ["x", "rho_on", "rho_end"]);
}
