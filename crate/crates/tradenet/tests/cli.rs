use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tradenet::panel::COLUMNS;

const MINIMAL: &str = r#"seed = 3
periods = 4

[world.generate]
countries = 6

[firms]
per_industry = 5

[industries]
gammas = [0.3, 0.8]
"#;

fn tradenet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tradenet")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_panel_history_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", MINIMAL);
    let out = dir.path().join("out");
    let o = tradenet(&["simulate", "--config", s(&cfg), "--out", s(&out), "--trace"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in [
        "world.csv",
        "history.csv",
        "market_state.csv",
        "panel.csv",
        "trace.csv",
        "quantiles.csv",
        "markets_histogram.csv",
        "industry_summary.csv",
        "config.toml",
        "manifest.toml",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let panel = std::fs::read_to_string(out.join("panel.csv")).unwrap();
    let mut lines = panel.lines();
    assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
    assert_eq!(lines.count(), 10 * 5 * 3);
    let manifest = std::fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 3"));
    assert!(manifest.contains("panel.csv"));
}

#[test]
fn seed_flag_replaces_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", MINIMAL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&tradenet(&["simulate", "--config", s(&cfg), "--out", s(&a)])), 0);
    assert_eq!(code(&tradenet(&["simulate", "--config", s(&cfg), "--out", s(&b), "--seed", "11"])), 0);
    let manifest = std::fs::read_to_string(b.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 11"));
    assert_ne!(std::fs::read(a.join("world.csv")).unwrap(), std::fs::read(b.join("world.csv")).unwrap());
}

#[test]
fn out_of_range_sigma_names_field_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &MINIMAL.replace("gammas = [0.3, 0.8]", "gammas = [0.3, 0.8]\nsigma = 1.5"));
    let o = tradenet(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("bad.toml:12:"), "{e}");
    assert!(e.contains("sigma") && e.contains("1.5"), "{e}");
}

#[test]
fn unknown_key_and_missing_file_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "typo.toml", &MINIMAL.replace("per_industry", "per_industri"));
    let o = tradenet(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("per_industri"), "{}", stderr(&o));

    let o = tradenet(&["simulate", "--config", s(&dir.path().join("nope.toml")), "--out", "x"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_default_grid_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = tradenet(&["verify", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("statics_report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 3 * 300);
    assert!(report.lines().skip(1).all(|l| l.ends_with(",1")));
    let limits = std::fs::read_to_string(dir.path().join("limit_report.csv")).unwrap();
    assert_eq!(limits.lines().count(), 1 + 300);
}

#[test]
fn verify_tight_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = tradenet(&["verify", "--out", s(dir.path()), "--tolerance", "1e-12"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("worst"), "{}", stderr(&o));
}

#[test]
fn verify_empty_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write(dir.path(), "grid.toml", "gammas = []\n");
    let o = tradenet(&["verify", "--config", s(&grid), "--out", s(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));
}

/// A small count panel with firm clusters: `y ~ Poisson(exp(0.5 + 0.3 x))`
/// from a fixed table of draws.
fn count_panel(dir: &Path, with_firm: bool) -> PathBuf {
    let mut body = String::from(if with_firm { "firm,x,y\n" } else { "x,y\n" });
    for i in 0..60 {
        let x = (i % 7) as f64 / 3.0 - 1.0;
        let y = (i * 37 % 5) + usize::from(x > 0.0);
        if with_firm {
            body.push_str(&format!("{},{x},{y}\n", i % 12));
        } else {
            body.push_str(&format!("{x},{y}\n"));
        }
    }
    write(dir, "panel.csv", &body)
}

#[test]
fn estimate_without_cluster_column_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let panel = count_panel(dir.path(), false);
    let spec = write(dir.path(), "spec.toml", "family = \"poisson\"\ndependent = \"y\"\nregressors = [\"x\"]\n");
    let o = tradenet(&["estimate", "--panel", s(&panel), "--spec", s(&spec), "--out", s(&dir.path().join("fit"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("firm"), "{}", stderr(&o));
}

#[test]
fn estimate_spec_file_fits_and_iteration_cap_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let panel = count_panel(dir.path(), true);
    let spec = "family = \"poisson\"\ndependent = \"y\"\nregressors = [\"x\"]\n";
    let ok = write(dir.path(), "ok.toml", spec);
    let o = tradenet(&["estimate", "--panel", s(&panel), "--spec", s(&ok), "--out", s(&dir.path().join("a"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("a/fit_report.csv")).unwrap();
    assert_eq!(report.lines().next().unwrap(), "term,estimate,std_error,z");
    assert!(report.contains("\nx,") && report.contains("\nintercept,"));

    let capped = write(dir.path(), "capped.toml", &format!("{spec}max_iterations = 1\n"));
    let out = dir.path().join("b");
    let o = tradenet(&["estimate", "--panel", s(&panel), "--spec", s(&capped), "--out", s(&out), "--trace"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(out.join("fit_report.csv").is_file());
    assert_eq!(std::fs::read_to_string(out.join("iterations.csv")).unwrap().lines().count(), 3);
}

#[test]
fn estimate_rejects_unknown_preset() {
    let dir = tempfile::tempdir().unwrap();
    let panel = count_panel(dir.path(), true);
    let o = tradenet(&["estimate", "--panel", s(&panel), "--preset", "table9-col9", "--out", s(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("table3-col3"), "{}", stderr(&o));
}

#[test]
fn stats_from_history_matches_simulate_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", MINIMAL);
    let sim = dir.path().join("sim");
    assert_eq!(code(&tradenet(&["simulate", "--config", s(&cfg), "--out", s(&sim)])), 0);
    let out = dir.path().join("stats");
    let o = tradenet(&["stats", "--history", s(&sim.join("history.csv")), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["quantiles.csv", "markets_histogram.csv", "industry_summary.csv"] {
        assert_eq!(std::fs::read(sim.join(f)).unwrap(), std::fs::read(out.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn preset_estimation_on_simulated_panel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    let sim = dir.path().join("sim");
    let o = tradenet(&["simulate", "--config", s(&cfg), "--out", s(&sim), "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for preset in ["table3-col1", "table3-col3", "table4-col3"] {
        let o = tradenet(&[
            "estimate",
            "--panel",
            s(&sim.join("panel.csv")),
            "--preset",
            preset,
            "--out",
            s(&dir.path().join(preset)),
        ]);
        assert_eq!(code(&o), 0, "{preset}: {}", stderr(&o));
    }
}
