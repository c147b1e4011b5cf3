use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use apm_cli::{parse_config, run_command, Command, RunOptions, SeedSource, EXIT_ASSUMPTION, EXIT_INTERNAL, EXIT_OK};
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, model: &str, config: &str) -> PathBuf {
    fs::write(dir.join("model.json"), model).unwrap();
    let p = dir.join("config.json");
    fs::write(&p, config).unwrap();
    p
}

const RADEMACHER_MODEL: &str = r#"{"m": 1, "K": 1, "mu": [-0.2], "beta_bar": [1.0], "noise": {"family": "rademacher"}}"#;

#[test]
fn demo_config_parses() {
    let cfg = parse_config(&configs().join("demo.json")).unwrap();
    assert_eq!(cfg.model.k, 5);
    assert_eq!(cfg.model_ref, "demo_market.json");
    assert_eq!(cfg.solver.ladder, vec![1, 2, 4, 5]);
}

#[test]
fn missing_beta_bar_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        r#"{"m": 1, "K": 1, "mu": [-0.2], "noise": {"family": "rademacher"}}"#,
        r#"{"model": "model.json", "utility": {"kind": "appendix_power", "alpha": 0.5}, "scenarios": {"mode": "exact"}}"#,
    );
    let err = parse_config(&p).unwrap_err();
    assert!(err.violations().iter().any(|v| v.contains("`beta_bar`")), "{err}");
}

#[test]
fn monte_carlo_without_seed_is_listed_with_other_violations() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        RADEMACHER_MODEL,
        r#"{"model": "model.json", "utility": {"kind": "appendix_power", "alpha": 2.0},
            "scenarios": {"mode": "monte_carlo", "n": 1000}, "colour": 1}"#,
    );
    let err = parse_config(&p).unwrap_err();
    let v = err.violations();
    assert!(v.iter().any(|m| m.contains("monte_carlo") && m.contains("seed")), "{v:?}");
    assert!(v.iter().any(|m| m.starts_with("utility")), "{v:?}");
    assert!(v.iter().any(|m| m.contains("`colour`")), "{v:?}");
    assert_eq!(v.len(), 3);
}

#[test]
fn malformed_json_is_a_syntax_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), RADEMACHER_MODEL, "{\"model\": ");
    assert!(matches!(parse_config(&p), Err(apm_cli::ConfigError::Syntax { .. })));
}

#[test]
fn idiosyncratic_assets_need_loadings() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        r#"{"m": 1, "K": 2, "mu": [-0.2, 0.1], "beta_bar": [1.0, 1.0], "noise": {"family": "rademacher"}}"#,
        r#"{"model": "model.json", "utility": {"kind": "appendix_power", "alpha": 0.5}, "scenarios": {"mode": "exact"},
            "solver": {"ladder": [3]}}"#,
    );
    let err = parse_config(&p).unwrap_err();
    assert!(err.violations().iter().any(|v| v.contains("`beta`")), "{err}");
}

#[test]
fn ladder_levels_beyond_k_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        RADEMACHER_MODEL,
        r#"{"model": "model.json", "utility": {"kind": "appendix_power", "alpha": 0.5}, "scenarios": {"mode": "exact"},
            "solver": {"ladder": [1, 2]}}"#,
    );
    let err = parse_config(&p).unwrap_err();
    assert_eq!(err.violations(), ["solver: ladder level 2 must lie in 1..=1"]);
}

#[test]
fn check_on_demo_holds_everywhere() {
    let cfg = parse_config(&configs().join("demo.json")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let opts = RunOptions { out: Some(out.path().to_path_buf()), ..Default::default() };
    let outcome = run_command(Command::Check, &cfg, &opts).unwrap();
    assert_eq!(outcome.exit_code, EXIT_OK);
    let r = report(out.path());
    let verdicts = r["diagnostics"]["assumptions"]["verdicts"].as_object().unwrap();
    assert_eq!(verdicts.len(), 5);
    assert!(verdicts.values().all(|v| v == "holds"), "{verdicts:?}");
    assert_eq!(r["optimization"], "skipped");
    assert!(out.path().join("tables/verdicts.csv").exists());
}

#[test]
fn arbitrage_fixture_exits_2_with_witness() {
    let cfg = parse_config(&configs().join("arbitrage.json")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let opts = RunOptions { out: Some(out.path().to_path_buf()), ..Default::default() };
    let outcome = run_command(Command::Optimize, &cfg, &opts).unwrap();
    assert_eq!(outcome.exit_code, EXIT_ASSUMPTION);
    assert_eq!(outcome.failures, ["novum_na"]);
    let r = report(out.path());
    let w: Vec<f64> = serde_json::from_value(r["optimization"]["witness"].clone()).unwrap();
    assert_eq!(w, [0.0, 1.0]);
    assert_eq!(r["optimization"]["unbounded"], true);
}

#[test]
fn divergent_drifts_exit_2() {
    let cfg = parse_config(&configs().join("divergent.json")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let opts = RunOptions { out: Some(out.path().to_path_buf()), ..Default::default() };
    let outcome = run_command(Command::Check, &cfg, &opts).unwrap();
    assert_eq!(outcome.exit_code, EXIT_ASSUMPTION);
    assert_eq!(outcome.failures, ["assumption_b"]);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        RADEMACHER_MODEL,
        r#"{"model": "model.json", "utility": {"kind": "appendix_power", "alpha": 0.5},
            "scenarios": {"mode": "monte_carlo", "n": 2000, "seed": 7}, "seed": 3}"#,
    );
    let cfg = parse_config(&p).unwrap();
    let pick = |seed, env_seed| apm_cli::effective_seed(&cfg, &RunOptions { seed, env_seed, ..Default::default() });
    assert_eq!((pick(Some(1), Some(2)).value, pick(Some(1), Some(2)).source), (1, SeedSource::Flag));
    assert_eq!((pick(None, Some(2)).value, pick(None, Some(2)).source), (2, SeedSource::Env));
    assert_eq!((pick(None, None).value, pick(None, None).source), (7, SeedSource::Scenarios));
}

#[test]
fn seed_env_override_is_logged_in_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        RADEMACHER_MODEL,
        r#"{"model": "model.json", "utility": {"kind": "appendix_power", "alpha": 0.5},
            "scenarios": {"mode": "monte_carlo", "n": 2000, "seed": 7}}"#,
    );
    let run = |env: Option<&str>, out: &str| {
        let mut cmd = Process::new(env!("CARGO_BIN_EXE_apm"));
        cmd.args(["optimize", "--config"]).arg(&p).arg("--out").arg(dir.path().join(out));
        cmd.env_remove("SEED");
        if let Some(v) = env {
            cmd.env("SEED", v);
        }
        let status = cmd.output().unwrap().status;
        assert_eq!(status.code(), Some(EXIT_OK));
        report(&dir.path().join(out))
    };
    let plain = run(None, "plain");
    let overridden = run(Some("99"), "env");
    assert_eq!(plain["run"]["seed"]["value"], 7);
    assert_eq!(overridden["run"]["seed"]["value"], 99);
    assert_eq!(overridden["run"]["seed"]["source"], "env");
    assert_eq!(overridden["run"]["scenarios"]["seed"], 99);
    assert_ne!(plain["optimization"], overridden["optimization"]);
}

#[test]
fn scenarios_flag_switches_to_monte_carlo() {
    let cfg = parse_config(&configs().join("demo.json")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let opts = RunOptions { out: Some(out.path().to_path_buf()), scenarios: Some(5000), seed: Some(11), ..Default::default() };
    assert_eq!(run_command(Command::Measure, &cfg, &opts).unwrap().exit_code, EXIT_OK);
    let r = report(out.path());
    assert_eq!(r["run"]["scenarios"]["kind"], "monte_carlo");
    assert_eq!(r["run"]["scenarios"]["n"], 5000);
    assert!(r["measure"]["moments"]["monte_carlo"].as_bool().unwrap());
}

#[test]
fn bad_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), RADEMACHER_MODEL, r#"{"model": "missing.json"}"#);
    let out = Process::new(env!("CARGO_BIN_EXE_apm")).args(["check", "--config"]).arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_INTERNAL));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing.json") && stderr.contains("`utility`"), "{stderr}");
}

#[test]
fn same_seed_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("demo.json");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Process::new(env!("CARGO_BIN_EXE_apm"))
            .args(["report", "--scenarios", "20000", "--seed", "5", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .env_remove("SEED")
            .output()
            .unwrap()
            .status;
        assert_eq!(status.code(), Some(EXIT_OK));
        out
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
    for t in fs::read_dir(a.join("tables")).unwrap() {
        let name = t.unwrap().file_name();
        assert_eq!(fs::read(a.join("tables").join(&name)).unwrap(), fs::read(b.join("tables").join(&name)).unwrap());
    }
}
