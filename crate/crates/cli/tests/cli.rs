use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use phgcalc_cli::config::RunConfig;
use phgcalc_cli::corpus::{self, Class};
use phgcalc_cli::CliError;
use proptest::prelude::*;
use serde_json::Value;

fn phgcalc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phgcalc"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, value: Value) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, value.to_string()).unwrap();
    path
}

#[test]
fn check_verdicts_follow_the_declared_class() {
    let dir = tempfile::tempdir().unwrap();
    for (entry, want) in [("gaussian", 0), ("constant", 2), ("sigma_j", 0), ("norm_power", 0), ("worked", 0)] {
        let o = phgcalc(dir.path(), &["check", "--entry", entry]);
        assert_eq!(code(&o), want, "{entry}: {}", String::from_utf8_lossy(&o.stderr));
        let report = json(dir.path().join(format!("{entry}.check.json")));
        assert_eq!(report["pass"], Value::Bool(want == 0));
        assert_eq!(report["seed"], 0);
        assert!(report["anchor"].as_str().unwrap().len() > 10);
    }
    let csv = fs::read_to_string(dir.path().join("gaussian.check.csv")).unwrap();
    assert!(csv.starts_with("alpha,beta,shell_radius,sup_value,constant,slope\n"));
}

#[test]
fn bad_text_is_a_config_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        serde_json::json!({"entries": [{"name": "broken", "class": "symbol", "order": 1, "source": "(+ xi1"}]}),
    );
    let o = phgcalc(dir.path(), &["--config", cfg.to_str().unwrap(), "check", "--entry", "broken"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 1") && err.contains("column"), "{err}");
}

#[test]
fn unknown_entry_and_class_mismatch_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&phgcalc(dir.path(), &["check", "--entry", "nope"])), 1);
    assert_eq!(code(&phgcalc(dir.path(), &["extract", "--entry", "e2"])), 1);
    assert_eq!(code(&phgcalc(dir.path(), &["extend", "--entry", "worked"])), 1);
    assert_eq!(code(&phgcalc(dir.path(), &["frobnicate"])), 1);
}

#[test]
fn extraction_files_match_the_hand_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = phgcalc(dir.path(), &["extract", "--entry", "worked"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for j in 0..3 {
        let text = fs::read_to_string(dir.path().join(format!("worked.a{j}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("xi1,xi2,value"));
        let mut rows = 0;
        for line in lines {
            let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            let want = match j {
                0 => v[0] * v[0] + v[1] * v[1],
                1 => 0.0,
                _ => 1.0,
            };
            assert!((v[2] - want).abs() <= 1e-10 * want.abs().max(1.0), "a{j} at {line}");
            rows += 1;
        }
        assert!(rows > 0);
    }
    let report = json(dir.path().join("worked.extract.json"));
    assert_eq!(report["report"]["terms"].as_array().unwrap().len(), 3);
}

#[test]
fn extending_the_empty_expansion_gives_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = phgcalc(dir.path(), &["extend", "--entry", "empty"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(dir.path().join("empty.extend.json"));
    assert_eq!(report["report"]["zero_extension"], Value::Bool(true));
    let expansion = json(dir.path().join("empty.expansion.json"));
    assert_eq!(expansion, serde_json::json!([]));
}

#[test]
fn extend_writes_schedule_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&phgcalc(dir.path(), &["extend", "--entry", "e1"])), 0);
    let schedule = json(dir.path().join("e1.schedule.json"));
    let eps = schedule["report"]["eps"].as_array().unwrap();
    assert_eq!(eps.len(), 3);
    assert_eq!(schedule["report"]["provenance"].as_array().unwrap().len(), 3);
    let terms = json(dir.path().join("e1.expansion.json"));
    assert_eq!(terms[1]["order"], 0.0);
}

#[test]
fn roundtrips_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for entry in ["weighted_polynomial", "worked", "e2"] {
        let o = phgcalc(dir.path(), &["roundtrip", "--entry", entry]);
        assert_eq!(code(&o), 0, "{entry}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join(format!("{entry}.roundtrip.csv")).exists());
    }
}

#[test]
fn model_checks_pass_and_reject_bad_models() {
    let dir = tempfile::tempdir().unwrap();
    let o = phgcalc(dir.path(), &["--seed", "7", "heisenberg", "transpose"]);
    assert_eq!(code(&o), 0);
    let report = json(dir.path().join("heisenberg.transpose.json"));
    assert_eq!(report["seed"], 7);
    assert!(report["report"]["residuals"][0]["value"].as_f64().unwrap() <= 1e-12);

    let abelian = dir.path().join("abelian.json");
    fs::write(&abelian, r#"{"d": 2, "B": [[0, 0], [0, 0]]}"#).unwrap();
    let o = phgcalc(dir.path(), &["heisenberg", "algebra", "--model", abelian.to_str().unwrap()]);
    assert_eq!(code(&o), 0);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"d": 2, "B": [[0, 1], [1, 0]]}"#).unwrap();
    let o = phgcalc(dir.path(), &["heisenberg", "algebra", "--model", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn diagram_on_the_heisenberg_model() {
    let dir = tempfile::tempdir().unwrap();
    let o = phgcalc(dir.path(), &["heisenberg", "diagram"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(dir.path().join("heisenberg.diagram.json"));
    assert_eq!(report["report"]["detail"]["shape"], serde_json::json!([64, 64, 64]));
}

#[test]
fn accept_filters_and_refuses_an_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let o = phgcalc(dir.path(), &["accept", "--criterion", "transpose"]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 1);
    let summary = json(dir.path().join("acceptance.json"));
    assert_eq!(summary["report"]["criteria"].as_array().unwrap().len(), 1);
    assert_eq!(summary["report"]["criteria"][0]["id"], 7);

    assert_eq!(code(&phgcalc(dir.path(), &["accept", "--criterion", "11"])), 1);
    let cfg = write_config(dir.path(), serde_json::json!({"corpus": []}));
    let o = phgcalc(dir.path(), &["--config", cfg.to_str().unwrap(), "accept"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));
}

#[test]
fn reports_are_reproducible_and_written_whole() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        assert_eq!(code(&phgcalc(dir.path(), &["--seed", "3", "check", "--entry", "e1"])), 0);
        assert_eq!(code(&phgcalc(dir.path(), &["--seed", "3", "heisenberg", "algebra"])), 0);
    }
    for name in ["e1.check.json", "e1.check.restriction.csv", "heisenberg.algebra.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let leftovers = fs::read_dir(a.path()).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp"));
    assert_eq!(leftovers.count(), 0);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [
        serde_json::json!({"tolerances": {"slope": -0.1}}),
        serde_json::json!({"tolerances": {"k_max": 0}}),
        serde_json::json!({"grid": {"shells": 2}}),
        serde_json::json!({"unknown": 1}),
    ] {
        let cfg = write_config(dir.path(), bad.clone());
        let o = phgcalc(dir.path(), &["--config", cfg.to_str().unwrap(), "check", "--entry", "gaussian"]);
        assert_eq!(code(&o), 1, "{bad}");
    }
}

#[test]
fn thread_cap_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_phgcalc"))
            .env("GSL_THREADS", v)
            .arg("--out")
            .arg(dir.path())
            .args(["heisenberg", "transpose"])
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("1")), 0);
    assert_eq!(code(&run("zero")), 1);
}

#[test]
fn corpus_loads_and_declares_every_class() {
    let config = RunConfig::default();
    let entries = corpus::select(&config).unwrap();
    for class in [Class::Schwartz, Class::Symbol, Class::Phg, Class::Hs, Class::Homogeneous] {
        assert!(entries.iter().any(|e| e.class == class), "{class:?}");
    }
    for e in &entries {
        let loaded = e.load(&config).unwrap();
        assert_eq!(loaded.layout.has_t, e.class == Class::Hs, "{}", e.name);
    }
    let picked = RunConfig { corpus: Some(vec!["gaussian".into()]), ..RunConfig::default() };
    assert_eq!(corpus::select(&picked).unwrap().len(), 1);
    let missing = RunConfig { corpus: Some(vec!["absent".into()]), ..RunConfig::default() };
    assert!(matches!(corpus::select(&missing), Err(CliError::Usage(_))));
}

proptest! {
    #[test]
    fn config_round_trips_and_validates(
        slope in 1e-3..1.0f64, limit in 1e-12..1e-2f64, k_max in 1usize..8, seed in any::<u64>(),
        weights in prop::collection::vec(1u32..4, 1..4),
    ) {
        let mut config = RunConfig { seed, weights, ..RunConfig::default() };
        config.tolerances.slope = slope;
        config.tolerances.limit = limit;
        config.tolerances.k_max = k_max;
        prop_assert!(config.validate().is_ok());
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&config).unwrap()).unwrap();
        prop_assert_eq!(&back, &config);
        let mut bad = config.clone();
        bad.tolerances.t_switch = -slope;
        prop_assert!(bad.validate().is_err());
    }
}
