use std::process::{Command, Output};

use serde_json::Value;
use sobolev_cli::{parse_config, run, CliError, Format};
use sobolev_core::constants::QChoice;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sobolev-lab")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn empty_argv_prints_usage_and_fails() {
    let out = lab(&[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_names_the_token() {
    let out = lab(&["constants", "--bogus", "3"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--bogus"));
    let out = lab(&["constants", "--N", "five"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("five"));
}

#[test]
fn q_out_of_range_names_the_interval() {
    let err = parse_config(["sobolev-lab", "constants", "--q", "9.9"]).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("2.5") && msg.contains("8/3"), "{msg}");
    let out = lab(&["constants", "--q", "9.9"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("8/3"));
}

#[test]
fn alpha0_flags_are_taken_verbatim() {
    let c = parse_config(["sobolev-lab", "alpha0", "--N", "5", "--q", "two_flat", "--a", "1"]).unwrap();
    assert_eq!(c.command, sobolev_cli::Command::Alpha0);
    assert_eq!((c.n, c.q, c.a), (5, QChoice::TwoFlat, 1.0));
    assert_eq!(c.q_value, 8.0 / 3.0);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "# experiment\nN = 6\nq = two_sharp\na = 3\nseed = 7\n").unwrap();
    let p = path.to_str().unwrap();
    let c = parse_config(["sobolev-lab", "constants", "--config", p, "--a", "0.5"]).unwrap();
    assert_eq!((c.n, c.q, c.a, c.rng_seed), (6, QChoice::TwoSharp, 0.5, 7));
    assert_eq!(c.q_value, 2.4);

    std::fs::write(&path, "colour = blue\n").unwrap();
    let err = parse_config(["sobolev-lab", "constants", "--config", p]).unwrap_err();
    assert!(err.to_string().contains("colour"));
    std::fs::write(&path, "N = 5.5\n").unwrap();
    let err = parse_config(["sobolev-lab", "constants", "--config", p]).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)) && err.to_string().contains("5.5"));
}

#[test]
fn constants_report() {
    let out = lab(&["constants", "--N", "5"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let r = &v["results"]["constants"];
    for key in ["N", "q", "two_star", "two_sharp", "two_flat", "s", "t", "S", "omega_N", "B", "A", "threshold"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    for key in ["energy", "critical_mass", "q_mass"] {
        assert!(r["oracle_residuals"][key].as_f64().unwrap() < 1e-8);
    }
    assert_eq!(v["config"]["N"], 5);
    assert_eq!(v["config"]["rng_seed"], 42);
    assert_eq!(v["invariant_failures"], Value::Array(vec![]));
    assert!(v["version"].is_string());
}

#[test]
fn reports_are_byte_identical() {
    let args = ["calculus", "--N", "6", "--q", "midpoint", "--samples", "20000", "--seed", "9"];
    let a = lab(&args);
    let b = lab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = lab(&["calculus", "--N", "6", "--q", "midpoint", "--samples", "20000", "--seed", "10"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn calculus_passes_at_full_sample_count() {
    let out = lab(&["calculus", "--N", "5", "--samples", "1000000"]);
    assert!(out.status.success());
    let v = json_of(&out);
    for key in ["at_q", "random_q"] {
        let r = &v["results"]["calculus"][key];
        assert_eq!(r["violations"], 0);
        assert!(r["worst_margin"].as_f64().unwrap() >= -1e-12);
    }
}

#[test]
fn eval_constant_field() {
    let field = r#"{"type": "constant", "N": 5, "R": 1, "a": 1, "q": "two_flat", "d": 0.7, "alpha": 1}"#;
    let out = lab(&["eval", "--field", field]);
    assert!(out.status.success());
    let r = &json_of(&out)["results"]["eval"];
    assert!((r["delta"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let beta = r["beta"].as_f64().unwrap();
    assert!((r["psi"].as_f64().unwrap() - 2.0 * beta).abs() < 1e-12 * beta);
}

#[test]
fn eval_reads_field_file_and_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.json");
    std::fs::write(&path, r#"{"type": "profile", "c": 1, "eps": 0.05, "rho_P": 0.5, "d": 0.1}"#).unwrap();
    let c = parse_config(["sobolev-lab", "eval", "--field", path.to_str().unwrap()]).unwrap();
    let rep = run(&c).unwrap();
    assert!(rep.passed());
    assert!(rep.results["eval"]["beta"].as_f64().unwrap() > 0.0);

    let c = parse_config(["sobolev-lab", "eval", "--field", r#"{"type": "profile", "rho_P": 3}"#]).unwrap();
    let rep = run(&c).unwrap();
    assert!(!rep.passed());
    assert!(rep.results["eval"]["error"].is_string());

    let c = parse_config(["sobolev-lab", "eval", "--field", r#"{"type": "torus"}"#]).unwrap();
    assert!(matches!(run(&c), Err(CliError::Usage(_))));
}

#[test]
fn appendix_writes_json_and_companion_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("appendix.json");
    let out = lab(&["appendix", "--N", "5", "--q", "two_sharp", "--output", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["results"]["appendix"]["relative_error_at_smallest_eps"].as_f64().unwrap() < 2e-2);
    let csv = std::fs::read_to_string(dir.path().join("appendix.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("parameter,raw,scaled,fitted"));
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn csv_format_goes_to_stdout_for_sweeps_only() {
    let out = lab(&["appendix", "--format", "csv", "--eps0", "0.05", "--eps-count", "3", "--tol", "0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    let c = parse_config(["sobolev-lab", "constants", "--format", "csv"]).unwrap();
    assert_eq!(c.format, Format::Csv);
    assert!(matches!(run(&c), Err(CliError::Usage(_))));
}

#[test]
fn failed_invariants_set_the_exit_status() {
    let out = lab(&["eigen", "--M", "128"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert!(!v["invariant_failures"].as_array().unwrap().is_empty());
    let out = lab(&["eigen", "--M", "128", "--tol", "0.1"]);
    assert!(out.status.success());
}

#[test]
fn bad_eps_grid_is_reported() {
    let out = lab(&["appendix", "--eps", "0.01,0.02"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert!(v["results"]["appendix"]["error"].as_str().unwrap().contains("decreasing"));
}

#[test]
fn all_reports_every_criterion() {
    let out = lab(&["all"]);
    let v = json_of(&out);
    let criteria = v["results"]["all"]["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 10);
    let failed: Vec<u64> =
        criteria.iter().filter(|c| c["passed"] == false).map(|c| c["id"].as_u64().unwrap()).collect();
    for c in criteria.iter().filter(|c| c["passed"] == false) {
        assert!(c["known_deviation"].is_string(), "unexpected failure: {c}");
    }
    assert_eq!(v["invariant_failures"].as_array().unwrap().len(), failed.len());
    assert_eq!(out.status.success(), failed.is_empty());
}
