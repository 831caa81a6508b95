use std::path::PathBuf;
use std::process::{Command, Output};

use junta_cli::error::CliError;
use junta_core::{DistributionSpec, JuntaError};

fn junta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_junta")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = junta(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("junta-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn gen_parity_emits_a_normalized_pmf() {
    let text = stdout(&["gen", "--kind", "parity", "--n", "8", "--vars", "1,2,3", "--eps", "0.125"]);
    let spec = DistributionSpec::from_json(&text).unwrap();
    let p = spec.to_explicit().unwrap();
    assert!((p.pmf().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(spec.relevant_variables(), vec![0, 1, 2]);
}

#[test]
fn find_writes_one_row_per_trial_with_a_correct_column() {
    let path = scratch("f.json");
    let p = path.to_str().unwrap();
    stdout(&["gen", "--kind", "parity", "--n", "8", "--vars", "1,2,3", "--eps", "0.125", "--output", p]);
    let args = ["find", "--instance", p, "--k", "3", "--eps", "0.125", "--trials", "100", "--seed", "7", "--scale", "0.05", "--eps0-log-power", "0"];
    let first = stdout(&args);
    let mut lines = first.lines();
    assert_eq!(lines.next(), Some("#schema=junta-find/1"));
    assert_eq!(lines.next(), Some("trial,seed,J,queries,budget,correct"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.ends_with(",true") || r.ends_with(",false")));
    assert_eq!(first, stdout(&args));
}

#[test]
fn structural_audit_schema() {
    let text = stdout(&["audit", "structural", "--n", "4", "--random", "200", "--seed", "1"]);
    let header = text.lines().nth(1).unwrap();
    for col in ["lhs", "rhs_sum", "implied_c"] {
        assert!(header.split(',').any(|c| c == col), "{header}");
    }
    assert_eq!(text.lines().count(), 202);
}

#[test]
fn flags_override_the_config_file() {
    let cfg = scratch("cfg.json");
    std::fs::write(&cfg, r#"{"n": 3, "trials": 4, "seed": 5}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = stdout(&["audit", "monotonicity", "--config", c]);
    assert_eq!(from_file.lines().count(), 6);
    let overridden = stdout(&["audit", "monotonicity", "--config", c, "--trials", "2"]);
    assert_eq!(overridden.lines().count(), 4);
    assert!(overridden.lines().nth(2).unwrap().starts_with("0,5,3,"));
}

#[test]
fn invalid_configuration_exits_with_two() {
    assert_eq!(junta(&["find", "--k", "2"]).status.code(), Some(2));
    assert_eq!(junta(&["gen", "--kind", "parity", "--n", "4", "--vars", "9", "--eps", "0.1"]).status.code(), Some(2));
    assert_eq!(junta(&["audit", "product-tv", "--n", "4", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(junta(&["find", "--no-such-flag"]).status.code(), Some(2));
    let bad = scratch("bad.json");
    std::fs::write(&bad, r#"{"bogus": 1}"#).unwrap();
    assert_eq!(junta(&["audit", "monotonicity", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn oracle_failures_map_to_three() {
    assert_eq!(CliError::Core(JuntaError::ZeroMass).exit_code(), 3);
    assert_eq!(CliError::Core(JuntaError::InvalidParameter("x".into())).exit_code(), 2);
}

#[test]
fn jobs_do_not_change_output() {
    let args = ["compress-audit", "--random", "6", "--runs", "500", "--seed", "2"];
    let serial = stdout(&args);
    let mut par = args.to_vec();
    par.extend_from_slice(&["--jobs", "3"]);
    assert_eq!(serial, stdout(&par));
}
