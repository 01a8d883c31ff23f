mod common;

use common::*;

#[test]
fn pinned_testbed_matches_golden() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_in(tmp.path(), &["testbed", "--seed", "1"]), 0);
    check_golden(tmp.path()).unwrap();
    let r = report(tmp.path());
    for check in r["checks"].as_array().unwrap() {
        let has_witness = check.get("witness").is_some();
        let has_constants = check["constants"].as_object().is_some_and(|c| !c.is_empty());
        assert!(has_witness || has_constants, "{check}");
    }
}

#[test]
fn jobs_do_not_change_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_in(a.path(), &["testbed", "--seed", "1"]), 0);
    assert_eq!(run_in(b.path(), &["testbed", "--seed", "1", "--jobs", "1"]), 0);
    assert_eq!(same_csvs(a.path(), b.path()).unwrap(), 2);
    assert_eq!(portable(report(a.path())), portable(report(b.path())));
}

#[test]
fn fp_decay_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let prob = tmp.path().join("problem.json");
    write_json(&prob, &small_problem());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let p = prob.to_str().unwrap();
    assert_eq!(run_in(&a, &["fp-decay", "--problem", p]), 0);
    assert_eq!(run_in(&b, &["fp-decay", "--problem", p, "--jobs", "1"]), 0);
    assert_eq!(same_csvs(&a, &b).unwrap(), 2);
    assert_eq!(portable(report(&a)), portable(report(&b)));
}

#[test]
fn exit_code_contract() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, expected, got) in exit_code_cases(tmp.path()) {
        assert_eq!(got, expected, "{name}");
    }
}

#[test]
fn infeasible_report_keeps_the_frontier() {
    let tmp = tempfile::tempdir().unwrap();
    exit_code_cases(tmp.path());
    let r = report(&tmp.path().join("infeasible"));
    let frontier = r["details"]["decomposition"]["frontier"].as_array().unwrap();
    assert_eq!(frontier.len(), 2);
    assert!(r["details"]["decomposition"]["accepted"].is_null());
}

#[test]
fn config_and_command_must_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    write_json(&cfg, &serde_json::json!({"schema_version": 1, "command": "testbed"}));
    let c = cfg.to_str().unwrap();
    assert_eq!(run_in(&tmp.path().join("o"), &["fp-spectrum", "--config", c]), 4);
    assert_eq!(run(&["--tolerance", "nonsense", "testbed"]), 4);
}

#[test]
fn fp_spectrum_writes_matrix_market() {
    let tmp = tempfile::tempdir().unwrap();
    let prob = tmp.path().join("problem.json");
    write_json(&prob, &small_problem());
    assert_eq!(run_in(tmp.path(), &["fp-spectrum", "--problem", prob.to_str().unwrap()]), 0);
    let text = std::fs::read_to_string(tmp.path().join("generator.mtx")).unwrap();
    assert!(text.starts_with("%%MatrixMarket matrix coordinate real general"));
    let r = report(tmp.path());
    let lp = r["constants"]["lambda_P"].as_f64().unwrap();
    assert!(lp < 0.0);
}
