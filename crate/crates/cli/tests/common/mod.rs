#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

pub const BIN: &str = env!("CARGO_BIN_EXE_enlarge");

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Runs the binary and returns its exit code.
pub fn run(args: &[&str]) -> i32 {
    let out = Command::new(BIN).args(args).output().expect("spawn enlarge");
    out.status.code().expect("exit code")
}

pub fn run_in(out_dir: &Path, args: &[&str]) -> i32 {
    let mut all: Vec<&str> = args.to_vec();
    let out = out_dir.to_str().unwrap();
    all.extend(["--out", out]);
    run(&all)
}

pub fn report(dir: &Path) -> Value {
    let text = std::fs::read_to_string(dir.join("report.json")).expect("report.json");
    serde_json::from_str(&text).expect("valid report")
}

/// The report without the machine-specific output directory.
pub fn portable(mut report: Value) -> Value {
    if let Some(cfg) = report.get_mut("config").and_then(Value::as_object_mut) {
        cfg.remove("output");
    }
    report
}

/// Structural equality with numbers compared to `rel` relative and `abs`
/// absolute tolerance. Returns the path of the first difference.
pub fn json_close(a: &Value, b: &Value, rel: f64, abs: f64) -> Result<(), String> {
    fn walk(a: &Value, b: &Value, rel: f64, abs: f64, path: &str) -> Result<(), String> {
        match (a, b) {
            (Value::Number(x), Value::Number(y)) => {
                let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
                if (x - y).abs() <= abs + rel * x.abs().max(y.abs()) {
                    Ok(())
                } else {
                    Err(format!("{path}: {x} vs {y}"))
                }
            }
            (Value::Object(x), Value::Object(y)) => {
                let keys_x: Vec<_> = x.keys().collect();
                let keys_y: Vec<_> = y.keys().collect();
                if keys_x != keys_y {
                    return Err(format!("{path}: keys {keys_x:?} vs {keys_y:?}"));
                }
                for (k, v) in x {
                    walk(v, &y[k], rel, abs, &format!("{path}.{k}"))?;
                }
                Ok(())
            }
            (Value::Array(x), Value::Array(y)) => {
                if x.len() != y.len() {
                    return Err(format!("{path}: length {} vs {}", x.len(), y.len()));
                }
                for (i, (u, v)) in x.iter().zip(y).enumerate() {
                    walk(u, v, rel, abs, &format!("{path}[{i}]"))?;
                }
                Ok(())
            }
            _ if a == b => Ok(()),
            _ => Err(format!("{path}: {a} vs {b}")),
        }
    }
    walk(a, b, rel, abs, "$")
}

/// Compares the seed-1 testbed report in `dir` with the golden file,
/// rewriting the golden file instead when `UPDATE_GOLDEN` is set.
pub fn check_golden(dir: &Path) -> Result<(), String> {
    let golden = golden_dir().join("testbed_seed1.json");
    let current = portable(report(dir));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&golden, serde_json::to_string_pretty(&current).unwrap() + "\n").unwrap();
        return Ok(());
    }
    let text = std::fs::read_to_string(&golden).map_err(|e| format!("{}: {e}", golden.display()))?;
    let expected: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    json_close(&expected, &current, 1e-9, 1e-12)
}

/// Byte comparison of every CSV file in two output directories.
pub fn same_csvs(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = std::fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    names.sort();
    for n in &names {
        let x = std::fs::read(a.join(n)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(n)).map_err(|e| format!("{}: {e}", n.to_string_lossy()))?;
        if x != y {
            return Err(format!("{} differs", n.to_string_lossy()));
        }
    }
    Ok(names.len())
}

pub fn write_json(path: &Path, v: &Value) {
    std::fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
}

/// A one-dimensional problem small enough for quick CLI runs.
pub fn small_problem() -> Value {
    serde_json::json!({
        "d": 1, "s": 2, "L": 8, "N": 100,
        "weight": {"kind": "polynomial", "k": 3},
        "swirl": {"phi": "none", "amplitude": 0},
        "scheme": "implicit-euler", "t_max": 4, "dt": 0.02
    })
}

/// Exit codes for the contract cases, keyed by case name; each case runs
/// in its own subdirectory of `root`.
pub fn exit_code_cases(root: &Path) -> Vec<(&'static str, i32, i32)> {
    let mut cases = Vec::new();
    let dir = |name: &str| root.join(name);

    cases.push(("pinned testbed passes", 0, run_in(&dir("pass"), &["testbed", "--seed", "1"])));

    let cfg = root.join("on_spectrum.json");
    write_json(
        &cfg,
        &serde_json::json!({"schema_version": 1, "command": "testbed", "testbed": {"abscissa": -1.0}}),
    );
    cases.push((
        "abscissa on the spectrum is indeterminate",
        2,
        run_in(&dir("indeterminate"), &["--config", cfg.to_str().unwrap()]),
    ));

    let mut p = small_problem();
    p["target_a"] = serde_json::json!(-1.98);
    let cfg = root.join("infeasible.json");
    write_json(
        &cfg,
        &serde_json::json!({"schema_version": 1, "command": "fp-decay", "problem": p,
            "search": {"m_max": 1.2, "m_count": 2}}),
    );
    cases.push((
        "infeasible decomposition search",
        3,
        run_in(&dir("infeasible"), &["--config", cfg.to_str().unwrap()]),
    ));

    let cfg = root.join("unknown_key.json");
    write_json(&cfg, &serde_json::json!({"schema_version": 1, "command": "testbed", "colour": "blue"}));
    cases.push(("unknown config key", 4, run_in(&dir("unknown"), &["--config", cfg.to_str().unwrap()])));

    let mut p = small_problem();
    p["weight"]["k"] = serde_json::json!(0.5);
    let prob = root.join("k_half.json");
    write_json(&prob, &p);
    cases.push((
        "polynomial weight with k = 0.5",
        4,
        run_in(&dir("k_half"), &["fp-spectrum", "--problem", prob.to_str().unwrap()]),
    ));

    let blocker = root.join("not_a_dir");
    std::fs::write(&blocker, "x").unwrap();
    cases.push((
        "unwritable output directory",
        1,
        run(&["testbed", "--out", blocker.join("sub").to_str().unwrap()]),
    ));
    cases
}
