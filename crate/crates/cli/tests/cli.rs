use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn harbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harbench"))
        .args(args)
        .env_remove("HARBENCH_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// A small dataset: 3 subjects, 4 activities, 4 trials of 20 s each.
fn small_dataset(dir: &Path) -> String {
    let path = dir.join("ds");
    let o = harbench(&["synth", "--out", path.to_str().unwrap(), "--subjects", "3", "--trial-len", "1000", "--seed", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn synth_then_ingest_round_trips() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let copy = dir.path().join("copy");
    let o = harbench(&["ingest", "--input", &ds, "--out", copy.to_str().unwrap()]);
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["trials"], 48);
    assert_eq!(summary["subjects"], 3);
    for f in ["dataset.json", "trials"] {
        assert!(copy.join(f).exists());
    }
    let again = harbench(&["ingest", "--input", copy.to_str().unwrap()]);
    assert_eq!(stdout(&again), stdout(&o));
}

#[test]
fn audit_reports_sncv_overlap() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let o = harbench(&["audit", "--data", &ds, "--combination", "SNCV", "--k", "3"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(doc["overlap_pairs"].as_u64().unwrap() > 0);

    let o = harbench(&["audit", "--data", &ds, "--combination", "LTCV", "--k", "3"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["same_trial_pairs"], 0);
}

#[test]
fn run_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let args = ["run", "--data", &ds, "--method", "catal", "--combination", "LTCV", "--k", "3", "--seed", "7", "--format", "csv"];
    let a = harbench(&args);
    let b = harbench(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    // wall time is the only column allowed to differ
    let strip = |s: String| {
        s.lines()
            .map(|l| {
                let mut cols: Vec<&str> = l.split(',').collect();
                let n = cols.len();
                cols.remove(n - 2);
                cols.join(",")
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(stdout(&a)), strip(stdout(&b)));
}

#[test]
fn seed_from_environment() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let run = |env: Option<&str>, seed_flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_harbench"));
        cmd.args(["audit", "--data", &ds, "--combination", "SNCV", "--k", "3"]).env_remove("HARBENCH_SEED");
        if let Some(s) = seed_flag {
            cmd.args(["--seed", s]);
        }
        if let Some(e) = env {
            cmd.env("HARBENCH_SEED", e);
        }
        stdout(&cmd.output().unwrap())
    };
    assert_eq!(run(Some("5"), None), run(None, Some("5")));
    assert_ne!(run(Some("5"), None), run(None, None));
}

#[test]
fn unknown_method_is_a_config_error() {
    let o = harbench(&["run", "--method", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown method"));
}

#[test]
fn bad_flag_is_a_usage_error() {
    let o = harbench(&["run", "--method", "catal", "--combination", "XYZ"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_only_batch_exits_3() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let o = harbench(&["run", "--data", &ds, "--method", "ha2015", "--method", "jiang_yin", "--k", "3"]);
    assert_eq!(o.status.code(), Some(3));
    let table: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(table["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn report_rerenders_saved_json() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let json = dir.path().join("r.json");
    let folds = dir.path().join("folds.csv");
    let o = harbench(&[
        "run",
        "--data",
        &ds,
        "--method",
        "kwapisz",
        "--method",
        "ha2016",
        "--k",
        "3",
        "--out",
        json.to_str().unwrap(),
        "--folds-out",
        folds.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&folds).unwrap().lines().count(), 1 + 3);

    let md = stdout(&harbench(&["report", "--input", json.to_str().unwrap()]));
    assert!(md.starts_with("### SNCV"));
    assert!(md.contains("| ha2016 | − | − |"));
    let o = harbench(&["report", "--input", json.to_str().unwrap(), "--format", "xml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lda_emits_points_for_both_splits() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path());
    let o = harbench(&["lda", "--data", &ds, "--k", "3", "--fold", "1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("window,split,label,c1,c2"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.iter().any(|l| l.contains(",train,")));
    assert!(rows.iter().any(|l| l.contains(",test,")));

    let o = harbench(&["lda", "--data", &ds, "--k", "3", "--fold", "9"]);
    assert_eq!(o.status.code(), Some(2));
}
