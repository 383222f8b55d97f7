use std::path::Path;
use std::process::{Command, Output};

use alq_core::simulation::ExperimentSummary;

const BIN: &str = env!("CARGO_BIN_EXE_alq");

fn alq(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("ALQ_SEED")
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const QUICK: [&str; 4] = ["--rounds", "3", "--queries", "4"];

#[test]
fn run_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = alq(&[&["run", "--strategy", "random"][..], &QUICK[..]].concat(), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("random"));

    let csv = std::fs::read_to_string(dir.path().join("per_query.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "strategy,q,labeled_size,lambda_mean,lambda_lo,lambda_hi,zeta_mean,zeta_lo,zeta_hi,\
         eta_mean,eta_lo,eta_hi,auc_mean,f1_mean,n_missing_eta"
    );
    assert_eq!(lines.count(), 4);

    let summary: ExperimentSummary =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.strategy, "random");
    assert_eq!(summary.round_seeds, vec![0, 1, 2]);
    assert_eq!(summary.final_query().labeled_size, 18);
    assert!(!dir.path().join("phi.csv").exists());
}

#[test]
fn compare_covers_all_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let out = alq(&[&["compare"][..], &QUICK[..]].concat(), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summaries: Vec<ExperimentSummary> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let names: Vec<&str> = summaries.iter().map(|s| s.strategy.as_str()).collect();
    assert_eq!(names, ["random", "uncertainty", "shifted-normal"]);
    // Paired seeds: the seed pool and its model are shared.
    for s in &summaries[1..] {
        assert_eq!(s.initial, summaries[0].initial);
    }
    let csv = std::fs::read_to_string(dir.path().join("per_query.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 4);
    let table = std::fs::read_to_string(dir.path().join("final_table.txt")).unwrap();
    assert_eq!(table, String::from_utf8_lossy(&out.stdout));
}

#[test]
fn unknown_strategy_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = alq(&["run", "--strategy", "bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    for name in ["random", "uncertainty", "shifted-normal"] {
        assert!(msg.contains(name), "{msg}");
    }
}

#[test]
fn over_budget_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = alq(&["run", "--queries", "600"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("budget"), "{}", stderr(&out));
    assert!(!dir.path().join("per_query.csv").exists());
}

#[test]
fn invalid_parameters_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--class-sep", "0"][..],
        &["run", "--cost-c", "0.5"],
        &["run", "--rounds", "1"],
        &["run", "--batch", "0"],
        &["compare", "--mode", "1.5"],
        &["run", "--jobs", "0"],
        &["dump-dataset", "--flip-y", "1.5"],
    ] {
        let out = alq(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = alq(&[&["run"][..], &QUICK[..]].concat(), &blocker.join("sub"));
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn seed_env_fallback_and_flag_precedence() {
    let read = |dir: &Path| std::fs::read(dir.join("summary.json")).unwrap();
    let run = |env: Option<&str>, flag: Option<&str>| {
        let dir = tempfile::tempdir().unwrap();
        let mut cmd = Command::new(BIN);
        cmd.args(["run", "--rounds", "2", "--queries", "2"]).arg("--out").arg(dir.path());
        cmd.env_remove("ALQ_SEED");
        if let Some(v) = env {
            cmd.env("ALQ_SEED", v);
        }
        if let Some(v) = flag {
            cmd.args(["--seed", v]);
        }
        assert!(cmd.output().unwrap().status.success());
        read(dir.path())
    };
    let from_flag = run(None, Some("5"));
    assert_eq!(run(Some("5"), None), from_flag);
    assert_eq!(run(Some("9"), Some("5")), from_flag);
    assert_ne!(run(None, None), from_flag);
}

#[test]
fn dump_dataset_writes_all_instances() {
    let dir = tempfile::tempdir().unwrap();
    let out = alq(&["dump-dataset", "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let mut reader = csv::Reader::from_path(dir.path().join("dataset.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["id", "f0", "f1", "f2", "f3", "label"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4010);
    let positives = rows.iter().filter(|r| &r[5] == "1").count();
    assert_eq!(positives, 2005);
}

#[test]
fn phi_flag_writes_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = alq(&[&["compare", "--phi"][..], &QUICK[..]].concat(), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let mut reader = csv::Reader::from_path(dir.path().join("phi.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap(),
        vec!["strategy", "seed", "q", "delta", "count", "phi_mean", "phi_min", "phi_max"]
    );
    assert_eq!(reader.records().count(), 3 * 3 * 4);
}
