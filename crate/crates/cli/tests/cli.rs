use std::path::Path;
use std::process::{Command, Output};

fn mmv(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmv"))
        .args(args)
        .current_dir(dir)
        .env_remove("MMV_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    let line = text.lines().last().unwrap();
    serde_json::from_str(line).unwrap()
}

fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("w1.csv"), "0.1\n5\n").unwrap();
    std::fs::write(dir.path().join("w2.csv"), "0.1,0\n5,6\n").unwrap();
    std::fs::write(dir.path().join("w.csv"), "2,2\n-2,2\n").unwrap();
    dir
}

#[test]
fn help_exits_zero() {
    let dir = workdir();
    let o = mmv(&["cw", "--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Usage: mmv cw"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = workdir();
    let o = mmv(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "usage");
    assert!(err["message"].as_str().unwrap().contains("simulate"));
    let o = mmv(&["bounds", "--k", "two", "--n", "1", "--m", "2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one() {
    let dir = workdir();
    let o = mmv(&["cw", "w2.csv", "--sigma-a2", "10"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "domain");
    assert!(err["message"].as_str().unwrap().contains("(1,2)"));
    let o = mmv(&["cw", "missing.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn cw_reports_golden_threshold() {
    let dir = workdir();
    let o = mmv(&["cw", "w1.csv", "--sigma-a2", "10", "--sigma-z2", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("\"c_of_W\": 0.068751761874967565"), "{text}");
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["argmin_subset"], serde_json::json!([1]));
    assert_eq!(v["per_subset"].as_array().unwrap().len(), 3);
    let o = mmv(&["cw", "w2.csv", "--sigma-a2", "10", "--mode", "generalized"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["argmin_subset"], serde_json::json!([1]));
}

#[test]
fn bounds_prints_table_csv() {
    let dir = workdir();
    let o = mmv(&["bounds", "--k", "2", "--n", "20", "--m", "1024", "--sigma-a2", "10"], dir.path());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "label,lower_bound_n,upper_bound_m");
    assert!(lines[1].starts_with("i_smv,") && lines[1].ends_with(",4084101.0000000000"));
    assert!(lines[3].ends_with(",16679880978201.000"));
    let o = mmv(&["bounds", "--k", "3", "--n", "20", "--m", "1024"], dir.path());
    assert!(stdout(&o).lines().nth(3).unwrap() == "iii_mmv_orthogonal,,");
}

#[test]
fn instance_then_decode_recovers_support() {
    let dir = workdir();
    let gen = mmv(
        &["instance", "--w", "w.csv", "--m", "12", "--n", "60", "--sigma-z2", "0.1", "--seed", "8", "--out", "inst.json"],
        dir.path(),
    );
    assert_eq!(gen.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("inst.json")).unwrap()).unwrap();
    for decoder in ["ml", "net"] {
        let o = mmv(&["decode", "inst.json", "--decoder", decoder, "--sigma-z2", "0.1", "--epsilon", "0.4"], dir.path());
        assert_eq!(o.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["support"], doc["support"], "{decoder}");
        assert_eq!(v["status"], "unique-accept");
    }
    let o = mmv(&["decode", "inst.json", "--budget", "10"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("budget"));
}

#[test]
fn verify_example_passes() {
    let dir = workdir();
    let o = mmv(&["verify", "--lemma", "3", "--trials", "1000", "--seed", "7"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["violations"], 0);
    assert_eq!(v["trials"], 1000);
    assert_eq!(v["seed"], 7);
}

#[test]
fn simulate_writes_curve_csv() {
    let dir = workdir();
    std::fs::write(
        dir.path().join("s.json"),
        r#"{"W": [[1], [-1]], "alpha": 10, "m_grid": [4, 8, 40], "ratio": 0.5, "trials_per_point": 20, "test_budget": 100}"#,
    )
    .unwrap();
    let o = mmv(&["simulate", "--config", "s.json", "--out", "curve.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,n,trials,errors,error_rate,wilson_halfwidth,status");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("4,") && lines[1].ends_with(",ok"));
    assert!(lines[3].ends_with(",skipped"));

    std::fs::write(dir.path().join("bad.json"), r#"{"W": [[1]], "alpha": 10, "m_grid": [4, 2], "ratio": 1}"#).unwrap();
    let o = mmv(&["simulate", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn thread_env_fallback_matches_flag() {
    let dir = workdir();
    let args = ["verify", "--lemma", "hadamard", "--trials", "300"];
    let flag = mmv(&[&args[..], &["--threads", "3"]].concat(), dir.path());
    let env = Command::new(env!("CARGO_BIN_EXE_mmv"))
        .args(args)
        .env("MMV_THREADS", "2")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(flag.status.code(), Some(0));
    assert_eq!(flag.stdout, env.stdout);
}
