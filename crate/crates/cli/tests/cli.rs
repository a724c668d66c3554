use std::path::Path;
use std::process::{Command, Output};

fn deckrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deckrec")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn genpool_rejects_small_pools_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("small.json");
    assert_eq!(code(&deckrec(&["genpool", "--n", "5", "--out", p(&small)])), 2);

    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(code(&deckrec(&["--seed", "3", "genpool", "--n", "20", "--out", p(&a)])), 0);
    assert_eq!(code(&deckrec(&["--seed", "3", "genpool", "--n", "20", "--out", p(&b)])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn train_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool.json");
    let ck = dir.path().join("policy.json");
    assert_eq!(code(&deckrec(&["--seed", "1", "genpool", "--n", "12", "--out", p(&pool)])), 0);
    let out = deckrec(&[
        "--seed", "1", "train", "--pool", p(&pool), "--d", "3", "--episodes", "0", "--hidden", "8", "--out", p(&ck),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(ck.exists());

    let result = dir.path().join("solve.json");
    let out = deckrec(&["solve", "--checkpoint", p(&ck), "--opponent", "0,4,9", "--out", p(&result)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert_eq!(json["deck"].as_array().unwrap().len(), 3);
    assert_eq!(json["log"]["f_calls"], 0);

    // opponent deck with the wrong size for the policy
    assert_eq!(code(&deckrec(&["solve", "--checkpoint", p(&ck), "--opponent", "0,4"])), 2);
    // card id outside the policy's pool
    assert_eq!(code(&deckrec(&["solve", "--checkpoint", p(&ck), "--opponent", "0,4,30"])), 2);
}

#[test]
fn brute_refuses_large_instances() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool.json");
    assert_eq!(code(&deckrec(&["genpool", "--n", "312", "--out", p(&pool)])), 0);
    let opponent = (0..15).map(|i| i.to_string()).collect::<Vec<_>>().join(",");
    assert_eq!(code(&deckrec(&["brute", "--pool", p(&pool), "--opponent", &opponent])), 4);
}

#[test]
fn ga_and_mc_report_call_counts() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool.json");
    assert_eq!(code(&deckrec(&["genpool", "--n", "16", "--out", p(&pool)])), 0);

    let ga = dir.path().join("ga.json");
    let out = deckrec(&[
        "--seed", "2", "ga", "--pool", p(&pool), "--opponent", "1,2,3,4", "--max-f-calls", "25", "--matches", "10",
        "--out", p(&ga),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&ga).unwrap()).unwrap();
    assert!(json["log"]["f_calls"].as_u64().unwrap() <= 25);

    let mc = dir.path().join("mc.json");
    let out = deckrec(&[
        "mc", "--pool", p(&pool), "--opponent", "1,2,3,4", "--x", "1", "--dataset-size", "400", "--matches-per-label",
        "6", "--out", p(&mc),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&mc).unwrap()).unwrap();
    assert_eq!(json["log"]["f_calls"], 0);
    assert_eq!(json["deck"].as_array().unwrap().len(), 4);
}

#[test]
fn bench_with_missing_checkpoint_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    let config = serde_json::json!({
        "pool": {"seed": 1, "n": 12},
        "d": 3,
        "instances": 2,
        "runs": 2,
        "chain": {"ga_f_calls": 10, "num_matches": 10},
        "eval_matches": 20,
        "roster": [
            {"algo": "ga", "name": "ga", "max_f_calls": 10, "num_matches": 10},
            {"algo": "q_deck_rec", "name": "q", "checkpoint": "missing.json"}
        ]
    });
    let cfg = dir.path().join("bench.json");
    std::fs::write(&cfg, config.to_string()).unwrap();
    let out_dir = dir.path().join("out");
    let out = deckrec(&["bench", "--config", p(&cfg), "--out", p(&out_dir)]);
    assert_eq!(code(&out), 5, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["partial"], true);
    assert!(out_dir.join("report.txt").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.json");
    std::fs::write(&cfg, r#"{"pool": {"seed": 1, "n": 12}, "d": 3, "roster": [], "bogus": 1}"#).unwrap();
    assert_eq!(code(&deckrec(&["bench", "--config", p(&cfg), "--out", p(&dir.path().join("o"))])), 2);
}
