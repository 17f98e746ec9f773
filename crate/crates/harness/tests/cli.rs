use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn stopkey(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stopkey")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stopkey-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn decompose_prints_rounds() {
    let tenths = data("tenths.json");
    let o = stopkey(&["decompose", "--dist", tenths.to_str().unwrap(), "--w-max", "3", "--format", "structured"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["rounds"].as_array().unwrap().len(), 3);
    assert_eq!(doc["tail"], "1/8");
}

#[test]
fn keygen_common_parties_agree() {
    let tenths = data("tenths.json");
    let dist = tenths.to_str().unwrap();
    for seed in 0..20 {
        let seed = seed.to_string();
        let a = stopkey(&["keygen-common", "--dist", dist, "--role", "alice", "--x", "c", "--seed", &seed]);
        assert!(a.status.success());
        let line = stdout(&a);
        let w = line.trim().split(" w=").nth(1).unwrap().to_string();
        let b = stopkey(&["keygen-common", "--dist", dist, "--role", "bob", "--x", "c", "--w", &w]);
        assert_eq!(stdout(&b), line);
    }
}

#[test]
fn verify_rsbs_exit_codes() {
    let good = data("law_codebook.json");
    let bad = data("law_biased.json");
    assert_eq!(stopkey(&["verify-rsbs", "--law", good.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(stopkey(&["verify-rsbs", "--law", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn input_errors_exit_3() {
    assert_eq!(stopkey(&["bounds", "--joint", "/nonexistent.json"]).status.code(), Some(3));
    let broken = scratch("broken.json");
    std::fs::write(&broken, r#"{"pmf": ["1/2", "1/3"]}"#).unwrap();
    let o = stopkey(&["bounds", "--joint", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert_eq!(stopkey(&["simulate", "--bogus"]).status.code(), Some(3));
}

#[test]
fn bounds_lists_the_converse() {
    let j = data("noisy_cycle8.json");
    let o = stopkey(&["bounds", "--joint", j.to_str().unwrap(), "--m", "2", "--format", "structured"]);
    assert!(o.status.success());
    let d: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(d["lines"].as_array().unwrap().iter().any(|l| l["label"] == "converse"));
}

#[test]
fn simulate_writes_report_and_log_that_report_reads_back() {
    let j = data("noisy_cycle8.json");
    let out = scratch("report.json");
    let log = scratch("log.json");
    let o = stopkey(&[
        "keygen-almost",
        "--joint",
        j.to_str().unwrap(),
        "--m",
        "2",
        "--trials",
        "3000",
        "--seed",
        "5",
        "--transcript-log",
        log.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rendered = stopkey(&["report", "--input", out.to_str().unwrap()]);
    assert!(rendered.status.success());
    assert!(stdout(&rendered).contains("== methodology =="));
    let eve = stopkey(&["report", "--log", log.to_str().unwrap()]);
    assert!(eve.status.success());
    assert!(stdout(&eve).contains("A:h B:"));
}

#[test]
fn leaked_key_in_log_exits_2() {
    let log = scratch("leak.json");
    std::fs::write(
        &log,
        r#"{"protocol": "common", "records": [
            {"trial": 0, "messages": [{"sender": "alice", "payload": "w=1 key=0110"}],
             "key_a": "0110", "key_b": "0110", "ideal": "0110"}]}"#,
    )
    .unwrap();
    let o = stopkey(&["report", "--log", log.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn same_seed_same_bytes() {
    let cfg = data("configs/correlated_bsc_hashmap.json");
    let run = || {
        let o = Command::new(env!("CARGO_BIN_EXE_stopkey"))
            .current_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("../.."))
            .args(["simulate", "--config", cfg.to_str().unwrap(), "--format", "structured"])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    assert_eq!(run(), run());
}
