use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(rel).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamming-forge")).args(args).output().expect("run the CLI")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL_IDENTITIES: [&str; 9] = [
    "identities",
    "--ln-binom-max",
    "200",
    "--basic3-max",
    "50",
    "--proportional-max",
    "20",
    "--families",
    "20",
];

#[test]
fn identities_pass_and_report_schema() {
    let v = json(&[&SMALL_IDENTITIES[..], &["--json"]].concat());
    for key in ["tool", "version", "command", "seed", "config", "result"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["tool"], "hamming-forge");
    assert_eq!(v["command"], "identities");
    assert_eq!(v["result"]["passed"], true);
    let suites = v["result"]["suites"].as_array().unwrap();
    assert!(suites.len() >= 9);
    for s in suites {
        assert!(s["name"].is_string() && s["checked"].as_u64().unwrap() > 0);
        assert_eq!(s["failures"], 0);
    }
}

#[test]
fn injected_fault_exits_one() {
    let out = run(&[&SMALL_IDENTITIES[..], &["--inject-fault"]].concat());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("identity violation"));
}

#[test]
fn generator_reports() {
    let example = fixture("families/two_triples.json");
    let v = json(&["generator", &example, "--l", "5", "--max-size", "0", "--json"]);
    let r = &v["result"];
    assert_eq!((r["valid_count"].as_u64(), r["total_count"].as_u64()), (Some(11), Some(21)));
    let full = scratch("full_6_2.json", &all_pairs(6));
    let v = json(&["generator", full.to_str().unwrap(), "--l", "4", "--json"]);
    assert_eq!(v["result"]["g"], serde_json::json!([]));
    assert_eq!(v["result"]["success"], true);
}

/// Every pair over `[n]` as a family file.
fn all_pairs(n: u32) -> String {
    let sets: Vec<Vec<u32>> = (1..=n).flat_map(|a| (a + 1..=n).map(move |b| vec![a, b])).collect();
    serde_json::json!({ "n": n, "m": 2, "sets": sets }).to_string()
}

#[test]
fn malformed_input_exits_two() {
    let bad = scratch("bad.json", "{\"n\": 4, \"m\": 2, \"sets\": [[1,2]");
    let out = run(&["generator", bad.to_str().unwrap(), "--l", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let circuit = scratch("bad.txt", "1 LEAF + 1 2\n2 AND 1 3\n");
    assert_eq!(run(&["dnf", circuit.to_str().unwrap()]).status.code(), Some(2));
    let singletons = fixture("families/singletons.json");
    assert_eq!(run(&["sunflower", &singletons, "--delta", "1"]).status.code(), Some(2));
    assert_eq!(run(&["shift", &fixture("circuits/clique_4_3.txt"), &fixture("shift/clique_5_3.json")]).status.code(), Some(2));
    assert_eq!(run(&["identities", "--bogus"]).status.code(), Some(2));
}

#[test]
fn sunflower_reports() {
    let v = json(&["sunflower", &fixture("families/singletons.json"), "--delta", "3", "--json"]);
    assert_eq!(v["result"]["status"], "found");
    assert_eq!(v["result"]["sunflower"]["core"], serde_json::json!([]));
    let rooted = fixture("families/rooted_pairs.json");
    let v = json(&["sunflower", &rooted, "--delta", "3", "--method", "small-core", "--l", "4", "--json"]);
    assert_eq!(v["result"]["sunflower"]["core"], serde_json::json!([1, 2]));
}

#[test]
fn shift_fixture_reports() {
    let v = json(&["shift", &fixture("circuits/mutilated_6_3.txt"), &fixture("shift/mutilated_6_3.json"), "--seeds", "1", "--json"]);
    let run0 = &v["result"]["runs"][0];
    assert_eq!(run0["seed"], 1);
    assert_eq!(run0["outcome"]["status"], "success");
    assert_eq!(run0["outcome"]["audits"]["counterexample"], true);
    assert!(run0["outcome"]["Q_trace"].is_array());

    let v = json(&["shift", &fixture("circuits/clique_4_3.txt"), &fixture("shift/clique_4_3.json"), "--seeds", "1-5", "--json"]);
    let agg = &v["result"]["aggregate"];
    assert_eq!((agg["runs"].as_u64(), agg["failure"].as_u64()), (Some(5), Some(5)));
    assert_eq!(agg["soundness"], true);
    for r in v["result"]["runs"].as_array().unwrap() {
        assert_eq!(r["outcome"]["status"], "failure");
    }
}

#[test]
fn reports_do_not_depend_on_jobs() {
    let args = ["shift", &fixture("circuits/clique_6_3.txt"), &fixture("shift/clique_6_3.json"), "--seeds", "3,1,2", "--json"];
    let serial = run(&[&["--jobs", "1"], &args[..]].concat());
    let parallel = run(&[&["--jobs", "2"], &args[..]].concat());
    assert_eq!(serial.stdout, parallel.stdout);
    let v: Value = serde_json::from_slice(&serial.stdout).unwrap();
    let seeds: Vec<u64> = v["result"]["runs"].as_array().unwrap().iter().map(|r| r["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, vec![1, 2, 3]);
}

#[test]
fn calibrate_writes_the_stored_format() {
    let out = Command::new(env!("CARGO_BIN_EXE_hamming-forge"))
        .args(["binom-calibrate", "--ln-binom-max", "100", "--basic3-max", "50", "--proportional-max", "20"])
        .env("SOURCE_DATE_EPOCH", "1000")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let file = hamming_forge::calibration::CalibrationFile::from_json(&text).unwrap();
    assert!(file.constants.values().all(|e| e.timestamp == 1000));
}
