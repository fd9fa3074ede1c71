use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specdbl"))
        .args(args)
        .output()
        .expect("spawn")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn read_json(p: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(Path::new(p)).unwrap()).unwrap()
}

#[test]
fn gen_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.json"), path(&dir, "b.json"));
    for out in [&a, &b] {
        let o = bin(&[
            "gen", "--kind", "random", "--group", "3,3,3", "--size", "9", "--seed", "5", "--out",
            out,
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v = read_json(&a);
    assert_eq!(v["elements"].as_array().unwrap().len(), 9);
    assert_eq!(v["orders"], serde_json::json!([3, 3, 3]));
}

#[test]
fn subgroup_generation() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "h.json");
    let o = bin(&[
        "gen",
        "--kind",
        "subgroup",
        "--group",
        "2,2,2,2",
        "--gens",
        "1000;0100",
        "--out",
        &out,
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(&out)["elements"].as_array().unwrap().len(), 4);
}

#[test]
fn refine_then_report_round_trip() {
    let dir = TempDir::new().unwrap();
    let set = path(&dir, "a.json");
    let trace = path(&dir, "t.json");
    assert_eq!(
        code(&bin(&[
            "gen",
            "--kind",
            "two-plane",
            "--n",
            "3",
            "--out",
            &set
        ])),
        0
    );
    let o = bin(&[
        "--format",
        "json",
        "refine",
        "--input",
        &set,
        "--epsilon",
        "0.4",
        "--delta",
        "0.3",
        "--seed",
        "1",
        "--out",
        &trace,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = read_json(&trace);
    assert_eq!(t["audit"]["passed"], Value::Bool(true));
    assert_eq!(code(&bin(&["report", "--trace", &trace])), 0);

    // corrupt the first threshold: the re-audit must reject it
    let mut bad = t.clone();
    bad["result"]["trace"][0]["rho"] = serde_json::json!(0.123);
    let tampered = path(&dir, "bad.json");
    std::fs::write(&tampered, serde_json::to_string(&bad).unwrap()).unwrap();
    let o = bin(&["report", "--trace", &tampered]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn spectrum_and_verify() {
    let dir = TempDir::new().unwrap();
    let set = path(&dir, "a.json");
    let spec = path(&dir, "s.json");
    assert_eq!(
        code(&bin(&[
            "gen",
            "--kind",
            "two-plane",
            "--n",
            "2",
            "--out",
            &set
        ])),
        0
    );
    let o = bin(&[
        "spectrum",
        "--input",
        &set,
        "--epsilon",
        "0.4",
        "--out",
        &spec,
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(&spec)["elements"], read_json(&set)["elements"]);
    let o = bin(&[
        "--format",
        "csv",
        "verify",
        "--input",
        &set,
        "--statistical-doubling",
        "0.4",
        "--closure",
        "0.8",
        "--parseval",
        "0.3",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!o.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let missing = path(&dir, "nope.json");
    assert_eq!(
        code(&bin(&["spectrum", "--input", &missing, "--epsilon", "0.5"])),
        2
    );
    assert_eq!(code(&bin(&["frobnicate"])), 2);
    let malformed = path(&dir, "m.json");
    std::fs::write(&malformed, r#"{"orders":[2,2],"elements":[[0,5]]}"#).unwrap();
    let o = bin(&["spectrum", "--input", &malformed, "--epsilon", "0.5"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("elements[0]"));
    let set = path(&dir, "a.json");
    assert_eq!(
        code(&bin(&[
            "gen", "--kind", "random", "--group", "4", "--size", "2", "--out", &set
        ])),
        0
    );
    assert_eq!(
        code(&bin(&["verify", "--input", &set, "--closure", "0.5"])),
        2
    );
}
