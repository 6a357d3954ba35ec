use std::path::PathBuf;
use std::process::Command;

fn bcsign(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bcsign")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bcsign-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn gauss_default_grid_matches() {
    let (code, out, _) = bcsign(&["gauss"]);
    assert_eq!(code, 0);
    assert!(out.contains("result: ok"));
    // the n = 0 row: one form, sign +1
    assert!(out.lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["3", "0", "1", "0", "1", "0", "1/0/0/0"]));
}

#[test]
fn sign_for_u1_and_e3f1() {
    let (code, out, _) = bcsign(&["sign", "--case", "u1"]);
    assert_eq!(code, 0);
    assert!(out.contains("ε_z = +1"));
    let (code, out, _) = bcsign(&["sign", "--case", "e3f1"]);
    assert_eq!(code, 0);
    assert!(out.contains("brute = closed: ok"));
}

#[test]
fn non_minimal_stratum_is_reported() {
    let (_, cfg, _) = bcsign(&["sign", "--case", "e3f2", "--print-config"]);
    let mut v: serde_json::Value = serde_json::from_str(&cfg).unwrap();
    v["stratum"]["c"][0]["a"] = 2.into();
    let path = tmp("nonmin.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let (code, out, _) = bcsign(&["sign", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.contains("minimal: false"));
    assert!(out.lines().any(|l| l.starts_with("0 ") && l.contains("FAIL")));
}

#[test]
fn config_errors_exit_two() {
    let (_, cfg, _) = bcsign(&["sign", "--case", "u1", "--print-config"]);
    let path = tmp("typo.json");
    std::fs::write(&path, cfg.replace("\"lambda0\"", "\"lamda0\"")).unwrap();
    let (code, _, err) = bcsign(&["sign", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown field"));
    let (code, _, err) = bcsign(&["sign", "--case", "e4f1"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown case"));
}

#[test]
fn json_results_round_trip() {
    let first = tmp("bc1.json");
    let second = tmp("bc2.json");
    let (code, _, _) = bcsign(&["base-change", "--case", "e3f1", "--rho-minus-one", "-1", "--json", first.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, _, _) = bcsign(&["base-change", "--config", first.to_str().unwrap(), "--json", second.to_str().unwrap()]);
    assert_eq!(code, 0);
    let a = std::fs::read_to_string(&first).unwrap();
    let b = std::fs::read_to_string(&second).unwrap();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["result"]["varpi"], 2);
    assert_eq!(v["result"]["provenance"]["lambda0"], 1);
}

#[test]
fn reducibility_for_e3f1() {
    let (code, out, _) = bcsign(&["reducibility", "--case", "e3f1"]);
    assert_eq!(code, 0);
    assert!(out.contains("{-1, 1, πi/log q_E}"));
    assert!(out.contains("{-1/2, 1/2, -1/2 + πi/log q_E, 1/2 + πi/log q_E}"));
}
