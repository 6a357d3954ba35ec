use bcsign_web::{base_change_json, gauss_sign_json, reducibility_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn gauss_sign_examples() {
    let v = parse(&gauss_sign_json(3, "[[1,0],[0,1]]", 1).unwrap());
    assert_eq!(v["ok"], true);
    assert!(v["text"].as_str().unwrap().contains("sign = -1"));
    let v = parse(&gauss_sign_json(3, "[[1,1],[1,1]]", 1).unwrap());
    assert_eq!(v["ok"], false);
    assert!(gauss_sign_json(3, "[[1,2],[0,1]]", 1).is_err());
    assert!(gauss_sign_json(4, "[[1]]", 1).is_err());
}

#[test]
fn base_change_u1() {
    let v = parse(&base_change_json("u1", -1).unwrap());
    assert_eq!(v["ok"], true);
    assert_eq!(v["result"]["varpi"], 2);
}

#[test]
fn reducibility_small_and_capped() {
    let v = parse(&reducibility_json("e3f1", 1).unwrap());
    assert_eq!(v["ok"], true);
    assert!(reducibility_json("e3f2", 1).unwrap_err().contains("enumeration"));
}
