//! Three bcsign operations exposed to JavaScript. Each returns a JSON string
//! `{"ok": bool, "text": <rendered table>, "result": <report>}`.

use bcsign::cli::{cmd_base_change, cmd_reducibility};
use bcsign::config::ExperimentConfig;
use bcsign::finite_field::{AddChar, FqField};
use bcsign::gauss::{normalized_sign, BruteOptions, QuadSpace};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Enumeration cap for the page; e3f2 and d1-tower need the CLI.
pub const WEB_BOUND: u64 = 20_000;

fn config(case: &str, rho_minus_one: i8) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::builtin(case).map_err(|e| e.to_string())?;
    cfg.character.rho_minus_one = rho_minus_one;
    cfg.run.bound = WEB_BOUND;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// Normalized Gauss sum of x ↦ ψ_a(xᵀSx) over F_q; `gram` is a JSON array of rows.
pub fn gauss_sign_json(q: u32, gram: &str, a: u32) -> Result<String, String> {
    let k = FqField::with_order(q).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<u32>> = serde_json::from_str(gram).map_err(|e| format!("gram: {e}"))?;
    let rows: Vec<Vec<u32>> = rows.into_iter().map(|r| r.into_iter().map(|x| x % k.q()).collect()).collect();
    let space = QuadSpace::new(&k, rows).map_err(|e| e.to_string())?;
    if !space.is_nondegenerate() {
        return Ok(json!({"ok": false, "text": format!("degenerate form: radical of dimension {}", space.radical_dim())}).to_string());
    }
    let psi = AddChar::new(&k, a % k.q());
    let r = normalized_sign(&space, &psi, BruteOptions { bound: WEB_BOUND * 50, threads: None }).map_err(|e| e.to_string())?;
    let label = ["+1", "+i", "-1", "-i"][(r.root % 4) as usize];
    let text = format!("n = {}  sign = {label}\nbrute  = {}\nclosed = {}\n", r.dim, r.brute, r.closed);
    Ok(json!({"ok": r.brute == r.closed, "text": text, "result": r}).to_string())
}

pub fn base_change_json(case: &str, rho_minus_one: i8) -> Result<String, String> {
    let r = cmd_base_change(&config(case, rho_minus_one)?).map_err(|e| e.to_string())?;
    Ok(json!({"ok": r.ok, "text": r.render(), "result": r}).to_string())
}

pub fn reducibility_json(case: &str, rho_minus_one: i8) -> Result<String, String> {
    let r = cmd_reducibility(&config(case, rho_minus_one)?).map_err(|e| e.to_string())?;
    Ok(json!({"ok": r.ok, "text": r.render(), "result": r}).to_string())
}

#[wasm_bindgen]
pub fn gauss_sign(q: u32, gram: &str, a: u32) -> Result<String, JsValue> {
    gauss_sign_json(q, gram, a).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn base_change(case: &str, rho_minus_one: i8) -> Result<String, JsValue> {
    base_change_json(case, rho_minus_one).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn reducibility(case: &str, rho_minus_one: i8) -> Result<String, JsValue> {
    reducibility_json(case, rho_minus_one).map_err(|e| JsValue::from_str(&e))
}
