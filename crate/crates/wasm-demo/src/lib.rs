//! Browser bindings. Each export wraps a plain function so the logic is testable natively.

use wasm_bindgen::prelude::*;

use odnf::criterion::classify_pair;
use odnf::diffop::GradedOp;
use odnf::error::Error;
use odnf::newton::{classify_top_line, render_svg};
use odnf::parse::{eval_graded, parse};
use odnf::powerform::{expand_power, expand_power_oracle};
use odnf::schur::normal_form;

const MAX_K: u32 = 8;
const MAX_DEPTH: u32 = 16;

fn message(e: Error) -> String {
    e.to_json().to_string()
}

fn operator(src: &str) -> Result<GradedOp, String> {
    eval_graded(&parse(src, None).map_err(message)?, 1, 64).map_err(message)
}

fn check_depth(depth: u32) -> Result<(), String> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(format!("depth must be between 1 and {}", MAX_DEPTH));
    }
    Ok(())
}

/// Standard form of `(D + L)^k`, optionally followed by the brute-force expansion.
pub fn expand_power_text(k: u32, oracle: bool) -> Result<String, String> {
    if k == 0 || k > MAX_K {
        return Err(format!("k must be between 1 and {}", MAX_K));
    }
    let e = expand_power(k).map_err(message)?;
    if !oracle {
        return Ok(e.to_string());
    }
    let o = expand_power_oracle(k).map_err(message)?;
    Ok(format!("{}\n{}\n{}", e, o, if e == o { "equal" } else { "MISMATCH" }))
}

/// Newton diagram of the normal form of `P` relative to `Q`.
pub fn newton_svg_text(p: &str, q: &str, depth: u32) -> Result<String, String> {
    check_depth(depth)?;
    let nf = normal_form(&operator(p)?, &operator(q)?, depth).map_err(message)?;
    let class = classify_top_line(&nf.series).map_err(message)?;
    Ok(render_svg(&nf.series, &class))
}

/// Pair report as pretty JSON.
pub fn classify_json(p: &str, q: &str, depth: u32) -> Result<String, String> {
    check_depth(depth)?;
    let r = classify_pair(&operator(p)?, &operator(q)?, depth, None).map_err(message)?;
    let mut v = r.to_json_value();
    v["inputs"]["p"] = p.into();
    v["inputs"]["q"] = q.into();
    serde_json::to_string_pretty(&v).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = expandPower)]
pub fn expand_power_js(k: u32, oracle: bool) -> Result<String, JsValue> {
    expand_power_text(k, oracle).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = newtonSvg)]
pub fn newton_svg_js(p: &str, q: &str, depth: u32) -> Result<String, JsValue> {
    newton_svg_text(p, q, depth).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn classify(p: &str, q: &str, depth: u32) -> Result<String, JsValue> {
    classify_json(p, q, depth).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power() {
        assert_eq!(expand_power_text(2, false).unwrap(), "D^2 + 2*L(0)*D + L(1) + L(0,0)");
        assert!(expand_power_text(3, true).unwrap().ends_with("equal"));
        assert!(expand_power_text(0, false).is_err());
        assert!(expand_power_text(9, false).is_err());
    }

    #[test]
    fn svg() {
        let a = newton_svg_text("d^3 + x", "d^2 + x", 6).unwrap();
        assert!(a.starts_with("<svg"));
        assert_eq!(a, newton_svg_text("d^3 + x", "d^2 + x", 6).unwrap());
        assert!(newton_svg_text("d^3 + (", "d^2", 6).unwrap_err().contains("\"parse\""));
    }

    #[test]
    fn pair_report() {
        let v: serde_json::Value = serde_json::from_str(&classify_json("d^3", "d^2", 4).unwrap()).unwrap();
        assert_eq!(v["commutes"], true);
        assert_eq!(v["inputs"]["p"], "d^3");
        assert!(classify_json("d^3", "d^2", 0).is_err());
    }
}
