//! wasm-bindgen entry points for the static page in `www/`.
//!
//! Every export takes source text and returns a JSON string; errors come back
//! as a rejected call carrying the message.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use loopbound::analysis::{analyze, render_json, render_text, AnalysisOptions, RenderOptions};
use loopbound::ir::{parse_source, FlowGraph, LowerOptions, SourceKind};
use loopbound::oracle::{validate_bounds, BoxSpec};

/// Browsers get a smaller default box than the command line.
const WEB_STEP_CAP: u64 = 20_000;
const WEB_MAX_RUNS: u128 = 200_000;

const EXAMPLES: &[(&str, &str)] = &[
    ("step2.fg", include_str!("../../../corpus/step2.fg")),
    ("nonzeros.loopc", include_str!("../../../corpus/nonzeros.loopc")),
    ("bubble.loopc", include_str!("../../../corpus/bubble.loopc")),
    ("spin.loopc", include_str!("../../../corpus/spin.loopc")),
    ("log2.loopc", include_str!("../../../corpus/log2.loopc")),
    ("two_counters.loopc", include_str!("../../../corpus/two_counters.loopc")),
    ("triangle.loopc", include_str!("../../../corpus/triangle.loopc")),
];

fn graph(source: &str, kind: &str) -> Result<FlowGraph, String> {
    let kind = match kind {
        "fg" => SourceKind::Fg,
        "loopc" => SourceKind::Loopc,
        _ => SourceKind::detect(None, source),
    };
    // the page has no flag for it, and bounds do not depend on array contents
    let lower = LowerOptions {
        ignore_array_writes: true,
    };
    parse_source(source, kind, lower).map_err(|e| e.to_string())
}

fn options(smart: bool) -> AnalysisOptions {
    AnalysisOptions {
        smart_elimination: smart,
        ..AnalysisOptions::default()
    }
}

pub fn analyze_json(source: &str, kind: &str, smart: bool) -> Result<String, String> {
    let g = graph(source, kind)?;
    let r = analyze(&g, &options(smart)).map_err(|e| e.to_string())?;
    let mut v: Value = render_json(&r);
    v["text"] = json!(render_text(&r, RenderOptions::default()));
    v["fg"] = json!(g.to_fg());
    Ok(v.to_string())
}

pub fn validate_json(source: &str, kind: &str, input_box: &str, smart: bool) -> Result<String, String> {
    let g = graph(source, kind)?;
    let spec: BoxSpec = input_box.parse().map_err(|e: loopbound::oracle::BoxSpecError| e.to_string())?;
    let size = loopbound::oracle::InputSpace::new(&g, spec).len();
    if size > WEB_MAX_RUNS {
        return Err(format!("the box has {size} inputs; the page allows {WEB_MAX_RUNS}"));
    }
    let r = analyze(&g, &options(smart)).map_err(|e| e.to_string())?;
    let v = validate_bounds(&g, &r.bounds, spec, WEB_STEP_CAP);
    let mut out = serde_json::to_value(&v).map_err(|e| e.to_string())?;
    out["summary"] = json!(v.summary());
    Ok(out.to_string())
}

pub fn examples_json() -> String {
    let list: Vec<Value> = EXAMPLES
        .iter()
        .map(|(name, text)| json!({ "name": name, "source": text }))
        .collect();
    Value::Array(list).to_string()
}

/// Bounds, loop bounds and classes as JSON, with the text report under `text`.
#[wasm_bindgen]
pub fn analyze_program(source: &str, kind: &str, smart: bool) -> Result<String, JsError> {
    analyze_json(source, kind, smart).map_err(|e| JsError::new(&e))
}

/// Runs the program on every input of the box and checks each bound.
#[wasm_bindgen]
pub fn validate_program(source: &str, kind: &str, input_box: &str, smart: bool) -> Result<String, JsError> {
    validate_json(source, kind, input_box, smart).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn examples() -> String {
    examples_json()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analyze_step2() {
        let out: Value = serde_json::from_str(&analyze_json(EXAMPLES[0].1, "auto", true).unwrap()).unwrap();
        assert_eq!(out["loops"][0]["bound"], "max{0, ceil(($x - 5)/2)}");
        assert!(out["text"].as_str().unwrap().contains("loop@b"));
    }

    #[test]
    fn validate_every_example() {
        for (name, src) in EXAMPLES {
            let out: Value = serde_json::from_str(&validate_json(src, "auto", "-3:5,3,1", true).unwrap())
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(out["violation_count"], 0, "{name}");
        }
    }

    #[test]
    fn errors_are_messages() {
        assert!(analyze_json("int f( {", "loopc", true).unwrap_err().contains("1:"));
        assert!(validate_json(EXAMPLES[0].1, "fg", "9:1", true).is_err());
        assert!(validate_json(EXAMPLES[5].1, "loopc", "-100:100,6,5", true)
            .unwrap_err()
            .contains("allows"));
        let ex: Value = serde_json::from_str(&examples_json()).unwrap();
        assert_eq!(ex.as_array().unwrap().len(), EXAMPLES.len());
    }
}
