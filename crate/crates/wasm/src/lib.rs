//! JSON-in, JSON-out bindings for the browser page in `www/`.

pub mod demo;

use serde::de::DeserializeOwned;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn call<Q: DeserializeOwned, A: Serialize>(json: &str, f: impl Fn(&Q) -> Result<A, String>) -> Result<String, String> {
    let req: Q = serde_json::from_str(json).map_err(|e| format!("bad request: {e}"))?;
    serde_json::to_string(&f(&req)?).map_err(|e| e.to_string())
}

/// Runs `f` on native targets too; only the error conversion is browser-only.
fn export<Q: DeserializeOwned, A: Serialize>(
    json: &str,
    f: impl Fn(&Q) -> Result<A, String>,
) -> Result<String, JsError> {
    call(json, f).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = exploreRoute)]
pub fn explore_route(request: &str) -> Result<String, JsError> {
    export(request, demo::explore_route)
}

#[wasm_bindgen(js_name = mixCurve)]
pub fn mix_curve(request: &str) -> Result<String, JsError> {
    export(request, demo::mix_curve)
}

#[wasm_bindgen(js_name = alphaSweep)]
pub fn alpha_sweep(request: &str) -> Result<String, JsError> {
    export(request, demo::alpha_sweep)
}

/// The JSON layer without the JS error type, for native callers and tests.
pub fn call_json(op: &str, request: &str) -> Result<String, String> {
    match op {
        "exploreRoute" => call(request, demo::explore_route),
        "mixCurve" => call(request, demo::mix_curve),
        "alphaSweep" => call(request, demo::alpha_sweep),
        _ => Err(format!("unknown operation {op}")),
    }
}
