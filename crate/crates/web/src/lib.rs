//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes and returns text: case and plan files as TOML, results
//! as JSON. The plain-Rust functions in [`api`] do the work.

use wasm_bindgen::prelude::*;

pub mod api;

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// The bundled two-bus case file.
#[wasm_bindgen(js_name = exampleCase)]
pub fn example_case() -> String {
    api::EXAMPLE_CASE.to_string()
}

/// Candidate projects and horizon of a case, as JSON.
#[wasm_bindgen(js_name = describeCase)]
pub fn describe_case(case_text: &str) -> Result<String, JsError> {
    js(api::describe_case(case_text))
}

/// Runs the expansion planner and returns the bound history and best plan.
#[wasm_bindgen(js_name = planExpansion)]
pub fn plan_expansion(case_text: &str, gap: f64, max_iterations: u32, seed: u32) -> Result<String, JsError> {
    js(api::plan_expansion(case_text, gap, max_iterations as usize, u64::from(seed)))
}

/// Simulates operation under a plan given as `[[project, stage], ...]` JSON.
#[wasm_bindgen(js_name = simulatePlan)]
pub fn simulate_plan(case_text: &str, builds_json: &str, seed: u32) -> Result<String, JsError> {
    js(api::simulate_plan(case_text, builds_json, u64::from(seed)))
}

/// Fits periodic AR(1) inflow parameters to CSV history text.
#[wasm_bindgen(js_name = fitInflows)]
pub fn fit_inflows(history_csv: &str, periods: u32) -> Result<String, JsError> {
    js(api::fit_inflows(history_csv, periods as usize))
}
