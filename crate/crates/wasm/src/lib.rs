//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain values and returns a JSON string; the
//! computations live in [`demo`] so they can be tested natively.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// The bundled Ward 9 ballot file.
#[wasm_bindgen]
pub fn sample_ballots() -> String {
    demo::SAMPLE_BLT.to_string()
}

/// Round-by-round tallies under `rule` (`"meek"` or `"wigm"`).
#[wasm_bindgen]
pub fn tally(blt: &str, rule: &str, seats: Option<usize>) -> Result<String, JsError> {
    js(demo::tally(blt, rule, seats))
}

/// Audit graph at least auditable margin `lam` after adding `ghosts` empty ballots.
#[wasm_bindgen]
pub fn audit_graph(blt: &str, seats: Option<usize>, lam: f64, ghosts: usize) -> Result<String, JsError> {
    js(demo::audit_graph(blt, seats, lam, ghosts))
}

/// Hypergeometric tail at `observed` and the upper confidence bound on successes.
#[wasm_bindgen]
pub fn hypergeometric(population: u64, successes: u64, draws: u64, observed: u64, alpha: f64) -> Result<String, JsError> {
    js(demo::hypergeometric(population, successes, draws, observed, alpha))
}

/// Approximate sample size for a margin in votes, plus a curve over `margins`.
#[wasm_bindgen]
pub fn asn(margin: f64, params: usize, alpha0: f64, alpha_k: f64, population: u64, margins: Vec<f64>) -> Result<String, JsError> {
    js(demo::asn(margin, params, alpha0, alpha_k, population, &margins))
}
