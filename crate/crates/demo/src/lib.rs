//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function returns a JSON string. The plain-Rust versions in
//! [`ops`] do the work and are tested natively.

use wasm_bindgen::prelude::*;

pub mod ops {
    use std::f64::consts::TAU;

    use discord_core::planner::similarity_profile;
    use discord_core::{
        decompose, make_circle, make_homophilous_blocks, optimal_intervention, solve_equilibrium, welfare,
        Direction, GameParams, Network, Profile,
    };
    use serde_json::{json, Value};

    pub type OpResult = Result<String, String>;

    fn err(e: impl std::fmt::Display) -> String {
        e.to_string()
    }

    /// `circle` uses `n`; `blocks` splits `n` into two halves with strong
    /// within-block ties.
    pub fn network(kind: &str, n: usize, seed: u64) -> Result<Network, String> {
        match kind {
            "circle" => make_circle(n).map_err(err),
            "blocks" => {
                let half = n / 2;
                make_homophilous_blocks(&[half, n - half], 0.7, 0.1, seed).map_err(err)
            }
            other => Err(format!("unknown network kind {other:?}")),
        }
    }

    /// Ideal-point presets that need no file input.
    pub fn preset(name: &str, n: usize, k: usize) -> Result<Profile, String> {
        let v: Vec<f64> = match name {
            "wave" => (0..n).map(|i| (TAU * (k * i) as f64 / n as f64).cos()).collect(),
            "alternating" => (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(),
            "spike" => (0..n).map(|i| if i == k % n { 1.0 } else { 0.0 }).collect(),
            other => return Err(format!("unknown preset {other:?}")),
        };
        Ok(Profile::new(v).map_err(err)?.centered())
    }

    fn edges(net: &Network) -> Value {
        Value::from(net.edges().into_iter().map(|(i, j, w)| json!([i, j, w])).collect::<Vec<_>>())
    }

    fn direction(name: &str) -> Result<Direction, String> {
        match name {
            "benevolent" => Ok(Direction::Benevolent),
            "malevolent" => Ok(Direction::Malevolent),
            other => Err(format!("unknown direction {other:?}")),
        }
    }

    /// Eigenvalues plus one chosen eigenvector (0-based component).
    pub fn spectrum(kind: &str, n: usize, seed: u64, component: usize) -> OpResult {
        let net = network(kind, n, seed)?;
        let spec = decompose(&net).map_err(err)?;
        if component >= n {
            return Err(format!("component {component} out of range for n = {n}"));
        }
        Ok(json!({
            "edges": edges(&net),
            "eigenvalues": spec.eigenvalues().as_slice(),
            "component": component,
            "vector": spec.eigenvector(component).to_vec(),
        })
        .to_string())
    }

    pub fn equilibrium(kind: &str, n: usize, seed: u64, preset_name: &str, k: usize, beta: f64) -> OpResult {
        let net = network(kind, n, seed)?;
        let params = GameParams::with_beta(beta).map_err(err)?;
        let f = preset(preset_name, n, k)?;
        let a = solve_equilibrium(&net, &params, &f).map_err(err)?;
        let w = welfare(&net, &params, &a, &f).map_err(err)?;
        Ok(json!({
            "edges": edges(&net),
            "f": f.to_vec(),
            "a": a.to_vec(),
            "welfare": w,
        })
        .to_string())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn intervene(
        kind: &str,
        n: usize,
        seed: u64,
        preset_name: &str,
        k: usize,
        beta: f64,
        gamma: &str,
        budget: f64,
    ) -> OpResult {
        let net = network(kind, n, seed)?;
        let spec = decompose(&net).map_err(err)?;
        let params = GameParams::new(beta, direction(gamma)?).map_err(err)?;
        let f_hat = preset(preset_name, n, k)?;
        let r = optimal_intervention(&net, &spec, &params, &f_hat, budget, true).map_err(err)?;
        let similarity: Vec<Value> = match similarity_profile(&r, &spec, &f_hat) {
            Ok(rows) => rows.iter().map(|s| json!([s.lambda, s.rho_delta])).collect(),
            Err(_) => Vec::new(),
        };
        Ok(json!({
            "edges": edges(&net),
            "f_hat": f_hat.to_vec(),
            "f_star": r.f_star.to_vec(),
            "a_star": r.a_star.to_vec(),
            "welfare_before": r.welfare_before,
            "welfare_after": r.welfare_after,
            "outcome": r.outcome,
            "similarity": similarity,
            "warnings": r.warnings,
        })
        .to_string())
    }
}

fn to_js(r: ops::OpResult) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn spectrum(kind: &str, n: usize, seed: u32, component: usize) -> Result<String, JsValue> {
    to_js(ops::spectrum(kind, n, seed.into(), component))
}

#[wasm_bindgen]
pub fn equilibrium(kind: &str, n: usize, seed: u32, preset: &str, k: usize, beta: f64) -> Result<String, JsValue> {
    to_js(ops::equilibrium(kind, n, seed.into(), preset, k, beta))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn intervene(
    kind: &str,
    n: usize,
    seed: u32,
    preset: &str,
    k: usize,
    beta: f64,
    gamma: &str,
    budget: f64,
) -> Result<String, JsValue> {
    to_js(ops::intervene(kind, n, seed.into(), preset, k, beta, gamma, budget))
}
