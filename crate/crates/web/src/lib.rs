//! Browser bindings. Every export takes and returns JSON text; failures come
//! back as `{"error": "..."}` so the page never has to catch exceptions.

use std::collections::BTreeMap;

use mppc::io::{self, FitResult};
use mppc::{oracle, MultiCurve, Params, PointCloud};
use serde::Deserialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

#[derive(Deserialize)]
struct Cloud {
    dim: usize,
    coords: Vec<f64>,
}

#[derive(Deserialize)]
struct FitRequest {
    cloud: Cloud,
    lambda1: f64,
    lambda2: f64,
    #[serde(default)]
    ppc_only: bool,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    max_iter: Option<usize>,
    /// Result document to start from.
    #[serde(default)]
    initial: Option<FitResult>,
}

fn respond(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn cloud_json(c: &PointCloud) -> Value {
    json!({ "dim": c.dim(), "coords": c.coords() })
}

/// Synthetic dataset as `{dim, coords}`; `options` is an object of numbers.
#[wasm_bindgen]
pub fn generate(kind: &str, options: &str, seed: u32) -> String {
    respond((|| {
        let opts: BTreeMap<String, f64> = if options.trim().is_empty() {
            BTreeMap::new()
        } else {
            serde_json::from_str(options).map_err(|e| e.to_string())?
        };
        let cloud = io::generate(kind, &opts, u64::from(seed)).map_err(|e| e.to_string())?;
        Ok(cloud_json(&cloud))
    })())
}

/// Runs a fit and returns the result document.
#[wasm_bindgen]
pub fn fit(request: &str) -> String {
    respond((|| {
        let req: FitRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
        let cloud = PointCloud::uniform(req.cloud.dim, req.cloud.coords).map_err(|e| e.to_string())?;
        let mut params = Params::new(req.lambda1, req.lambda2);
        params.ppc_only = req.ppc_only;
        params.seed = req.seed;
        if let Some(n) = req.max_iter {
            params.max_outer_iters = n;
        }
        let initial: Option<MultiCurve> = req.initial.map(|r| r.curves()).transpose().map_err(|e| e.to_string())?;
        let (curves, report) = mppc::fit(&cloud, &params, initial).map_err(|e| e.to_string())?;
        serde_json::to_value(FitResult::new(&curves, &report, &params)).map_err(|e| e.to_string())
    })())
}

/// Closed-form predictions for the given weights and linear density.
#[wasm_bindgen]
pub fn predict(lambda1: f64, lambda2: f64, alpha: f64) -> String {
    respond((|| {
        let e = |r: mppc::Result<f64>| r.map_err(|e| e.to_string());
        Ok(json!({
            "smoothing_length": e(oracle::smoothing_length(lambda1, alpha))?,
            "critical_density": e(oracle::critical_density(lambda1, lambda2, 2.0))?,
            "gap": e(oracle::typical_gap(lambda1, lambda2, alpha, 2.0))?,
            "isolated_points": alpha < e(oracle::critical_density(lambda1, lambda2, 2.0))?,
        }))
    })())
}
