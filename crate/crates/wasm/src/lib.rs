//! Browser bindings for the qrange checker.
//!
//! Instances cross the boundary as problem-file JSON and results come back as
//! JSON strings, so the page needs no generated TypeScript types.

use qrange::curated::CASES;
use qrange::range_oracle::{detect_holes, sample_range, SampleMode};
use qrange::{check_convexity, level_pair_separation, Error, ProblemInstance};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn parse(problem: &str) -> Result<ProblemInstance, String> {
    ProblemInstance::from_json(problem).map_err(|e| e.to_string())
}

fn render(v: Value) -> String {
    v.to_string()
}

/// Names of the bundled instances.
#[wasm_bindgen]
pub fn example_names() -> Vec<String> {
    CASES.iter().map(|c| c.name.to_string()).collect()
}

/// Problem-file JSON of a bundled instance.
#[wasm_bindgen]
pub fn example_source(name: &str) -> Result<String, String> {
    CASES
        .iter()
        .find(|c| c.name == name)
        .map(|c| c.source.to_string())
        .ok_or_else(|| format!("no bundled instance named `{name}`"))
}

/// Exact convexity decision with its step trace and, when nonconvex, a
/// verified witness.
#[wasm_bindgen]
pub fn check(problem: &str) -> Result<String, String> {
    let p = parse(problem)?;
    let cert = check_convexity(&p).map_err(|e| e.to_string())?;
    let verification = match &cert.witness {
        Some(w) => Some(w.verify(&p).map_err(|e| e.to_string())?),
        None => None,
    };
    let mut v = serde_json::to_value(&cert).map_err(|e| e.to_string())?;
    v["verification"] = serde_json::to_value(verification).map_err(|e| e.to_string())?;
    Ok(render(v))
}

/// Whether `{f = alpha}` and `{g = beta}` are separated by `g` (resp. `f`).
#[wasm_bindgen]
pub fn separate(problem: &str, alpha: f64, beta: f64) -> Result<String, String> {
    let p = parse(problem)?;
    let r = level_pair_separation(&p.f, &p.g, alpha, beta, &p.tolerances).map_err(|e| e.to_string())?;
    serde_json::to_string(&r).map_err(|e| e.to_string())
}

/// Samples the joint range over `[-box, box]^n` and runs the hole detector.
///
/// `points` is flattened as `[f0, g0, f1, g1, ...]`.
#[wasm_bindgen]
pub fn sample(problem: &str, domain_box: f64, count: usize, seed: u32, resolution: usize, radius: f64) -> Result<String, String> {
    let p = parse(problem)?;
    let s = sample_range(&p, domain_box, count, u64::from(seed), SampleMode::UniformRandom).map_err(|e| e.to_string())?;
    let points: Vec<f64> = s.points.iter().flatten().copied().collect();
    let v = match detect_holes(&s, resolution, radius) {
        Ok(h) => json!({
            "points": points,
            "degenerate_cloud": false,
            "suspected_nonconvex": h.suspected_nonconvex,
            "largest_cluster": h.largest_cluster,
            "hull": h.hull_vertices,
            "hole_cells": h.hole_cells,
        }),
        Err(Error::DegenerateCloud) => json!({
            "points": points,
            "degenerate_cloud": true,
            "suspected_nonconvex": false,
            "largest_cluster": 0,
            "hull": [],
            "hole_cells": [],
        }),
        Err(e) => return Err(e.to_string()),
    };
    Ok(render(v))
}
