//! Browser bindings: band diagram, Floquet multipliers and designed
//! bound-state profiles, each returned as a JSON string.

use serde_json::json;
use wasm_bindgen::prelude::*;

use qgtube::bands::{band_diagram, spectrum_bands};
use qgtube::dispersion::mode_set;
use qgtube::edge_ode::{transfer_constants, EdgePotential};
use qgtube::halftube::{design_robin, DesignCase};
use qgtube::lattice::make_params;

pub fn bands_json(
    alpha: i64,
    beta: i64,
    delta: i64,
    lo: f64,
    hi: f64,
    grid: usize,
) -> Result<String, String> {
    let p = make_params(alpha, beta, delta).map_err(|e| e.to_string())?;
    let pot = EdgePotential::Zero;
    let bands = spectrum_bands((lo, hi), &p, &pot).map_err(|e| e.to_string())?;
    let curves = band_diagram(grid, (lo, hi), &p, &pot).map_err(|e| e.to_string())?;
    Ok(json!({ "bands": bands, "curves": curves }).to_string())
}

pub fn modes_json(alpha: i64, beta: i64, delta: i64, lambda: f64) -> Result<String, String> {
    let p = make_params(alpha, beta, delta).map_err(|e| e.to_string())?;
    let tc = transfer_constants(lambda, &EdgePotential::Zero, 1.0).map_err(|e| e.to_string())?;
    let ms = mode_set(lambda, &p, &tc).map_err(|e| e.to_string())?;
    let modes: Vec<_> = ms
        .modes
        .iter()
        .map(|m| json!({ "ell": m.ell, "z1": [m.z1.re, m.z1.im], "class": m.class.label() }))
        .collect();
    Ok(json!({
        "lambda": lambda,
        "propagating_pairs": ms.num_propagating_pairs,
        "band_edge": ms.band_edge,
        "modes": modes,
    })
    .to_string())
}

pub fn profile_json(
    case: &str,
    alpha: i64,
    beta: i64,
    delta: i64,
    lambda: f64,
    columns: usize,
) -> Result<String, String> {
    let case: DesignCase = case.parse().map_err(|e: qgtube::Error| e.to_string())?;
    let p = make_params(alpha, beta, delta).map_err(|e| e.to_string())?;
    let d = design_robin(case, lambda, &p, &EdgePotential::Zero).map_err(|e| e.to_string())?;
    let cand = d.candidate().map_err(|e| e.to_string())?;
    let mode = d.mode();
    let profile: Vec<f64> = (0..columns as i64)
        .map(|m| {
            (0..p.rings())
                .map(|n| {
                    let (x, y) = p.raw(qgtube::lattice::VertexId { column: m, ring: n });
                    mode.value_at(&p, x, y).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let robin: Vec<[f64; 2]> = d.config.boundary_robin.iter().map(|r| [r.a, r.b]).collect();
    Ok(json!({
        "lambda": lambda,
        "z1": d.z1,
        "z2": d.z2,
        "robin": robin,
        "embedded": cand.embedded,
        "residual": cand.residual,
        "decay_ratio": cand.decay_ratio,
        "profile": profile,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn band_diagram_data(
    alpha: i32,
    beta: i32,
    delta: i32,
    lo: f64,
    hi: f64,
) -> Result<String, JsError> {
    bands_json(alpha as i64, beta as i64, delta as i64, lo, hi, 300).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn floquet_multipliers(
    alpha: i32,
    beta: i32,
    delta: i32,
    lambda: f64,
) -> Result<String, JsError> {
    modes_json(alpha as i64, beta as i64, delta as i64, lambda).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bound_state_profile(
    case: &str,
    alpha: i32,
    beta: i32,
    delta: i32,
    lambda: f64,
) -> Result<String, JsError> {
    profile_json(case, alpha as i64, beta as i64, delta as i64, lambda, 12)
        .map_err(|e| JsError::new(&e))
}
