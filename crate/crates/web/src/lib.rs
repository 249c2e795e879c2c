//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns a flat `Float64Array`; the plain-Rust functions behind
//! them are usable (and tested) on any target.

use coherence_core::clicks::{click_probabilities, coherence_from_clicks};
use coherence_core::detection::{detect, DetectionParams};
use coherence_core::state::{squeezed_distribution, StateParams, DEFAULT_TAIL_TOL};
use coherence_core::sweep::{evaluate, Pipeline};
use wasm_bindgen::prelude::*;

fn pipeline(click: bool) -> Pipeline {
    if click {
        Pipeline::Click
    } else {
        Pipeline::Ideal
    }
}

fn check_points(points: usize) -> Result<(), String> {
    if !(2..=4000).contains(&points) {
        return Err(format!("points must lie in [2, 4000], got {points}"));
    }
    Ok(())
}

/// g², g³, g⁴ over θ ∈ [0, 2π] as `[θ₀, g2₀, g3₀, g4₀, θ₁, …]`; NaN marks
/// points where the coherence is undefined.
pub fn theta_scan_values(
    r: f64,
    alpha: f64,
    eta: f64,
    gamma: f64,
    click: bool,
    points: usize,
) -> Result<Vec<f64>, String> {
    check_points(points)?;
    let detection = DetectionParams::new(eta, gamma).map_err(|e| e.to_string())?;
    StateParams::new(r, 0.0, alpha).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(points * 4);
    for i in 0..points {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / (points - 1) as f64;
        out.push(theta);
        push_triple(&mut out, pipeline(click), StateParams { r, theta, alpha }, detection);
    }
    Ok(out)
}

/// Same layout as [`theta_scan_values`] over log-spaced α ∈ [alpha_min, alpha_max].
#[allow(clippy::too_many_arguments)]
pub fn alpha_scan_values(
    r: f64,
    theta: f64,
    eta: f64,
    gamma: f64,
    click: bool,
    alpha_min: f64,
    alpha_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    check_points(points)?;
    if !(alpha_min > 0.0 && alpha_max > alpha_min && alpha_max.is_finite()) {
        return Err("need 0 < alpha_min < alpha_max".into());
    }
    let detection = DetectionParams::new(eta, gamma).map_err(|e| e.to_string())?;
    StateParams::new(r, theta, alpha_min).map_err(|e| e.to_string())?;
    let (lo, hi) = (alpha_min.ln(), alpha_max.ln());
    let mut out = Vec::with_capacity(points * 4);
    for i in 0..points {
        let alpha = (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp();
        out.push(alpha);
        push_triple(&mut out, pipeline(click), StateParams { r, theta, alpha }, detection);
    }
    Ok(out)
}

fn push_triple(out: &mut Vec<f64>, pipeline: Pipeline, state: StateParams, detection: DetectionParams) {
    match evaluate(pipeline, &state, &detection, DEFAULT_TAIL_TOL) {
        Ok(e) => out.extend(e.coherence.as_array()),
        Err(_) => out.extend([f64::NAN; 3]),
    }
}

/// `[Γ₀, Γ₁, Γ₂, Γ₃, Γ₄, g2, g3, g4, mean_clicks, mean_photons]` after loss
/// and noise; the coherences are NaN when nothing clicks.
pub fn click_distribution_values(r: f64, theta: f64, alpha: f64, eta: f64, gamma: f64) -> Result<Vec<f64>, String> {
    let state = StateParams::new(r, theta, alpha).map_err(|e| e.to_string())?;
    let detection = DetectionParams::new(eta, gamma).map_err(|e| e.to_string())?;
    let source = squeezed_distribution(&state, DEFAULT_TAIL_TOL).map_err(|e| e.to_string())?;
    let clicks = click_probabilities(&detect(&source, &detection).map_err(|e| e.to_string())?);
    let g = coherence_from_clicks(&clicks)
        .map(|c| c.as_array())
        .unwrap_or([f64::NAN; 3]);
    let mut out = clicks.gamma_click.to_vec();
    out.extend(g);
    out.push(clicks.mean_clicks);
    out.push(state.mean_photons());
    Ok(out)
}

#[wasm_bindgen]
pub fn theta_scan(r: f64, alpha: f64, eta: f64, gamma: f64, click: bool, points: usize) -> Result<Vec<f64>, JsError> {
    theta_scan_values(r, alpha, eta, gamma, click, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn alpha_scan(
    r: f64,
    theta: f64,
    eta: f64,
    gamma: f64,
    click: bool,
    alpha_min: f64,
    alpha_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    alpha_scan_values(r, theta, eta, gamma, click, alpha_min, alpha_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn click_distribution(r: f64, theta: f64, alpha: f64, eta: f64, gamma: f64) -> Result<Vec<f64>, JsError> {
    click_distribution_values(r, theta, alpha, eta, gamma).map_err(|e| JsError::new(&e))
}
