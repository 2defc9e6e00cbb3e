//! Curves for the static demo page in `www/`.
//!
//! Each export returns a [`Curve`]: shared x values and one or two y series.
//! The plain-Rust `*_curve` functions do the work so they can be tested
//! natively; the `#[wasm_bindgen]` wrappers only convert errors.

use hbac_core::collision::{asymptote, iterate_closed_form, CollisionParams};
use hbac_core::spectrum::{analytic_spectrum, log_space, solve_stationarity, sweep_sigma_vs_lambda, SpectrumProblem};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    x: Vec<f64>,
    y: Vec<f64>,
    reference: Vec<f64>,
}

#[wasm_bindgen]
impl Curve {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn y(&self) -> Vec<f64> {
        self.y.clone()
    }

    /// Second series on the same x values; empty when there is none.
    #[wasm_bindgen(getter)]
    pub fn reference(&self) -> Vec<f64> {
        self.reference.clone()
    }
}

impl Curve {
    pub fn points(&self) -> usize {
        self.x.len()
    }

    pub fn ys(&self) -> &[f64] {
        &self.y
    }

    pub fn references(&self) -> &[f64] {
        &self.reference
    }
}

/// Minimal entropy production against lambda for an `n`-mode machine.
/// Points where the solver fails are NaN.
pub fn sigma_vs_lambda_curve(n0: f64, lambda_max: f64, count: usize, n: usize) -> Result<Curve, String> {
    if !(lambda_max > 1.0) || count < 2 || n == 0 {
        return Err("need lambda_max > 1, at least 2 points and at least 1 mode".into());
    }
    let x = log_space(1.0 + (lambda_max - 1.0) * 1e-3, lambda_max, count);
    let y = sweep_sigma_vs_lambda(n0, &x, &[n]).into_iter().map(|c| c.result.map_or(f64::NAN, |s| s.sigma)).collect();
    Ok(Curve { x, y, reference: Vec::new() })
}

/// Optimal machine spectrum `g_j` against `j`, with the large-N trajectory as
/// the reference.
pub fn spectrum_curve(n0: f64, lambda: f64, n: usize) -> Result<Curve, String> {
    let problem = SpectrumProblem::from_occupation(n0, lambda, n).map_err(|e| e.to_string())?;
    let sol = solve_stationarity(&problem).map_err(|e| e.to_string())?;
    let x = (0..=n).map(|j| j as f64).collect();
    Ok(Curve { x, y: sol.g, reference: analytic_spectrum(&problem) })
}

/// Closed-form system occupation over `rounds` p-exchange collisions, with
/// the asymptote as the reference.
pub fn pexchange_curve(p: u32, nbar_s: f64, nbar_m: f64, chi_t: f64, rounds: usize) -> Result<Curve, String> {
    let params = CollisionParams::from_occupations(p, 1.0, chi_t, nbar_s, nbar_m).map_err(|e| e.to_string())?;
    let stride = (rounds / 400).max(1);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for l in (0..=rounds).step_by(stride) {
        x.push(l as f64);
        y.push(iterate_closed_form(&params, l).map_err(|e| e.to_string())?);
    }
    let reference = vec![asymptote(&params); x.len()];
    Ok(Curve { x, y, reference })
}

#[wasm_bindgen]
pub fn sigma_vs_lambda(n0: f64, lambda_max: f64, count: usize, n: usize) -> Result<Curve, JsError> {
    sigma_vs_lambda_curve(n0, lambda_max, count, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn optimal_spectrum(n0: f64, lambda: f64, n: usize) -> Result<Curve, JsError> {
    spectrum_curve(n0, lambda, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn pexchange_cooling(p: u32, nbar_s: f64, nbar_m: f64, chi_t: f64, rounds: usize) -> Result<Curve, JsError> {
    pexchange_curve(p, nbar_s, nbar_m, chi_t, rounds).map_err(|e| JsError::new(&e))
}
