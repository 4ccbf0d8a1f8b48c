//! Browser bindings for the interactive demo page in `www/`.
//!
//! Every export returns plain numbers or a JSON string so the page needs no
//! generated type definitions.

use robcal_core::estimator::{irls, robust_weights, IrlsOptions};
use robcal_core::io::bundled_model;
use robcal_core::nalgebra::DVector;
use robcal_core::simulator::{monte_carlo_compare, simulate_measurements, stack_design, sigma_from_ols_residuals, CompareOptions, StudyDesign};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn study(seed: u32, noise_scale: f64) -> Result<(robcal_core::ManipulatorModel, StudyDesign), String> {
    if !(noise_scale > 0.0) || !noise_scale.is_finite() {
        return Err("noise scale must be positive".into());
    }
    let mf = bundled_model();
    let mut design = StudyDesign::kr270(
        mf.compliance.expect("bundled model has compliances"),
        mf.load_marker.expect("bundled model has a load marker"),
    );
    design.noise = design.noise.scaled(noise_scale);
    design.seed = u64::from(seed);
    Ok((mf.model, design))
}

/// Robust weight `σ₀ / (σ₀ + λσ)` sampled at `n` evenly spaced dispersions
/// from 0 to `max_sigma_um` (micrometers).
#[wasm_bindgen]
pub fn robust_weight_curve(sigma0_um: f64, lambda: f64, max_sigma_um: f64, n: usize) -> Result<Vec<f64>, String> {
    if n < 2 || !(max_sigma_um > 0.0) {
        return Err("need at least two samples over a positive range".into());
    }
    let sigma = DVector::from_fn(n, |i, _| max_sigma_um * i as f64 / (n - 1) as f64);
    let w = robust_weights(&sigma, sigma0_um, lambda).map_err(|e| e.to_string())?;
    Ok(w.as_vector().iter().copied().collect())
}

/// Monte Carlo comparison of OLS and WLS on the bundled study with the
/// study's dispersion table multiplied by `noise_scale`. Returns JSON with
/// per-parameter empirical spreads, CI ratios and nesting fractions.
#[wasm_bindgen]
pub fn compare_ols_wls(seed: u32, trials: usize, noise_scale: f64, lambda: f64) -> Result<String, String> {
    let (model, design) = study(seed, noise_scale)?;
    let opts = CompareOptions {
        trials,
        irls: IrlsOptions {
            lambda,
            ..Default::default()
        },
    };
    let r = monte_carlo_compare(&design, &model, &opts).map_err(|e| e.to_string())?;
    let v = |d: &DVector<f64>| d.iter().copied().collect::<Vec<f64>>();
    Ok(json!({
        "parameters": r.param_names,
        "truth": v(&r.truth),
        "ols_std": v(&r.ols.empirical_std),
        "wls_std": v(&r.wls.empirical_std),
        "ols_ci3": v(&r.ols.mean_ci3),
        "wls_ci3": v(&r.wls.mean_ci3),
        "ci_ratio": v(&r.ci_ratio_wls),
        "nested_fraction": v(&r.nested_fraction_wls),
        "failures": r.failures.len(),
    })
    .to_string())
}

/// Runs `max_iter` reweighting passes on one simulated study and returns
/// JSON with every pass's estimates and ±3σ half-widths.
#[wasm_bindgen]
pub fn irls_trace(seed: u32, noise_scale: f64, sigma0_um: f64, lambda: f64, max_iter: usize) -> Result<String, String> {
    let (model, design) = study(seed, noise_scale)?;
    let sigma0 = sigma0_um / 1e6;
    let err = |e: robcal_core::Error| e.to_string();
    let records = simulate_measurements(&design, &model).map_err(err)?;
    let sys = stack_design(&design, &model, &records, sigma0).map_err(err)?;
    let sys = sigma_from_ols_residuals(&sys, sigma0).map_err(err)?;
    let opts = IrlsOptions {
        sigma0,
        lambda,
        max_iter,
        rel_tol: 0.0,
    };
    let res = irls(&sys, &opts).map_err(err)?;
    let passes: Vec<_> = res
        .iterations
        .iter()
        .map(|it| {
            json!({
                "x": it.x_hat.iter().copied().collect::<Vec<f64>>(),
                "ci3": it.ci3.iter().copied().collect::<Vec<f64>>(),
                "max_rel_change": it.max_rel_change,
            })
        })
        .collect();
    Ok(json!({
        "parameters": res.param_names,
        "truth": design.ground_truth.values().iter().copied().collect::<Vec<f64>>(),
        "passes": passes,
        "rank_loss": res.rank_loss,
    })
    .to_string())
}
