//! WebAssembly bindings for the browser demo. Each exported function has a
//! plain-Rust twin (`*_impl`) so the logic is testable off the browser.

use banach_ar1::diagnostics::error_bound_xi;
use banach_ar1::error::Ar1Error;
use banach_ar1::estimation::{
    fit_estimator, plug_in_predict, prediction_error_b, spectral_gap_a, TruncationRule,
};
use banach_ar1::harness::{effective_truncation, replication_rng};
use banach_ar1::linalg::symmetric_eigen_desc;
use banach_ar1::model::{
    eigenfunction_on_grid, sample_initial_condition, simulate_trajectory, GridEvaluator,
    ModelParams, ModelSetup, PsdPolicy,
};
use banach_ar1::wavelet::{
    besov_l1_norm, besov_sup_norm, make_gelfand_weights, weighted_norm, NormMode,
    WaveletBasisSpec, WaveletTransform,
};
use wasm_bindgen::prelude::*;

const COARSE_LEVEL: u32 = 2;

fn setup(modes: usize, grid_len: usize, seed: u64) -> Result<(ModelParams, ModelSetup), Ar1Error> {
    let params = ModelParams {
        modes,
        grid_len,
        seed,
        ..ModelParams::default()
    };
    let setup = ModelSetup::build(params, PsdPolicy::Clip)?;
    Ok((params, setup))
}

/// The last `curves` states of a simulated path on the grid, concatenated
/// (`curves * grid_len` values, oldest first).
pub fn simulate_curves_impl(
    modes: usize,
    n: usize,
    curves: usize,
    grid_len: usize,
    seed: u64,
) -> Result<Vec<f64>, Ar1Error> {
    let (params, setup) = setup(modes, grid_len, seed)?;
    let mut rng = replication_rng(seed, n, 0);
    let x0 = sample_initial_condition(&setup.covariance, &mut rng);
    let traj = simulate_trajectory(n, &setup.model, &params, &x0, 0, &mut rng)?;
    let evaluator = GridEvaluator::new(modes, grid_len);
    let first = traj.len().saturating_sub(curves.max(1));
    let mut out = Vec::with_capacity(curves * grid_len);
    for i in first..traj.len() {
        out.extend(evaluator.evaluate(&traj.state(i))?);
    }
    Ok(out)
}

/// Test signal on the grid: `0` is `sqrt(2) sin(pi t)` mode `mode`, `1` a
/// step at 1/3, `2` a narrow bump at 0.6.
pub fn test_signal(kind: u32, mode: usize, grid_len: usize) -> Vec<f64> {
    let t = |i: usize| (i as f64 + 0.5) / grid_len as f64;
    match kind {
        1 => (0..grid_len).map(|i| if t(i) < 1.0 / 3.0 { 1.0 } else { -0.5 }).collect(),
        2 => (0..grid_len)
            .map(|i| (-((t(i) - 0.6) / 0.02).powi(2)).exp())
            .collect(),
        _ => eigenfunction_on_grid(mode.max(1), grid_len),
    }
}

/// `[sup, l1, l2, direct, dual, max |beta_j| for each level J..=M]` of a
/// signal's wavelet coefficients.
pub fn wavelet_norms_impl(samples: &[f64], order: usize, beta: f64) -> Result<Vec<f64>, Ar1Error> {
    let spec = WaveletBasisSpec::for_grid(order, COARSE_LEVEL, samples.len())?;
    let coeffs = WaveletTransform::new(spec)?.forward(samples)?;
    let weights = make_gelfand_weights(&spec, beta, true)?;
    let mut out = vec![
        besov_sup_norm(&coeffs),
        besov_l1_norm(&coeffs),
        weighted_norm(&coeffs, &weights, NormMode::Flat)?,
        weighted_norm(&coeffs, &weights, NormMode::Direct)?,
        weighted_norm(&coeffs, &weights, NormMode::Dual)?,
    ];
    out.extend(
        spec.levels()
            .map(|j| coeffs.level(j).iter().fold(0.0_f64, |m, c| m.max(c.abs()))),
    );
    Ok(out)
}

/// Fits the estimator on a fresh path of length `n` and forecasts the next
/// state. Returns `[k_n, error_B, xi, truth on grid.., prediction on grid..]`.
pub fn fit_and_predict_impl(modes: usize, n: usize, grid_len: usize, seed: u64) -> Result<Vec<f64>, Ar1Error> {
    let (params, setup) = setup(modes, grid_len, seed)?;
    let mut rng = replication_rng(seed, n, 1);
    let x0 = sample_initial_condition(&setup.covariance, &mut rng);
    let traj = simulate_trajectory(n, &setup.model, &params, &x0, 0, &mut rng)?;
    let k_n = effective_truncation(n, TruncationRule::LogCeil, modes);
    let state = fit_estimator(&traj, TruncationRule::Fixed(k_n))?;
    let x_n = traj.last();
    let truth = setup.model.rho.apply(&x_n)?;
    let predicted = plug_in_predict(&state, &x_n)?;

    let evaluator = GridEvaluator::new(modes, grid_len);
    let transform = WaveletTransform::new(WaveletBasisSpec::for_grid(10, COARSE_LEVEL, grid_len)?)?;
    let error_b = prediction_error_b(&truth, &predicted, &evaluator, &transform)?;
    let stationary = setup.model.stationary_covariance()?;
    let (values, _) = symmetric_eigen_desc(&stationary.matrix);
    let values: Vec<f64> = values.iter().copied().collect();
    let a = spectral_gap_a(&values, k_n)?;
    let xi = error_bound_xi(n, k_n, &values, &a)?;

    let mut out = vec![k_n as f64, error_b, xi];
    out.extend(evaluator.evaluate(&truth)?);
    out.extend(evaluator.evaluate(&predicted)?);
    Ok(out)
}

fn js(e: Ar1Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn simulate_curves(modes: usize, n: usize, curves: usize, grid_len: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    simulate_curves_impl(modes, n, curves, grid_len, seed).map_err(js)
}

#[wasm_bindgen]
pub fn signal(kind: u32, mode: usize, grid_len: usize) -> Vec<f64> {
    test_signal(kind, mode, grid_len)
}

#[wasm_bindgen]
pub fn wavelet_norms(samples: &[f64], order: usize, beta: f64) -> Result<Vec<f64>, JsError> {
    wavelet_norms_impl(samples, order, beta).map_err(js)
}

#[wasm_bindgen]
pub fn fit_and_predict(modes: usize, n: usize, grid_len: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    fit_and_predict_impl(modes, n, grid_len, seed).map_err(js)
}
