//! Monte Carlo orchestration: one independent random stream per
//! `(master_seed, n, replication)`, results sorted before aggregation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{
    assumption_a5_trace, eigen_decay_report, empirical_mse_curve, error_bound_xi,
    exceedance_table, A5Trace, ConsistencyReport, ExceedanceRow, ExperimentResult, MseRow,
    SpectrumMode,
};
use crate::error::Result;
use crate::estimation::{
    fit_estimator, plug_in_predict, prediction_error_b, spectral_gap_a, truncation_order,
    EstimatorState, TruncationRule,
};
use crate::linalg::symmetric_eigen_desc;
use crate::model::{
    covariance_kernel, eigenfunction_on_grid, sample_initial_condition, simulate_trajectory,
    FunctionCoeffs, GridEvaluator, ModelSetup,
};
use crate::wavelet::WaveletTransform;

use super::config::{ExperimentConfig, Initializer};

/// Seed of the stream used by replication `r` at sample size `n`.
pub fn stream_seed(master_seed: u64, n: usize, replication: usize) -> u64 {
    let mut h = splitmix64(master_seed);
    h = splitmix64(h ^ n as u64);
    splitmix64(h ^ (replication as u64).rotate_left(32))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replication_rng(master_seed: u64, n: usize, replication: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master_seed, n, replication))
}

/// Everything derived once from the configuration and shared read-only
/// by all replications.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub setup: ModelSetup,
    /// Spectrum used for the gap quantities when it does not depend on the
    /// sample (`true` and `nominal` modes).
    pub fixed_spectrum: Option<Vec<f64>>,
    pub a5: A5Trace,
    pub evaluator: GridEvaluator,
    pub transform: WaveletTransform,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let setup = ModelSetup::build(config.model, config.noise_psd)?;
        let p = config.model.modes;
        let grid_len = config.model.grid_len;
        let evaluator = if config.spline_mode {
            GridEvaluator::with_coarse_spline(p, grid_len, config.coarse_step)?
        } else {
            GridEvaluator::new(p, grid_len)
        };
        let transform = WaveletTransform::new(config.wavelet)?;

        let (fixed_spectrum, eigenfunctions) = match config.spectrum {
            SpectrumMode::True => {
                let s = setup.model.stationary_covariance()?;
                let (values, vectors) = symmetric_eigen_desc(&s.matrix);
                let fns = (0..p)
                    .map(|j| evaluator.evaluate(&FunctionCoeffs(vectors.column(j).into_owned())))
                    .collect::<Result<Vec<_>>>()?;
                (Some(values.iter().copied().collect()), fns)
            }
            SpectrumMode::Nominal | SpectrumMode::Empirical => {
                let fns = (1..=p).map(|j| eigenfunction_on_grid(j, grid_len)).collect();
                let spectrum = (config.spectrum == SpectrumMode::Nominal)
                    .then(|| setup.covariance.diagonal().iter().copied().collect());
                (spectrum, fns)
            }
        };
        let a5 = assumption_a5_trace(&eigenfunctions, &config.wavelet)?;
        Ok(Prepared {
            setup,
            fixed_spectrum,
            a5,
            evaluator,
            transform,
        })
    }
}

/// The gap quantities need `k_n + 1` eigenvalues, so the retained order is
/// kept at most `p - 1`.
pub fn effective_truncation(n: usize, rule: TruncationRule, modes: usize) -> usize {
    truncation_order(n, rule, modes.saturating_sub(1).max(1))
}

#[derive(Debug, Clone)]
pub struct Replication {
    pub result: ExperimentResult,
    pub state: EstimatorState,
}

pub fn run_replication(
    config: &ExperimentConfig,
    prepared: &Prepared,
    n: usize,
    replication: usize,
) -> Result<Replication> {
    let mut rng = replication_rng(config.master_seed, n, replication);
    let model = &prepared.setup.model;
    let p = config.model.modes;
    let (x0, burn_in) = match config.initializer {
        Initializer::TruncatedGaussian => {
            (sample_initial_condition(&prepared.setup.covariance, &mut rng), 0)
        }
        Initializer::BurnIn => (FunctionCoeffs::zeros(p), config.burn_in),
    };
    let traj = simulate_trajectory(n, model, &config.model, &x0, burn_in, &mut rng)?;
    let k_n = effective_truncation(n, config.truncation_rule, p);
    let state = fit_estimator(&traj, TruncationRule::Fixed(k_n))?;

    let x_n = traj.last();
    let truth = model.rho.apply(&x_n)?;
    let predicted = plug_in_predict(&state, &x_n)?;
    let error_b = prediction_error_b(&truth, &predicted, &prepared.evaluator, &prepared.transform)?;

    let empirical;
    let spectrum: &[f64] = match &prepared.fixed_spectrum {
        Some(s) => s,
        None => {
            empirical = state.eigenvalues.iter().copied().collect::<Vec<_>>();
            &empirical
        }
    };
    let a = spectral_gap_a(spectrum, k_n)?;
    let xi = error_bound_xi(n, k_n, spectrum, &a)?;
    Ok(Replication {
        result: ExperimentResult::new(n, replication, error_b, xi),
        state,
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// Sorted by `(n, replication)`.
    pub results: Vec<ExperimentResult>,
    pub reports: Vec<ConsistencyReport>,
    pub exceedance: Vec<ExceedanceRow>,
    pub mse: Vec<MseRow>,
    /// `(n, j, C_{n,j})` from the first replication at each sample size.
    pub eigen_decay: Vec<(usize, usize, f64)>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let prepared = Prepared::new(config)?;
    let jobs: Vec<(usize, usize)> = config
        .sample_sizes
        .iter()
        .flat_map(|&n| (0..config.replications).map(move |r| (n, r)))
        .collect();

    let run = |&(n, r): &(usize, usize)| -> Result<(usize, usize, ExperimentResult, Option<EstimatorState>)> {
        let rep = run_replication(config, &prepared, n, r)?;
        // only the first replication's state is kept for reporting
        let state = (r == 0).then_some(rep.state);
        Ok((n, r, rep.result, state))
    };

    #[cfg(feature = "parallel")]
    let mut finished: Vec<_> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let mut finished: Vec<_> = jobs.iter().map(run).collect::<Result<Vec<_>>>()?;

    finished.sort_by_key(|&(n, r, _, _)| (n, r));

    let results: Vec<ExperimentResult> = finished.iter().map(|f| f.2).collect();
    let mut reports = Vec::new();
    let mut eigen_decay = Vec::new();
    for (n, _, _, state) in &finished {
        let Some(state) = state else { continue };
        let spectrum: Vec<f64> = match &prepared.fixed_spectrum {
            Some(s) => s.clone(),
            None => state.eigenvalues.iter().copied().collect(),
        };
        reports.push(ConsistencyReport::build(
            *n,
            state.k_n,
            &spectrum,
            config.spectrum,
            &prepared.a5,
            config.model.modes,
            config.wavelet.max_level,
        )?);
        eigen_decay.extend(eigen_decay_report(state).into_iter().map(|(j, c)| (*n, j, c)));
    }

    Ok(ExperimentOutput {
        exceedance: exceedance_table(&results),
        mse: empirical_mse_curve(&results),
        results,
        reports,
        eigen_decay,
    })
}

/// `(s, t, K(s, t))` on a `points x points` midpoint grid, for the
/// covariance kernel of the configured model.
pub fn kernel_surface(config: &ExperimentConfig) -> Result<Vec<(f64, f64, f64)>> {
    config.validate()?;
    let covariance = crate::model::build_covariance(&config.model);
    let k = config.kernel_points;
    let axis: Vec<f64> = (0..k).map(|i| (i as f64 + 0.5) / k as f64).collect();
    Ok(axis
        .iter()
        .flat_map(|&s| axis.iter().map(move |&t| (s, t)))
        .map(|(s, t)| (s, t, covariance_kernel(&covariance, s, t)))
        .collect())
}
