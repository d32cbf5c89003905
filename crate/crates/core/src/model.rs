//! The concrete ARB(1) model: covariance `C = (I - Laplacian)^{-gamma}` on
//! `[0, 1]` with Dirichlet eigenpairs `(pi^2 j^2, sqrt(2) sin(j pi t))`, a
//! banded autocorrelation matrix `rho`, a Gaussian-banded noise covariance,
//! and simulation of `X_n = rho(X_{n-1}) + eps_n` in the first `p` modes.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Ar1Error, Result};
use crate::linalg::{self, symmetric_eigen_desc};
use crate::spline::NaturalCubicSpline;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Exponent of `(I - Laplacian)^{-gamma}`.
    pub gamma: f64,
    pub beta_exponent: f64,
    /// Correlation width `W` of the off-diagonal bands.
    pub width: f64,
    /// Number of retained eigenmodes `p`.
    pub modes: usize,
    pub grid_len: usize,
    pub seed: u64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            gamma: 1.21,
            beta_exponent: 0.6,
            width: 0.4,
            modes: 50,
            grid_len: 2048,
            seed: 1,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_exponent > 0.5) {
            return Err(Ar1Error::InvalidParameter(format!(
                "beta = {} must exceed 1/2",
                self.beta_exponent
            )));
        }
        if !(self.gamma > 2.0 * self.beta_exponent) {
            return Err(Ar1Error::InvalidParameter(format!(
                "gamma = {} must exceed 2 beta = {}",
                self.gamma,
                2.0 * self.beta_exponent
            )));
        }
        if !(self.width > 0.0) || !self.width.is_finite() {
            return Err(Ar1Error::InvalidParameter(format!(
                "correlation width W = {} must be positive",
                self.width
            )));
        }
        if self.modes < 2 {
            return Err(Ar1Error::InvalidParameter(format!(
                "need at least 2 modes, got {}",
                self.modes
            )));
        }
        if !self.grid_len.is_power_of_two() || self.grid_len < 4 {
            return Err(Ar1Error::InvalidParameter(format!(
                "grid length {} is not a power of two >= 4",
                self.grid_len
            )));
        }
        Ok(())
    }
}

/// Coordinates of a function in the model eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionCoeffs(pub DVector<f64>);

impl FunctionCoeffs {
    pub fn zeros(p: usize) -> Self {
        FunctionCoeffs(DVector::zeros(p))
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        FunctionCoeffs(DVector::from_vec(values))
    }

    /// Unit coordinate vector `e_j` (1-based mode index).
    pub fn unit(p: usize, j: usize) -> Self {
        let mut v = DVector::zeros(p);
        v[j - 1] = 1.0;
        FunctionCoeffs(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// Operator matrix with entries `<A(phi_j), phi_h>` in the model basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOperator {
    pub matrix: DMatrix<f64>,
    pub symmetric: bool,
}

impl SpectralOperator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        let symmetric = matrix.is_square() && linalg::max_asymmetry(&matrix) <= 1e-12;
        SpectralOperator { matrix, symmetric }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn diagonal(&self) -> DVector<f64> {
        self.matrix.diagonal()
    }

    pub fn apply(&self, x: &FunctionCoeffs) -> Result<FunctionCoeffs> {
        if x.len() != self.matrix.ncols() {
            return Err(Ar1Error::ShapeMismatch(format!(
                "operator of size {} applied to vector of length {}",
                self.matrix.ncols(),
                x.len()
            )));
        }
        Ok(FunctionCoeffs(&self.matrix * &x.0))
    }
}

/// Realisation `X_0..X_n`, stored column-wise (`p` rows, `n + 1` columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ModelParams,
    pub states: DMatrix<f64>,
}

impl Trajectory {
    pub fn from_states(params: ModelParams, states: Vec<FunctionCoeffs>) -> Result<Self> {
        let p = states.first().map(FunctionCoeffs::len).unwrap_or(0);
        if states.iter().any(|s| s.len() != p) {
            return Err(Ar1Error::ShapeMismatch(
                "trajectory states have different lengths".into(),
            ));
        }
        let columns: Vec<DVector<f64>> = states.into_iter().map(|s| s.0).collect();
        let states = if columns.is_empty() {
            DMatrix::zeros(p, 0)
        } else {
            DMatrix::from_columns(&columns)
        };
        Ok(Trajectory { params, states })
    }

    /// Number of stored states.
    pub fn len(&self) -> usize {
        self.states.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.states.nrows()
    }

    pub fn state(&self, i: usize) -> FunctionCoeffs {
        FunctionCoeffs(self.states.column(i).into_owned())
    }

    pub fn last(&self) -> FunctionCoeffs {
        self.state(self.len() - 1)
    }

    /// The first `count` states.
    pub fn head(&self, count: usize) -> Trajectory {
        Trajectory {
            params: self.params,
            states: self.states.columns(0, count.min(self.len())).into_owned(),
        }
    }
}

/// Eigenvalues `C_j = (1 + pi^2 j^2)^{-gamma}`, `j = 1..=p`, as a diagonal operator.
pub fn build_covariance(params: &ModelParams) -> SpectralOperator {
    let values = DVector::from_iterator(
        params.modes,
        (1..=params.modes).map(|j| covariance_eigenvalue(params.gamma, j)),
    );
    SpectralOperator {
        matrix: DMatrix::from_diagonal(&values),
        symmetric: true,
    }
}

pub fn covariance_eigenvalue(gamma: f64, j: usize) -> f64 {
    let j = j as f64;
    (1.0 + PI * PI * j * j).powf(-gamma)
}

/// Midpoint grid `t_i = (i + 1/2) / L`.
pub fn grid_points(grid_len: usize) -> impl Iterator<Item = f64> {
    (0..grid_len).map(move |i| (i as f64 + 0.5) / grid_len as f64)
}

pub fn eigenfunction(j: usize, t: f64) -> f64 {
    SQRT_2 * (j as f64 * PI * t).sin()
}

/// `sqrt(2) sin(j pi t_i)` on the midpoint grid.
pub fn eigenfunction_on_grid(j: usize, grid_len: usize) -> Vec<f64> {
    grid_points(grid_len).map(|t| eigenfunction(j, t)).collect()
}

/// `rho_{jj} = (1 + j)^{-1.5}`, `rho_{jh} = exp(-|j - h| / W)`.
pub fn build_rho(params: &ModelParams) -> SpectralOperator {
    let p = params.modes;
    let matrix = DMatrix::from_fn(p, p, |r, c| {
        let (j, h) = (r + 1, c + 1);
        if j == h {
            (1.0 + j as f64).powf(-1.5)
        } else {
            (-(j.abs_diff(h) as f64) / params.width).exp()
        }
    });
    SpectralOperator {
        matrix,
        symmetric: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsdPolicy {
    /// Project onto the PSD cone by clipping negative eigenvalues.
    #[default]
    Clip,
    /// Clip only round-off negatives (`>= -1e-10 * ||C_eps||`), otherwise fail.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdRepair {
    pub min_eigenvalue: f64,
    pub clipped_count: usize,
    /// Sum of the magnitudes of the clipped eigenvalues.
    pub clipped_mass: f64,
}

/// `C_eps` with diagonal `C_j (1 - rho_jj^2)` and off-diagonal
/// `exp(-|j - h|^2 / W^2)`, repaired to be positive semi-definite.
pub fn build_noise_covariance(
    params: &ModelParams,
    covariance: &SpectralOperator,
    rho: &SpectralOperator,
    policy: PsdPolicy,
) -> Result<(SpectralOperator, PsdRepair)> {
    let p = params.modes;
    if covariance.dim() != p || rho.dim() != p {
        return Err(Ar1Error::ShapeMismatch(format!(
            "covariance {} / rho {} vs {p} modes",
            covariance.dim(),
            rho.dim()
        )));
    }
    let raw = raw_noise_covariance(params.width, covariance, rho);
    let (matrix, repair) = repair_psd(&raw, policy)?;
    Ok((
        SpectralOperator {
            matrix,
            symmetric: true,
        },
        repair,
    ))
}

/// The noise band exactly as specified, before any PSD repair.
pub fn raw_noise_covariance(width: f64, covariance: &SpectralOperator, rho: &SpectralOperator) -> DMatrix<f64> {
    let p = covariance.dim();
    let c = covariance.diagonal();
    let w2 = width * width;
    DMatrix::from_fn(p, p, |r, col| {
        if r == col {
            c[r] * (1.0 - rho.matrix[(r, r)].powi(2))
        } else {
            let d = r.abs_diff(col) as f64;
            (-d * d / w2).exp()
        }
    })
}

pub(crate) fn repair_psd(raw: &DMatrix<f64>, policy: PsdPolicy) -> Result<(DMatrix<f64>, PsdRepair)> {
    let (values, vectors) = symmetric_eigen_desc(raw);
    let min_eigenvalue = values.min();
    let tolerance = -1e-10 * linalg::spectral_norm(raw);
    let negatives = values.iter().filter(|&&l| l < 0.0);
    let repair = PsdRepair {
        min_eigenvalue,
        clipped_count: negatives.clone().count(),
        clipped_mass: negatives.map(|l| -l).sum(),
    };
    if repair.clipped_count == 0 {
        return Ok((raw.clone(), repair));
    }
    if policy == PsdPolicy::Strict && min_eigenvalue < tolerance {
        return Err(Ar1Error::IndefiniteCovariance {
            min_eigenvalue,
            tolerance,
        });
    }
    let clipped = values.map(|l| l.max(0.0));
    let mut repaired = &vectors * DMatrix::from_diagonal(&clipped) * vectors.transpose();
    // restore exact symmetry lost to rounding
    repaired = (&repaired + repaired.transpose()) * 0.5;
    Ok((repaired, repair))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stationarity {
    pub holds: bool,
    /// First power `j0` with `||rho^{j0}|| < 1` (or the last power tried).
    pub j0: usize,
    pub norm: f64,
}

/// Looks for `j0 <= j0_max` with spectral norm `||rho^{j0}|| < 1`.
pub fn check_stationarity(rho: &SpectralOperator, j0_max: usize) -> Stationarity {
    let mut power = rho.matrix.clone();
    let mut norm = f64::INFINITY;
    for j in 1..=j0_max.max(1) {
        if j > 1 {
            power = &power * &rho.matrix;
        }
        norm = linalg::spectral_norm(&power);
        if norm < 1.0 {
            return Stationarity {
                holds: true,
                j0: j,
                norm,
            };
        }
    }
    Stationarity {
        holds: false,
        j0: j0_max,
        norm,
    }
}

/// Independent `N(0, C_j)` coordinates, each resampled until it lies within
/// three standard deviations, so `||X_0||` is almost surely bounded.
pub fn sample_initial_condition<R: Rng + ?Sized>(covariance: &SpectralOperator, rng: &mut R) -> FunctionCoeffs {
    let c = covariance.diagonal();
    FunctionCoeffs(c.map(|cj| {
        let z = loop {
            let z: f64 = rng.sample(StandardNormal);
            if z.abs() <= 3.0 {
                break z;
            }
        };
        cj.sqrt() * z
    }))
}

/// Autocorrelation plus noise covariance with its precomputed square root.
#[derive(Debug, Clone)]
pub struct ArModel {
    pub rho: SpectralOperator,
    pub noise_covariance: SpectralOperator,
    noise_sqrt: DMatrix<f64>,
}

impl ArModel {
    pub fn new(rho: SpectralOperator, noise_covariance: SpectralOperator) -> Result<Self> {
        if rho.dim() != noise_covariance.dim() || !rho.matrix.is_square() {
            return Err(Ar1Error::ShapeMismatch(format!(
                "rho {:?} vs noise covariance {:?}",
                rho.matrix.shape(),
                noise_covariance.matrix.shape()
            )));
        }
        let asym = linalg::max_asymmetry(&noise_covariance.matrix);
        if asym > 1e-12 {
            return Err(Ar1Error::NotSymmetric { max_asymmetry: asym });
        }
        let noise_sqrt = linalg::psd_sqrt(&noise_covariance.matrix);
        Ok(ArModel {
            rho,
            noise_covariance,
            noise_sqrt,
        })
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// Stationary covariance `S = rho S rho^T + C_eps`.
    pub fn stationary_covariance(&self) -> Result<SpectralOperator> {
        let s = linalg::solve_discrete_lyapunov(&self.rho.matrix, &self.noise_covariance.matrix)?;
        let s = (&s + s.transpose()) * 0.5;
        Ok(SpectralOperator {
            matrix: s,
            symmetric: true,
        })
    }

    /// Lag-one cross-covariance `rho S` of the stationary process.
    pub fn stationary_cross_covariance(&self) -> Result<SpectralOperator> {
        let s = self.stationary_covariance()?;
        Ok(SpectralOperator::new(&self.rho.matrix * s.matrix))
    }

    fn step<R: Rng + ?Sized>(&self, x: &DVector<f64>, z: &mut DVector<f64>, rng: &mut R) -> DVector<f64> {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let mut next = &self.noise_sqrt * &*z;
        next.gemv(1.0, &self.rho.matrix, x, 1.0);
        next
    }
}

/// Iterates `X_k = rho X_{k-1} + eps_k` for `k = 1..=n` after `burn_in`
/// unrecorded steps from `x0`. Returns `n + 1` states.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    n: usize,
    model: &ArModel,
    params: &ModelParams,
    x0: &FunctionCoeffs,
    burn_in: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    if n < 2 {
        return Err(Ar1Error::TooShort { needed: 2, got: n });
    }
    let p = model.dim();
    if x0.len() != p {
        return Err(Ar1Error::ShapeMismatch(format!(
            "initial state of length {} for a {p}-mode model",
            x0.len()
        )));
    }
    let mut z = DVector::zeros(p);
    let mut x = x0.0.clone();
    for _ in 0..burn_in {
        x = model.step(&x, &mut z, rng);
    }
    let mut states = DMatrix::zeros(p, n + 1);
    states.set_column(0, &x);
    for k in 1..=n {
        x = model.step(&x, &mut z, rng);
        states.set_column(k, &x);
    }
    Ok(Trajectory {
        params: *params,
        states,
    })
}

/// Evaluates coefficient vectors on the midpoint grid through a
/// precomputed `L x p` basis matrix.
#[derive(Debug, Clone)]
pub struct GridEvaluator {
    basis: DMatrix<f64>,
}

impl GridEvaluator {
    pub fn new(modes: usize, grid_len: usize) -> Self {
        let points: Vec<f64> = grid_points(grid_len).collect();
        let basis = DMatrix::from_fn(grid_len, modes, |i, j| eigenfunction(j + 1, points[i]));
        GridEvaluator { basis }
    }

    /// Functions are sampled on the coarse nodes `0, h, 2h, ..` (plus 1)
    /// and carried to the fine grid by natural cubic spline interpolation.
    pub fn with_coarse_spline(modes: usize, grid_len: usize, coarse_step: f64) -> Result<Self> {
        if !(coarse_step > 0.0 && coarse_step < 1.0) {
            return Err(Ar1Error::InvalidParameter(format!(
                "coarse step {coarse_step} must lie in (0, 1)"
            )));
        }
        let mut knots: Vec<f64> = (0..)
            .map(|k| k as f64 * coarse_step)
            .take_while(|&t| t < 1.0 - 1e-12)
            .collect();
        knots.push(1.0);
        let points: Vec<f64> = grid_points(grid_len).collect();
        let mut basis = DMatrix::zeros(grid_len, modes);
        for j in 0..modes {
            let node_values: Vec<f64> = knots.iter().map(|&t| eigenfunction(j + 1, t)).collect();
            let spline = NaturalCubicSpline::new(&knots, &node_values)?;
            for (i, &t) in points.iter().enumerate() {
                basis[(i, j)] = spline.eval(t);
            }
        }
        Ok(GridEvaluator { basis })
    }

    pub fn grid_len(&self) -> usize {
        self.basis.nrows()
    }

    pub fn modes(&self) -> usize {
        self.basis.ncols()
    }

    pub fn evaluate(&self, x: &FunctionCoeffs) -> Result<Vec<f64>> {
        if x.len() != self.modes() {
            return Err(Ar1Error::ShapeMismatch(format!(
                "{} coefficients for a {}-mode grid basis",
                x.len(),
                self.modes()
            )));
        }
        Ok((&self.basis * &x.0).data.into())
    }
}

/// `sum_j x_j phi_j(t_i)` on the midpoint grid of length `grid_len`.
pub fn evaluate_on_grid(x: &FunctionCoeffs, grid_len: usize) -> Result<Vec<f64>> {
    if !grid_len.is_power_of_two() {
        return Err(Ar1Error::BadLength {
            len: grid_len,
            min: 1,
        });
    }
    GridEvaluator::new(x.len(), grid_len).evaluate(x)
}

/// Kernel `sum_j C_j phi_j(s) phi_j(t)` of a diagonal covariance operator.
pub fn covariance_kernel(covariance: &SpectralOperator, s: f64, t: f64) -> f64 {
    covariance
        .diagonal()
        .iter()
        .enumerate()
        .map(|(j, c)| c * eigenfunction(j + 1, s) * eigenfunction(j + 1, t))
        .sum()
}

/// Everything needed to simulate the configured model, with the
/// stationarity gate already applied.
#[derive(Debug, Clone)]
pub struct ModelSetup {
    pub params: ModelParams,
    pub covariance: SpectralOperator,
    pub model: ArModel,
    pub repair: PsdRepair,
    pub stationarity: Stationarity,
}

impl ModelSetup {
    pub const DEFAULT_J0_MAX: usize = 10;

    pub fn build(params: ModelParams, policy: PsdPolicy) -> Result<Self> {
        params.validate()?;
        let covariance = build_covariance(&params);
        let rho = build_rho(&params);
        let stationarity = check_stationarity(&rho, Self::DEFAULT_J0_MAX);
        if !stationarity.holds {
            return Err(Ar1Error::NotStationary {
                j0_max: Self::DEFAULT_J0_MAX,
                last_norm: stationarity.norm,
            });
        }
        let (noise, repair) = build_noise_covariance(&params, &covariance, &rho, policy)?;
        let model = ArModel::new(rho, noise)?;
        Ok(ModelSetup {
            params,
            covariance,
            model,
            repair,
            stationarity,
        })
    }
}
