//! Empirical covariance operators, their eigendecomposition, and the
//! truncated componentwise estimator of the autocorrelation operator.
//!
//! All inner products are taken in model-basis coordinates, which are
//! orthonormal for the geometry the estimator works in. Wavelet norms are
//! only used to report errors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Ar1Error, Result};
use crate::linalg::{self, canonical_sign, symmetric_eigen_desc};
use crate::model::{FunctionCoeffs, GridEvaluator, SpectralOperator, Trajectory};
use crate::wavelet::{besov_sup_norm, WaveletBasisSpec, WaveletTransform};

/// Relative gap below which two consecutive eigenvalues are reported as
/// (nearly) degenerate.
pub const DEGENERATE_REL_GAP: f64 = 1e-8;
/// Gaps at or below this are rejected by the gap-based quantities.
pub const MIN_GAP: f64 = 1e-12;
/// Retained eigenvalues below this fraction of the largest one are treated
/// as zero when inverting `C_n`.
pub const SINGULAR_REL_TOL: f64 = 1e-14;

/// `C_n = (1/n) sum_{i<n} X_i X_i^T` over every state given.
pub fn empirical_covariance(traj: &Trajectory) -> Result<SpectralOperator> {
    let n = traj.len();
    if n < 2 {
        return Err(Ar1Error::TooShort { needed: 2, got: n });
    }
    let x = &traj.states;
    let mut c = x * x.transpose() / n as f64;
    c = (&c + c.transpose()) * 0.5;
    Ok(SpectralOperator {
        matrix: c,
        symmetric: true,
    })
}

/// `D_n = (1/(n-1)) sum_{i<n-1} X_{i+1} X_i^T` over every state given.
pub fn empirical_cross_covariance(traj: &Trajectory) -> Result<SpectralOperator> {
    let n = traj.len();
    if n < 2 {
        return Err(Ar1Error::TooShort { needed: 2, got: n });
    }
    let x = &traj.states;
    let lagged = x.columns(0, n - 1);
    let leading = x.columns(1, n - 1);
    let d = leading * lagged.transpose() / (n - 1) as f64;
    Ok(SpectralOperator::new(d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Non-increasing eigenvalues.
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors as columns.
    pub vectors: DMatrix<f64>,
    /// Indices `j` (0-based) whose gap to `j + 1` is below
    /// [`DEGENERATE_REL_GAP`] relative to the top eigenvalue.
    pub near_degenerate: Vec<usize>,
}

pub(crate) fn flag_degenerate(values: &DVector<f64>) -> Vec<usize> {
    let top = values.get(0).copied().unwrap_or(0.0).abs();
    if top == 0.0 {
        return Vec::new();
    }
    (0..values.len().saturating_sub(1))
        .filter(|&j| values[j] > 0.0 && (values[j] - values[j + 1]) / top < DEGENERATE_REL_GAP)
        .collect()
}

pub fn eigen_decompose(c_n: &SpectralOperator) -> Result<EigenDecomposition> {
    if !c_n.matrix.is_square() {
        return Err(Ar1Error::ShapeMismatch(format!(
            "eigendecomposition of a {:?} matrix",
            c_n.matrix.shape()
        )));
    }
    let asym = linalg::max_asymmetry(&c_n.matrix);
    let scale = c_n.matrix.abs().max().max(1.0);
    if asym > 1e-12 * scale {
        return Err(Ar1Error::NotSymmetric { max_asymmetry: asym });
    }
    let (values, vectors) = symmetric_eigen_desc(&c_n.matrix);
    let near_degenerate = flag_degenerate(&values);
    Ok(EigenDecomposition {
        values,
        vectors,
        near_degenerate,
    })
}

/// Eigenpairs of `C_n` through the `n x n` Gram matrix `X^T X / n`, for
/// samples with fewer states than modes. Eigenvectors for the zero
/// eigenvalues complete the basis to a full orthonormal `p x p` matrix.
pub fn snapshot_eigen(traj: &Trajectory) -> Result<EigenDecomposition> {
    let n = traj.len();
    if n < 2 {
        return Err(Ar1Error::TooShort { needed: 2, got: n });
    }
    let p = traj.dim();
    let x = &traj.states;
    let gram = x.transpose() * x / n as f64;
    let (mu, u) = symmetric_eigen_desc(&gram);
    let top = mu[0].max(0.0);

    let mut values = DVector::zeros(p);
    let mut vectors = DMatrix::zeros(p, p);
    let mut rank = 0;
    for i in 0..n.min(p) {
        if !(mu[i] > SINGULAR_REL_TOL * top) {
            break;
        }
        let mut v = x * u.column(i) / (n as f64 * mu[i]).sqrt();
        // one re-orthogonalisation pass against earlier columns
        for k in 0..rank {
            let proj = vectors.column(k).dot(&v);
            v -= vectors.column(k) * proj;
        }
        v /= v.norm();
        canonical_sign(&mut v);
        values[rank] = mu[i];
        vectors.set_column(rank, &v);
        rank += 1;
    }

    // complete with the standard basis vectors that survive projection best
    let mut filled = rank;
    while filled < p {
        let mut best: Option<DVector<f64>> = None;
        let mut best_norm = 0.0;
        for e in 0..p {
            let mut v = DVector::zeros(p);
            v[e] = 1.0;
            for _ in 0..2 {
                for k in 0..filled {
                    let proj = vectors.column(k).dot(&v);
                    v -= vectors.column(k) * proj;
                }
            }
            let norm = v.norm();
            if norm > best_norm + 1e-12 {
                best_norm = norm;
                best = Some(v);
            }
        }
        let mut v = best.expect("basis completion always finds a direction") / best_norm;
        canonical_sign(&mut v);
        vectors.set_column(filled, &v);
        filled += 1;
    }

    let near_degenerate = flag_degenerate(&values);
    Ok(EigenDecomposition {
        values,
        vectors,
        near_degenerate,
    })
}

/// Returns `reference` signed to agree with `empirical`: `+reference` when
/// `<empirical, reference> >= 0`, else `-reference`.
pub fn sign_align(empirical: &DVector<f64>, reference: &DVector<f64>) -> Result<DVector<f64>> {
    if empirical.len() != reference.len() {
        return Err(Ar1Error::ShapeMismatch(format!(
            "sign alignment of vectors with lengths {} and {}",
            empirical.len(),
            reference.len()
        )));
    }
    if empirical.dot(reference) >= 0.0 {
        Ok(reference.clone())
    } else {
        Ok(-reference)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationRule {
    /// `k_n = ceil(ln n)`
    LogCeil,
    Fixed(usize),
}

/// Number of retained eigenpairs, clamped to `[1, min(p, n)]`.
pub fn truncation_order(n: usize, rule: TruncationRule, modes: usize) -> usize {
    let raw = match rule {
        TruncationRule::LogCeil => (n.max(1) as f64).ln().ceil() as usize,
        TruncationRule::Fixed(k) => k,
    };
    raw.clamp(1, modes.min(n).max(1))
}

fn check_gaps(values: &[f64], upto: usize) -> Result<()> {
    if values.len() < upto + 1 {
        return Err(Ar1Error::ShapeMismatch(format!(
            "need {} eigenvalues, got {}",
            upto + 1,
            values.len()
        )));
    }
    for j in 0..upto {
        let gap = values[j] - values[j + 1];
        if !(gap > MIN_GAP) {
            return Err(Ar1Error::NonPositiveGap { index: j + 1, gap });
        }
    }
    Ok(())
}

/// `a_1 = 2 sqrt(2) / (C_1 - C_2)` and
/// `a_j = 2 sqrt(2) max(1/(C_{j-1} - C_j), 1/(C_j - C_{j+1}))` for `j = 2..=k`.
pub fn spectral_gap_a(values: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    check_gaps(values, k)?;
    let c = 2.0 * std::f64::consts::SQRT_2;
    Ok((0..k)
        .map(|j| {
            let after = 1.0 / (values[j] - values[j + 1]);
            if j == 0 {
                c * after
            } else {
                c * after.max(1.0 / (values[j - 1] - values[j]))
            }
        })
        .collect())
}

/// `Lambda_k = max_{j <= k} 1 / (C_j - C_{j+1})`.
pub fn lambda_kn(values: &[f64], k_n: usize) -> Result<f64> {
    check_gaps(values, k_n)?;
    Ok((0..k_n)
        .map(|j| 1.0 / (values[j] - values[j + 1]))
        .fold(0.0, f64::max))
}

/// Fitted componentwise estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    /// Number of regressor states `X_0..X_{n-1}`.
    pub n: usize,
    pub k_n: usize,
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// Lag-one cross-covariance in the model basis.
    pub d_matrix: DMatrix<f64>,
    /// Matrix of the estimator in the model basis (rank at most `k_n`).
    pub rho_hat: DMatrix<f64>,
    pub near_degenerate: Vec<usize>,
}

impl EstimatorState {
    pub fn dim(&self) -> usize {
        self.rho_hat.nrows()
    }
}

/// Fits `P D C_n^+ P` on a trajectory `X_0..X_n`: `C_n` is the covariance
/// of the regressors `X_0..X_{n-1}`, `D` the cross-covariance of all `n`
/// lag pairs `(X_i, X_{i+1})`, `P` the projector onto the top `k_n`
/// eigenvectors of `C_n`, and `C_n^+` inverts `C_n` on that span only.
pub fn fit_estimator(traj: &Trajectory, rule: TruncationRule) -> Result<EstimatorState> {
    if traj.len() < 3 {
        return Err(Ar1Error::TooShort {
            needed: 3,
            got: traj.len(),
        });
    }
    let n = traj.len() - 1;
    let p = traj.dim();
    let regressors = traj.head(n);
    let eig = if n < p {
        snapshot_eigen(&regressors)?
    } else {
        eigen_decompose(&empirical_covariance(&regressors)?)?
    };
    let d = empirical_cross_covariance(traj)?.matrix;
    let k_n = truncation_order(n, rule, p);
    fit_from_parts(n, k_n, eig, d)
}

pub(crate) fn fit_from_parts(
    n: usize,
    k_n: usize,
    eig: EigenDecomposition,
    d: DMatrix<f64>,
) -> Result<EstimatorState> {
    let top = eig.values[0];
    let smallest = eig.values[k_n - 1];
    if !(smallest > 0.0) || smallest <= SINGULAR_REL_TOL * top {
        return Err(Ar1Error::SingularCovariance {
            k_n,
            eigenvalue: smallest,
        });
    }
    let basis = eig.vectors.columns(0, k_n);
    let inv = DMatrix::from_diagonal(&eig.values.rows(0, k_n).map(|c| 1.0 / c));
    // P D V_k L^{-1} V_k^T with P = V_k V_k^T
    let projected_d = basis.transpose() * &d * basis;
    let rho_hat = basis * projected_d * inv * basis.transpose();
    Ok(EstimatorState {
        n,
        k_n,
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        d_matrix: d,
        rho_hat,
        near_degenerate: eig.near_degenerate,
    })
}

/// One-step-ahead forecast `rho_hat(X_n)`.
pub fn plug_in_predict(state: &EstimatorState, x_n: &FunctionCoeffs) -> Result<FunctionCoeffs> {
    if x_n.len() != state.dim() {
        return Err(Ar1Error::ShapeMismatch(format!(
            "state of length {} for a {}-mode estimator",
            x_n.len(),
            state.dim()
        )));
    }
    Ok(FunctionCoeffs(&state.rho_hat * &x_n.0))
}

/// `B`-norm (sup of wavelet coefficients) of `truth - predicted`
/// evaluated on the grid.
pub fn prediction_error_b(
    truth: &FunctionCoeffs,
    predicted: &FunctionCoeffs,
    evaluator: &GridEvaluator,
    transform: &WaveletTransform,
) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Ar1Error::ShapeMismatch(format!(
            "truth has {} modes, prediction {}",
            truth.len(),
            predicted.len()
        )));
    }
    let diff = FunctionCoeffs(&truth.0 - &predicted.0);
    let samples = evaluator.evaluate(&diff)?;
    Ok(besov_sup_norm(&transform.forward(&samples)?))
}

/// [`prediction_error_b`] building the grid basis and filters on the fly.
pub fn prediction_error_b_on_grid(
    truth: &FunctionCoeffs,
    predicted: &FunctionCoeffs,
    grid_len: usize,
    spec: &WaveletBasisSpec,
) -> Result<f64> {
    if spec.grid_len() != grid_len {
        return Err(Ar1Error::ShapeMismatch(format!(
            "grid of {grid_len} points for a basis expecting {}",
            spec.grid_len()
        )));
    }
    let evaluator = GridEvaluator::new(truth.len(), grid_len);
    prediction_error_b(truth, predicted, &evaluator, &WaveletTransform::new(*spec)?)
}
