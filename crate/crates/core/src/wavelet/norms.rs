use super::{WaveletBasisSpec, WaveletCoeffs};
use crate::error::{Ar1Error, Result};

/// `B^0_{inf,inf}` norm: the largest coefficient magnitude over `alpha`
/// and every detail level. All prediction errors are reported in this norm.
pub fn besov_sup_norm(coeffs: &WaveletCoeffs) -> f64 {
    coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
}

/// `B^0_{1,1}` norm (the dual of the sup norm): sum of magnitudes.
pub fn besov_l1_norm(coeffs: &WaveletCoeffs) -> f64 {
    coeffs.iter().map(|c| c.abs()).sum()
}

/// Positive weights `t_m` attached to the coefficient functionals, laid out
/// like [`WaveletCoeffs`].
#[derive(Debug, Clone, PartialEq)]
pub struct GelfandWeights {
    pub spec: WaveletBasisSpec,
    pub beta_exponent: f64,
    pub t_alpha: Vec<f64>,
    pub t_beta: Vec<Vec<f64>>,
    pub renormalized: bool,
    /// Sum of the raw weights over the truncated index set, before any
    /// renormalization.
    pub total_mass: f64,
}

impl GelfandWeights {
    pub fn iter(&self) -> impl Iterator<Item = &f64> + '_ {
        self.t_alpha.iter().chain(self.t_beta.iter().flatten())
    }

    pub fn sum(&self) -> f64 {
        self.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.iter().copied().fold(0.0, f64::max)
    }
}

/// Raw weights `t_{J,k} = 2^{-J}` and
/// `t_{j,k} = (2^{2b} - 1) 2^{-2b(1-J)} 2^{-2jb}` for `j = J..=M`, which
/// turn the weighted coefficient norm into the `H^{-b}` norm. With
/// `renormalize` every weight is divided by their total so they sum to one.
pub fn make_gelfand_weights(
    spec: &WaveletBasisSpec,
    beta_exponent: f64,
    renormalize: bool,
) -> Result<GelfandWeights> {
    spec.validate()?;
    if !(beta_exponent > 0.5) || !beta_exponent.is_finite() {
        return Err(Ar1Error::InvalidParameter(format!(
            "weight exponent beta = {beta_exponent} must exceed 1/2"
        )));
    }
    let coarse = spec.coarse_level as f64;
    let two_b = 2.0 * beta_exponent;
    let t_alpha = vec![2f64.powf(-coarse); 1 << spec.coarse_level];
    let level_const = (2f64.powf(two_b) - 1.0) * 2f64.powf(-two_b * (1.0 - coarse));
    let t_beta: Vec<Vec<f64>> = spec
        .levels()
        .map(|j| vec![level_const * 2f64.powf(-two_b * j as f64); 1 << j])
        .collect();

    let total_mass: f64 = t_alpha.iter().chain(t_beta.iter().flatten()).sum();
    let mut weights = GelfandWeights {
        spec: *spec,
        beta_exponent,
        t_alpha,
        t_beta,
        renormalized: renormalize,
        total_mass,
    };
    if renormalize {
        for t in weights
            .t_alpha
            .iter_mut()
            .chain(weights.t_beta.iter_mut().flatten())
        {
            *t /= total_mass;
        }
    }
    Ok(weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// `sqrt(sum t c^2)`, the weak (`H^{-b}`) norm.
    Direct,
    /// `sqrt(sum c^2 / t)`, the strong (`H^{b}`) norm.
    Dual,
    /// Unweighted `l^2`, the `L^2` norm.
    Flat,
}

pub fn weighted_norm(coeffs: &WaveletCoeffs, weights: &GelfandWeights, mode: NormMode) -> Result<f64> {
    coeffs.same_shape(&weights.spec)?;
    let pairs = coeffs.iter().zip(weights.iter());
    let sum: f64 = match mode {
        NormMode::Direct => pairs.map(|(c, t)| t * c * c).sum(),
        NormMode::Dual => pairs.map(|(c, t)| c * c / t).sum(),
        NormMode::Flat => coeffs.iter().map(|c| c * c).sum(),
    };
    Ok(sum.sqrt())
}
