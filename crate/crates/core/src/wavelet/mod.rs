//! Periodized Daubechies wavelets on a dyadic grid of `[0, 1]` and the
//! sequence norms built from their coefficients.
//!
//! A function sampled at `L = 2^(M+1)` points is mapped to `2^J` scaling
//! coefficients `alpha_{J,k}` and detail levels `beta_{j,k}`, `j = J..=M`.
//! Samples are treated as function values and multiplied by `L^{-1/2}`
//! before the orthonormal pyramid, so coefficients approximate the
//! integrals `<f, phi_{J,k}>` and `<f, psi_{j,k}>`.

mod dwt;
mod filter;
mod norms;

pub use dwt::{dwt_forward, dwt_inverse, WaveletTransform};
pub use filter::{daubechies_filter, highpass_from_lowpass, MAX_ORDER};
pub use norms::{
    besov_l1_norm, besov_sup_norm, make_gelfand_weights, weighted_norm, GelfandWeights, NormMode,
};

use crate::error::{Ar1Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveletBasisSpec {
    /// Number of vanishing moments (filter length is twice this).
    pub order: usize,
    pub coarse_level: u32,
    pub max_level: u32,
    pub boundary: Boundary,
}

impl Default for WaveletBasisSpec {
    fn default() -> Self {
        WaveletBasisSpec {
            order: 10,
            coarse_level: 2,
            max_level: 10,
            boundary: Boundary::Periodic,
        }
    }
}

impl WaveletBasisSpec {
    pub fn new(order: usize, coarse_level: u32, max_level: u32) -> Result<Self> {
        let spec = WaveletBasisSpec {
            order,
            coarse_level,
            max_level,
            boundary: Boundary::Periodic,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Basis whose finest level matches a grid of `grid_len` samples.
    pub fn for_grid(order: usize, coarse_level: u32, grid_len: usize) -> Result<Self> {
        if !grid_len.is_power_of_two() || grid_len < 4 {
            return Err(Ar1Error::BadLength {
                len: grid_len,
                min: 4,
            });
        }
        Self::new(order, coarse_level, grid_len.trailing_zeros() - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order > MAX_ORDER {
            return Err(Ar1Error::UnsupportedOrder { order: self.order });
        }
        if self.coarse_level < 1 {
            return Err(Ar1Error::InvalidBasis(
                "coarse level J must be at least 1".into(),
            ));
        }
        if self.max_level < self.coarse_level {
            return Err(Ar1Error::InvalidBasis(format!(
                "max level M = {} is below coarse level J = {}",
                self.max_level, self.coarse_level
            )));
        }
        if self.max_level >= 30 {
            return Err(Ar1Error::InvalidBasis(format!(
                "max level M = {} is too large",
                self.max_level
            )));
        }
        Ok(())
    }

    pub fn grid_len(&self) -> usize {
        1 << (self.max_level + 1)
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<u32> {
        self.coarse_level..=self.max_level
    }
}

/// Coefficients of one function: `alpha` at the coarse level and one
/// detail vector per level `J..=M` (`beta[i]` is level `J + i`).
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    pub spec: WaveletBasisSpec,
    pub alpha: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
}

impl WaveletCoeffs {
    pub fn zeros(spec: WaveletBasisSpec) -> Self {
        WaveletCoeffs {
            spec,
            alpha: vec![0.0; 1 << spec.coarse_level],
            beta: spec.levels().map(|j| vec![0.0; 1 << j]).collect(),
        }
    }

    /// Detail coefficients at absolute level `j`.
    pub fn level(&self, j: u32) -> &[f64] {
        &self.beta[(j - self.spec.coarse_level) as usize]
    }

    pub fn level_mut(&mut self, j: u32) -> &mut [f64] {
        &mut self.beta[(j - self.spec.coarse_level) as usize]
    }

    pub fn len(&self) -> usize {
        self.alpha.len() + self.beta.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All coefficients, `alpha` first, then levels in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = &f64> + '_ {
        self.alpha.iter().chain(self.beta.iter().flatten())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    pub fn from_flat(spec: WaveletBasisSpec, flat: &[f64]) -> Result<Self> {
        let mut coeffs = WaveletCoeffs::zeros(spec);
        if flat.len() != coeffs.len() {
            return Err(Ar1Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                coeffs.len(),
                flat.len()
            )));
        }
        let (alpha, mut rest) = flat.split_at(coeffs.alpha.len());
        coeffs.alpha.copy_from_slice(alpha);
        for level in &mut coeffs.beta {
            let (head, tail) = rest.split_at(level.len());
            level.copy_from_slice(head);
            rest = tail;
        }
        Ok(coeffs)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.alpha.len() != 1 << self.spec.coarse_level {
            return Err(Ar1Error::ShapeMismatch(format!(
                "alpha has {} entries, expected {}",
                self.alpha.len(),
                1 << self.spec.coarse_level
            )));
        }
        let expected_levels = (self.spec.max_level - self.spec.coarse_level + 1) as usize;
        if self.beta.len() != expected_levels {
            return Err(Ar1Error::ShapeMismatch(format!(
                "{} detail levels, expected {expected_levels}",
                self.beta.len()
            )));
        }
        for (level, j) in self.beta.iter().zip(self.spec.levels()) {
            if level.len() != 1 << j {
                return Err(Ar1Error::ShapeMismatch(format!(
                    "level {j} has {} entries, expected {}",
                    level.len(),
                    1 << j
                )));
            }
        }
        if self.iter().any(|c| !c.is_finite()) {
            return Err(Ar1Error::InvalidParameter(
                "non-finite wavelet coefficient".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn same_shape(&self, other_spec: &WaveletBasisSpec) -> Result<()> {
        if self.spec.coarse_level != other_spec.coarse_level
            || self.spec.max_level != other_spec.max_level
        {
            return Err(Ar1Error::ShapeMismatch(format!(
                "coefficients on levels {}..={} vs weights on levels {}..={}",
                self.spec.coarse_level,
                self.spec.max_level,
                other_spec.coarse_level,
                other_spec.max_level
            )));
        }
        Ok(())
    }
}
