use super::{daubechies_filter, highpass_from_lowpass, WaveletBasisSpec, WaveletCoeffs};
use crate::error::{Ar1Error, Result};

/// Periodic pyramid transform with the filters of one basis precomputed.
#[derive(Debug, Clone)]
pub struct WaveletTransform {
    spec: WaveletBasisSpec,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl WaveletTransform {
    pub fn new(spec: WaveletBasisSpec) -> Result<Self> {
        spec.validate()?;
        let lo = daubechies_filter(spec.order)?;
        let hi = highpass_from_lowpass(&lo);
        Ok(WaveletTransform { spec, lo, hi })
    }

    pub fn spec(&self) -> &WaveletBasisSpec {
        &self.spec
    }

    pub fn forward(&self, samples: &[f64]) -> Result<WaveletCoeffs> {
        let len = self.spec.grid_len();
        let min = 1 << (self.spec.coarse_level + 1);
        if samples.len() != len || !samples.len().is_power_of_two() || samples.len() < min {
            return Err(Ar1Error::BadLength {
                len: samples.len(),
                min: len.max(min),
            });
        }

        let scale = (len as f64).sqrt().recip();
        let mut approx: Vec<f64> = samples.iter().map(|x| x * scale).collect();
        let mut coeffs = WaveletCoeffs::zeros(self.spec);
        let mut next = vec![0.0; len / 2];
        for j in self.spec.levels().rev() {
            let half = approx.len() / 2;
            let detail = coeffs.level_mut(j);
            analysis_step(&approx, &self.lo, &self.hi, &mut next[..half], detail);
            approx.truncate(half);
            approx.copy_from_slice(&next[..half]);
        }
        coeffs.alpha.copy_from_slice(&approx);
        Ok(coeffs)
    }

    pub fn inverse(&self, coeffs: &WaveletCoeffs) -> Result<Vec<f64>> {
        coeffs.validate()?;
        coeffs.same_shape(&self.spec)?;
        let len = self.spec.grid_len();
        let mut approx = coeffs.alpha.clone();
        let mut out = Vec::with_capacity(len);
        for j in self.spec.levels() {
            out.clear();
            out.resize(approx.len() * 2, 0.0);
            synthesis_step(&approx, coeffs.level(j), &self.lo, &self.hi, &mut out);
            std::mem::swap(&mut approx, &mut out);
        }
        let scale = (len as f64).sqrt();
        Ok(approx.into_iter().map(|x| x * scale).collect())
    }
}

fn analysis_step(x: &[f64], lo: &[f64], hi: &[f64], approx: &mut [f64], detail: &mut [f64]) {
    let n = x.len();
    for i in 0..n / 2 {
        let mut a = 0.0;
        let mut d = 0.0;
        for (k, (&h, &g)) in lo.iter().zip(hi).enumerate() {
            let v = x[(2 * i + k) % n];
            a += h * v;
            d += g * v;
        }
        approx[i] = a;
        detail[i] = d;
    }
}

fn synthesis_step(approx: &[f64], detail: &[f64], lo: &[f64], hi: &[f64], out: &mut [f64]) {
    let n = out.len();
    for i in 0..approx.len() {
        let (a, d) = (approx[i], detail[i]);
        for (k, (&h, &g)) in lo.iter().zip(hi).enumerate() {
            out[(2 * i + k) % n] += h * a + g * d;
        }
    }
}

/// Forward transform of grid samples (length `spec.grid_len()`).
pub fn dwt_forward(samples: &[f64], spec: &WaveletBasisSpec) -> Result<WaveletCoeffs> {
    WaveletTransform::new(*spec)?.forward(samples)
}

pub fn dwt_inverse(coeffs: &WaveletCoeffs) -> Result<Vec<f64>> {
    WaveletTransform::new(coeffs.spec)?.inverse(coeffs)
}
