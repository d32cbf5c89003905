//! Daubechies scaling filters by spectral factorization.
//!
//! The squared magnitude response of an order-`N` Daubechies filter is
//! `cos^{2N}(w/2) P(sin^2(w/2))` with `P(y) = sum_{k<N} binom(N-1+k, k) y^k`.
//! Each root `y` of `P` maps to a reciprocal pair `z, 1/z` through
//! `y = (2 - z - 1/z) / 4`; keeping the root inside the unit circle gives the
//! extremal-phase filter found in the usual coefficient tables.

use nalgebra::Complex;

use crate::error::{Ar1Error, Result};

type C64 = Complex<f64>;

pub const MAX_ORDER: usize = 10;

/// Orthonormal scaling filter with `2 * order` taps, ordered as in the
/// published Daubechies tables (`h[0]` is the first, small-index tap).
pub fn daubechies_filter(order: usize) -> Result<Vec<f64>> {
    if order == 0 || order > MAX_ORDER {
        return Err(Ar1Error::UnsupportedOrder { order });
    }
    if order == 1 {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        return Ok(vec![c, c]);
    }

    // P(y), ascending powers.
    let p_coeffs: Vec<f64> = (0..order).map(|k| binomial(order - 1 + k, k)).collect();
    let y_roots = polynomial_roots(&p_coeffs);

    // (1 + z)^N * prod (z - z_i), ascending powers in z.
    let mut poly: Vec<C64> = vec![C64::new(1.0, 0.0)];
    for _ in 0..order {
        poly = multiply_linear(&poly, C64::new(1.0, 0.0));
    }
    for y in y_roots {
        // z^2 - (2 - 4y) z + 1 = 0
        let b = C64::new(2.0, 0.0) - y * 4.0;
        let disc = (b * b - C64::new(4.0, 0.0)).sqrt();
        let z1 = (b + disc) * 0.5;
        let z2 = (b - disc) * 0.5;
        let inside = if z1.norm() < z2.norm() { z1 } else { z2 };
        poly = multiply_linear(&poly, -inside);
    }

    let mut h: Vec<f64> = poly.iter().rev().map(|c| c.re).collect();
    let sum: f64 = h.iter().sum();
    let scale = std::f64::consts::SQRT_2 / sum;
    for v in &mut h {
        *v *= scale;
    }
    Ok(h)
}

/// Quadrature-mirror highpass filter `g[k] = (-1)^k h[len - 1 - k]`.
pub fn highpass_from_lowpass(h: &[f64]) -> Vec<f64> {
    let len = h.len();
    (0..len)
        .map(|k| {
            let v = h[len - 1 - k];
            if k % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

// (c_0 + c_1 z + ...) * (z + a)
fn multiply_linear(poly: &[C64], a: C64) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); poly.len() + 1];
    for (i, &c) in poly.iter().enumerate() {
        out[i] += c * a;
        out[i + 1] += c;
    }
    out
}

fn eval_poly(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut value = C64::new(0.0, 0.0);
    let mut deriv = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        deriv = deriv * z + value;
        value = value * z + c;
    }
    (value, deriv)
}

/// Roots of a real polynomial given in ascending powers (Durand-Kerner,
/// followed by a few Newton steps on each root).
fn polynomial_roots(ascending: &[f64]) -> Vec<C64> {
    let degree = ascending.len() - 1;
    let lead = ascending[degree];
    let monic: Vec<C64> = ascending
        .iter()
        .map(|&c| C64::new(c / lead, 0.0))
        .collect();

    let radius = 1.0
        + monic[..degree]
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max);
    // starting points spread on a circle, off the real axis
    let mut roots: Vec<C64> = (0..degree)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / degree as f64 + 0.3;
            C64::from_polar(0.5 * radius, angle)
        })
        .collect();

    for _ in 0..500 {
        let mut max_step = 0.0_f64;
        for i in 0..degree {
            let (value, _) = eval_poly(&monic, roots[i]);
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..degree {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = value / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + roots[i].norm()));
        }
        if max_step < 1e-16 {
            break;
        }
    }

    for root in &mut roots {
        for _ in 0..3 {
            let (value, deriv) = eval_poly(&monic, *root);
            if deriv.norm() == 0.0 {
                break;
            }
            *root -= value / deriv;
        }
    }
    roots
}
