//! Quantities behind the consistency bound, and aggregation of Monte Carlo
//! replications into exceedance tables and error curves.

use std::collections::BTreeMap;

use crate::error::{Ar1Error, Result};
use crate::estimation::{lambda_kn, spectral_gap_a, EstimatorState};
use crate::model::SpectralOperator;
use crate::wavelet::{besov_sup_norm, WaveletBasisSpec, WaveletTransform};

/// Which spectrum the gap quantities were computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumMode {
    /// Eigenvalues of the stationary covariance of the simulated model.
    True,
    /// The prescribed `(1 + pi^2 j^2)^{-gamma}` sequence.
    Nominal,
    /// Eigenvalues of `C_n`.
    Empirical,
}

impl SpectrumMode {
    pub fn label(self) -> &'static str {
        match self {
            SpectrumMode::True => "true",
            SpectrumMode::Nominal => "nominal",
            SpectrumMode::Empirical => "empirical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "true" => Some(SpectrumMode::True),
            "nominal" => Some(SpectrumMode::Nominal),
            "empirical" => Some(SpectrumMode::Empirical),
            _ => None,
        }
    }
}

/// Assumption A5 quantities over the first `p` eigenfunctions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A5Trace {
    /// `sum_j ||phi_j||_H^2`
    pub trace_sum: f64,
    /// `max_m sum_j F_m(phi_j)^2`
    pub n_sup: f64,
    /// `max_j ||phi_j||_B`
    pub v_sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub n: usize,
    pub k_n: usize,
    pub lambda: f64,
    pub a_sum: f64,
    pub ratio: f64,
    pub xi: f64,
    pub trace_check: f64,
    pub n_sup: f64,
    pub v_sup: f64,
    pub mode: SpectrumMode,
    /// Number of modes the sums were truncated at.
    pub modes: usize,
    /// Finest wavelet level the sums were truncated at.
    pub max_level: u32,
}

impl ConsistencyReport {
    pub fn build(
        n: usize,
        k_n: usize,
        spectrum: &[f64],
        mode: SpectrumMode,
        a5: &A5Trace,
        modes: usize,
        max_level: u32,
    ) -> Result<Self> {
        let a = spectral_gap_a(spectrum, k_n)?;
        let report = ConsistencyReport {
            n,
            k_n,
            lambda: lambda_kn(spectrum, k_n)?,
            a_sum: a.iter().sum(),
            ratio: consistency_ratio(n, k_n, spectrum, &a)?,
            xi: error_bound_xi(n, k_n, spectrum, &a)?,
            trace_check: a5.trace_sum,
            n_sup: a5.n_sup,
            v_sup: a5.v_sup,
            mode,
            modes,
            max_level,
        };
        let finite = [
            report.lambda,
            report.a_sum,
            report.ratio,
            report.xi,
            report.trace_check,
            report.n_sup,
            report.v_sup,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Ar1Error::InvalidParameter(format!(
                "non-finite consistency quantity at n = {n}, k_n = {k_n}"
            )));
        }
        Ok(report)
    }
}

/// One replication of the prediction experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentResult {
    pub n: usize,
    pub replication: usize,
    pub error_b: f64,
    pub xi: f64,
    pub exceeded: bool,
    pub squared_error_b: f64,
}

impl ExperimentResult {
    pub fn new(n: usize, replication: usize, error_b: f64, xi: f64) -> Self {
        ExperimentResult {
            n,
            replication,
            error_b,
            xi,
            exceeded: error_b > xi,
            squared_error_b: error_b * error_b,
        }
    }
}

fn bound_numerator(k_n: usize, spectrum: &[f64], a: &[f64]) -> Result<f64> {
    if k_n == 0 {
        return Err(Ar1Error::InvalidParameter("k_n must be at least 1".into()));
    }
    if spectrum.len() < k_n || a.len() < k_n {
        return Err(Ar1Error::ShapeMismatch(format!(
            "k_n = {k_n} with {} eigenvalues and {} gap terms",
            spectrum.len(),
            a.len()
        )));
    }
    let c_k = spectrum[k_n - 1];
    if !(c_k > 0.0) {
        return Err(Ar1Error::SingularCovariance {
            k_n,
            eigenvalue: c_k,
        });
    }
    let a_sum: f64 = a[..k_n].iter().sum();
    Ok(k_n as f64 * a_sum / c_k)
}

/// `(k_n C_{k_n}^{-1} sum_{j<=k_n} a_j) / sqrt(n / ln n)`.
pub fn consistency_ratio(n: usize, k_n: usize, spectrum: &[f64], a: &[f64]) -> Result<f64> {
    consistency_ratio_real(n as f64, k_n, spectrum, a)
}

/// [`consistency_ratio`] for a real-valued sample size.
pub fn consistency_ratio_real(n: f64, k_n: usize, spectrum: &[f64], a: &[f64]) -> Result<f64> {
    if !(n > 1.0) {
        return Err(Ar1Error::InvalidParameter(format!(
            "sample size {n} must exceed 1"
        )));
    }
    Ok(bound_numerator(k_n, spectrum, a)? / (n / n.ln()).sqrt())
}

/// `exp(-n / (C_{k_n}^{-2} k_n^2 (sum a_j)^2))`, kept inside the open
/// interval `(0, 1)` when the exponent under- or overflows.
pub fn error_bound_xi(n: usize, k_n: usize, spectrum: &[f64], a: &[f64]) -> Result<f64> {
    let q = bound_numerator(k_n, spectrum, a)?;
    let xi = (-(n as f64) / (q * q)).exp();
    Ok(xi.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceedanceRow {
    pub n: usize,
    pub total: usize,
    pub exceeded: usize,
    pub proportion: f64,
}

impl ExceedanceRow {
    pub fn fraction(&self) -> String {
        format!("{}/{}", self.exceeded, self.total)
    }
}

/// Per sample size, the share of replications whose error exceeded `xi`.
pub fn exceedance_table(results: &[ExperimentResult]) -> Vec<ExceedanceRow> {
    let mut groups: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for r in results {
        let entry = groups.entry(r.n).or_default();
        entry.0 += 1;
        entry.1 += usize::from(r.exceeded);
    }
    groups
        .into_iter()
        .map(|(n, (total, exceeded))| ExceedanceRow {
            n,
            total,
            exceeded,
            proportion: exceeded as f64 / total as f64,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseRow {
    pub n: usize,
    pub mean_sq_error_b: f64,
    /// `n^{-1/4}`, for visual comparison only.
    pub reference: f64,
}

pub fn empirical_mse_curve(results: &[ExperimentResult]) -> Vec<MseRow> {
    let mut groups: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for r in results {
        let entry = groups.entry(r.n).or_default();
        entry.0 += 1;
        entry.1 += r.squared_error_b;
    }
    groups
        .into_iter()
        .map(|(n, (count, sum))| MseRow {
            n,
            mean_sq_error_b: sum / count as f64,
            reference: (n as f64).powf(-0.25),
        })
        .collect()
}

/// A5 quantities from grid samples of the eigenfunctions, one vector of
/// length `spec.grid_len()` per mode.
pub fn assumption_a5_trace(eigenfunctions: &[Vec<f64>], spec: &WaveletBasisSpec) -> Result<A5Trace> {
    let transform = WaveletTransform::new(*spec)?;
    let mut trace_sum = 0.0;
    let mut v_sup = 0.0_f64;
    let mut per_functional: Vec<f64> = Vec::new();
    for samples in eigenfunctions {
        let coeffs = transform.forward(samples)?;
        if per_functional.is_empty() {
            per_functional = vec![0.0; coeffs.len()];
        }
        for (acc, c) in per_functional.iter_mut().zip(coeffs.iter()) {
            *acc += c * c;
            trace_sum += c * c;
        }
        v_sup = v_sup.max(besov_sup_norm(&coeffs));
    }
    let n_sup = per_functional.iter().copied().fold(0.0, f64::max);
    Ok(A5Trace {
        trace_sum,
        n_sup,
        v_sup,
    })
}

/// `(j, C_{n,j})` for `j = 1..=k_n`.
pub fn eigen_decay_report(state: &EstimatorState) -> Vec<(usize, f64)> {
    state
        .eigenvalues
        .iter()
        .take(state.k_n)
        .enumerate()
        .map(|(j, &c)| (j + 1, c))
        .collect()
}

/// Frobenius norm of `a - b` in the model basis.
pub fn hs_distance(a: &SpectralOperator, b: &SpectralOperator) -> Result<f64> {
    if a.matrix.shape() != b.matrix.shape() {
        return Err(Ar1Error::ShapeMismatch(format!(
            "Hilbert-Schmidt distance between {:?} and {:?}",
            a.matrix.shape(),
            b.matrix.shape()
        )));
    }
    Ok((&a.matrix - &b.matrix).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{covariance_eigenvalue, eigenfunction_on_grid};
    use nalgebra::DMatrix;

    fn nominal(p: usize) -> Vec<f64> {
        (1..=p).map(|j| covariance_eigenvalue(1.21, j)).collect()
    }

    #[test]
    fn ratio_algebra() {
        let spec = [1.0, 0.5, 0.25];
        let a = spectral_gap_a(&spec, 2).unwrap();
        let q = 2.0 * (a[0] + a[1]) / 0.5;
        let e = std::f64::consts::E;
        let r = consistency_ratio_real(e, 2, &spec, &a).unwrap();
        assert!((r - q / e.sqrt()).abs() < 1e-12 * q);
        let n = 1000usize;
        let r1 = consistency_ratio(n, 2, &spec, &a).unwrap();
        let r2 = consistency_ratio(2 * n, 2, &spec, &a).unwrap();
        let nf = n as f64;
        let expected = (nf * (2.0 * nf).ln() / (2.0 * nf * nf.ln())).sqrt();
        assert!((r2 / r1 - expected).abs() < 1e-12);
        assert!(consistency_ratio(1, 2, &spec, &a).is_err());
    }

    #[test]
    fn xi_is_in_open_unit_interval_and_squares() {
        let spec = [1.0, 0.5, 0.25];
        let a = spectral_gap_a(&spec, 1).unwrap();
        let x1 = error_bound_xi(100, 1, &spec, &a).unwrap();
        let x2 = error_bound_xi(200, 1, &spec, &a).unwrap();
        assert!(x1 > 0.0 && x1 < 1.0);
        assert!((x2 - x1 * x1).abs() < 1e-14);
        let tiny = error_bound_xi(1 << 40, 1, &spec, &a).unwrap();
        assert!(tiny > 0.0);
        let s = nominal(30);
        let a = spectral_gap_a(&s, 8).unwrap();
        let near_one = error_bound_xi(2, 8, &s, &a).unwrap();
        assert!(near_one < 1.0);
    }

    #[test]
    fn nominal_xi_golden() {
        let s = nominal(30);
        let a = spectral_gap_a(&s, 8).unwrap();
        let q = bound_numerator(8, &s, &a).unwrap();
        let xi = error_bound_xi(2500, 8, &s, &a).unwrap();
        assert!((xi - (-2500.0 / (q * q)).exp()).abs() < 1e-15);
        assert!(xi > 0.999_999_999 && xi < 1.0);
    }

    #[test]
    fn exceedance_counts() {
        let rows: Vec<ExperimentResult> = (0..12)
            .map(|r| ExperimentResult::new(10, r, if r < 3 { 2.0 } else { 0.5 }, 1.0))
            .collect();
        let t = exceedance_table(&rows);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].proportion, 0.25);
        assert_eq!(t[0].fraction(), "3/12");
        let below: Vec<_> = (0..4).map(|r| ExperimentResult::new(5, r, 0.1, 0.2)).collect();
        assert_eq!(exceedance_table(&below)[0].proportion, 0.0);
        let above: Vec<_> = (0..4).map(|r| ExperimentResult::new(5, r, 0.3, 0.2)).collect();
        assert_eq!(exceedance_table(&above)[0].proportion, 1.0);
        assert!(!ExperimentResult::new(1, 0, 0.2, 0.2).exceeded);
    }

    #[test]
    fn mse_rows() {
        let rows: Vec<_> = (0..5).map(|r| ExperimentResult::new(16, r, 0.3, 0.9)).collect();
        let m = empirical_mse_curve(&rows);
        assert!((m[0].mean_sq_error_b - 0.09).abs() < 1e-15);
        assert_eq!(m[0].reference, 0.5);
    }

    #[test]
    fn a5_trace_properties() {
        let spec = WaveletBasisSpec::new(4, 2, 7).unwrap();
        let fns: Vec<Vec<f64>> = (1..=6).map(|j| eigenfunction_on_grid(j, 256)).collect();
        let one = assumption_a5_trace(&fns[..1], &spec).unwrap();
        let coeffs = crate::wavelet::dwt_forward(&fns[0], &spec).unwrap();
        let flat: f64 = coeffs.iter().map(|c| c * c).sum();
        assert!((one.trace_sum - flat).abs() < 1e-14);
        let mut last = 0.0;
        for p in 1..=6 {
            let t = assumption_a5_trace(&fns[..p], &spec).unwrap();
            assert!(t.trace_sum >= last);
            assert!(t.v_sup.is_finite() && t.v_sup > 0.0);
            assert!(t.n_sup <= t.trace_sum + 1e-15);
            last = t.trace_sum;
        }
        // sqrt(2) sin has unit L^2 norm, and midpoint sampling keeps it
        assert!((one.trace_sum - 1.0).abs() < 1e-3);
    }

    #[test]
    fn hs_distances() {
        let i = SpectralOperator::new(DMatrix::identity(4, 4));
        let z = SpectralOperator::new(DMatrix::zeros(4, 4));
        assert_eq!(hs_distance(&i, &i).unwrap(), 0.0);
        assert_eq!(hs_distance(&i, &z).unwrap(), 2.0);
        assert!(hs_distance(&i, &SpectralOperator::new(DMatrix::zeros(3, 3))).is_err());
    }

    #[test]
    fn report_fields() {
        let s = nominal(20);
        let a5 = A5Trace {
            trace_sum: 1.0,
            n_sup: 0.5,
            v_sup: 0.2,
        };
        let r = ConsistencyReport::build(2500, 8, &s, SpectrumMode::Nominal, &a5, 20, 10).unwrap();
        assert!(r.xi > 0.0 && r.xi < 1.0);
        assert!(r.lambda > 0.0 && r.a_sum > r.lambda);
        assert_eq!(r.mode.label(), "nominal");
        assert!(ConsistencyReport::build(2500, 20, &s, SpectrumMode::Nominal, &a5, 20, 10).is_err());
    }
}
