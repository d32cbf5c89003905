//! Dense helpers on top of nalgebra shared by the model and the estimator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Ar1Error, Result};

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Symmetric eigendecomposition with eigenvalues sorted non-increasing.
/// Each eigenvector is signed so that its largest-magnitude entry is
/// positive, which makes the output reproducible across call sites.
pub fn symmetric_eigen_desc(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        canonical_sign(&mut v);
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

pub(crate) fn canonical_sign(v: &mut DVector<f64>) {
    let pivot = v.iter().copied().fold(0.0_f64, |best, x| {
        if x.abs() > best.abs() {
            x
        } else {
            best
        }
    });
    if pivot < 0.0 {
        v.neg_mut();
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Symmetric square root `V diag(sqrt(max(l, 0))) V^T` of a PSD matrix.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (values, vectors) = symmetric_eigen_desc(m);
    let roots = values.map(|l| l.max(0.0).sqrt());
    &vectors * DMatrix::from_diagonal(&roots) * vectors.transpose()
}

/// Stationary covariance `S = A S A^T + Q` by the doubling recursion
/// `S <- S + A S A^T`, `A <- A^2`. Requires spectral radius of `A` below one.
pub fn solve_discrete_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() || q.shape() != a.shape() {
        return Err(Ar1Error::ShapeMismatch(format!(
            "Lyapunov equation with A {:?} and Q {:?}",
            a.shape(),
            q.shape()
        )));
    }
    let mut power = a.clone();
    let mut sum = q.clone();
    for _ in 0..64 {
        let increment = &power * &sum * power.transpose();
        let inc_norm = increment.norm();
        sum += increment;
        power = &power * &power;
        let sum_norm = sum.norm();
        if !inc_norm.is_finite() || !sum_norm.is_finite() {
            break;
        }
        if inc_norm <= 1e-17 * sum_norm.max(f64::MIN_POSITIVE) {
            return Ok(sum);
        }
    }
    Err(Ar1Error::InvalidParameter(
        "Lyapunov doubling did not converge; the recursion is not stable".into(),
    ))
}
