//! Slow, loop-level reference implementations. Nothing here calls into the
//! library's numerical code.
#![allow(dead_code)]

/// Extremal-phase Daubechies scaling filters, as tabulated.
pub fn published_filter(order: usize) -> Vec<f64> {
    match order {
        1 => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
        2 => vec![
            4.82962913144534156107e-01,
            8.36516303737807942476e-01,
            2.24143868042013388875e-01,
            -1.29409522551260369738e-01,
        ],
        4 => vec![
            2.30377813308896506328e-01,
            7.14846570552915672181e-01,
            6.30880767929858921050e-01,
            -2.79837694168598542788e-02,
            -1.87034811719093085891e-01,
            3.08413818355607639854e-02,
            3.28830116668851965556e-02,
            -1.05974017850690317016e-02,
        ],
        10 => vec![
            2.66700579005555542256e-02,
            1.88176800077691497304e-01,
            5.27201188931725628350e-01,
            6.88459039453603538483e-01,
            2.81172343660577472857e-01,
            -2.49846424327315380642e-01,
            -1.95946274377377049891e-01,
            1.27369340335793251873e-01,
            9.30573646035723484049e-02,
            -7.13941471663970816941e-02,
            -2.94575368218758133765e-02,
            3.32126740593410019198e-02,
            3.60655356695616970131e-03,
            -1.07331754833305745289e-02,
            1.39535174705290106363e-03,
            1.99240529518505612994e-03,
            -6.85856694959711618576e-04,
            -1.16466855129285448982e-04,
            9.35886703200695919220e-05,
            -1.32642028945212442831e-05,
        ],
        _ => panic!("no published table for order {order}"),
    }
}

/// Grid vectors of every basis function, in coefficient order: the `2^J`
/// scaling functions, then the wavelets of levels `J..=M`. Each is cascaded
/// from a unit impulse by periodic upsampling and filtering up to length
/// `L = 2^(M+1)`.
pub fn cascade_basis(order: usize, coarse: u32, max: u32) -> Vec<Vec<f64>> {
    let h = published_filter(order);
    let g: Vec<f64> = (0..h.len())
        .map(|k| if k % 2 == 0 { h[h.len() - 1 - k] } else { -h[h.len() - 1 - k] })
        .collect();
    let len = 1usize << (max + 1);

    let lift = |mut v: Vec<f64>| -> Vec<f64> {
        while v.len() < len {
            let m = v.len() * 2;
            let mut w = vec![0.0; m];
            for (i, &vi) in v.iter().enumerate() {
                for (k, &hk) in h.iter().enumerate() {
                    w[(2 * i + k) % m] += hk * vi;
                }
            }
            v = w;
        }
        v
    };
    let seed = |filter: &[f64], level: u32, pos: usize| -> Vec<f64> {
        let m = 1usize << (level + 1);
        let mut v = vec![0.0; m];
        for (k, &f) in filter.iter().enumerate() {
            v[(2 * pos + k) % m] += f;
        }
        v
    };

    let mut basis = Vec::new();
    for k in 0..(1usize << coarse) {
        // scaling function at level J: lowpass seed one level up
        basis.push(lift(seed(&h, coarse, k)));
    }
    for j in coarse..=max {
        for k in 0..(1usize << j) {
            basis.push(lift(seed(&g, j, k)));
        }
    }
    basis
}

/// Coefficients by direct inner products with the cascaded basis.
pub fn oracle_coeffs(samples: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let scale = 1.0 / (samples.len() as f64).sqrt();
    basis
        .iter()
        .map(|b| b.iter().zip(samples).map(|(x, y)| x * y).sum::<f64>() * scale)
        .collect()
}

/// `(sup, l1, l2)` of the coefficient sequence.
pub fn oracle_norms(samples: &[f64], basis: &[Vec<f64>]) -> (f64, f64, f64) {
    let c = oracle_coeffs(samples, basis);
    let sup = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let l1 = c.iter().map(|v| v.abs()).sum();
    let l2 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    (sup, l1, l2)
}

/// Cyclic Jacobi rotations; returns eigenvalues (descending) and the
/// eigenvectors as rows.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[i][j] * m[i][j];
                }
            }
        }
        let scale: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| m[y][y].partial_cmp(&m[x][x]).unwrap());
    let values = idx.iter().map(|&i| m[i][i]).collect();
    let vectors = idx
        .iter()
        .map(|&i| (0..n).map(|r| v[r][i]).collect())
        .collect();
    (values, vectors)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Covariance of the regressors `X_0..X_{n-1}` and lag cross-covariance
/// over all `n` pairs, both with `1/n`, by explicit sums.
pub fn oracle_moments(states: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = states.len() - 1;
    let p = states[0].len();
    let mut c = vec![vec![0.0; p]; p];
    let mut d = vec![vec![0.0; p]; p];
    for i in 0..n {
        for a in 0..p {
            for b in 0..p {
                c[a][b] += states[i][a] * states[i][b] / n as f64;
                d[a][b] += states[i + 1][a] * states[i][b] / n as f64;
            }
        }
    }
    (c, d)
}

/// `rho(x) = sum_{j<=k} (1/C_{n,j}) <x, phi_j> Pi D phi_j` as a matrix,
/// summed term by term.
pub fn oracle_estimator(states: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let p = states[0].len();
    let (c, d) = oracle_moments(states);
    let (values, vectors) = jacobi_eigen(&c);
    let apply_d = |x: &[f64]| -> Vec<f64> { (0..p).map(|a| dot(&d[a], x)).collect() };
    let mut out = vec![vec![0.0; p]; p];
    for j in 0..k {
        let dphi = apply_d(&vectors[j]);
        // Pi D phi_j
        let mut proj = vec![0.0; p];
        for l in 0..k {
            let w = dot(&dphi, &vectors[l]);
            for a in 0..p {
                proj[a] += w * vectors[l][a];
            }
        }
        for a in 0..p {
            for b in 0..p {
                out[a][b] += proj[a] * vectors[j][b] / values[j];
            }
        }
    }
    out
}
