//! CSV emission for experiment outputs and the estimator-state bundle.
//! Floats are written with `Display`, which round-trips exactly.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::diagnostics::{ConsistencyReport, ExceedanceRow, ExperimentResult, MseRow};
use crate::error::{Ar1Error, Result};
use crate::estimation::{flag_degenerate, EstimatorState};

use super::config::ExperimentConfig;
use super::run::ExperimentOutput;
use super::svg::{LineChart, Series};

fn csv_err(path: &Path, e: csv::Error) -> Ar1Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Ar1Error::io(path, io),
        other => Ar1Error::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Ar1Error::io(path, e))
}

pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()
        .map_err(|e| csv_err(path, e))?;
    Ok((header, rows))
}

fn s<T: ToString>(v: T) -> String {
    v.to_string()
}

pub fn results_rows(results: &[ExperimentResult]) -> impl Iterator<Item = Vec<String>> + '_ {
    results.iter().map(|r| {
        vec![
            s(r.n),
            s(r.replication),
            s(r.error_b),
            s(r.xi),
            s(u8::from(r.exceeded)),
        ]
    })
}

pub fn exceedance_rows(rows: &[ExceedanceRow]) -> impl Iterator<Item = Vec<String>> + '_ {
    rows.iter()
        .map(|r| vec![s(r.n), s(r.total), s(r.exceeded), s(r.proportion)])
}

pub fn mse_rows(rows: &[MseRow]) -> impl Iterator<Item = Vec<String>> + '_ {
    rows.iter()
        .map(|r| vec![s(r.n), s(r.mean_sq_error_b), s(r.reference)])
}

pub fn consistency_rows(rows: &[ConsistencyReport]) -> impl Iterator<Item = Vec<String>> + '_ {
    rows.iter().map(|r| {
        vec![
            s(r.n),
            s(r.k_n),
            s(r.lambda),
            s(r.a_sum),
            s(r.ratio),
            s(r.xi),
            s(r.trace_check),
            s(r.n_sup),
            s(r.v_sup),
            s(r.mode.label()),
        ]
    })
}

pub const RESULTS_HEADER: [&str; 5] = ["n", "replication", "error_B", "xi", "exceeded"];
pub const EXCEEDANCE_HEADER: [&str; 4] = ["n", "total", "exceeded", "proportion"];
pub const MSE_HEADER: [&str; 3] = ["n", "mean_sq_error_B", "ref_n_pow_minus_quarter"];
pub const CONSISTENCY_HEADER: [&str; 10] = [
    "n", "k_n", "lambda_kn", "a_sum", "ratio", "xi", "trace_sum", "N_sup", "V_sup", "mode",
];
pub const EIGEN_DECAY_HEADER: [&str; 3] = ["n", "j", "C_nj"];
pub const KERNEL_HEADER: [&str; 3] = ["s", "t", "value"];

pub fn write_kernel_surface(path: &Path, surface: &[(f64, f64, f64)]) -> Result<()> {
    write_table(
        path,
        &KERNEL_HEADER,
        surface.iter().map(|&(a, b, v)| vec![s(a), s(b), s(v)]),
    )
}

fn run_meta(config: &ExperimentConfig) -> Vec<Vec<String>> {
    let rule = match config.truncation_rule {
        crate::estimation::TruncationRule::LogCeil => "log_ceil".to_string(),
        crate::estimation::TruncationRule::Fixed(k) => format!("fixed:{k}"),
    };
    [
        ("master_seed", s(config.master_seed)),
        ("replications", s(config.replications)),
        ("modes", s(config.model.modes)),
        ("grid_len", s(config.model.grid_len)),
        ("wavelet_order", s(config.wavelet.order)),
        ("coarse_level", s(config.wavelet.coarse_level)),
        ("max_level", s(config.wavelet.max_level)),
        ("gamma", s(config.model.gamma)),
        ("beta", s(config.model.beta_exponent)),
        ("width", s(config.model.width)),
        ("truncation", rule),
        ("spectrum", s(config.spectrum.label())),
        ("spline_mode", s(config.spline_mode)),
    ]
    .into_iter()
    .map(|(k, v)| vec![k.to_string(), v])
    .collect()
}

/// Writes every CSV and SVG of a run into `dir` and returns the paths.
pub fn write_outputs(
    output: &ExperimentOutput,
    config: &ExperimentConfig,
    kernel: &[(f64, f64, f64)],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Ar1Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let path = dir.join(name);
        f(&path)?;
        written.push(path);
        Ok(())
    };

    emit("results.csv", &|p| write_table(p, &RESULTS_HEADER, results_rows(&output.results)))?;
    emit("exceedance_table.csv", &|p| {
        write_table(p, &EXCEEDANCE_HEADER, exceedance_rows(&output.exceedance))
    })?;
    emit("mse_curve.csv", &|p| write_table(p, &MSE_HEADER, mse_rows(&output.mse)))?;
    emit("consistency.csv", &|p| {
        write_table(p, &CONSISTENCY_HEADER, consistency_rows(&output.reports))
    })?;
    emit("eigen_decay.csv", &|p| {
        write_table(
            p,
            &EIGEN_DECAY_HEADER,
            output.eigen_decay.iter().map(|&(n, j, c)| vec![s(n), s(j), s(c)]),
        )
    })?;
    emit("kernel_surface.csv", &|p| write_kernel_surface(p, kernel))?;
    emit("run_meta.csv", &|p| write_table(p, &["key", "value"], run_meta(config)))?;

    let xy = |pts: Vec<(f64, f64)>, name: &str| Series {
        name: name.to_string(),
        points: pts,
    };
    let mse = LineChart {
        title: "Mean squared B-norm prediction error".into(),
        x_label: "n".into(),
        y_label: "mean squared error".into(),
        log_x: true,
        log_y: true,
        series: vec![
            xy(output.mse.iter().map(|r| (r.n as f64, r.mean_sq_error_b)).collect(), "MSE"),
            xy(output.mse.iter().map(|r| (r.n as f64, r.reference)).collect(), "n^(-1/4)"),
        ],
    };
    let exceed = LineChart {
        title: "Share of errors above the bound".into(),
        x_label: "n".into(),
        y_label: "proportion".into(),
        log_x: true,
        log_y: false,
        series: vec![xy(
            output.exceedance.iter().map(|r| (r.n as f64, r.proportion)).collect(),
            "exceedance",
        )],
    };
    let ratio = LineChart {
        title: "Consistency ratio".into(),
        x_label: "n".into(),
        y_label: "ratio".into(),
        log_x: true,
        log_y: true,
        series: vec![xy(
            output.reports.iter().map(|r| (r.n as f64, r.ratio)).collect(),
            "ratio",
        )],
    };
    let decay = LineChart {
        title: "Empirical eigenvalues".into(),
        x_label: "j".into(),
        y_label: "C_nj".into(),
        log_x: false,
        log_y: true,
        series: config
            .sample_sizes
            .iter()
            .map(|&n| {
                xy(
                    output
                        .eigen_decay
                        .iter()
                        .filter(|e| e.0 == n)
                        .map(|&(_, j, c)| (j as f64, c))
                        .collect(),
                    &format!("n = {n}"),
                )
            })
            .collect(),
    };
    for (name, chart) in [
        ("mse_curve.svg", mse),
        ("exceedance.svg", exceed),
        ("consistency_ratio.svg", ratio),
        ("eigen_decay.svg", decay),
    ] {
        emit(name, &|p| fs::write(p, chart.render()).map_err(|e| Ar1Error::io(p, e)))?;
    }
    Ok(written)
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<String>> {
    m.row_iter()
        .map(|row| row.iter().map(|v| s(*v)).collect())
        .collect()
}

fn matrix_header(cols: usize) -> Vec<String> {
    (1..=cols).map(|c| format!("c{c}")).collect()
}

/// Persists a fitted state as `state_meta.csv`, `eigenvalues.csv`,
/// `eigenvectors.csv`, `d_matrix.csv` and `rho_hat.csv` in `dir`.
pub fn write_state_bundle(state: &EstimatorState, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Ar1Error::io(dir, e))?;
    let p = state.dim();
    write_table(
        &dir.join("state_meta.csv"),
        &["key", "value"],
        [
            vec!["n".into(), s(state.n)],
            vec!["k_n".into(), s(state.k_n)],
            vec!["p".into(), s(p)],
        ],
    )?;
    write_table(
        &dir.join("eigenvalues.csv"),
        &["j", "C_nj"],
        state
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(j, v)| vec![s(j + 1), s(v)]),
    )?;
    let header = matrix_header(p);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    for (name, m) in [
        ("eigenvectors.csv", &state.eigenvectors),
        ("d_matrix.csv", &state.d_matrix),
        ("rho_hat.csv", &state.rho_hat),
    ] {
        write_table(&dir.join(name), &header, matrix_rows(m))?;
    }
    Ok(())
}

fn parse_f64(path: &Path, v: &str) -> Result<f64> {
    v.parse().map_err(|_| Ar1Error::Parse {
        path: path.to_path_buf(),
        message: format!("not a number: {v:?}"),
    })
}

fn read_matrix(path: &Path, p: usize) -> Result<DMatrix<f64>> {
    let (_, rows) = read_table(path)?;
    if rows.len() != p || rows.iter().any(|r| r.len() != p) {
        return Err(Ar1Error::Parse {
            path: path.to_path_buf(),
            message: format!("expected a {p} x {p} matrix"),
        });
    }
    let mut m = DMatrix::zeros(p, p);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = parse_f64(path, v)?;
        }
    }
    Ok(m)
}

pub fn read_state_bundle(dir: &Path) -> Result<EstimatorState> {
    let meta_path = dir.join("state_meta.csv");
    let (_, meta) = read_table(&meta_path)?;
    let get = |key: &str| -> Result<usize> {
        meta.iter()
            .find(|r| r.first().map(String::as_str) == Some(key))
            .and_then(|r| r.get(1))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Ar1Error::Parse {
                path: meta_path.clone(),
                message: format!("missing or invalid `{key}`"),
            })
    };
    let (n, k_n, p) = (get("n")?, get("k_n")?, get("p")?);

    let eig_path = dir.join("eigenvalues.csv");
    let (_, eig_rows) = read_table(&eig_path)?;
    if eig_rows.len() != p {
        return Err(Ar1Error::Parse {
            path: eig_path,
            message: format!("expected {p} eigenvalues, found {}", eig_rows.len()),
        });
    }
    let values = eig_rows
        .iter()
        .map(|r| parse_f64(&eig_path, r.get(1).map(String::as_str).unwrap_or("")))
        .collect::<Result<Vec<_>>>()?;
    let eigenvalues = DVector::from_vec(values);
    Ok(EstimatorState {
        n,
        k_n,
        near_degenerate: flag_degenerate(&eigenvalues),
        eigenvalues,
        eigenvectors: read_matrix(&dir.join("eigenvectors.csv"), p)?,
        d_matrix: read_matrix(&dir.join("d_matrix.csv"), p)?,
        rho_hat: read_matrix(&dir.join("rho_hat.csv"), p)?,
    })
}
