//! Alternating maximum-likelihood recovery of the observation model
//! `u[e][s] = psi[e] + delta[s] + nu[s] * Z`.

use std::f64::consts::PI;

use super::ScoreMatrix;
use crate::error::{Error, Result};

/// Lower bound on a subject's inconsistency, in score units.
pub const NU_FLOOR: f64 = 0.1;
pub const MAX_SWEEPS: usize = 10_000;
const TOLERANCE: f64 = 1e-8;
const Z_95: f64 = 1.96;

/// Named solver presets. Both run the same alternating solver; the name is
/// carried through to the outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecoveryMethod {
    P910,
    P913,
}

impl RecoveryMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RecoveryMethod::P910 => "p910",
            RecoveryMethod::P913 => "p913",
        }
    }
}

impl std::str::FromStr for RecoveryMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p910" => Ok(RecoveryMethod::P910),
            "p913" => Ok(RecoveryMethod::P913),
            other => Err(Error::invalid(format!("unknown recovery method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubjectModel {
    pub method: RecoveryMethod,
    /// Recovered quality per stimulus.
    pub psi: Vec<f64>,
    /// Per-stimulus 95% half-width.
    pub ci95: Vec<f64>,
    /// Per-subject bias; sums to zero.
    pub delta: Vec<f64>,
    /// Per-subject inconsistency (standard deviation).
    pub nu: Vec<f64>,
    pub loglik: f64,
    /// Log-likelihood after initialisation and after every sweep.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct RecoveryOptions {
    pub method: RecoveryMethod,
    /// Constrain all subjects to one pooled inconsistency.
    pub shared_nu: bool,
    pub max_sweeps: usize,
    pub tolerance: f64,
}

impl RecoveryOptions {
    pub fn new(method: RecoveryMethod) -> Self {
        RecoveryOptions {
            method,
            shared_nu: false,
            max_sweeps: MAX_SWEEPS,
            tolerance: TOLERANCE,
        }
    }
}

pub fn recover_mle(matrix: &ScoreMatrix, method: RecoveryMethod) -> Result<SubjectModel> {
    recover_mle_with(matrix, &RecoveryOptions::new(method))
}

pub fn recover_mle_with(matrix: &ScoreMatrix, opts: &RecoveryOptions) -> Result<SubjectModel> {
    let ns = matrix.n_subjects();
    let ne = matrix.n_stimuli();
    for s in 0..ns {
        if matrix.row(s).count() < 2 {
            return Err(Error::invalid(format!(
                "subject `{}` needs at least 2 scores for recovery",
                matrix.subjects()[s]
            )));
        }
    }
    let rows: Vec<Vec<(usize, f64)>> = (0..ns).map(|s| matrix.row(s).collect()).collect();
    let cols: Vec<Vec<(usize, f64)>> = (0..ne).map(|e| matrix.column(e).collect()).collect();

    let mut psi: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|(_, v)| v).sum::<f64>() / c.len() as f64)
        .collect();
    let mut delta = vec![0.0; ns];
    update_delta(&rows, &psi, &mut delta);
    recenter(&mut delta, &mut psi);
    let mut nu = vec![0.0; ns];
    update_nu(&rows, &psi, &delta, &mut nu, opts.shared_nu);

    let mut trace = vec![log_likelihood(&rows, &psi, &delta, &nu)];
    let mut sweeps = 0;
    loop {
        if sweeps == opts.max_sweeps {
            return Err(Error::NonConvergence(sweeps));
        }
        sweeps += 1;
        let (old_psi, old_delta, old_nu) = (psi.clone(), delta.clone(), nu.clone());

        for (e, col) in cols.iter().enumerate() {
            let (num, den) = col.iter().fold((0.0, 0.0), |(num, den), &(s, u)| {
                let w = 1.0 / (nu[s] * nu[s]);
                (num + w * (u - delta[s]), den + w)
            });
            psi[e] = num / den;
        }
        update_delta(&rows, &psi, &mut delta);
        recenter(&mut delta, &mut psi);
        update_nu(&rows, &psi, &delta, &mut nu, opts.shared_nu);
        trace.push(log_likelihood(&rows, &psi, &delta, &nu));

        let change = max_abs_diff(&psi, &old_psi)
            .max(max_abs_diff(&delta, &old_delta))
            .max(max_abs_diff(&nu, &old_nu));
        if change < opts.tolerance {
            break;
        }
    }

    let ci95 = cols
        .iter()
        .map(|c| {
            Z_95 / c
                .iter()
                .map(|&(s, _)| 1.0 / (nu[s] * nu[s]))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(SubjectModel {
        method: opts.method,
        psi,
        ci95,
        delta,
        nu,
        loglik: *trace.last().unwrap(),
        loglik_trace: trace,
        iterations: sweeps,
    })
}

fn update_delta(rows: &[Vec<(usize, f64)>], psi: &[f64], delta: &mut [f64]) {
    for (s, row) in rows.iter().enumerate() {
        delta[s] = row.iter().map(|&(e, u)| u - psi[e]).sum::<f64>() / row.len() as f64;
    }
}

/// Shift biases to zero mean; psi absorbs the shift so every psi + delta is
/// unchanged.
fn recenter(delta: &mut [f64], psi: &mut [f64]) {
    let c = delta.iter().sum::<f64>() / delta.len() as f64;
    delta.iter_mut().for_each(|d| *d -= c);
    psi.iter_mut().for_each(|p| *p += c);
}

fn update_nu(rows: &[Vec<(usize, f64)>], psi: &[f64], delta: &[f64], nu: &mut [f64], shared: bool) {
    let sq = |s: usize, row: &[(usize, f64)]| -> f64 {
        row.iter()
            .map(|&(e, u)| (u - psi[e] - delta[s]).powi(2))
            .sum::<f64>()
    };
    if shared {
        let (total, count) = rows
            .iter()
            .enumerate()
            .fold((0.0, 0usize), |(t, c), (s, row)| {
                (t + sq(s, row), c + row.len())
            });
        let pooled = (total / count as f64).sqrt().max(NU_FLOOR);
        nu.iter_mut().for_each(|n| *n = pooled);
    } else {
        for (s, row) in rows.iter().enumerate() {
            nu[s] = (sq(s, row) / row.len() as f64).sqrt().max(NU_FLOOR);
        }
    }
}

fn log_likelihood(rows: &[Vec<(usize, f64)>], psi: &[f64], delta: &[f64], nu: &[f64]) -> f64 {
    rows.iter()
        .enumerate()
        .map(|(s, row)| {
            let var = nu[s] * nu[s];
            row.iter()
                .map(|&(e, u)| {
                    let r = u - psi[e] - delta[s];
                    -0.5 * (2.0 * PI * var).ln() - r * r / (2.0 * var)
                })
                .sum::<f64>()
        })
        .sum()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
