//! Pearson, Spearman and Kendall (tau-b) coefficients.

use crate::error::{Error, Result};
use crate::mapping::LogisticParams;

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationReport {
    pub plcc: f64,
    pub srocc: f64,
    pub krcc: f64,
    /// RMSE of mapped objective against subjective; 0 when unmapped.
    pub rmse: f64,
    pub n: usize,
}

fn check_pairs(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DegenerateInput(format!(
            "paired samples differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min {
        return Err(Error::DegenerateInput(format!(
            "need at least {min} pairs, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite sample".into()));
    }
    Ok(())
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pairs(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; ties share the average of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pairs(x, y, 2)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Kendall tau-b in O(n log n) (Knight's merge-sort count).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pairs(x, y, 2)?;
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |len: usize| (len * len.saturating_sub(1) / 2) as f64;
    let n0 = pairs(n);
    let mut x_ties = 0.0;
    let mut joint_ties = 0.0;
    let (mut run_x, mut run_xy) = (1usize, 1usize);
    for w in idx.windows(2) {
        if x[w[0]] == x[w[1]] {
            run_x += 1;
            if y[w[0]] == y[w[1]] {
                run_xy += 1;
            } else {
                joint_ties += pairs(run_xy);
                run_xy = 1;
            }
        } else {
            x_ties += pairs(run_x);
            joint_ties += pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    x_ties += pairs(run_x);
    joint_ties += pairs(run_xy);

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let swaps = merge_count(&mut ys) as f64;

    let mut y_ties = 0.0;
    let mut run_y = 1usize;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            y_ties += pairs(run_y);
            run_y = 1;
        }
    }
    y_ties += pairs(run_y);

    let denom = ((n0 - x_ties) * (n0 - y_ties)).sqrt();
    if denom == 0.0 {
        return Err(Error::DegenerateInput("zero variance".into()));
    }
    let numer = n0 - x_ties - y_ties + joint_ties - 2.0 * swaps;
    Ok((numer / denom).clamp(-1.0, 1.0))
}

/// Sorts `v` ascending and returns the number of inversions.
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            count += (mid - i) as u64;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    count
}

/// Correlation of objective against subjective scores. With `params`, PLCC
/// and RMSE use the mapped objective values; rank coefficients always use the
/// raw values.
pub fn correlate(
    objective: &[f64],
    subjective: &[f64],
    params: Option<&LogisticParams>,
) -> Result<CorrelationReport> {
    check_pairs(objective, subjective, 3)?;
    let (plcc, rmse) = match params {
        Some(p) => {
            let mapped: Vec<f64> = objective.iter().map(|&q| p.eval(q)).collect();
            let rmse = (mapped
                .iter()
                .zip(subjective)
                .map(|(m, s)| (m - s).powi(2))
                .sum::<f64>()
                / mapped.len() as f64)
                .sqrt();
            (pearson(&mapped, subjective)?, rmse)
        }
        None => (pearson(objective, subjective)?, 0.0),
    };
    Ok(CorrelationReport {
        plcc,
        srocc: spearman(objective, subjective)?,
        krcc: kendall_tau_b(objective, subjective)?,
        rmse,
        n: objective.len(),
    })
}
