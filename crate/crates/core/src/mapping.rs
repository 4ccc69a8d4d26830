//! Monotone five-parameter logistic mapping from objective metric values to
//! the subjective scale:
//!
//! `Q' = b1 * (1/2 - 1/(1 + exp(b2 * (Q - b3)))) + b4 * Q + b5`
//!
//! The fit holds `b1, b2, b4 >= 0`, which makes the mapping non-decreasing.
//! For fixed `(b2, b3)` the model is linear in `(b1, b4, b5)`, so those are
//! solved exactly by bound-constrained least squares and only `(b2, b3)` are
//! searched with a simplex.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 6;
const MAX_ITERATIONS: usize = 2_000;
const REL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogisticParams {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub b5: f64,
}

impl LogisticParams {
    pub fn new(b: [f64; 5]) -> Self {
        LogisticParams {
            b1: b[0],
            b2: b[1],
            b3: b[2],
            b4: b[3],
            b5: b[4],
        }
    }

    pub fn eval(&self, q: f64) -> f64 {
        self.b1 * sigmoid_term(self.b2, self.b3, q) + self.b4 * q + self.b5
    }

    pub fn is_monotone(&self) -> bool {
        self.b1 * self.b2 >= 0.0 && self.b4 >= 0.0
    }
}

fn sigmoid_term(b2: f64, b3: f64, q: f64) -> f64 {
    0.5 - 1.0 / (1.0 + (b2 * (q - b3)).exp())
}

pub fn fit_logistic5(objective: &[f64], subjective: &[f64]) -> Result<LogisticParams> {
    if objective.len() != subjective.len() {
        return Err(Error::DegenerateInput(
            "objective/subjective lengths differ".into(),
        ));
    }
    if objective.len() < MIN_SAMPLES {
        return Err(Error::DegenerateInput(format!(
            "logistic fit needs at least {MIN_SAMPLES} pairs, got {}",
            objective.len()
        )));
    }
    if objective.iter().chain(subjective).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite sample".into()));
    }
    let (lo, hi) = objective
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if range <= 0.0 {
        return Err(Error::DegenerateInput(
            "objective values are all equal".into(),
        ));
    }

    let objective_fn = |theta: &[f64; 2]| -> f64 {
        let b2 = theta[0].exp();
        linear_part(objective, subjective, b2, theta[1]).1
    };

    let mut sorted = objective.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantile = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos.fract());
        if i + 1 < sorted.len() {
            sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
        } else {
            sorted[i]
        }
    };
    let log_b2 = (4.0 / range).ln();
    let starts = [quantile(0.5), quantile(0.25), quantile(0.75)];

    let mut best: Option<([f64; 2], f64)> = None;
    for b3 in starts {
        let (theta, sse) = nelder_mead(&objective_fn, [log_b2, b3], [1.0, range / 10.0]);
        if best.is_none_or(|(_, s)| sse < s) {
            best = Some((theta, sse));
        }
    }
    let (theta, sse) = best.expect("at least one start");
    if !sse.is_finite() {
        return Err(Error::FitDiverged);
    }
    let b2 = theta[0].exp();
    let (coef, _) = linear_part(objective, subjective, b2, theta[1]);
    let params = LogisticParams {
        b1: coef[0],
        b2,
        b3: theta[1],
        b4: coef[1],
        b5: coef[2],
    };
    if [params.b1, params.b2, params.b3, params.b4, params.b5]
        .iter()
        .any(|v| !v.is_finite())
    {
        return Err(Error::FitDiverged);
    }
    Ok(params)
}

/// Best `(b1, b4, b5)` with `b1, b4 >= 0` for fixed `(b2, b3)`, plus its SSE.
///
/// Enumerates the four faces of the non-negativity constraint; the convex
/// optimum is the best feasible face solution.
fn linear_part(q: &[f64], y: &[f64], b2: f64, b3: f64) -> ([f64; 3], f64) {
    let n = q.len();
    let g: Vec<f64> = q.iter().map(|&v| sigmoid_term(b2, b3, v)).collect();
    let target = DVector::from_column_slice(y);
    let mut best = ([0.0, 0.0, 0.0], f64::INFINITY);
    for (use_g, use_q) in [(true, true), (true, false), (false, true), (false, false)] {
        let mut cols: Vec<&[f64]> = Vec::with_capacity(3);
        if use_g {
            cols.push(&g);
        }
        if use_q {
            cols.push(q);
        }
        let ones = vec![1.0; n];
        cols.push(&ones);
        let a = DMatrix::from_fn(n, cols.len(), |r, c| cols[c][r]);
        let Ok(sol) = a.clone().svd(true, true).solve(&target, 1e-12) else {
            continue;
        };
        let mut it = sol.iter().copied();
        let b1 = if use_g { it.next().unwrap() } else { 0.0 };
        let b4 = if use_q { it.next().unwrap() } else { 0.0 };
        let b5 = it.next().unwrap();
        if b1 < 0.0 || b4 < 0.0 {
            continue;
        }
        let sse = (0..n)
            .map(|i| (y[i] - b1 * g[i] - b4 * q[i] - b5).powi(2))
            .sum::<f64>();
        if sse < best.1 {
            best = ([b1, b4, b5], sse);
        }
    }
    best
}

/// Two-dimensional Nelder-Mead with standard coefficients.
fn nelder_mead(f: &impl Fn(&[f64; 2]) -> f64, x0: [f64; 2], step: [f64; 2]) -> ([f64; 2], f64) {
    let eval = |x: [f64; 2]| {
        let v = f(&x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex = [x0, [x0[0] + step[0], x0[1]], [x0[0], x0[1] + step[1]]];
    let mut values = simplex.map(eval);
    let lerp =
        |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];

    for _ in 0..MAX_ITERATIONS {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);

        let (f_lo, f_hi) = (values[0], values[2]);
        if (f_hi - f_lo).abs() <= REL_TOLERANCE * f_lo.abs() + 1e-30 {
            break;
        }
        let centroid = lerp(simplex[0], simplex[1], 0.5);
        let reflected = lerp(centroid, simplex[2], -1.0);
        let f_r = eval(reflected);
        if f_r < values[0] {
            let expanded = lerp(centroid, simplex[2], -2.0);
            let f_e = eval(expanded);
            if f_e < f_r {
                simplex[2] = expanded;
                values[2] = f_e;
            } else {
                simplex[2] = reflected;
                values[2] = f_r;
            }
        } else if f_r < values[1] {
            simplex[2] = reflected;
            values[2] = f_r;
        } else {
            let (contracted, f_c) = if f_r < values[2] {
                let c = lerp(centroid, reflected, 0.5);
                (c, eval(c))
            } else {
                let c = lerp(centroid, simplex[2], 0.5);
                (c, eval(c))
            };
            if f_c < values[2].min(f_r) {
                simplex[2] = contracted;
                values[2] = f_c;
            } else {
                for i in 1..3 {
                    simplex[i] = lerp(simplex[0], simplex[i], 0.5);
                    values[i] = eval(simplex[i]);
                }
            }
        }
    }
    let best = (0..3)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    (simplex[best], values[best])
}
