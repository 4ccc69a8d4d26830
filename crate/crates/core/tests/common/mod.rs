//! Independent reference computations shared by the integration suites.
#![allow(dead_code)]

use lambdatune::backend::SyntheticModel;
use lambdatune::bd::bd_rate;
use lambdatune::curves::{RdCurve, RdPoint};
use lambdatune::optimizer::LambdaMultipliers;
use lambdatune::pchip::Pchip;
use rand::Rng;

pub const DENSE_POINTS: usize = 100_000;

/// Strictly increasing rate and quality.
pub fn random_monotone_curve<R: Rng>(rng: &mut R, n: usize) -> RdCurve {
    let mut rate = rng.random_range(100.0..1000.0);
    let mut quality = rng.random_range(25.0..35.0);
    let mut pts = Vec::with_capacity(n);
    for _ in 0..n {
        pts.push(RdPoint::new(rate, quality));
        rate *= rng.random_range(1.3..2.5);
        quality += rng.random_range(0.5..4.0);
    }
    RdCurve::new(pts, "q").unwrap()
}

/// Pair of monotone curves whose quality and log-rate ranges overlap.
pub fn random_pair<R: Rng>(rng: &mut R) -> (RdCurve, RdCurve) {
    loop {
        let a = random_monotone_curve(rng, 5);
        let b = random_monotone_curve(rng, 5);
        let overlap = |lo1: f64, hi1: f64, lo2: f64, hi2: f64| lo1.max(lo2) < hi1.min(hi2);
        let (qa, qb) = (range(a.qualities()), range(b.qualities()));
        let (ra, rb) = (range(a.rates()), range(b.rates()));
        if overlap(qa.0, qa.1, qb.0, qb.1) && overlap(ra.0, ra.1, rb.0, rb.1) {
            return (a, b);
        }
    }
}

pub fn range(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Trapezoid rule on `DENSE_POINTS` intervals.
pub fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let h = (hi - lo) / DENSE_POINTS as f64;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for i in 1..DENSE_POINTS {
        acc += f(lo + h * i as f64);
    }
    acc * h
}

/// Dense-grid BD-rate on already-monotone curves.
pub fn dense_bd_rate(reference: &RdCurve, test: &RdCurve) -> f64 {
    let fit = |c: &RdCurve| {
        let q: Vec<f64> = c.qualities().collect();
        let x: Vec<f64> = c.rates().map(f64::log10).collect();
        Pchip::fit(&q, &x).unwrap()
    };
    let (fr, ft) = (fit(reference), fit(test));
    let lo = fr.domain().0.max(ft.domain().0);
    let hi = fr.domain().1.min(ft.domain().1);
    let diff = trapezoid(|q| ft.eval(q).unwrap() - fr.eval(q).unwrap(), lo, hi);
    (10f64.powf(diff / (hi - lo)) - 1.0) * 100.0
}

pub fn dense_bd_quality(reference: &RdCurve, test: &RdCurve) -> f64 {
    let fit = |c: &RdCurve| {
        let x: Vec<f64> = c.rates().map(f64::log10).collect();
        let q: Vec<f64> = c.qualities().collect();
        Pchip::fit(&x, &q).unwrap()
    };
    let (fr, ft) = (fit(reference), fit(test));
    let lo = fr.domain().0.max(ft.domain().0);
    let hi = fr.domain().1.min(ft.domain().1);
    trapezoid(|x| ft.eval(x).unwrap() - fr.eval(x).unwrap(), lo, hi) / (hi - lo)
}

/// Size of the largest subset with non-decreasing quality, by enumerating
/// every subset.
pub fn brute_force_max_monotone(qualities: &[f64]) -> usize {
    let n = qualities.len();
    let mut best = 0;
    for mask in 0u32..(1 << n) {
        let picked: Vec<f64> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| qualities[i])
            .collect();
        if picked.windows(2).all(|w| w[1] >= w[0]) {
            best = best.max(picked.len());
        }
    }
    best
}

/// Kendall tau-b by counting every pair.
pub fn brute_force_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tx += 1.0;
            } else if dy == 0.0 {
                ty += 1.0;
            } else if dx * dy > 0.0 {
                conc += 1.0;
            } else {
                disc += 1.0;
            }
        }
    }
    (conc - disc) / ((conc + disc + tx) * (conc + disc + ty)).sqrt()
}

pub const SYNTH_QPS: [u8; 5] = [27, 39, 49, 59, 63];

/// BD-rate cost of the synthetic model straight from its closed form.
pub fn synthetic_cost(model: &SyntheticModel, ks: LambdaMultipliers) -> f64 {
    let curve = |ks| {
        RdCurve::new(
            SYNTH_QPS
                .iter()
                .map(|&qp| {
                    let r = model.encode(qp, ks);
                    RdPoint::new(r.rate, r.quality).with_qp(qp)
                })
                .collect(),
            "m",
        )
        .unwrap()
    };
    bd_rate(&curve(LambdaMultipliers::UNIT), &curve(ks), true)
        .map(|r| r.value)
        .unwrap_or(f64::INFINITY)
}

/// Argmin of `f` over an `n x n` grid on `[lo, hi]^2`.
pub fn grid_argmin(
    f: impl Fn(LambdaMultipliers) -> f64,
    lo: (f64, f64),
    hi: (f64, f64),
    n: usize,
) -> (LambdaMultipliers, f64) {
    let mut best = (LambdaMultipliers::UNIT, f64::INFINITY);
    for i in 0..n {
        for j in 0..n {
            let k1 = lo.0 + (hi.0 - lo.0) * i as f64 / (n - 1) as f64;
            let k2 = lo.1 + (hi.1 - lo.1) * j as f64 / (n - 1) as f64;
            let ks = LambdaMultipliers::new(k1, k2);
            let v = f(ks);
            if v < best.1 {
                best = (ks, v);
            }
        }
    }
    best
}

/// 200x200 scan of the bound box, then a second 200x200 scan over the
/// neighbouring coarse cells.
pub fn refined_grid_argmin(
    f: impl Fn(LambdaMultipliers) -> f64 + Copy,
    bounds: (f64, f64),
) -> (LambdaMultipliers, f64) {
    let (coarse, _) = grid_argmin(f, (bounds.0, bounds.0), (bounds.1, bounds.1), 200);
    let cell = (bounds.1 - bounds.0) / 199.0;
    let lo = (
        (coarse.k1 - cell).max(bounds.0),
        (coarse.k2 - cell).max(bounds.0),
    );
    let hi = (
        (coarse.k1 + cell).min(bounds.1),
        (coarse.k2 + cell).min(bounds.1),
    );
    grid_argmin(f, lo, hi, 200)
}
