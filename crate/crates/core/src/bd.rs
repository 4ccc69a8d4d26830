//! Bjøntegaard delta metrics over PCHIP-interpolated curves.
//!
//! BD-rate integrates log10(rate) as a function of quality over the shared
//! quality interval; BD-quality integrates quality as a function of log10(rate)
//! over the shared log-rate interval. Both integrals are exact piecewise-cubic
//! integrals, so no quadrature tolerance enters the result.

use crate::curves::RdCurve;
use crate::error::{Error, Result};
use crate::pchip::Pchip;

/// Qp labels of the default savings anchors.
pub const DEFAULT_ANCHOR_QPS: [u8; 3] = [27, 39, 59];

#[derive(Clone, Debug, PartialEq)]
pub struct BdResult {
    /// Percent for BD-rate, quality units for BD-quality.
    pub value: f64,
    /// Integration interval on the quality (BD-rate) or log10-rate
    /// (BD-quality) axis.
    pub overlap: (f64, f64),
    pub n_ref: usize,
    pub n_test: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Anchor {
    pub label: String,
    pub quality: f64,
}

impl Anchor {
    pub fn new(label: impl Into<String>, quality: f64) -> Self {
        Anchor {
            label: label.into(),
            quality,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SavingsResult {
    pub per_anchor: Vec<(String, f64)>,
    /// Anchors that fell outside either curve's quality range.
    pub skipped: Vec<String>,
    pub mean: f64,
}

/// Knots for a quality -> log10(rate) fit.
///
/// Equal qualities at different rates keep only the lower-rate point; the
/// higher-rate one buys nothing.
fn log_rate_by_quality(curve: &RdCurve) -> Result<Pchip> {
    let mut qs: Vec<f64> = Vec::with_capacity(curve.len());
    let mut xs: Vec<f64> = Vec::with_capacity(curve.len());
    for p in curve.points() {
        if let Some(&last) = qs.last() {
            if p.quality == last {
                continue;
            }
            if p.quality < last {
                return Err(Error::NonAscendingAbscissae);
            }
        }
        qs.push(p.quality);
        xs.push(p.rate.log10());
    }
    Pchip::fit(&qs, &xs)
}

fn quality_by_log_rate(curve: &RdCurve) -> Result<Pchip> {
    let xs: Vec<f64> = curve.rates().map(f64::log10).collect();
    let qs: Vec<f64> = curve.qualities().collect();
    Pchip::fit(&xs, &qs)
}

fn intersect(a: (f64, f64), b: (f64, f64), axis: &'static str) -> Result<(f64, f64)> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(Error::NoOverlap { axis })
    }
}

/// Average percent rate difference of `test` against `reference` at equal
/// quality. Negative means `test` needs less rate.
pub fn bd_rate(reference: &RdCurve, test: &RdCurve, clean: bool) -> Result<BdResult> {
    let (reference, test) = if clean {
        (reference.enforce_monotone()?, test.enforce_monotone()?)
    } else {
        (reference.clone(), test.clone())
    };
    let fit_ref = log_rate_by_quality(&reference)?;
    let fit_test = log_rate_by_quality(&test)?;
    let (lo, hi) = intersect(fit_ref.domain(), fit_test.domain(), "quality")?;
    let avg = (fit_test.integral(lo, hi)? - fit_ref.integral(lo, hi)?) / (hi - lo);
    Ok(BdResult {
        value: (10f64.powf(avg) - 1.0) * 100.0,
        overlap: (lo, hi),
        n_ref: reference.len(),
        n_test: test.len(),
    })
}

/// Average quality difference (`test` minus `reference`) at equal rate, on
/// the raw curves. Positive means `test` is better.
pub fn bd_quality(reference: &RdCurve, test: &RdCurve) -> Result<BdResult> {
    let fit_ref = quality_by_log_rate(reference)?;
    let fit_test = quality_by_log_rate(test)?;
    let (lo, hi) = intersect(fit_ref.domain(), fit_test.domain(), "log-rate")?;
    let avg = (fit_test.integral(lo, hi)? - fit_ref.integral(lo, hi)?) / (hi - lo);
    Ok(BdResult {
        value: avg,
        overlap: (lo, hi),
        n_ref: reference.len(),
        n_test: test.len(),
    })
}

/// Anchors at the reference curve's qualities for the given qp labels.
/// Labels missing from the curve are left out.
pub fn anchors_at_qps(reference: &RdCurve, qps: &[u8]) -> Vec<Anchor> {
    qps.iter()
        .filter_map(|&qp| {
            reference
                .point_at_qp(qp)
                .map(|p| Anchor::new(format!("QP{qp}"), p.quality))
        })
        .collect()
}

pub fn default_anchors(reference: &RdCurve) -> Vec<Anchor> {
    anchors_at_qps(reference, &DEFAULT_ANCHOR_QPS)
}

/// Percent rate difference at matched quality for each anchor.
///
/// Both curves are cleaned to monotone first. An anchor outside either
/// curve's quality range is skipped and reported; if every anchor is skipped
/// the call fails.
pub fn bitrate_savings(
    reference: &RdCurve,
    test: &RdCurve,
    anchors: &[Anchor],
) -> Result<SavingsResult> {
    let fit_ref = log_rate_by_quality(&reference.enforce_monotone()?)?;
    let fit_test = log_rate_by_quality(&test.enforce_monotone()?)?;

    let mut per_anchor = Vec::with_capacity(anchors.len());
    let mut skipped = Vec::new();
    for anchor in anchors {
        match (fit_ref.eval(anchor.quality), fit_test.eval(anchor.quality)) {
            (Ok(x_ref), Ok(x_test)) => {
                let savings = (10f64.powf(x_test - x_ref) - 1.0) * 100.0;
                per_anchor.push((anchor.label.clone(), savings));
            }
            _ => {
                log::warn!(
                    "anchor {} (quality {}) outside a curve's quality range; skipped",
                    anchor.label,
                    anchor.quality
                );
                skipped.push(anchor.label.clone());
            }
        }
    }
    if per_anchor.is_empty() {
        return Err(Error::NoValidAnchors);
    }
    let mean = per_anchor.iter().map(|(_, v)| v).sum::<f64>() / per_anchor.len() as f64;
    Ok(SavingsResult {
        per_anchor,
        skipped,
        mean,
    })
}
