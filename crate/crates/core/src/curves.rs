//! Rate-quality curves and their on-disk JSON form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QP: u8 = 63;

#[derive(Clone, Debug, PartialEq)]
pub struct RdPoint {
    /// Kilobits per second.
    pub rate: f64,
    pub quality: f64,
    pub qp: Option<u8>,
    pub tag: Option<String>,
}

impl RdPoint {
    pub fn new(rate: f64, quality: f64) -> Self {
        RdPoint {
            rate,
            quality,
            qp: None,
            tag: None,
        }
    }

    pub fn with_qp(mut self, qp: u8) -> Self {
        self.qp = Some(qp);
        self
    }
}

/// Operating points sorted by strictly increasing rate.
#[derive(Clone, Debug, PartialEq)]
pub struct RdCurve {
    metric: String,
    points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn new(mut points: Vec<RdPoint>, metric: impl Into<String>) -> Result<Self> {
        for p in &points {
            if !p.rate.is_finite() {
                return Err(Error::NonFiniteValue("rate"));
            }
            if !p.quality.is_finite() {
                return Err(Error::NonFiniteValue("quality"));
            }
            if p.rate <= 0.0 {
                return Err(Error::NonPositiveRate(p.rate));
            }
            if let Some(qp) = p.qp {
                if qp > MAX_QP {
                    return Err(Error::invalid(format!("qp {qp} outside [0, {MAX_QP}]")));
                }
            }
        }
        if points.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: points.len(),
            });
        }
        points.sort_by(|a, b| a.rate.total_cmp(&b.rate));
        if let Some(w) = points.windows(2).find(|w| w[0].rate == w[1].rate) {
            return Err(Error::DuplicateRate(w[0].rate));
        }
        Ok(RdCurve {
            metric: metric.into(),
            points,
        })
    }

    pub fn metric(&self) -> &str {
        &self.metric
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.rate)
    }

    pub fn qualities(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.quality)
    }

    pub fn point_at_qp(&self, qp: u8) -> Option<&RdPoint> {
        self.points.iter().find(|p| p.qp == Some(qp))
    }

    /// Same curve with every rate multiplied by `factor`.
    pub fn scale_rates(&self, factor: f64) -> Result<Self> {
        let points = self
            .points
            .iter()
            .map(|p| RdPoint {
                rate: p.rate * factor,
                ..p.clone()
            })
            .collect();
        RdCurve::new(points, self.metric.clone())
    }

    /// Restrict to the largest subset whose quality is non-decreasing in rate.
    ///
    /// Among equally large subsets the one whose point indices are
    /// lexicographically smallest wins, i.e. lower-rate points are kept.
    pub fn enforce_monotone(&self) -> Result<Self> {
        let keep =
            longest_non_decreasing(&self.points.iter().map(|p| p.quality).collect::<Vec<_>>());
        if keep.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: keep.len(),
            });
        }
        Ok(RdCurve {
            metric: self.metric.clone(),
            points: keep.into_iter().map(|i| self.points[i].clone()).collect(),
        })
    }

    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].quality >= w[0].quality)
    }
}

/// Indices of a maximum-length non-decreasing subsequence, lexicographically
/// smallest among all maxima.
fn longest_non_decreasing(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    // run[i] = length of the longest non-decreasing run starting at i.
    let mut run = vec![1usize; n];
    for i in (0..n).rev() {
        for j in i + 1..n {
            if values[j] >= values[i] {
                run[i] = run[i].max(run[j] + 1);
            }
        }
    }
    let best = *run.iter().max().unwrap();
    let mut out = Vec::with_capacity(best);
    let mut cur = (0..n).find(|&i| run[i] == best).unwrap();
    out.push(cur);
    while run[cur] > 1 {
        cur = (cur + 1..n)
            .find(|&j| values[j] >= values[cur] && run[j] == run[cur] - 1)
            .unwrap();
        out.push(cur);
    }
    out
}

/// JSON curve file: `{"metric": ..., "points": [{"rate_kbps", "quality", "qp"}]}`.
///
/// `clip`, `variant`, per-point `tag` and `ci95` are optional extras used by
/// the reporting tools.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub metric: String,
    pub points: Vec<CurvePointRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePointRecord {
    pub rate_kbps: f64,
    pub quality: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qp: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci95: Option<f64>,
}

impl CurveFile {
    pub fn from_curve(curve: &RdCurve) -> Self {
        CurveFile {
            clip: None,
            variant: None,
            metric: curve.metric().to_owned(),
            points: curve
                .points()
                .iter()
                .map(|p| CurvePointRecord {
                    rate_kbps: p.rate,
                    quality: p.quality,
                    qp: p.qp,
                    tag: p.tag.clone(),
                    ci95: None,
                })
                .collect(),
        }
    }

    pub fn to_curve(&self) -> Result<RdCurve> {
        let points = self
            .points
            .iter()
            .map(|r| RdPoint {
                rate: r.rate_kbps,
                quality: r.quality,
                qp: r.qp,
                tag: r.tag.clone(),
            })
            .collect();
        RdCurve::new(points, self.metric.clone())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).expect("curve file serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

pub fn read_curve(path: impl AsRef<Path>) -> Result<RdCurve> {
    CurveFile::read(path)?.to_curve()
}
