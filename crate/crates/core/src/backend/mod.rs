//! Encoder backends: the encode contract, a closed-form synthetic model and
//! an external-process driver.

mod process;
mod synthetic;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::curves::{RdCurve, RdPoint, MAX_QP};
use crate::error::{Error, Result};
use crate::optimizer::LambdaMultipliers;

pub use process::{ProcessBackend, ProcessConfig};
pub use synthetic::{SyntheticBackend, SyntheticModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clip {
    pub id: String,
    #[serde(default)]
    pub path: PathBuf,
    #[serde(default = "default_duration")]
    pub duration_seconds: f64,
}

fn default_duration() -> f64 {
    1.0
}

impl Clip {
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        Clip {
            path: PathBuf::from(&id),
            id,
            duration_seconds: default_duration(),
        }
    }
}

/// A named preset/resolution profile. Every parameter is exposed to command
/// templates as `{key}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodeSettings {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl EncodeSettings {
    pub fn named(name: impl Into<String>) -> Self {
        EncodeSettings {
            name: name.into(),
            params: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EncodeRequest<'a> {
    pub clip: &'a Clip,
    pub qp: u8,
    pub ks: LambdaMultipliers,
    pub settings: &'a EncodeSettings,
    pub metric_id: &'a str,
}

impl EncodeRequest<'_> {
    pub fn validate(&self) -> Result<()> {
        if self.qp > MAX_QP {
            return Err(Error::invalid(format!(
                "qp {} outside [0, {MAX_QP}]",
                self.qp
            )));
        }
        if !(self.ks.k1 > 0.0
            && self.ks.k2 > 0.0
            && self.ks.k1.is_finite()
            && self.ks.k2.is_finite())
        {
            return Err(Error::invalid(format!(
                "multipliers must be positive, got {}",
                self.ks
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodeResult {
    /// Kilobits per second.
    pub rate: f64,
    pub quality: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<PathBuf>,
}

/// One encode at one operating point. Implementations must tolerate
/// concurrent calls and be deterministic for identical requests.
pub trait EncodeBackend: Sync {
    fn encode(&self, request: &EncodeRequest<'_>) -> Result<EncodeResult>;
}

impl<B: EncodeBackend + ?Sized> EncodeBackend for &B {
    fn encode(&self, request: &EncodeRequest<'_>) -> Result<EncodeResult> {
        (**self).encode(request)
    }
}

/// Encodes `clip` at every qp concurrently and assembles the curve.
pub fn build_rd_curve(
    backend: &dyn EncodeBackend,
    clip: &Clip,
    ks: LambdaMultipliers,
    qps: &[u8],
    settings: &EncodeSettings,
    metric_id: &str,
) -> Result<RdCurve> {
    if qps.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: qps.len(),
        });
    }
    for (i, qp) in qps.iter().enumerate() {
        if qps[..i].contains(qp) {
            return Err(Error::invalid(format!("duplicate qp {qp}")));
        }
    }
    let results: Vec<Result<EncodeResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = qps
            .iter()
            .map(|&qp| {
                scope.spawn(move || {
                    let req = EncodeRequest {
                        clip,
                        qp,
                        ks,
                        settings,
                        metric_id,
                    };
                    req.validate()?;
                    backend.encode(&req)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("encode thread panicked"))
            .collect()
    });

    let mut points = Vec::with_capacity(qps.len());
    for (&qp, res) in qps.iter().zip(results) {
        let r = res.map_err(|e| match e {
            Error::BackendFailure(msg) => {
                Error::BackendFailure(format!("clip `{}` qp {qp}: {msg}", clip.id))
            }
            other => other,
        })?;
        if !(r.rate > 0.0 && r.rate.is_finite() && r.quality.is_finite()) {
            return Err(Error::BackendFailure(format!(
                "clip `{}` qp {qp}: invalid result rate={} quality={}",
                clip.id, r.rate, r.quality
            )));
        }
        points.push(RdPoint::new(r.rate, r.quality).with_qp(qp));
    }
    RdCurve::new(points, metric_id)
}
