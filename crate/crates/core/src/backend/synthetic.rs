use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EncodeBackend, EncodeRequest, EncodeResult};
use crate::error::Result;
use crate::optimizer::LambdaMultipliers;

/// Closed-form rate/quality model with a known best multiplier pair.
///
/// `g` is zero at `(1, 1)` and peaks at `k_star`; a positive `g` lifts quality
/// by `0.5 g` while costing only `2 g` percent in rate, so curves near
/// `k_star` dominate the `(1, 1)` baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticModel {
    pub r0: f64,
    pub alpha: f64,
    pub qmax: f64,
    pub beta: f64,
    pub k_star: (f64, f64),
    pub gamma: f64,
    pub w1: f64,
    pub w2: f64,
}

impl Default for SyntheticModel {
    fn default() -> Self {
        SyntheticModel {
            r0: 30_000.0,
            alpha: 9.0,
            qmax: 20.0,
            beta: 0.18,
            k_star: (1.3, 0.8),
            gamma: 1.2,
            w1: 0.4,
            w2: 0.6,
        }
    }
}

impl SyntheticModel {
    pub fn gain(&self, ks: LambdaMultipliers) -> f64 {
        let (a, b) = self.k_star;
        let bowl = |k1: f64, k2: f64| self.w1 * (k1 - a).powi(2) + self.w2 * (k2 - b).powi(2);
        self.gamma * (bowl(1.0, 1.0) - bowl(ks.k1, ks.k2))
    }

    pub fn encode(&self, qp: u8, ks: LambdaMultipliers) -> EncodeResult {
        let g = self.gain(ks);
        let qp = f64::from(qp);
        EncodeResult {
            rate: self.r0 * (-qp / self.alpha).exp2() * (1.0 + 0.02 * g),
            quality: self.qmax - self.beta * qp + 0.5 * g,
            artifacts: Vec::new(),
        }
    }
}

/// Synthetic backend; clips without an explicit model use `default`.
/// Settings profiles do not change the model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBackend {
    #[serde(default)]
    pub default: SyntheticModel,
    #[serde(default)]
    pub clips: BTreeMap<String, SyntheticModel>,
}

impl SyntheticBackend {
    pub fn new(model: SyntheticModel) -> Self {
        SyntheticBackend {
            default: model,
            clips: BTreeMap::new(),
        }
    }

    pub fn model_for(&self, clip: &str) -> &SyntheticModel {
        self.clips.get(clip).unwrap_or(&self.default)
    }
}

impl EncodeBackend for SyntheticBackend {
    fn encode(&self, request: &EncodeRequest<'_>) -> Result<EncodeResult> {
        request.validate()?;
        Ok(self
            .model_for(&request.clip.id)
            .encode(request.qp, request.ks))
    }
}
