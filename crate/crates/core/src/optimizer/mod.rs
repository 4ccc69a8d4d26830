//! Per-clip search for the keyframe and golden/alt-ref Lagrange multiplier
//! scalers, minimising BD-rate against the unscaled encoder.

mod cache;
mod powell;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backend::{build_rd_curve, Clip, EncodeBackend, EncodeSettings};
use crate::bd::bd_rate;
use crate::curves::{RdCurve, MAX_QP};
use crate::error::{Error, Result};
use crate::format::sig6;

pub use cache::{CacheKey, EncodeCache, Memoized};
pub use powell::{powell_minimize, PowellOptions, PowellOutcome};

/// `lambda = k * lambda0`, with `k1` for keyframes and `k2` for golden and
/// alternate-reference frames.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaMultipliers {
    pub k1: f64,
    pub k2: f64,
}

impl LambdaMultipliers {
    pub const UNIT: LambdaMultipliers = LambdaMultipliers { k1: 1.0, k2: 1.0 };

    pub fn new(k1: f64, k2: f64) -> Self {
        LambdaMultipliers { k1, k2 }
    }

    /// Rounded to the 1e-6 grid used for memoisation.
    pub fn quantized(self) -> Self {
        let q = |k: f64| (k * 1e6).round() / 1e6;
        LambdaMultipliers::new(q(self.k1), q(self.k2))
    }

    pub fn distance(&self, other: &LambdaMultipliers) -> f64 {
        (self.k1 - other.k1).hypot(self.k2 - other.k2)
    }
}

impl fmt::Display for LambdaMultipliers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.k1, self.k2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizationConfig {
    pub qps: Vec<u8>,
    pub bounds: (f64, f64),
    pub x0: (f64, f64),
    pub ftol: f64,
    /// Line-search tolerance in multiplier units.
    pub xtol: f64,
    pub max_iters: usize,
    pub metric: String,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        OptimizationConfig {
            qps: vec![27, 39, 49, 59, 63],
            bounds: (0.2, 4.0),
            x0: (1.0, 1.0),
            ftol: 1e-6,
            xtol: 1e-4,
            max_iters: 50,
            metric: "ms_ssim".into(),
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.qps.len() < 2 {
            return Err(Error::invalid("need at least 2 qps"));
        }
        for (i, qp) in self.qps.iter().enumerate() {
            if *qp > MAX_QP {
                return Err(Error::invalid(format!("qp {qp} outside [0, {MAX_QP}]")));
            }
            if self.qps[..i].contains(qp) {
                return Err(Error::invalid(format!("duplicate qp {qp}")));
            }
        }
        let (lo, hi) = self.bounds;
        if !(lo > 0.0 && lo < 1.0 && 1.0 < hi && hi.is_finite()) {
            return Err(Error::invalid(format!(
                "bounds must satisfy 0 < k_min < 1 < k_max, got [{lo}, {hi}]"
            )));
        }
        if !self.in_bounds(LambdaMultipliers::new(self.x0.0, self.x0.1)) {
            return Err(Error::invalid("start point outside bounds"));
        }
        if !(self.ftol > 0.0 && self.xtol > 0.0 && self.max_iters > 0) {
            return Err(Error::invalid("ftol, xtol and max_iters must be positive"));
        }
        Ok(())
    }

    pub fn in_bounds(&self, ks: LambdaMultipliers) -> bool {
        let (lo, hi) = self.bounds;
        (lo..=hi).contains(&ks.k1) && (lo..=hi).contains(&ks.k2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub ks: LambdaMultipliers,
    pub cost: f64,
    /// Every operating point came from the cache.
    pub cache_hit: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationTrace {
    pub evaluations: Vec<TraceEntry>,
    pub best: (LambdaMultipliers, f64),
    /// Powell outer iterations.
    pub iterations: usize,
    /// Backend encodes actually issued, baseline included.
    pub encode_count: usize,
    /// Iteration cap reached before convergence.
    pub hit_max_iters: bool,
}

impl OptimizationTrace {
    /// `eval_idx,k1,k2,cost,cache_hit`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("eval_idx,k1,k2,cost,cache_hit\n");
        for (i, e) in self.evaluations.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                i,
                sig6(e.ks.k1),
                sig6(e.ks.k2),
                sig6(e.cost),
                e.cache_hit
            ));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// BD-rate (percent, cleaned curves) of the curve encoded at `ks` against
/// `baseline`. Curves that cannot be compared cost `+inf`.
pub fn evaluate_cost(
    backend: &dyn EncodeBackend,
    clip: &Clip,
    ks: LambdaMultipliers,
    baseline: &RdCurve,
    config: &OptimizationConfig,
    settings: &EncodeSettings,
) -> Result<f64> {
    if !config.in_bounds(ks) {
        return Err(Error::invalid(format!(
            "multipliers {ks} outside bounds [{}, {}]",
            config.bounds.0, config.bounds.1
        )));
    }
    let candidate = build_rd_curve(backend, clip, ks, &config.qps, settings, &config.metric)?;
    match bd_rate(baseline, &candidate, true) {
        Ok(r) => Ok(r.value),
        Err(e @ (Error::NoOverlap { .. } | Error::TooFewPoints { .. })) => {
            log::warn!("clip `{}` at {ks}: {e}; scoring as +inf", clip.id);
            Ok(f64::INFINITY)
        }
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClipOptimization {
    pub clip: String,
    pub ks: LambdaMultipliers,
    pub cost: f64,
    pub trace: OptimizationTrace,
}

/// Optimises under `proxy` settings when given (else `native`); the returned
/// multipliers are meant for reuse with `native`.
pub fn optimize_clip(
    backend: &dyn EncodeBackend,
    clip: &Clip,
    config: &OptimizationConfig,
    native: &EncodeSettings,
    proxy: Option<&EncodeSettings>,
    cache: &EncodeCache,
) -> Result<ClipOptimization> {
    config.validate()?;
    let settings = proxy.unwrap_or(native);
    let memo = Memoized::new(backend, cache);
    let baseline = build_rd_curve(
        &memo,
        clip,
        LambdaMultipliers::UNIT,
        &config.qps,
        settings,
        &config.metric,
    )?;

    let mut evaluations: Vec<TraceEntry> = Vec::new();
    let mut fatal: Option<Error> = None;
    let cost = |x: &[f64]| -> f64 {
        // Encode at the cache-key resolution so a hit reproduces the miss.
        let ks = LambdaMultipliers::new(x[0], x[1]).quantized();
        let before = memo.encodes();
        let cost = match evaluate_cost(&memo, clip, ks, &baseline, config, settings) {
            Ok(c) => c,
            Err(e @ Error::BackendFailure(_)) => {
                log::warn!("clip `{}` at {ks}: {e}; scoring as +inf", clip.id);
                f64::INFINITY
            }
            Err(e) => {
                fatal.get_or_insert(e);
                f64::INFINITY
            }
        };
        evaluations.push(TraceEntry {
            ks,
            cost,
            cache_hit: memo.encodes() == before,
        });
        cost
    };
    let opts = PowellOptions {
        lower: vec![config.bounds.0; 2],
        upper: vec![config.bounds.1; 2],
        ftol: config.ftol,
        xtol: config.xtol,
        max_iters: config.max_iters,
    };
    let outcome = powell_minimize(cost, &[config.x0.0, config.x0.1], &opts);
    if let Some(e) = fatal {
        return Err(e);
    }

    let ks = LambdaMultipliers::new(outcome.x[0], outcome.x[1]).quantized();
    if !outcome.converged {
        log::warn!(
            "clip `{}`: Powell stopped at the {}-iteration cap",
            clip.id,
            config.max_iters
        );
    }
    Ok(ClipOptimization {
        clip: clip.id.clone(),
        ks,
        cost: outcome.fx,
        trace: OptimizationTrace {
            evaluations,
            best: (ks, outcome.fx),
            iterations: outcome.iterations,
            encode_count: memo.encodes(),
            hit_max_iters: !outcome.converged,
        },
    })
}

/// Result file: `{"clip", "k1", "k2", "cost_bdrate_pct", "iterations",
/// "encodes", ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRecord {
    pub clip: String,
    pub k1: f64,
    pub k2: f64,
    pub cost_bdrate_pct: f64,
    pub iterations: usize,
    pub encodes: usize,
    pub evaluations: usize,
    pub converged: bool,
}

impl From<&ClipOptimization> for OptimizationRecord {
    fn from(r: &ClipOptimization) -> Self {
        OptimizationRecord {
            clip: r.clip.clone(),
            k1: r.ks.k1,
            k2: r.ks.k2,
            cost_bdrate_pct: r.cost,
            iterations: r.trace.iterations,
            encodes: r.trace.encode_count,
            evaluations: r.trace.evaluations.len(),
            converged: !r.trace.hit_max_iters,
        }
    }
}

impl OptimizationRecord {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).expect("record serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
