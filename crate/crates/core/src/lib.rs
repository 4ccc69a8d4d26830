//! Per-clip encoder Lagrange-multiplier tuning and quality analytics.
//!
//! * [`curves`] / [`pchip`]: rate-quality curves and monotone interpolation.
//! * [`bd`]: BD-rate, BD-quality and matched-quality bitrate savings.
//! * [`subjective`]: MOS/DMOS, observer screening, subject-model recovery.
//! * [`mapping`] / [`correlation`]: logistic mapping and PLCC/SROCC/KRCC.
//! * [`optimizer`] / [`backend`]: Powell search over `(k1, k2)` against an
//!   encoder backend.

pub mod backend;
pub mod bd;
pub mod config;
pub mod correlation;
pub mod curves;
mod error;
pub mod format;
pub mod mapping;
pub mod optimizer;
pub mod pchip;
pub mod simulate;
pub mod subjective;

pub use error::{Error, Result};
