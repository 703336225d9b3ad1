//! Benchmark arena for meta-learning from pre-computed learning curves.
//!
//! Agents repeatedly pick an algorithm and a budget, observe the revealed
//! part of its learning curve, and are scored by the area under the curve of
//! the incumbent they would have returned at any point in time.

pub mod agents;
pub mod cli;
pub mod env;
mod error;
mod hash;
pub mod harness;
pub mod lc;
pub mod meta;
mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use hash::{sha256_hex, sha256_json};
pub use scalar::Scalar;

pub use meta::{MetaDataset, Round};

pub type TimeCurve = lc::TimeCurve<f64>;
pub type SizeCurveTriplet = lc::SizeCurveTriplet<f64>;
pub type AgentCurve = lc::AgentCurve<f64>;
pub type AlcConfig = lc::AlcConfig<f64>;
pub type ScoreReport = lc::ScoreReport<f64>;

/// Version stamped into every artifact this crate writes.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
