//! Learning-curve representations and any-time scoring.

mod alc;
mod curve;
mod report;

pub use alc::{alc, AlcConfig, Normalization};
pub(crate) use curve::StepBuilder;
pub use curve::{AgentCurve, Anchor, CurvePoint, GridFraction, SizeCurveTriplet, Step, TimeCurve};
pub use report::{aggregate, worst_of_runs, ScoreReport};
