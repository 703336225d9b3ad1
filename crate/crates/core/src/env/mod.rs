//! Episode engines for the two protocols, plus the episode transcript.
//!
//! Round 1 ([`R1Env`]): the agent buys wallclock time on one algorithm at a
//! time and names its own incumbent. Round 2 ([`R2Env`]): the agent queries
//! `(algorithm, data fraction)` pairs at their stored cost and the incumbent
//! is whichever query has the best validation score so far.
//!
//! Observations never carry test scores; those are only read when the
//! any-time curve is built from a finished transcript.

mod r1;
mod r2;
mod transcript;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lc::AgentCurve;
use crate::meta::{MetaDataset, Round};

pub use r1::{r1_agent_curve, ActionR1, ObservationR1, R1Env};
pub use r2::{r2_agent_curve, ActionR2, ObservationR2, R2Env};
pub use transcript::{replay, ReplayOutcome, Transcript, TranscriptHeader, TRANSCRIPT_FORMAT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Action {
    R1(ActionR1),
    R2(ActionR2),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Observation {
    R1(ObservationR1),
    R2(ObservationR2),
}

impl Observation {
    pub fn done(&self) -> bool {
        match self {
            Observation::R1(o) => o.done,
            Observation::R2(o) => o.done,
        }
    }

    pub fn wallclock(&self) -> f64 {
        match self {
            Observation::R1(o) => o.wallclock,
            Observation::R2(o) => o.wallclock,
        }
    }

    pub fn remaining_budget(&self) -> f64 {
        match self {
            Observation::R1(o) => o.remaining_budget,
            Observation::R2(o) => o.remaining_budget,
        }
    }
}

/// Which hidden curve the any-time curve is scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalOn {
    Valid,
    #[default]
    Test,
}

/// One step of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub wallclock_after: f64,
    pub action: Action,
    pub observation: Observation,
}

/// Either engine behind one interface.
#[derive(Debug, Clone)]
pub enum Env<'a> {
    R1(R1Env<'a>),
    R2(R2Env<'a>),
}

impl<'a> Env<'a> {
    pub fn reset(md: &'a MetaDataset, dataset: usize) -> Result<(Self, Observation)> {
        Ok(match md.round() {
            Round::R1 => {
                let (env, obs) = R1Env::reset(md, dataset)?;
                (Env::R1(env), Observation::R1(obs))
            }
            Round::R2 => {
                let (env, obs) = R2Env::reset(md, dataset)?;
                (Env::R2(env), Observation::R2(obs))
            }
        })
    }

    pub fn step(&mut self, action: &Action) -> Result<Observation> {
        match (self, action) {
            (Env::R1(env), Action::R1(a)) => env.step(a).map(Observation::R1),
            (Env::R2(env), Action::R2(a)) => env.step(a).map(Observation::R2),
            (Env::R1(_), _) => Err(Error::InvalidAction("R2 action sent to an R1 environment".into())),
            (Env::R2(_), _) => Err(Error::InvalidAction("R1 action sent to an R2 environment".into())),
        }
    }

    pub fn budget(&self) -> f64 {
        match self {
            Env::R1(e) => e.budget(),
            Env::R2(e) => e.budget(),
        }
    }

    pub fn is_done(&self) -> bool {
        match self {
            Env::R1(e) => e.is_done(),
            Env::R2(e) => e.is_done(),
        }
    }
}

/// Builds the any-time curve of a finished episode for either protocol.
pub fn agent_curve(records: &[Record], md: &MetaDataset, dataset: usize, eval_on: EvalOn) -> Result<AgentCurve<f64>> {
    match md.round() {
        Round::R1 => r1_agent_curve(records, md, dataset, eval_on),
        Round::R2 => r2_agent_curve(records, md, dataset, eval_on),
    }
}
