use serde::{Deserialize, Serialize};

use super::{EvalOn, Record};
use crate::error::{Error, Result};
use crate::lc::{AgentCurve, GridFraction, StepBuilder};
use crate::meta::{MetaDataset, Round};

/// Train algorithm `algo` on fraction `p` of the training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionR2 {
    pub algo: usize,
    pub p: GridFraction,
}

impl ActionR2 {
    /// Builds an action from a raw fraction, rejecting values off the grid.
    pub fn new(algo: usize, p: f64) -> Result<Self> {
        let p = GridFraction::from_fraction(p)
            .ok_or_else(|| Error::InvalidAction(format!("fraction {p} is not on the 0.1 grid")))?;
        Ok(Self { algo, p })
    }
}

/// Result of a query. Scores are absent right after reset and when the
/// query's cost exceeded the remaining budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationR2 {
    pub algo: Option<usize>,
    pub p: Option<GridFraction>,
    /// Time charged for this query.
    pub cost: f64,
    pub r_train: Option<f64>,
    pub r_valid: Option<f64>,
    pub wallclock: f64,
    pub remaining_budget: f64,
    pub done: bool,
}

/// Data-fraction episode on one dataset: each query pays the stored
/// training cost of `(algo, p)` and reveals its train and validation scores.
#[derive(Debug, Clone)]
pub struct R2Env<'a> {
    md: &'a MetaDataset,
    dataset: usize,
    budget: f64,
    spent: f64,
    done: bool,
}

impl<'a> R2Env<'a> {
    pub fn reset(md: &'a MetaDataset, dataset: usize) -> Result<(Self, ObservationR2)> {
        if md.round() != Round::R2 {
            return Err(Error::ProtocolMismatch {
                expected: "R2",
                found: md.round().as_str(),
            });
        }
        if dataset >= md.n_datasets() {
            return Err(Error::InvalidInput(format!("dataset index {dataset} out of range")));
        }
        let budget = md.dataset(dataset).time_budget;
        let env = Self {
            md,
            dataset,
            budget,
            spent: 0.0,
            done: false,
        };
        let obs = ObservationR2 {
            algo: None,
            p: None,
            cost: 0.0,
            r_train: None,
            r_valid: None,
            wallclock: 0.0,
            remaining_budget: budget,
            done: false,
        };
        Ok((env, obs))
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn remaining(&self) -> f64 {
        self.budget - self.spent
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Repeating a query is charged again in full.
    pub fn step(&mut self, action: &ActionR2) -> Result<ObservationR2> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let m = self.md.n_algorithms();
        if action.algo >= m {
            return Err(Error::InvalidAction(format!(
                "algorithm index {} out of range ({m} algorithms)",
                action.algo
            )));
        }
        let anchor = self
            .md
            .r2(self.dataset, action.algo)
            .expect("R2 table is total")
            .anchor(action.p)
            .ok_or_else(|| {
                Error::InvalidAction(format!("no curve point for algorithm {} at p={}", action.algo, action.p))
            })?;

        let remaining = self.remaining();
        let (cost, r_train, r_valid) = if anchor.cost < remaining {
            self.spent = (self.spent + anchor.cost).min(self.budget);
            (anchor.cost, Some(anchor.train), Some(anchor.valid))
        } else if anchor.cost == remaining {
            self.spent = self.budget;
            (anchor.cost, Some(anchor.train), Some(anchor.valid))
        } else {
            self.spent = self.budget;
            (remaining, None, None)
        };
        if self.spent >= self.budget {
            self.done = true;
        }
        Ok(ObservationR2 {
            algo: Some(action.algo),
            p: Some(action.p),
            cost,
            r_train,
            r_valid,
            wallclock: self.spent,
            remaining_budget: self.remaining(),
            done: self.done,
        })
    }
}

/// Any-time curve of an R2 episode. After every completed query the
/// incumbent is the `(algo, p)` with the highest validation score seen so
/// far (earliest wins ties), and the curve steps to its score.
pub fn r2_agent_curve(records: &[Record], md: &MetaDataset, dataset: usize, eval_on: EvalOn) -> Result<AgentCurve<f64>> {
    if md.round() != Round::R2 {
        return Err(Error::ProtocolMismatch {
            expected: "R2",
            found: md.round().as_str(),
        });
    }
    let horizon = md.dataset(dataset).time_budget;
    let mut builder = StepBuilder::new();
    let mut best: Option<(f64, f64)> = None;
    for rec in records {
        let obs = match &rec.observation {
            super::Observation::R2(o) => o,
            _ => return Err(Error::Integrity("R1 record in an R2 transcript".into())),
        };
        let (Some(algo), Some(p), Some(valid)) = (obs.algo, obs.p, obs.r_valid) else {
            continue;
        };
        if best.is_none_or(|(v, _)| valid > v) {
            let anchor = md
                .r2(dataset, algo)
                .and_then(|t| t.anchor(p))
                .ok_or_else(|| Error::Integrity(format!("record names unknown curve point ({algo}, {p})")))?;
            let value = match eval_on {
                EvalOn::Valid => anchor.valid,
                EvalOn::Test => anchor.test,
            };
            best = Some((valid, value));
        }
        let (_, value) = best.expect("set above");
        builder.push(rec.wallclock_after, value);
    }
    builder.finish(horizon)
}
