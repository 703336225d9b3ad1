use serde::{Deserialize, Serialize};

use super::{EvalOn, Record};
use crate::error::{Error, Result};
use crate::lc::{AgentCurve, CurvePoint, StepBuilder};
use crate::meta::{MetaDataset, Round};

/// Reveal `delta_t` more seconds of `reveal_algo`'s validation curve and
/// name `incumbent` as the algorithm the agent would return right now.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionR1 {
    pub reveal_algo: usize,
    pub delta_t: f64,
    pub incumbent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationR1 {
    /// Algorithm the last step revealed; `None` right after reset.
    pub algo: Option<usize>,
    /// Validation points that became visible during the last step.
    pub revealed: Vec<CurvePoint<f64>>,
    /// Cumulative time spent on each algorithm.
    pub frontier: Vec<f64>,
    pub wallclock: f64,
    pub remaining_budget: f64,
    pub done: bool,
}

/// Time-budgeted episode on one dataset: every step pays wallclock time to
/// extend one algorithm's validation curve.
#[derive(Debug, Clone)]
pub struct R1Env<'a> {
    md: &'a MetaDataset,
    dataset: usize,
    budget: f64,
    spent: f64,
    frontier: Vec<f64>,
    shown: Vec<usize>,
    done: bool,
}

impl<'a> R1Env<'a> {
    pub fn reset(md: &'a MetaDataset, dataset: usize) -> Result<(Self, ObservationR1)> {
        if md.round() != Round::R1 {
            return Err(Error::ProtocolMismatch {
                expected: "R1",
                found: md.round().as_str(),
            });
        }
        if dataset >= md.n_datasets() {
            return Err(Error::InvalidInput(format!("dataset index {dataset} out of range")));
        }
        let m = md.n_algorithms();
        let env = Self {
            md,
            dataset,
            budget: md.dataset(dataset).time_budget,
            spent: 0.0,
            frontier: vec![0.0; m],
            shown: vec![0; m],
            done: false,
        };
        let obs = env.observation(None, Vec::new());
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

    fn observation(&self, algo: Option<usize>, revealed: Vec<CurvePoint<f64>>) -> ObservationR1 {
        ObservationR1 {
            algo,
            revealed,
            frontier: self.frontier.clone(),
            wallclock: self.spent,
            remaining_budget: self.remaining(),
            done: self.done,
        }
    }

    pub fn step(&mut self, action: &ActionR1) -> Result<ObservationR1> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let m = self.md.n_algorithms();
        if action.reveal_algo >= m || action.incumbent >= m {
            return Err(Error::InvalidAction(format!(
                "algorithm index out of range (reveal {}, incumbent {}, {m} algorithms)",
                action.reveal_algo, action.incumbent
            )));
        }
        if !action.delta_t.is_finite() || action.delta_t < 0.0 {
            return Err(Error::InvalidAction(format!("delta_t {} must be finite and >= 0", action.delta_t)));
        }

        let remaining = self.remaining();
        let charge = if action.delta_t >= remaining {
            self.spent = self.budget;
            remaining
        } else {
            self.spent = (self.spent + action.delta_t).min(self.budget);
            action.delta_t
        };
        let a = action.reveal_algo;
        self.frontier[a] += charge;
        if self.spent >= self.budget {
            self.done = true;
        }

        let curve = &self.md.r1(self.dataset, a).expect("R1 table is total").valid;
        let upto = curve.count_until(self.frontier[a]);
        let revealed = curve.points()[self.shown[a]..upto].to_vec();
        self.shown[a] = upto;
        Ok(self.observation(Some(a), revealed))
    }
}

/// Any-time curve of an R1 episode.
///
/// The incumbent named in an action takes effect when the action starts.
/// While it is in effect the curve shows its score at its own trained time;
/// if the action trains the incumbent itself, each point crossed during the
/// step appears at the wallclock instant it is reached.
pub fn r1_agent_curve(records: &[Record], md: &MetaDataset, dataset: usize, eval_on: EvalOn) -> Result<AgentCurve<f64>> {
    if md.round() != Round::R1 {
        return Err(Error::ProtocolMismatch {
            expected: "R1",
            found: md.round().as_str(),
        });
    }
    let horizon = md.dataset(dataset).time_budget;
    let m = md.n_algorithms();
    let mut builder = StepBuilder::new();
    let mut prev_frontier = vec![0.0; m];
    let mut prev_wallclock = 0.0;

    for rec in records {
        let (action, obs) = match (&rec.action, &rec.observation) {
            (super::Action::R1(a), super::Observation::R1(o)) => (a, o),
            _ => return Err(Error::Integrity("R2 record in an R1 transcript".into())),
        };
        if action.incumbent >= m || obs.frontier.len() != m {
            return Err(Error::Integrity("record does not match the meta-dataset".into()));
        }
        let pair = md.r1(dataset, action.incumbent).expect("R1 table is total");
        let curve = match eval_on {
            EvalOn::Valid => &pair.valid,
            EvalOn::Test => &pair.test,
        };
        let before = prev_frontier[action.incumbent];
        builder.push(prev_wallclock, curve.value_at(before));
        if action.reveal_algo == action.incumbent {
            let after = obs.frontier[action.incumbent];
            let first = curve.count_until(before);
            let last = curve.count_until(after);
            for pt in &curve.points()[first..last] {
                let w = (prev_wallclock + (pt.t - before)).min(rec.wallclock_after);
                builder.push(w, pt.s);
            }
        }
        prev_frontier.clone_from(&obs.frontier);
        prev_wallclock = rec.wallclock_after;
    }
    builder.finish(horizon)
}
