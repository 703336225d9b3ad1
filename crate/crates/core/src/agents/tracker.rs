use crate::env::Observation;
use crate::lc::GridFraction;

use super::{next_fraction, EpisodeContext};

/// What an agent has seen so far in the current episode.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub budget: f64,
    pub remaining: f64,
    pub wallclock: f64,
    /// Actions taken so far.
    pub steps: usize,
    /// Round 2: highest fraction requested per algorithm.
    last_p: Vec<Option<GridFraction>>,
    /// Per-algorithm `(x, validation score)` observations. `x` is the data
    /// fraction (round 2) or the point's time over the budget (round 1).
    history: Vec<Vec<(f64, f64)>>,
    /// Round 1: time spent on each algorithm.
    frontier: Vec<f64>,
    tried: Vec<bool>,
}

impl Tracker {
    pub fn new(ctx: &EpisodeContext) -> Self {
        let m = ctx.n_algorithms;
        Self {
            budget: ctx.budget,
            remaining: ctx.budget,
            wallclock: 0.0,
            steps: 0,
            last_p: vec![None; m],
            history: vec![Vec::new(); m],
            frontier: vec![0.0; m],
            tried: vec![false; m],
        }
    }

    pub fn n_algorithms(&self) -> usize {
        self.history.len()
    }

    pub fn observe(&mut self, obs: &Observation) {
        self.remaining = obs.remaining_budget();
        self.wallclock = obs.wallclock();
        match obs {
            Observation::R1(o) => {
                if o.frontier.len() == self.frontier.len() {
                    self.frontier.clone_from(&o.frontier);
                }
                if let Some(a) = o.algo.filter(|&a| a < self.history.len()) {
                    self.tried[a] = true;
                    let budget = self.budget;
                    self.history[a].extend(o.revealed.iter().map(|p| (p.t / budget, p.s)));
                }
            }
            Observation::R2(o) => {
                if let (Some(a), Some(p)) = (o.algo, o.p) {
                    if a < self.history.len() {
                        self.tried[a] = true;
                        self.last_p[a] = self.last_p[a].max(Some(p));
                        if let Some(v) = o.r_valid {
                            self.history[a].push((p.fraction(), v));
                        }
                    }
                }
            }
        }
    }

    /// Counts an action about to be sent.
    pub fn record_action(&mut self) {
        self.steps += 1;
    }

    pub fn history(&self, algo: usize) -> &[(f64, f64)] {
        &self.history[algo]
    }

    pub fn latest(&self, algo: usize) -> Option<f64> {
        self.history[algo].last().map(|&(_, v)| v)
    }

    pub fn frontier(&self, algo: usize) -> f64 {
        self.frontier[algo]
    }

    pub fn tried_count(&self) -> usize {
        self.tried.iter().filter(|&&t| t).count()
    }

    /// Round 2: the next untried grid point for `algo`, `None` once 1.0 was queried.
    pub fn next_p(&self, algo: usize) -> Option<GridFraction> {
        next_fraction(self.last_p[algo])
    }

    /// Algorithm whose latest validation score is highest (lowest index on ties).
    pub fn best(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for a in 0..self.history.len() {
            if let Some(v) = self.latest(a) {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((a, v));
                }
            }
        }
        best
    }

    /// Highest validation score observed on any query so far.
    pub fn best_valid(&self) -> f64 {
        self.history
            .iter()
            .flat_map(|h| h.iter().map(|&(_, v)| v))
            .fold(0.0, f64::max)
    }

    pub fn incumbent_or(&self, fallback: usize) -> usize {
        self.best().map_or(fallback, |(a, _)| a)
    }
}
