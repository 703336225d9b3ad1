//! Agent interface and the built-in policies.
//!
//! An agent is meta-trained once on a [`MetaSlice`] and then plays episodes:
//! [`Agent::start_episode`] followed by [`Agent::suggest`] calls, each
//! receiving the previous observation (the reset observation first). Agents
//! only ever see validation and training scores of the dataset being
//! played; test curves are visible to them only for meta-training datasets.

mod average_rank;
mod best_on_samples;
mod freeze_thaw;
pub mod kmeans;
mod qlearn;
mod random_search;
mod ranked;
mod tracker;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, Observation};
use crate::error::{Error, Result};
use crate::lc::{alc, AgentCurve, AlcConfig, GridFraction, Step};
use crate::meta::{DatasetMeta, MetaSlice, Round};

pub use average_rank::AverageRank;
pub use best_on_samples::BestOnSamples;
pub use freeze_thaw::{FreezeThaw, FreezeThawFit};
pub use qlearn::{QConfig, QLearning};
pub use random_search::RandomSearch;
pub use ranked::RankedScheduler;
pub use tracker::Tracker;

/// Round-1 time portions, as fractions of the episode budget, cycled by the
/// policies that do not model time.
pub const R1_PORTIONS: [f64; 4] = [0.01, 0.02, 0.05, 0.1];

/// What an agent is told when an episode starts.
#[derive(Debug, Clone)]
pub struct EpisodeContext {
    pub dataset: DatasetMeta,
    pub round: Round,
    pub n_algorithms: usize,
    pub budget: f64,
}

pub trait Agent: Send + Sync {
    /// Learns from the curves of the meta-training datasets.
    fn meta_train(&mut self, slice: &MetaSlice<'_>) -> Result<()>;

    /// Resets per-episode state.
    fn start_episode(&mut self, ctx: &EpisodeContext) -> Result<()>;

    /// Next action given the latest observation.
    fn suggest(&mut self, obs: &Observation) -> Result<Action>;

    fn clone_box(&self) -> Box<dyn Agent>;
}

impl Clone for Box<dyn Agent> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Agent kinds and their hyperparameters, as written in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSpec {
    RandomSearch,
    AverageRank,
    BestOnSamples {
        /// Round-1 probe length as a fraction of the budget.
        #[serde(default = "default_probe")]
        probe_fraction: f64,
    },
    FreezeThaw {
        #[serde(default = "default_beta")]
        beta: f64,
    },
    /// Tabular double Q-learning over (budget decile, tried count) states.
    QLearning {
        #[serde(flatten)]
        config: QConfig,
    },
    /// Q-learning with one table per K-means cluster of dataset meta-features.
    ClusteredQ {
        #[serde(default = "default_clusters")]
        clusters: usize,
        #[serde(flatten)]
        config: QConfig,
    },
    RankedScheduler {
        #[serde(default = "default_stale")]
        stale_threshold: f64,
    },
}

fn default_probe() -> f64 {
    0.05
}
fn default_beta() -> f64 {
    0.1
}
fn default_clusters() -> usize {
    12
}
fn default_stale() -> f64 {
    0.001
}

impl AgentSpec {
    pub fn build(&self, seed: u64) -> Result<Box<dyn Agent>> {
        Ok(match self {
            AgentSpec::RandomSearch => Box::new(RandomSearch::new(seed)),
            AgentSpec::AverageRank => Box::new(AverageRank::new()),
            AgentSpec::BestOnSamples { probe_fraction } => {
                if !(probe_fraction.is_finite() && *probe_fraction > 0.0) {
                    return Err(Error::Config(format!("probe_fraction must be > 0, got {probe_fraction}")));
                }
                Box::new(BestOnSamples::new(*probe_fraction))
            }
            AgentSpec::FreezeThaw { beta } => {
                if !(beta.is_finite() && *beta >= 0.0) {
                    return Err(Error::Config(format!("beta must be >= 0, got {beta}")));
                }
                Box::new(FreezeThaw::new(*beta))
            }
            AgentSpec::QLearning { config } => {
                config.validate()?;
                Box::new(QLearning::new(config.clone(), 1, seed))
            }
            AgentSpec::ClusteredQ { clusters, config } => {
                config.validate()?;
                if *clusters == 0 {
                    return Err(Error::Config("clusters must be >= 1".into()));
                }
                Box::new(QLearning::new(config.clone(), *clusters, seed))
            }
            AgentSpec::RankedScheduler { stale_threshold } => {
                if !(stale_threshold.is_finite() && *stale_threshold >= 0.0) {
                    return Err(Error::Config(format!("stale_threshold must be >= 0, got {stale_threshold}")));
                }
                Box::new(RankedScheduler::new(*stale_threshold))
            }
        })
    }

    /// The roster used when a config names no agents.
    pub fn baseline_roster() -> Vec<(String, AgentSpec)> {
        vec![
            ("random_search".into(), AgentSpec::RandomSearch),
            ("average_rank".into(), AgentSpec::AverageRank),
            (
                "best_on_samples".into(),
                AgentSpec::BestOnSamples {
                    probe_fraction: default_probe(),
                },
            ),
            ("freeze_thaw".into(), AgentSpec::FreezeThaw { beta: default_beta() }),
            (
                "double_q".into(),
                AgentSpec::QLearning {
                    config: QConfig::default(),
                },
            ),
            (
                "clustered_q".into(),
                AgentSpec::ClusteredQ {
                    clusters: default_clusters(),
                    config: QConfig::default(),
                },
            ),
            (
                "ranked_scheduler".into(),
                AgentSpec::RankedScheduler {
                    stale_threshold: default_stale(),
                },
            ),
        ]
    }
}

/// Per-episode generator: same seed and dataset give the same stream no
/// matter how many episodes the agent played before.
pub(crate) fn episode_rng(seed: u64, dataset: &str) -> ChaCha8Rng {
    // FNV-1a keeps the stream id stable across platforms and releases.
    let stream = dataset
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// How a [`RankTable`] orders algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankBasis {
    /// Mean per-dataset rank of the final validation score (lower is better).
    AverageRank,
    /// Mean ALC of the algorithm's own validation curve (higher is better).
    AverageAlc,
}

/// Algorithms ordered best first from meta-training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub basis: RankBasis,
    /// Per-algorithm statistic, indexed by algorithm.
    pub values: Vec<f64>,
    /// Algorithm indices, best first; ties go to the lower index.
    pub order: Vec<usize>,
}

impl RankTable {
    pub fn by_average_rank(slice: &MetaSlice<'_>) -> Result<Self> {
        if slice.is_empty() {
            return Err(Error::NotTrainable("meta-training slice is empty".into()));
        }
        let m = slice.n_algorithms();
        let mut sums = vec![0.0; m];
        for k in 0..slice.len() {
            let scores: Vec<f64> = (0..m).map(|j| final_valid_score(slice, k, j)).collect();
            for (j, r) in fractional_ranks(&scores).into_iter().enumerate() {
                sums[j] += r;
            }
        }
        let values: Vec<f64> = sums.iter().map(|s| s / slice.len() as f64).collect();
        Ok(Self::from_values(RankBasis::AverageRank, values))
    }

    pub fn by_average_alc(slice: &MetaSlice<'_>) -> Result<Self> {
        if slice.is_empty() {
            return Err(Error::NotTrainable("meta-training slice is empty".into()));
        }
        let m = slice.n_algorithms();
        let mut sums = vec![0.0; m];
        for k in 0..slice.len() {
            for (j, s) in sums.iter_mut().enumerate() {
                *s += own_validation_alc(slice, k, j)?;
            }
        }
        let values: Vec<f64> = sums.iter().map(|s| s / slice.len() as f64).collect();
        Ok(Self::from_values(RankBasis::AverageAlc, values))
    }

    fn from_values(basis: RankBasis, values: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| {
            let ord = match basis {
                RankBasis::AverageRank => values[a].total_cmp(&values[b]),
                RankBasis::AverageAlc => values[b].total_cmp(&values[a]),
            };
            ord.then(a.cmp(&b))
        });
        Self { basis, values, order }
    }

    pub fn top(&self) -> usize {
        self.order[0]
    }
}

/// Ranks with 1 = highest score; tied scores share the mean of their ranks.
fn fractional_ranks(scores: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

/// Validation score of algorithm `j` at the end of its curve (0 if empty).
pub(crate) fn final_valid_score(slice: &MetaSlice<'_>, k: usize, j: usize) -> f64 {
    match slice.round() {
        Round::R1 => slice.r1(k, j).and_then(|p| p.valid.last()).map_or(0.0, |pt| pt.s),
        Round::R2 => slice.r2(k, j).and_then(|t| t.anchors().last()).map_or(0.0, |a| a.valid),
    }
}

/// Linear ALC of an algorithm run alone on a meta-training dataset, scored
/// on its validation curve. Round 2 assumes the grid is queried in order.
pub(crate) fn own_validation_alc(slice: &MetaSlice<'_>, k: usize, j: usize) -> Result<f64> {
    let horizon = slice.dataset(k).time_budget;
    let steps: Vec<Step<f64>> = match slice.round() {
        Round::R1 => slice
            .r1(k, j)
            .map(|p| {
                p.valid
                    .points()
                    .iter()
                    .filter(|pt| pt.t <= horizon)
                    .map(|pt| Step {
                        wallclock: pt.t,
                        s: pt.s,
                    })
                    .collect()
            })
            .unwrap_or_default(),
        Round::R2 => {
            let mut steps = Vec::new();
            let (mut w, mut best) = (0.0, f64::NEG_INFINITY);
            for a in slice.r2(k, j).map(|t| t.anchors()).unwrap_or_default() {
                w += a.cost;
                if w > horizon {
                    break;
                }
                best = best.max(a.valid);
                steps.push(Step { wallclock: w, s: best });
            }
            steps
        }
    };
    alc(&AgentCurve::new(steps, horizon)?, &AlcConfig::linear())
}

/// Next untried grid point after `p`, or the first point.
pub(crate) fn next_fraction(last: Option<GridFraction>) -> Option<GridFraction> {
    match last {
        None => Some(GridFraction::FIRST),
        Some(p) => p.next(),
    }
}

#[cfg(test)]
mod tests;
