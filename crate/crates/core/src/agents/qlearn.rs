use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kmeans::KMeans;
use super::{Agent, EpisodeContext, Tracker, R1_PORTIONS};
use crate::env::{Action, ActionR1, ActionR2, Env, Observation};
use crate::error::{Error, Result};
use crate::lc::GridFraction;
use crate::meta::{DatasetMeta, MetaSlice, Round};

const BUDGET_BUCKETS: usize = 10;
const TRIED_BUCKETS: usize = 4;
pub const N_STATES: usize = BUDGET_BUCKETS * TRIED_BUCKETS;
/// Step cap for a single training episode.
const MAX_TRAIN_STEPS: usize = 10_000;
const TRAIN_STREAM: u64 = 1;
const KMEANS_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_eps_start")]
    pub eps_start: f64,
    #[serde(default = "default_eps_end")]
    pub eps_end: f64,
}

fn default_epochs() -> usize {
    50
}
fn default_alpha() -> f64 {
    0.1
}
fn default_gamma() -> f64 {
    0.95
}
fn default_eps_start() -> f64 {
    1.0
}
fn default_eps_end() -> f64 {
    0.05
}

impl Default for QConfig {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            alpha: default_alpha(),
            gamma: default_gamma(),
            eps_start: default_eps_start(),
            eps_end: default_eps_end(),
        }
    }
}

impl QConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(unit(self.alpha) && self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        if !unit(self.gamma) {
            return Err(Error::Config(format!("gamma must be in [0, 1], got {}", self.gamma)));
        }
        if !unit(self.eps_start) || !unit(self.eps_end) {
            return Err(Error::Config("epsilon values must be in [0, 1]".into()));
        }
        Ok(())
    }

    /// Exploration rate of epoch `e`, linear from `eps_start` to `eps_end`.
    pub fn epsilon(&self, e: usize) -> f64 {
        if self.epochs <= 1 {
            return self.eps_start;
        }
        let f = e.min(self.epochs - 1) as f64 / (self.epochs - 1) as f64;
        self.eps_start + (self.eps_end - self.eps_start) * f
    }
}

/// Pair of Q tables, `N_STATES × M`, row-major by state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleQ {
    pub qa: Vec<f64>,
    pub qb: Vec<f64>,
    m: usize,
}

impl DoubleQ {
    fn new(m: usize) -> Self {
        Self {
            qa: vec![0.0; N_STATES * m],
            qb: vec![0.0; N_STATES * m],
            m,
        }
    }

    /// Combined action values of a state.
    pub fn values(&self, s: usize) -> Vec<f64> {
        let r = s * self.m..(s + 1) * self.m;
        self.qa[r.clone()].iter().zip(&self.qb[r]).map(|(a, b)| a + b).collect()
    }

    fn argmax(q: &[f64], s: usize, m: usize, allowed: &[bool]) -> Option<usize> {
        let row = &q[s * m..(s + 1) * m];
        let mut best: Option<(usize, f64)> = None;
        for (a, &v) in row.iter().enumerate().filter(|&(a, _)| allowed[a]) {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((a, v));
            }
        }
        best.map(|(a, _)| a)
    }

    fn greedy(&self, s: usize, allowed: &[bool]) -> Option<usize> {
        let v = self.values(s);
        Self::argmax(&v, 0, self.m, allowed)
    }

    /// One double-Q update; `next` is `None` at the end of an episode.
    #[allow(clippy::too_many_arguments)]
    fn update(&mut self, rng: &mut ChaCha8Rng, cfg: &QConfig, s: usize, a: usize, r: f64, next: Option<(usize, &[bool])>) {
        let m = self.m;
        let (upd, eval) = if rng.random::<bool>() {
            (&mut self.qa, &self.qb)
        } else {
            (&mut self.qb, &self.qa)
        };
        let target = r + match next {
            Some((s2, allowed)) => match Self::argmax(upd, s2, m, allowed) {
                Some(a2) => cfg.gamma * eval[s2 * m + a2],
                None => 0.0,
            },
            None => 0.0,
        };
        let q = &mut upd[s * m + a];
        *q += cfg.alpha * (target - *q);
    }
}

/// Meta-feature vector used for clustering: log sizes, log budget,
/// sparsity, task one-hot and every extra meta-feature, in that order.
fn raw_features(d: &DatasetMeta, extra_keys: &[String]) -> Vec<f64> {
    let mut v = vec![
        (d.n_train as f64).ln(),
        (d.n_features as f64).ln(),
        d.time_budget.ln(),
        f64::from(u8::from(d.is_sparse)),
    ];
    for t in ["binary", "multiclass", "regression"] {
        v.push(f64::from(u8::from(d.task_type == t)));
    }
    v.extend(extra_keys.iter().map(|k| d.extra.get(k).copied().unwrap_or(0.0)));
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QModel {
    pub extra_keys: Vec<String>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub kmeans: KMeans<f64>,
    pub tables: Vec<DoubleQ>,
}

impl QModel {
    pub fn features(&self, d: &DatasetMeta) -> Vec<f64> {
        raw_features(d, &self.extra_keys)
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn cluster_of(&self, d: &DatasetMeta) -> usize {
        self.kmeans.predict(&self.features(d))
    }
}

/// Per-episode bookkeeping shared by training and play.
#[derive(Debug, Clone)]
struct Episode {
    tracker: Tracker,
    round: Round,
    actions: Vec<usize>,
}

impl Episode {
    fn new(ctx: &EpisodeContext) -> Self {
        Self {
            tracker: Tracker::new(ctx),
            round: ctx.round,
            actions: vec![0; ctx.n_algorithms],
        }
    }

    fn state(&self) -> usize {
        let tr = &self.tracker;
        let frac = (tr.remaining / tr.budget).clamp(0.0, 1.0);
        let decile = ((frac * BUDGET_BUCKETS as f64) as usize).min(BUDGET_BUCKETS - 1);
        decile * TRIED_BUCKETS + tr.tried_count().min(TRIED_BUCKETS - 1)
    }

    /// Algorithms that can still be extended. Round 2 masks exhausted grids.
    fn allowed(&self) -> Vec<bool> {
        let m = self.tracker.n_algorithms();
        match self.round {
            Round::R1 => vec![true; m],
            Round::R2 => (0..m).map(|a| self.tracker.next_p(a).is_some()).collect(),
        }
    }

    /// Turns the chosen algorithm into a protocol action; `None` means every
    /// grid is exhausted and the incumbent's full-data query is repeated.
    fn action(&mut self, choice: Option<usize>) -> Action {
        let tr = &mut self.tracker;
        tr.record_action();
        match self.round {
            Round::R2 => match choice {
                Some(algo) => Action::R2(ActionR2 {
                    algo,
                    p: tr.next_p(algo).expect("allowed algorithm"),
                }),
                None => Action::R2(ActionR2 {
                    algo: tr.incumbent_or(0),
                    p: GridFraction::LAST,
                }),
            },
            Round::R1 => {
                let algo = choice.unwrap_or(0);
                let portion = R1_PORTIONS[self.actions[algo] % R1_PORTIONS.len()];
                self.actions[algo] += 1;
                Action::R1(ActionR1 {
                    reveal_algo: algo,
                    delta_t: portion * tr.budget,
                    incumbent: tr.incumbent_or(algo),
                })
            }
        }
    }
}

/// Tabular double Q-learning over `(remaining-budget decile, tried count)`
/// states with one action per algorithm. With `clusters > 1`, datasets are
/// grouped by K-means on standardized meta-features and each group gets its
/// own tables; a new dataset uses the tables of its nearest centroid.
///
/// Training plays ε-greedy episodes on the meta-training datasets. The
/// reward of a step is the area it adds under the best-validation-score
/// curve: the score gain times the fraction of budget still left.
#[derive(Debug, Clone)]
pub struct QLearning {
    config: QConfig,
    clusters: usize,
    seed: u64,
    model: Option<QModel>,
    episode: Option<(usize, Episode)>,
}

impl QLearning {
    pub fn new(config: QConfig, clusters: usize, seed: u64) -> Self {
        Self {
            config,
            clusters: clusters.max(1),
            seed,
            model: None,
            episode: None,
        }
    }

    pub fn model(&self) -> Option<&QModel> {
        self.model.as_ref()
    }

    /// Greedy algorithm at the start of an episode on a dataset of `cluster`.
    pub fn start_choice(&self, cluster: usize) -> Option<usize> {
        let model = self.model.as_ref()?;
        let t = &model.tables[cluster];
        t.greedy((BUDGET_BUCKETS - 1) * TRIED_BUCKETS, &vec![true; t.m])
    }

    fn fit_clusters(&self, slice: &MetaSlice<'_>) -> Result<(Vec<String>, Vec<f64>, Vec<f64>, KMeans<f64>)> {
        let mut extra_keys: Vec<String> = (0..slice.len())
            .flat_map(|k| slice.dataset(k).extra.keys().cloned())
            .collect();
        extra_keys.sort();
        extra_keys.dedup();
        let raw: Vec<Vec<f64>> = (0..slice.len()).map(|k| raw_features(slice.dataset(k), &extra_keys)).collect();
        let dim = raw[0].len();
        let n = raw.len() as f64;
        let mean: Vec<f64> = (0..dim).map(|d| raw.iter().map(|r| r[d]).sum::<f64>() / n).collect();
        let scale: Vec<f64> = (0..dim)
            .map(|d| {
                let var = raw.iter().map(|r| (r[d] - mean[d]).powi(2)).sum::<f64>() / n;
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let rows: Vec<Vec<f64>> = raw
            .iter()
            .map(|r| r.iter().zip(mean.iter().zip(&scale)).map(|(x, (m, s))| (x - m) / s).collect())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(KMEANS_STREAM);
        let km = KMeans::fit(&rows, self.clusters, &mut rng)?;
        Ok((extra_keys, mean, scale, km))
    }
}

/// Plays one ε-greedy training episode and updates `table`.
fn train_episode(
    table: &mut DoubleQ,
    cfg: &QConfig,
    eps: f64,
    rng: &mut ChaCha8Rng,
    slice: &MetaSlice<'_>,
    k: usize,
) -> Result<()> {
    let md = slice.meta_dataset();
    let ds = slice.ids()[k];
    let (mut env, mut obs) = Env::reset(md, ds)?;
    let ctx = EpisodeContext {
        dataset: slice.dataset(k).clone(),
        round: md.round(),
        n_algorithms: md.n_algorithms(),
        budget: env.budget(),
    };
    let mut ep = Episode::new(&ctx);
    ep.tracker.observe(&obs);
    let budget = ctx.budget;
    for _ in 0..MAX_TRAIN_STEPS {
        let s = ep.state();
        let allowed = ep.allowed();
        let open: Vec<usize> = (0..allowed.len()).filter(|&a| allowed[a]).collect();
        let choice = if open.is_empty() {
            None
        } else if rng.random::<f64>() < eps {
            Some(open[rng.random_range(0..open.len())])
        } else {
            table.greedy(s, &allowed)
        };
        let before = ep.tracker.best_valid();
        let action = ep.action(choice);
        obs = env.step(&action)?;
        ep.tracker.observe(&obs);
        let gain = ep.tracker.best_valid() - before;
        let reward = gain * (ep.tracker.remaining / budget).max(0.0);
        if let Some(a) = choice {
            if obs.done() {
                table.update(rng, cfg, s, a, reward, None);
            } else {
                let allowed2 = ep.allowed();
                table.update(rng, cfg, s, a, reward, Some((ep.state(), &allowed2)));
            }
        }
        if obs.done() {
            break;
        }
    }
    Ok(())
}

impl Agent for QLearning {
    fn meta_train(&mut self, slice: &MetaSlice<'_>) -> Result<()> {
        if slice.is_empty() {
            return Err(Error::NotTrainable("meta-training slice is empty".into()));
        }
        let (extra_keys, mean, scale, kmeans) = self.fit_clusters(slice)?;
        let m = slice.n_algorithms();
        let mut tables = vec![DoubleQ::new(m); kmeans.k()];
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(TRAIN_STREAM);
        for e in 0..self.config.epochs {
            let eps = self.config.epsilon(e);
            for k in 0..slice.len() {
                let c = kmeans.assignments[k];
                train_episode(&mut tables[c], &self.config, eps, &mut rng, slice, k)?;
            }
        }
        self.model = Some(QModel {
            extra_keys,
            mean,
            scale,
            kmeans,
            tables,
        });
        Ok(())
    }

    fn start_episode(&mut self, ctx: &EpisodeContext) -> Result<()> {
        let model = self.model.as_ref().ok_or(Error::NotTrained("q_learning"))?;
        let cluster = model.cluster_of(&ctx.dataset);
        self.episode = Some((cluster, Episode::new(ctx)));
        Ok(())
    }

    fn suggest(&mut self, obs: &Observation) -> Result<Action> {
        let model = self.model.as_ref().ok_or(Error::NotTrained("q_learning"))?;
        let (cluster, ep) = self
            .episode
            .as_mut()
            .ok_or(Error::NotTrained("q_learning: start_episode was not called"))?;
        ep.tracker.observe(obs);
        let table = &model.tables[*cluster];
        let choice = table.greedy(ep.state(), &ep.allowed());
        Ok(ep.action(choice))
    }

    fn clone_box(&self) -> Box<dyn Agent> {
        Box::new(self.clone())
    }
}
