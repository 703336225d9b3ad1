//! Synthetic meta-datasets built from parameterized sigmoids whose shape
//! parameters come from low-rank dataset x algorithm factorizations.
//!
//! For each cell `(i, j)` and each shape parameter `h` the affinity is
//! `a_h = u_h[i] . v_h[j]`, with all factor entries i.i.d. standard normal.
//! The affinities are squashed into ranges:
//!
//! ```text
//! L  = 0.2 + 0.8 * sig(a_L)      asymptote, and the score at x = 1
//! k  = 1   + 9   * sig(a_k)      steepness
//! x0 = 0.1 + 0.8 * sig(a_x0)     inflection point
//! ```
//!
//! The clean curve is the logistic `sig(k (x - x0))` rescaled to run from 0
//! at `x = 0` to `L` at `x = 1`, so the final score depends only on `a_L`.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), seeded from the config
//! seed. Stream 0 draws the factor matrices, stream 1 the dataset
//! meta-features, and stream `2 + i * n_algorithms + j` the noise of cell
//! `(i, j)`, so cells can be generated in parallel with identical output.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lc::{Anchor, CurvePoint, GridFraction, SizeCurveTriplet, TimeCurve};
use crate::meta::{AlgoMeta, CurveTable, DatasetMeta, HyperValue, MetaDataset, Round, TimeCurvePair};

/// Number of time points on each round-1 curve.
pub const R1_POINTS: usize = 20;
const TASK_TYPES: [&str; 3] = ["binary", "multiclass", "regression"];
const FAMILIES: [&str; 4] = ["KNN", "MLP", "Adaboost", "SGD"];
const METRIC: &str = "synthetic_score";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub round: Round,
    pub n_datasets: usize,
    pub n_algorithms: usize,
    #[serde(default = "defaults::latent_dim")]
    pub latent_dim: usize,
    #[serde(default = "defaults::noise_sigma")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// Episode budget written into every dataset's metadata, in seconds.
    #[serde(default = "defaults::budget")]
    pub budget: f64,
    /// Round-2 cost of training on the full data, before per-cell scaling.
    #[serde(default = "defaults::cost_scale")]
    pub cost_scale: f64,
}

mod defaults {
    pub fn latent_dim() -> usize {
        4
    }
    pub fn noise_sigma() -> f64 {
        0.02
    }
    pub fn budget() -> f64 {
        100.0
    }
    pub fn cost_scale() -> f64 {
        10.0
    }
}

impl SynthConfig {
    pub fn new(round: Round, n_datasets: usize, n_algorithms: usize) -> Self {
        Self {
            round,
            n_datasets,
            n_algorithms,
            latent_dim: defaults::latent_dim(),
            noise_sigma: defaults::noise_sigma(),
            seed: 0,
            budget: defaults::budget(),
            cost_scale: defaults::cost_scale(),
        }
    }

    /// 200 datasets x 20 algorithms = 4000 time curves.
    pub fn round1_default() -> Self {
        Self::new(Round::R1, 200, 20)
    }

    /// 300 datasets x 40 algorithms = 12000 curve triplets.
    pub fn round2_default() -> Self {
        Self::new(Round::R2, 300, 40)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_datasets == 0 || self.n_algorithms == 0 || self.latent_dim == 0 {
            return bad("n_datasets, n_algorithms and latent_dim must be >= 1".into());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return bad(format!("budget must be > 0, got {}", self.budget));
        }
        if !(self.cost_scale.is_finite() && self.cost_scale > 0.0) {
            return bad(format!("cost_scale must be > 0, got {}", self.cost_scale));
        }
        Ok(())
    }
}

/// Shape parameters driven by a factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Asymptote = 0,
    Slope = 1,
    Inflection = 2,
}

/// Row-major factor matrices `U_h` (datasets x d) and `V_h` (algorithms x d)
/// for each of the three shape parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    dim: usize,
    n_datasets: usize,
    n_algorithms: usize,
    u: [Vec<f64>; 3],
    v: [Vec<f64>; 3],
}

impl LatentModel {
    pub fn draw(cfg: &SynthConfig) -> Self {
        let mut rng = stream(cfg.seed, 0);
        let mut normal = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.sample(StandardNormal)).collect() };
        let d = cfg.latent_dim;
        let mut u: [Vec<f64>; 3] = Default::default();
        let mut v: [Vec<f64>; 3] = Default::default();
        for h in 0..3 {
            u[h] = normal(cfg.n_datasets * d);
            v[h] = normal(cfg.n_algorithms * d);
        }
        Self {
            dim: d,
            n_datasets: cfg.n_datasets,
            n_algorithms: cfg.n_algorithms,
            u,
            v,
        }
    }

    pub fn dataset_factor(&self, h: Shape, i: usize) -> &[f64] {
        &self.u[h as usize][i * self.dim..(i + 1) * self.dim]
    }

    pub fn algorithm_factor(&self, h: Shape, j: usize) -> &[f64] {
        &self.v[h as usize][j * self.dim..(j + 1) * self.dim]
    }

    pub fn affinity(&self, h: Shape, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n_datasets && j < self.n_algorithms);
        self.dataset_factor(h, i)
            .iter()
            .zip(self.algorithm_factor(h, j))
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn sigmoid_params(&self, i: usize, j: usize) -> SigmoidParams {
        SigmoidParams {
            asymptote: 0.2 + 0.8 * logistic(self.affinity(Shape::Asymptote, i, j)),
            slope: 1.0 + 9.0 * logistic(self.affinity(Shape::Slope, i, j)),
            inflection: 0.1 + 0.8 * logistic(self.affinity(Shape::Inflection, i, j)),
        }
    }
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidParams {
    pub asymptote: f64,
    pub slope: f64,
    pub inflection: f64,
}

impl SigmoidParams {
    /// Noise-free score at budget fraction `x` in `[0, 1]`.
    pub fn value(&self, x: f64) -> f64 {
        let g = |x: f64| logistic(self.slope * (x - self.inflection));
        let (lo, hi) = (g(0.0), g(1.0));
        self.asymptote * (g(x) - lo) / (hi - lo)
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn dataset_name(i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len().max(3);
    format!("ds_{i:0width$}")
}

fn make_datasets(cfg: &SynthConfig, latent: &LatentModel) -> Vec<DatasetMeta> {
    let mut rng = stream(cfg.seed, 1);
    (0..cfg.n_datasets)
        .map(|i| {
            let n_train = 100 + rng.random_range(0..20_000u64);
            let n_features = 2 + rng.random_range(0..2_000u64);
            let is_sparse = rng.random_bool(0.25);
            let extra: BTreeMap<String, f64> = latent
                .dataset_factor(Shape::Asymptote, i)
                .iter()
                .enumerate()
                .map(|(c, &x)| (format!("latent_{c:02}"), (x * 1000.0).round() / 1000.0))
                .collect();
            DatasetMeta {
                name: dataset_name(i, cfg.n_datasets),
                task_type: TASK_TYPES[i % TASK_TYPES.len()].into(),
                metric_name: METRIC.into(),
                time_budget: cfg.budget,
                n_train,
                n_features,
                is_sparse,
                extra,
            }
        })
        .collect()
}

fn make_algorithms(cfg: &SynthConfig) -> Vec<AlgoMeta> {
    (0..cfg.n_algorithms)
        .map(|j| AlgoMeta {
            algo_id: j as u32,
            family: FAMILIES[j % FAMILIES.len()].into(),
            hyperparameters: BTreeMap::from([("variant".to_string(), HyperValue::Num((j / FAMILIES.len()) as f64))]),
        })
        .collect()
}

fn r1_cell(cfg: &SynthConfig, params: &SigmoidParams, rng: &mut ChaCha8Rng) -> TimeCurvePair {
    let mut valid = Vec::with_capacity(R1_POINTS);
    let mut test = Vec::with_capacity(R1_POINTS);
    for m in 1..=R1_POINTS {
        let x = m as f64 / R1_POINTS as f64;
        let t = cfg.budget * x;
        let clean = params.value(x);
        let ev: f64 = rng.sample(StandardNormal);
        let et: f64 = rng.sample(StandardNormal);
        valid.push(CurvePoint {
            t,
            s: clip01(clean + cfg.noise_sigma * ev),
        });
        test.push(CurvePoint {
            t,
            s: clip01(clean + cfg.noise_sigma * et),
        });
    }
    TimeCurvePair {
        valid: TimeCurve::new(valid, METRIC).expect("generated curve is valid"),
        test: TimeCurve::new(test, METRIC).expect("generated curve is valid"),
    }
}

fn r2_cell(cfg: &SynthConfig, params: &SigmoidParams, slope_affinity: f64, rng: &mut ChaCha8Rng) -> SizeCurveTriplet<f64> {
    let speed = 0.5 + logistic(slope_affinity);
    let anchors = GridFraction::all()
        .map(|p| {
            let x: f64 = p.fraction();
            let clean = params.value(x);
            let ev: f64 = rng.sample(StandardNormal);
            let etr: f64 = rng.sample(StandardNormal);
            Anchor {
                p,
                cost: cfg.cost_scale * speed * x.powf(1.5),
                train: clip01(clean + 0.2 * (1.0 - x) + cfg.noise_sigma * etr),
                valid: clip01(clean + cfg.noise_sigma * ev),
                test: clip01(clean),
            }
        })
        .collect();
    SizeCurveTriplet::new(anchors).expect("generated triplet is valid")
}

/// Draws a full synthetic meta-dataset.
pub fn generate(cfg: &SynthConfig) -> Result<MetaDataset> {
    cfg.validate()?;
    let latent = LatentModel::draw(cfg);
    let m = cfg.n_algorithms;
    let cells = 0..cfg.n_datasets * m;
    let curves = match cfg.round {
        Round::R1 => CurveTable::R1(
            cells
                .into_par_iter()
                .map(|c| {
                    let params = latent.sigmoid_params(c / m, c % m);
                    r1_cell(cfg, &params, &mut stream(cfg.seed, 2 + c as u64))
                })
                .collect(),
        ),
        Round::R2 => CurveTable::R2(
            cells
                .into_par_iter()
                .map(|c| {
                    let (i, j) = (c / m, c % m);
                    let params = latent.sigmoid_params(i, j);
                    let a_k = latent.affinity(Shape::Slope, i, j);
                    r2_cell(cfg, &params, a_k, &mut stream(cfg.seed, 2 + c as u64))
                })
                .collect(),
        ),
    };
    MetaDataset::new(make_datasets(cfg, &latent), make_algorithms(cfg), curves)
}

/// Content hash of the meta-dataset [`generate`] produces for `cfg`.
pub fn regenerate_check(cfg: &SynthConfig) -> Result<String> {
    Ok(generate(cfg)?.digest())
}
