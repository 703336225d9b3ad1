//! Meta-dataset object model: datasets, algorithms and their pre-computed curves.

mod io;
mod split;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::sha256_json;
use crate::lc::{SizeCurveTriplet, TimeCurve};

pub use io::{load, save};
pub use split::{make_kfold, make_phase_split, Fold, SplitKind, SplitPlan};

/// Which challenge protocol a meta-dataset serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Round {
    /// Curves over wallclock time.
    R1,
    /// Curves over training-data fraction, with per-fraction cost.
    R2,
}

impl Round {
    pub fn as_str(self) -> &'static str {
        match self {
            Round::R1 => "R1",
            Round::R2 => "R2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub name: String,
    pub task_type: String,
    pub metric_name: String,
    pub time_budget: f64,
    pub n_train: u64,
    pub n_features: u64,
    pub is_sparse: bool,
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

impl DatasetMeta {
    pub fn validate(&self) -> Result<()> {
        if !valid_name(&self.name) {
            return Err(Error::validation(None, format!("invalid dataset name '{}'", self.name)));
        }
        if !self.time_budget.is_finite() || self.time_budget <= 0.0 {
            return Err(Error::validation(
                None,
                format!("time budget {} must be finite and > 0", self.time_budget),
            ));
        }
        if self.n_train == 0 || self.n_features == 0 {
            return Err(Error::validation(None, "n_train and n_features must be >= 1"));
        }
        if let Some((k, v)) = self.extra.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::validation(None, format!("meta-feature '{k}' is not finite ({v})")));
        }
        Ok(())
    }
}

/// Names double as directory names, so path separators and dot-names are out.
fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Num(f64),
    Cat(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgoMeta {
    pub algo_id: u32,
    pub family: String,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, HyperValue>,
}

/// Validation and test curves of one algorithm on one time-budgeted dataset.
/// Both are sampled at the same times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeCurvePair {
    pub valid: TimeCurve<f64>,
    pub test: TimeCurve<f64>,
}

/// Curve storage, row-major over (dataset, algorithm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CurveTable {
    R1(Vec<TimeCurvePair>),
    R2(Vec<SizeCurveTriplet<f64>>),
}

impl CurveTable {
    fn len(&self) -> usize {
        match self {
            CurveTable::R1(v) => v.len(),
            CurveTable::R2(v) => v.len(),
        }
    }

    fn round(&self) -> Round {
        match self {
            CurveTable::R1(_) => Round::R1,
            CurveTable::R2(_) => Round::R2,
        }
    }
}

/// Datasets x algorithms collection of learning curves plus metadata.
///
/// Algorithms are addressed by their position in [`MetaDataset::algorithms`];
/// `algo_id` is only a label (and the curve file name on disk).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetaDataset {
    datasets: Vec<DatasetMeta>,
    algorithms: Vec<AlgoMeta>,
    curves: CurveTable,
}

impl MetaDataset {
    pub fn new(datasets: Vec<DatasetMeta>, algorithms: Vec<AlgoMeta>, curves: CurveTable) -> Result<Self> {
        if datasets.is_empty() || algorithms.is_empty() {
            return Err(Error::validation(None, "meta-dataset needs at least one dataset and one algorithm"));
        }
        for d in &datasets {
            d.validate().map_err(|e| e.in_context(format!("dataset '{}'", d.name)))?;
        }
        let mut names: Vec<&str> = datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::validation(None, format!("duplicate dataset name '{}'", w[0])));
        }
        let mut ids: Vec<u32> = algorithms.iter().map(|a| a.algo_id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::validation(None, format!("duplicate algo_id {}", w[0])));
        }
        let expected = datasets.len() * algorithms.len();
        if curves.len() != expected {
            return Err(Error::validation(
                None,
                format!("curve table has {} entries, expected {expected}", curves.len()),
            ));
        }
        if let CurveTable::R1(pairs) = &curves {
            for (k, pair) in pairs.iter().enumerate() {
                let same_times = pair.valid.len() == pair.test.len()
                    && pair.valid.points().iter().zip(pair.test.points()).all(|(a, b)| a.t == b.t);
                if !same_times {
                    return Err(Error::validation(
                        Some(k),
                        "validation and test curves must share their time points",
                    ));
                }
            }
        }
        Ok(Self {
            datasets,
            algorithms,
            curves,
        })
    }

    pub fn round(&self) -> Round {
        self.curves.round()
    }

    pub fn datasets(&self) -> &[DatasetMeta] {
        &self.datasets
    }

    pub fn algorithms(&self) -> &[AlgoMeta] {
        &self.algorithms
    }

    pub fn n_datasets(&self) -> usize {
        self.datasets.len()
    }

    pub fn n_algorithms(&self) -> usize {
        self.algorithms.len()
    }

    pub fn dataset(&self, i: usize) -> &DatasetMeta {
        &self.datasets[i]
    }

    pub fn dataset_index(&self, name: &str) -> Option<usize> {
        self.datasets.iter().position(|d| d.name == name)
    }

    pub fn curves(&self) -> &CurveTable {
        &self.curves
    }

    pub fn r1(&self, dataset: usize, algo: usize) -> Option<&TimeCurvePair> {
        match &self.curves {
            CurveTable::R1(v) => v.get(self.cell(dataset, algo)?),
            CurveTable::R2(_) => None,
        }
    }

    pub fn r2(&self, dataset: usize, algo: usize) -> Option<&SizeCurveTriplet<f64>> {
        match &self.curves {
            CurveTable::R2(v) => v.get(self.cell(dataset, algo)?),
            CurveTable::R1(_) => None,
        }
    }

    fn cell(&self, dataset: usize, algo: usize) -> Option<usize> {
        (dataset < self.datasets.len() && algo < self.algorithms.len()).then(|| dataset * self.algorithms.len() + algo)
    }

    /// SHA-256 of the canonical JSON serialization of the whole collection.
    pub fn digest(&self) -> String {
        sha256_json(self)
    }

    /// SHA-256 over one dataset's metadata, the algorithm list and that
    /// dataset's curves. Identifies the data an episode ran against.
    pub fn dataset_digest(&self, dataset: usize) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            round: Round,
            dataset: &'a DatasetMeta,
            algorithms: &'a [AlgoMeta],
            r1: Vec<&'a TimeCurvePair>,
            r2: Vec<&'a SizeCurveTriplet<f64>>,
        }
        let m = self.n_algorithms();
        let (r1, r2) = match &self.curves {
            CurveTable::R1(v) => (v[dataset * m..(dataset + 1) * m].iter().collect(), Vec::new()),
            CurveTable::R2(v) => (Vec::new(), v[dataset * m..(dataset + 1) * m].iter().collect()),
        };
        sha256_json(&View {
            round: self.round(),
            dataset: &self.datasets[dataset],
            algorithms: &self.algorithms,
            r1,
            r2,
        })
    }
}

/// Read access to the meta-training datasets of one fold. Agents only ever
/// see meta-dataset content through this view.
#[derive(Debug, Clone, Copy)]
pub struct MetaSlice<'a> {
    md: &'a MetaDataset,
    ids: &'a [usize],
}

impl<'a> MetaSlice<'a> {
    pub fn new(md: &'a MetaDataset, ids: &'a [usize]) -> Result<Self> {
        if let Some(&bad) = ids.iter().find(|&&i| i >= md.n_datasets()) {
            return Err(Error::InvalidInput(format!("dataset index {bad} out of range")));
        }
        Ok(Self { md, ids })
    }

    pub fn round(&self) -> Round {
        self.md.round()
    }

    pub fn n_algorithms(&self) -> usize {
        self.md.n_algorithms()
    }

    pub fn algorithms(&self) -> &'a [AlgoMeta] {
        self.md.algorithms()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Indices into the underlying meta-dataset.
    pub fn ids(&self) -> &'a [usize] {
        self.ids
    }

    pub fn dataset(&self, k: usize) -> &'a DatasetMeta {
        self.md.dataset(self.ids[k])
    }

    pub fn r1(&self, k: usize, algo: usize) -> Option<&'a TimeCurvePair> {
        self.md.r1(self.ids[k], algo)
    }

    pub fn r2(&self, k: usize, algo: usize) -> Option<&'a SizeCurveTriplet<f64>> {
        self.md.r2(self.ids[k], algo)
    }

    /// The underlying collection, for running training episodes on the
    /// datasets listed in [`MetaSlice::ids`].
    pub fn meta_dataset(&self) -> &'a MetaDataset {
        self.md
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::lc::{Anchor, GridFraction};

    pub fn dataset(name: &str, budget: f64) -> DatasetMeta {
        DatasetMeta {
            name: name.into(),
            task_type: "binary".into(),
            metric_name: "auc".into(),
            time_budget: budget,
            n_train: 100,
            n_features: 10,
            is_sparse: false,
            extra: BTreeMap::new(),
        }
    }

    pub fn algos(m: usize) -> Vec<AlgoMeta> {
        (0..m)
            .map(|j| AlgoMeta {
                algo_id: j as u32,
                family: "KNN".into(),
                hyperparameters: BTreeMap::new(),
            })
            .collect()
    }

    /// R2 triplet whose scores at grid step k are `f(k)` with constant cost.
    pub fn triplet(cost: f64, f: impl Fn(u8) -> (f64, f64)) -> SizeCurveTriplet<f64> {
        SizeCurveTriplet::new(
            GridFraction::all()
                .map(|p| {
                    let (valid, test) = f(p.step());
                    Anchor {
                        p,
                        cost,
                        train: valid,
                        valid,
                        test,
                    }
                })
                .collect(),
        )
        .unwrap()
    }
}
