use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-dataset ALC scores for a set of agents, with each agent's mean and
/// population standard deviation across datasets.
///
/// `alc[j][i]` is the score of agent `j` on dataset `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport<S> {
    pub agents: Vec<String>,
    pub datasets: Vec<String>,
    pub alc: Vec<Vec<S>>,
    pub mu: Vec<S>,
    pub sigma: Vec<S>,
    pub n_datasets: usize,
    /// Agent ids, best mean first.
    pub ranking: Vec<String>,
}

impl<S: Scalar> ScoreReport<S> {
    pub fn agent_index(&self, agent: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == agent)
    }

    /// Re-derives mean, deviation and ranking from the stored matrix.
    pub fn recompute(&self) -> Result<Self> {
        aggregate(self.agents.clone(), self.datasets.clone(), self.alc.clone())
    }
}

fn mean<S: Scalar>(row: &[S]) -> S {
    let n = S::from_usize(row.len()).expect("length fits scalar");
    row.iter().fold(S::zero(), |acc, &x| acc + x) / n
}

fn population_std<S: Scalar>(row: &[S], mu: S) -> S {
    let n = S::from_usize(row.len()).expect("length fits scalar");
    let ss = row.iter().fold(S::zero(), |acc, &x| {
        let d = x - mu;
        acc + d * d
    });
    (ss / n).sqrt()
}

/// Builds a [`ScoreReport`] from one row of per-dataset scores per agent.
///
/// Agents are ranked by mean descending; equal means fall back to the agent
/// id in lexicographic order.
pub fn aggregate<S: Scalar>(agents: Vec<String>, datasets: Vec<String>, alc: Vec<Vec<S>>) -> Result<ScoreReport<S>> {
    if agents.is_empty() || datasets.is_empty() {
        return Err(Error::EmptyInput("score matrix"));
    }
    if alc.len() != agents.len() {
        return Err(Error::InvalidInput(format!(
            "{} agents but {} score rows",
            agents.len(),
            alc.len()
        )));
    }
    for (j, row) in alc.iter().enumerate() {
        if row.len() != datasets.len() {
            return Err(Error::InvalidInput(format!(
                "row for agent '{}' has {} scores, expected {}",
                agents[j],
                row.len(),
                datasets.len()
            )));
        }
        if let Some(i) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite score for agent '{}' on dataset '{}'",
                agents[j], datasets[i]
            )));
        }
    }
    let mut sorted = agents.clone();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput("duplicate agent id".into()));
    }

    let mu: Vec<S> = alc.iter().map(|row| mean(row)).collect();
    let sigma: Vec<S> = alc.iter().zip(&mu).map(|(row, &m)| population_std(row, m)).collect();

    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.sort_by(|&a, &b| {
        mu[b]
            .partial_cmp(&mu[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| agents[a].cmp(&agents[b]))
    });
    let ranking = order.into_iter().map(|j| agents[j].clone()).collect();

    Ok(ScoreReport {
        n_datasets: datasets.len(),
        agents,
        datasets,
        alc,
        mu,
        sigma,
        ranking,
    })
}

/// Score of repeated runs: the worst one counts.
pub fn worst_of_runs<S: Scalar>(runs: &[S]) -> Result<S> {
    runs.iter()
        .copied()
        .reduce(|a, b| a.min(b))
        .ok_or(Error::EmptyInput("run scores"))
}
