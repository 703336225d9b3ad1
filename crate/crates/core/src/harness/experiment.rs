use std::panic::{catch_unwind, AssertUnwindSafe};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AgentEntry, ExperimentConfig};
use super::episode::play_episode;
use crate::agents::Agent;
use crate::env::{EvalOn, Transcript, TranscriptHeader, TRANSCRIPT_FORMAT};
use crate::error::{Error, Result};
use crate::hash::sha256_json;
use crate::lc::{aggregate, worst_of_runs, AlcConfig, ScoreReport};
use crate::meta::{self, make_kfold, make_phase_split, MetaDataset, MetaSlice, Round, SplitKind, SplitPlan};
use crate::TOOL_VERSION;

/// An episode (or a whole meta-training step) that did not produce a score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub agent: String,
    pub dataset: String,
    pub run: usize,
    pub reason: String,
}

/// Everything `report.json` holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool_version: String,
    pub config_hash: String,
    pub round: Round,
    pub alc_config: AlcConfig<f64>,
    pub eval_on: EvalOn,
    /// Absent when the report was rebuilt from transcripts alone.
    pub split: Option<SplitPlan>,
    pub score: ScoreReport<f64>,
    /// `runs[agent][dataset][run]`: every run's ALC; `score.alc` holds the minimum.
    pub runs: Vec<Vec<Vec<f64>>>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub transcripts: Vec<Transcript>,
}

/// Hash of the settings that determine results. Paths and thread count are
/// left out; the data enters through its digest.
pub fn config_hash(cfg: &ExperimentConfig, md: &MetaDataset) -> String {
    #[derive(Serialize)]
    struct View<'a> {
        data_digest: String,
        split: SplitKind,
        agents: Vec<AgentEntry>,
        n_runs: usize,
        alc: AlcConfig<f64>,
        seed: u64,
        eval_on: EvalOn,
        max_steps: usize,
        protocol: &'a Option<Round>,
    }
    sha256_json(&View {
        data_digest: md.digest(),
        split: cfg.split,
        agents: cfg.roster(),
        n_runs: cfg.n_runs,
        alc: cfg.alc,
        seed: cfg.seed,
        eval_on: cfg.eval_on,
        max_steps: cfg.max_steps,
        protocol: &cfg.protocol,
    })
}

pub fn make_plan(split: SplitKind, n_datasets: usize, seed: u64) -> Result<SplitPlan> {
    let ids: Vec<usize> = (0..n_datasets).collect();
    match split {
        SplitKind::Kfold { k } => make_kfold(&ids, k, seed),
        SplitKind::Phase => make_phase_split(&ids, seed),
    }
}

/// Fails unless every fold keeps its test datasets out of meta-training and
/// no dataset is tested twice.
pub fn check_fold_isolation(plan: &SplitPlan, n_datasets: usize) -> Result<()> {
    let mut tested = vec![false; n_datasets];
    for (f, fold) in plan.folds.iter().enumerate() {
        if let Some(i) = fold.test.iter().find(|i| fold.train.contains(i)) {
            return Err(Error::Integrity(format!("fold {f}: dataset {i} is in both train and test")));
        }
        for &i in &fold.test {
            if i >= n_datasets || std::mem::replace(&mut tested[i], true) {
                return Err(Error::Integrity(format!("fold {f}: dataset {i} tested twice or out of range")));
            }
        }
    }
    Ok(())
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

type Trained = std::result::Result<Box<dyn Agent>, String>;

fn meta_train(entry: &AgentEntry, seed: u64, slice: &MetaSlice<'_>) -> Trained {
    let mut agent = entry.spec.build(seed).map_err(|e| e.to_string())?;
    match catch_unwind(AssertUnwindSafe(|| agent.meta_train(slice))) {
        Ok(Ok(())) => Ok(agent),
        Ok(Err(e)) => Err(format!("meta_train failed: {e}")),
        Err(p) => Err(format!("meta_train panicked: {}", panic_message(p.as_ref()))),
    }
}

/// One episode's result: an ALC, plus the transcript when it completed.
struct EpisodeResult {
    alc: f64,
    transcript: Option<Transcript>,
    failure: Option<String>,
}

fn failed(reason: String) -> EpisodeResult {
    EpisodeResult {
        alc: 0.0,
        transcript: None,
        failure: Some(reason),
    }
}

fn run_one(trained: &Trained, md: &MetaDataset, dataset: usize, header: TranscriptHeader, max_steps: usize) -> EpisodeResult {
    let agent = match trained {
        Ok(a) => a,
        Err(reason) => return failed(reason.clone()),
    };
    let mut agent = agent.clone_box();
    let played = catch_unwind(AssertUnwindSafe(|| play_episode(agent.as_mut(), md, dataset, max_steps)));
    let run = match played {
        Ok(Ok(run)) => run,
        Ok(Err(e)) => return failed(format!("episode failed: {e}")),
        Err(p) => return failed(format!("agent panicked: {}", panic_message(p.as_ref()))),
    };
    if run.truncated {
        return failed(format!("episode exceeded {max_steps} steps"));
    }
    match Transcript::build(header, run.records, md) {
        Ok(t) => EpisodeResult {
            alc: t.alc,
            transcript: Some(t),
            failure: None,
        },
        Err(e) => failed(format!("scoring failed: {e}")),
    }
}

/// Runs the experiment on an already loaded meta-dataset, without touching
/// the filesystem.
pub fn run_on(cfg: &ExperimentConfig, md: &MetaDataset) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    if let Some(p) = cfg.protocol {
        if p != md.round() {
            return Err(Error::ProtocolMismatch {
                expected: p.as_str(),
                found: md.round().as_str(),
            });
        }
    }
    let plan = make_plan(cfg.split, md.n_datasets(), cfg.seed)?;
    check_fold_isolation(&plan, md.n_datasets())?;
    let roster = cfg.roster();
    let hash = config_hash(cfg, md);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    pool.install(|| {
        let train_jobs: Vec<(usize, usize)> = (0..plan.folds.len())
            .flat_map(|f| (0..roster.len()).map(move |a| (f, a)))
            .collect();
        let trained: Vec<Trained> = train_jobs
            .par_iter()
            .map(|&(f, a)| {
                let slice = MetaSlice::new(md, &plan.folds[f].train).expect("fold ids are in range");
                let t = meta_train(&roster[a], cfg.seed, &slice);
                if let Err(reason) = &t {
                    warn!("agent '{}' fold {f}: {reason}", roster[a].id);
                }
                t
            })
            .collect();
        info!("meta-trained {} agent(s) on {} fold(s)", roster.len(), plan.folds.len());

        let mut episode_jobs = Vec::new();
        for (f, fold) in plan.folds.iter().enumerate() {
            for &ds in &fold.test {
                for a in 0..roster.len() {
                    for run in 0..cfg.n_runs {
                        episode_jobs.push((f, ds, a, run));
                    }
                }
            }
        }
        let results: Vec<EpisodeResult> = episode_jobs
            .par_iter()
            .map(|&(f, ds, a, run)| {
                let header = TranscriptHeader {
                    format_version: TRANSCRIPT_FORMAT,
                    tool_version: TOOL_VERSION.into(),
                    round: md.round(),
                    dataset: md.dataset(ds).name.clone(),
                    dataset_index: ds,
                    dataset_digest: md.dataset_digest(ds),
                    agent: roster[a].id.clone(),
                    seed: cfg.seed,
                    run,
                    alc_config: cfg.alc,
                    eval_on: cfg.eval_on,
                    config_hash: hash.clone(),
                };
                run_one(&trained[f * roster.len() + a], md, ds, header, cfg.max_steps)
            })
            .collect();

        let mut tested: Vec<usize> = plan.folds.iter().flat_map(|f| f.test.iter().copied()).collect();
        tested.sort_unstable();
        let col = |ds: usize| tested.binary_search(&ds).expect("tested dataset");
        let mut runs = vec![vec![vec![0.0; cfg.n_runs]; tested.len()]; roster.len()];
        let mut failures = Vec::new();
        let mut transcripts = Vec::new();
        for (&(_, ds, a, run), r) in episode_jobs.iter().zip(results) {
            runs[a][col(ds)][run] = r.alc;
            if let Some(reason) = r.failure {
                warn!("agent '{}' on '{}' run {run}: {reason}; scored 0", roster[a].id, md.dataset(ds).name);
                failures.push(Failure {
                    agent: roster[a].id.clone(),
                    dataset: md.dataset(ds).name.clone(),
                    run,
                    reason,
                });
            }
            transcripts.extend(r.transcript);
        }
        failures.sort_by(|x, y| (&x.agent, &x.dataset, x.run).cmp(&(&y.agent, &y.dataset, y.run)));

        let worst = runs
            .iter()
            .map(|row| row.iter().map(|r| worst_of_runs(r)).collect::<Result<Vec<f64>>>())
            .collect::<Result<Vec<_>>>()?;
        let score = aggregate(
            roster.iter().map(|a| a.id.clone()).collect(),
            tested.iter().map(|&i| md.dataset(i).name.clone()).collect(),
            worst,
        )?;
        Ok(ExperimentOutcome {
            report: ExperimentReport {
                tool_version: TOOL_VERSION.into(),
                config_hash: hash,
                round: md.round(),
                alc_config: cfg.alc,
                eval_on: cfg.eval_on,
                split: Some(plan.clone()),
                score,
                runs,
                failures,
            },
            transcripts,
        })
    })
}

/// Loads the meta-dataset, runs the experiment and writes every artifact
/// under the configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let md = meta::load(&cfg.meta_dataset)?;
    info!(
        "loaded {} datasets x {} algorithms ({})",
        md.n_datasets(),
        md.n_algorithms(),
        md.round().as_str()
    );
    let outcome = run_on(cfg, &md)?;
    super::export::write_artifacts(&outcome, &cfg.output_dir)?;
    Ok(outcome)
}
