use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::{ExperimentOutcome, ExperimentReport};
use crate::env::{replay, ReplayOutcome, Transcript};
use crate::error::{Error, Result};
use crate::lc::{aggregate, worst_of_runs, AlcConfig};
use crate::meta;
use crate::TOOL_VERSION;

pub fn transcript_file_name(t: &Transcript) -> String {
    format!("{}__{}__run{}.jsonl", t.header.agent, t.header.dataset, t.header.run)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// `agent,<dataset...>,avg`, one row per agent, best average first.
pub fn leaderboard_csv(report: &ExperimentReport) -> String {
    let s = &report.score;
    let mut out = String::from("agent");
    for d in &s.datasets {
        write!(out, ",{d}").unwrap();
    }
    out.push_str(",avg\n");
    for id in &s.ranking {
        let j = s.agent_index(id).expect("ranked agent exists");
        out.push_str(id);
        for v in &s.alc[j] {
            write!(out, ",{v}").unwrap();
        }
        writeln!(out, ",{}", s.mu[j]).unwrap();
    }
    out
}

/// One row per dataset and one column per agent in rank order, closed by
/// an `avg` row.
pub fn per_dataset_csv(report: &ExperimentReport) -> String {
    let s = &report.score;
    let cols: Vec<usize> = s.ranking.iter().map(|id| s.agent_index(id).expect("ranked agent exists")).collect();
    let mut out = String::from("dataset");
    for &j in &cols {
        write!(out, ",{}", s.agents[j]).unwrap();
    }
    out.push('\n');
    for (i, d) in s.datasets.iter().enumerate() {
        out.push_str(d);
        for &j in &cols {
            write!(out, ",{}", s.alc[j][i]).unwrap();
        }
        out.push('\n');
    }
    out.push_str("avg");
    for &j in &cols {
        write!(out, ",{}", s.mu[j]).unwrap();
    }
    out.push('\n');
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub agent: String,
    /// Worst-run ALC per dataset, in the report's dataset order.
    pub scores: Vec<f64>,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leaderboard {
    pub tool_version: String,
    pub config_hash: String,
    pub datasets: Vec<String>,
    pub rows: Vec<LeaderboardRow>,
}

pub fn leaderboard(report: &ExperimentReport) -> Leaderboard {
    let s = &report.score;
    let rows = s
        .ranking
        .iter()
        .enumerate()
        .map(|(r, id)| {
            let j = s.agent_index(id).expect("ranked agent exists");
            LeaderboardRow {
                rank: r + 1,
                agent: id.clone(),
                scores: s.alc[j].clone(),
                mu: s.mu[j],
                sigma: s.sigma[j],
            }
        })
        .collect();
    Leaderboard {
        tool_version: report.tool_version.clone(),
        config_hash: report.config_hash.clone(),
        datasets: s.datasets.clone(),
        rows,
    }
}

pub fn leaderboard_json(report: &ExperimentReport) -> String {
    to_json(&leaderboard(report))
}

/// Provenance line prepended to the CSV files `run` writes.
fn csv_stamp(report: &ExperimentReport) -> String {
    format!("# tool_version={} config_hash={}\n", report.tool_version, report.config_hash)
}

/// Writes `report.json`, `leaderboard.csv`, `leaderboard.json`,
/// `per_dataset.csv` and `transcripts/*.jsonl` under `dir`.
pub fn write_artifacts(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    let tdir = dir.join("transcripts");
    fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
    let r = &outcome.report;
    write(&dir.join("report.json"), &to_json(r))?;
    write(&dir.join("leaderboard.csv"), &(csv_stamp(r) + &leaderboard_csv(r)))?;
    write(&dir.join("per_dataset.csv"), &(csv_stamp(r) + &per_dataset_csv(r)))?;
    write(&dir.join("leaderboard.json"), &leaderboard_json(r))?;
    for t in &outcome.transcripts {
        write(&tdir.join(transcript_file_name(t)), &t.to_jsonl())?;
    }
    Ok(())
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report: ExperimentReport = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let again = report.score.recompute()?;
    if again != report.score {
        return Err(Error::Integrity(format!(
            "{}: means or ranking disagree with the score matrix",
            path.display()
        )));
    }
    Ok(report)
}

pub fn read_transcript(path: &Path) -> Result<Transcript> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Transcript::from_jsonl(&text).map_err(|e| match e {
        Error::Integrity(msg) => Error::Integrity(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Rebuilds a report from a directory of transcripts. Every transcript must
/// pass its integrity check and share the same round, ALC settings and
/// config hash; every agent must have the same runs on every dataset.
pub fn score_transcripts(dir: &Path) -> Result<ExperimentReport> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "jsonl") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyInput("transcript directory"));
    }

    let mut cells: BTreeMap<(String, String), BTreeMap<usize, f64>> = BTreeMap::new();
    let mut first: Option<Transcript> = None;
    for path in &paths {
        let t = read_transcript(path)?;
        if let Some(f) = &first {
            let (a, b) = (&f.header, &t.header);
            if (a.round, a.alc_config, a.eval_on, &a.config_hash) != (b.round, b.alc_config, b.eval_on, &b.config_hash) {
                return Err(Error::InvalidInput(format!(
                    "{} comes from a different experiment than {}",
                    path.display(),
                    paths[0].display()
                )));
            }
        }
        let key = (t.header.agent.clone(), t.header.dataset.clone());
        if cells.entry(key).or_default().insert(t.header.run, t.alc).is_some() {
            return Err(Error::InvalidInput(format!("duplicate run in {}", path.display())));
        }
        first.get_or_insert(t);
    }
    let first = first.expect("at least one transcript");

    let mut agents: Vec<String> = cells.keys().map(|k| k.0.clone()).collect();
    let mut datasets: Vec<String> = cells.keys().map(|k| k.1.clone()).collect();
    agents.dedup();
    datasets.sort();
    datasets.dedup();
    let run_ids: Vec<usize> = cells.values().next().expect("non-empty").keys().copied().collect();

    let mut runs = Vec::with_capacity(agents.len());
    let mut worst = Vec::with_capacity(agents.len());
    for a in &agents {
        let mut row_runs = Vec::with_capacity(datasets.len());
        let mut row = Vec::with_capacity(datasets.len());
        for d in &datasets {
            let cell = cells
                .get(&(a.clone(), d.clone()))
                .ok_or_else(|| Error::InvalidInput(format!("no transcript for agent '{a}' on dataset '{d}'")))?;
            if cell.keys().copied().collect::<Vec<_>>() != run_ids {
                return Err(Error::InvalidInput(format!(
                    "agent '{a}' on dataset '{d}' has a different set of runs"
                )));
            }
            let v: Vec<f64> = cell.values().copied().collect();
            row.push(worst_of_runs(&v)?);
            row_runs.push(v);
        }
        runs.push(row_runs);
        worst.push(row);
    }
    Ok(ExperimentReport {
        tool_version: TOOL_VERSION.into(),
        config_hash: first.header.config_hash.clone(),
        round: first.header.round,
        alc_config: first.header.alc_config,
        eval_on: first.header.eval_on,
        split: None,
        score: aggregate(agents, datasets, worst)?,
        runs,
        failures: Vec::new(),
    })
}

/// Replays a transcript file against a meta-dataset directory.
pub fn replay_file(transcript: &Path, data: &Path, alc_override: Option<AlcConfig<f64>>) -> Result<ReplayOutcome> {
    let t = read_transcript(transcript)?;
    let md = meta::load(data)?;
    replay(&t, &md, alc_override)
}
