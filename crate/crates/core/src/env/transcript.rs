//! JSON-lines episode log.
//!
//! ```text
//! {"header": {...}}        protocol, dataset, data digest, agent, seed, ALC config
//! {"record": {...}}        one line per step
//! {"footer": {...}}        agent curve, ALC, SHA-256 of every preceding byte
//! ```

use serde::{Deserialize, Serialize};

use super::{agent_curve, EvalOn, Record};
use crate::error::{Error, Result};
use crate::hash::sha256_hex;
use crate::lc::{alc, AgentCurve, AlcConfig};
use crate::meta::{MetaDataset, Round};

pub const TRANSCRIPT_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub format_version: u32,
    pub tool_version: String,
    pub round: Round,
    pub dataset: String,
    pub dataset_index: usize,
    pub dataset_digest: String,
    pub agent: String,
    pub seed: u64,
    pub run: usize,
    pub alc_config: AlcConfig<f64>,
    pub eval_on: EvalOn,
    /// Hash of the experiment configuration that produced the episode.
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub records: Vec<Record>,
    pub agent_curve: AgentCurve<f64>,
    pub alc: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Line {
    Header(TranscriptHeader),
    Record(Record),
    Footer(Footer),
}

#[derive(Serialize, Deserialize)]
struct Footer {
    agent_curve: AgentCurve<f64>,
    alc: f64,
    content_sha256: String,
}

fn push_line(out: &mut String, line: &Line) {
    out.push_str(&serde_json::to_string(line).expect("serializable transcript line"));
    out.push('\n');
}

impl Transcript {
    /// Scores a finished episode and packages it.
    pub fn build(header: TranscriptHeader, records: Vec<Record>, md: &MetaDataset) -> Result<Self> {
        let curve = agent_curve(&records, md, header.dataset_index, header.eval_on)?;
        let score = alc(&curve, &header.alc_config)?;
        Ok(Self {
            header,
            records,
            agent_curve: curve,
            alc: score,
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        push_line(&mut out, &Line::Header(self.header.clone()));
        for r in &self.records {
            push_line(&mut out, &Line::Record(r.clone()));
        }
        let content_sha256 = sha256_hex(out.as_bytes());
        push_line(
            &mut out,
            &Line::Footer(Footer {
                agent_curve: self.agent_curve.clone(),
                alc: self.alc,
                content_sha256,
            }),
        );
        out
    }

    /// Parses a transcript and checks its content hash. Any malformed or
    /// altered input is an integrity error.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Integrity(msg);
        let body_end = text
            .trim_end_matches('\n')
            .rfind('\n')
            .map(|i| i + 1)
            .ok_or_else(|| bad("transcript has no footer".into()))?;
        let (body, footer_line) = text.split_at(body_end);
        let footer = match serde_json::from_str::<Line>(footer_line.trim_end_matches('\n')) {
            Ok(Line::Footer(f)) => f,
            Ok(_) => return Err(bad("last line is not a footer".into())),
            Err(e) => return Err(bad(format!("unreadable footer: {e}"))),
        };
        if sha256_hex(body.as_bytes()) != footer.content_sha256 {
            return Err(bad("content hash mismatch".into()));
        }

        let mut lines = body.lines();
        let header = match lines.next().map(serde_json::from_str::<Line>) {
            Some(Ok(Line::Header(h))) => h,
            _ => return Err(bad("first line is not a header".into())),
        };
        let records = lines
            .enumerate()
            .map(|(k, l)| match serde_json::from_str::<Line>(l) {
                Ok(Line::Record(r)) => Ok(r),
                _ => Err(bad(format!("line {} is not a record", k + 2))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            header,
            records,
            agent_curve: footer.agent_curve,
            alc: footer.alc,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub agent_curve: AgentCurve<f64>,
    pub alc: f64,
    /// False when replayed under a different ALC configuration than the one
    /// stored, in which case `alc` is not comparable with the stored value.
    pub comparable: bool,
}

/// Recomputes the curve and score of a stored transcript against `md`.
///
/// The dataset digest must match, and under the stored ALC configuration
/// the recomputed curve and score must equal the stored ones exactly.
pub fn replay(t: &Transcript, md: &MetaDataset, alc_override: Option<AlcConfig<f64>>) -> Result<ReplayOutcome> {
    let h = &t.header;
    if h.round != md.round() || h.dataset_index >= md.n_datasets() || md.dataset(h.dataset_index).name != h.dataset {
        return Err(Error::Integrity(format!("transcript dataset '{}' not found in meta-dataset", h.dataset)));
    }
    if md.dataset_digest(h.dataset_index) != h.dataset_digest {
        return Err(Error::Integrity(format!(
            "data digest mismatch for dataset '{}': transcript was produced on different curves",
            h.dataset
        )));
    }
    let curve = agent_curve(&t.records, md, h.dataset_index, h.eval_on)?;
    let cfg = alc_override.unwrap_or(h.alc_config);
    let score = alc(&curve, &cfg)?;
    let comparable = cfg == h.alc_config;
    if curve != t.agent_curve {
        return Err(Error::Integrity("recomputed agent curve differs from stored curve".into()));
    }
    if comparable && score.to_bits() != t.alc.to_bits() {
        return Err(Error::Integrity(format!("recomputed ALC {score} differs from stored {}", t.alc)));
    }
    Ok(ReplayOutcome {
        agent_curve: curve,
        alc: score,
        comparable,
    })
}
