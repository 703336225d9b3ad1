use crate::agents::{Agent, EpisodeContext};
use crate::env::{Env, Record};
use crate::error::Result;
use crate::meta::MetaDataset;

/// Actions of one episode. `truncated` is set when the step cap ended the
/// episode before the budget ran out.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRun {
    pub records: Vec<Record>,
    pub truncated: bool,
}

pub fn episode_context(md: &MetaDataset, dataset: usize) -> EpisodeContext {
    let d = md.dataset(dataset);
    EpisodeContext {
        dataset: d.clone(),
        round: md.round(),
        n_algorithms: md.n_algorithms(),
        budget: d.time_budget,
    }
}

/// Plays `agent` on one dataset until the budget is spent or `max_steps`
/// actions were taken.
pub fn play_episode(agent: &mut dyn Agent, md: &MetaDataset, dataset: usize, max_steps: usize) -> Result<EpisodeRun> {
    let (mut env, mut obs) = Env::reset(md, dataset)?;
    agent.start_episode(&episode_context(md, dataset))?;
    let mut records = Vec::new();
    while !obs.done() {
        if records.len() >= max_steps {
            return Ok(EpisodeRun { records, truncated: true });
        }
        let action = agent.suggest(&obs)?;
        obs = env.step(&action)?;
        records.push(Record {
            wallclock_after: obs.wallclock(),
            action,
            observation: obs.clone(),
        });
    }
    Ok(EpisodeRun {
        records,
        truncated: false,
    })
}
