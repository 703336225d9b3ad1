use super::{Agent, EpisodeContext, RankTable, Tracker, R1_PORTIONS};
use crate::env::{Action, ActionR1, ActionR2, Observation};
use crate::error::{Error, Result};
use crate::lc::GridFraction;
use crate::meta::MetaSlice;

/// Commits to the algorithm with the best mean rank on the meta-training
/// datasets. Round 2 walks its grid upward and moves to the next ranked
/// algorithm once the grid is exhausted; round 1 feeds it the time portions
/// in turn.
#[derive(Debug, Clone, Default)]
pub struct AverageRank {
    table: Option<RankTable>,
    tracker: Option<Tracker>,
}

impl AverageRank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn table(&self) -> Option<&RankTable> {
        self.table.as_ref()
    }
}

impl Agent for AverageRank {
    fn meta_train(&mut self, slice: &MetaSlice<'_>) -> Result<()> {
        self.table = Some(RankTable::by_average_rank(slice)?);
        Ok(())
    }

    fn start_episode(&mut self, ctx: &EpisodeContext) -> Result<()> {
        self.tracker = Some(Tracker::new(ctx));
        Ok(())
    }

    fn suggest(&mut self, obs: &Observation) -> Result<Action> {
        let table = self.table.as_ref().ok_or(Error::NotTrained("average_rank"))?;
        let tr = self
            .tracker
            .as_mut()
            .ok_or(Error::NotTrained("average_rank: start_episode was not called"))?;
        tr.observe(obs);
        let k = tr.steps;
        tr.record_action();
        let top = table.top();
        Ok(match obs {
            Observation::R2(_) => {
                let next = table.order.iter().find_map(|&a| tr.next_p(a).map(|p| (a, p)));
                let (algo, p) = next.unwrap_or((top, GridFraction::LAST));
                Action::R2(ActionR2 { algo, p })
            }
            Observation::R1(_) => Action::R1(ActionR1 {
                reveal_algo: top,
                delta_t: R1_PORTIONS[k % R1_PORTIONS.len()] * tr.budget,
                incumbent: top,
            }),
        })
    }

    fn clone_box(&self) -> Box<dyn Agent> {
        Box::new(self.clone())
    }
}
