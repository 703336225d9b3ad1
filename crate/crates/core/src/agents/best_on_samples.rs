use super::{Agent, EpisodeContext, RankTable, Tracker, R1_PORTIONS};
use crate::env::{Action, ActionR1, ActionR2, Observation};
use crate::error::{Error, Result};
use crate::lc::GridFraction;
use crate::meta::MetaSlice;

/// Probes every algorithm on a small sample first, then keeps extending the
/// probe winner. Whenever the exploited algorithm's latest validation score
/// falls below another algorithm's, that algorithm takes over.
#[derive(Debug, Clone)]
pub struct BestOnSamples {
    probe_fraction: f64,
    table: Option<RankTable>,
    order: Vec<usize>,
    probed: usize,
    exploit_steps: usize,
    tracker: Option<Tracker>,
}

impl BestOnSamples {
    /// `probe_fraction` is the round-1 probe length as a fraction of the budget.
    pub fn new(probe_fraction: f64) -> Self {
        Self {
            probe_fraction,
            table: None,
            order: Vec::new(),
            probed: 0,
            exploit_steps: 0,
            tracker: None,
        }
    }

    /// Highest latest score among algorithms that can still be extended.
    fn leader(tr: &Tracker, open: impl Fn(usize) -> bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for a in (0..tr.n_algorithms()).filter(|&a| open(a)) {
            let v = tr.latest(a).unwrap_or(f64::NEG_INFINITY);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((a, v));
            }
        }
        best.map(|(a, _)| a)
    }
}

impl Agent for BestOnSamples {
    fn meta_train(&mut self, slice: &MetaSlice<'_>) -> Result<()> {
        self.table = Some(RankTable::by_average_rank(slice)?);
        Ok(())
    }

    fn start_episode(&mut self, ctx: &EpisodeContext) -> Result<()> {
        self.order = match &self.table {
            Some(t) if t.order.len() == ctx.n_algorithms => t.order.clone(),
            _ => (0..ctx.n_algorithms).collect(),
        };
        self.probed = 0;
        self.exploit_steps = 0;
        self.tracker = Some(Tracker::new(ctx));
        Ok(())
    }

    fn suggest(&mut self, obs: &Observation) -> Result<Action> {
        let tr = self
            .tracker
            .as_mut()
            .ok_or(Error::NotTrained("best_on_samples: start_episode was not called"))?;
        tr.observe(obs);
        tr.record_action();

        if self.probed < self.order.len() {
            let algo = self.order[self.probed];
            self.probed += 1;
            return Ok(match obs {
                Observation::R2(_) => Action::R2(ActionR2 {
                    algo,
                    p: GridFraction::FIRST,
                }),
                Observation::R1(_) => Action::R1(ActionR1 {
                    reveal_algo: algo,
                    delta_t: self.probe_fraction * tr.budget,
                    incumbent: tr.incumbent_or(algo),
                }),
            });
        }

        let k = self.exploit_steps;
        self.exploit_steps += 1;
        Ok(match obs {
            Observation::R2(_) => match Self::leader(tr, |a| tr.next_p(a).is_some()) {
                Some(algo) => Action::R2(ActionR2 {
                    algo,
                    p: tr.next_p(algo).expect("open algorithm"),
                }),
                None => Action::R2(ActionR2 {
                    algo: tr.incumbent_or(self.order[0]),
                    p: GridFraction::LAST,
                }),
            },
            Observation::R1(_) => {
                let algo = Self::leader(tr, |_| true).unwrap_or(self.order[0]);
                Action::R1(ActionR1 {
                    reveal_algo: algo,
                    delta_t: R1_PORTIONS[k % R1_PORTIONS.len()] * tr.budget,
                    incumbent: tr.incumbent_or(algo),
                })
            }
        })
    }

    fn clone_box(&self) -> Box<dyn Agent> {
        Box::new(self.clone())
    }
}
