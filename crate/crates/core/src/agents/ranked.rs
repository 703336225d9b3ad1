use super::{Agent, EpisodeContext, RankTable, Tracker, R1_PORTIONS};
use crate::env::{Action, ActionR1, ActionR2, Observation};
use crate::error::{Error, Result};
use crate::lc::GridFraction;
use crate::meta::{MetaSlice, Round};

/// Works down the meta-training ALC ranking one algorithm at a time and
/// moves on when the current curve stalls: the last two validation
/// increments are both below `stale_threshold`. An algorithm is never
/// resumed after being left. Once the ranking is used up it extends the
/// best algorithm seen.
///
/// In round 1 the first slice given to an algorithm is the predicted time of
/// its first curve point, and every further slice doubles.
#[derive(Debug, Clone)]
pub struct RankedScheduler {
    stale_threshold: f64,
    table: Option<RankTable>,
    /// Mean time of the first validation point over the budget, per algorithm.
    first_point: Vec<f64>,
    position: usize,
    given: usize,
    tracker: Option<Tracker>,
}

impl RankedScheduler {
    pub fn new(stale_threshold: f64) -> Self {
        Self {
            stale_threshold,
            table: None,
            first_point: Vec::new(),
            position: 0,
            given: 0,
            tracker: None,
        }
    }

    pub fn table(&self) -> Option<&RankTable> {
        self.table.as_ref()
    }

    /// Predicted first-point time as a fraction of the budget.
    pub fn first_point_fraction(&self, algo: usize) -> Option<f64> {
        self.first_point.get(algo).copied()
    }

    fn stale(&self, tr: &Tracker, algo: usize) -> bool {
        let h = tr.history(algo);
        let n = h.len();
        n >= 3 && h[n - 1].1 - h[n - 2].1 < self.stale_threshold && h[n - 2].1 - h[n - 3].1 < self.stale_threshold
    }

    fn r1_slice(&self, algo: usize, budget: f64) -> f64 {
        let base = self.first_point.get(algo).copied().filter(|&f| f > 0.0).unwrap_or(R1_PORTIONS[0]);
        base * budget * 2f64.powi(self.given.min(60) as i32)
    }
}

impl Agent for RankedScheduler {
    fn meta_train(&mut self, slice: &MetaSlice<'_>) -> Result<()> {
        self.table = Some(RankTable::by_average_alc(slice)?);
        self.first_point = (0..slice.n_algorithms())
            .map(|j| match slice.round() {
                Round::R1 => {
                    let times: Vec<f64> = (0..slice.len())
                        .filter_map(|k| {
                            let first = slice.r1(k, j)?.valid.points().first()?.t;
                            Some(first / slice.dataset(k).time_budget)
                        })
                        .collect();
                    if times.is_empty() {
                        0.0
                    } else {
                        times.iter().sum::<f64>() / times.len() as f64
                    }
                }
                Round::R2 => 0.0,
            })
            .collect();
        Ok(())
    }

    fn start_episode(&mut self, ctx: &EpisodeContext) -> Result<()> {
        self.position = 0;
        self.given = 0;
        self.tracker = Some(Tracker::new(ctx));
        Ok(())
    }

    fn suggest(&mut self, obs: &Observation) -> Result<Action> {
        let table = self.table.as_ref().ok_or(Error::NotTrained("ranked_scheduler"))?;
        let mut tr = self
            .tracker
            .take()
            .ok_or(Error::NotTrained("ranked_scheduler: start_episode was not called"))?;
        tr.observe(obs);
        tr.record_action();
        let order = table.order.clone();

        while self.position < order.len() {
            let algo = order[self.position];
            let exhausted = matches!(obs, Observation::R2(_)) && tr.next_p(algo).is_none();
            if exhausted || self.stale(&tr, algo) {
                self.position += 1;
                self.given = 0;
            } else {
                break;
            }
        }

        let action = match (obs, order.get(self.position).copied()) {
            (Observation::R2(_), Some(algo)) => Action::R2(ActionR2 {
                algo,
                p: tr.next_p(algo).expect("checked above"),
            }),
            (Observation::R2(_), None) => {
                let algo = tr.incumbent_or(order[0]);
                Action::R2(ActionR2 {
                    algo,
                    p: tr.next_p(algo).unwrap_or(GridFraction::LAST),
                })
            }
            (Observation::R1(_), current) => {
                let algo = current.unwrap_or_else(|| tr.incumbent_or(order[0]));
                let delta_t = self.r1_slice(algo, tr.budget);
                Action::R1(ActionR1 {
                    reveal_algo: algo,
                    delta_t,
                    incumbent: tr.incumbent_or(algo),
                })
            }
        };
        self.given += 1;
        self.tracker = Some(tr);
        Ok(action)
    }

    fn clone_box(&self) -> Box<dyn Agent> {
        Box::new(self.clone())
    }
}
