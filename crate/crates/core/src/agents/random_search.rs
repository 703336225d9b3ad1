use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{episode_rng, Agent, EpisodeContext, Tracker, R1_PORTIONS};
use crate::env::{Action, ActionR1, ActionR2, Observation};
use crate::error::{Error, Result};
use crate::lc::GridFraction;
use crate::meta::MetaSlice;

/// Uniform choice among algorithms that still have an untried grid point
/// (round 2), or a random algorithm and time portion (round 1).
#[derive(Debug, Clone)]
pub struct RandomSearch {
    seed: u64,
    rng: Option<ChaCha8Rng>,
    tracker: Option<Tracker>,
}

impl RandomSearch {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: None,
            tracker: None,
        }
    }
}

impl Agent for RandomSearch {
    fn meta_train(&mut self, _slice: &MetaSlice<'_>) -> Result<()> {
        Ok(())
    }

    fn start_episode(&mut self, ctx: &EpisodeContext) -> Result<()> {
        self.rng = Some(episode_rng(self.seed, &ctx.dataset.name));
        self.tracker = Some(Tracker::new(ctx));
        Ok(())
    }

    fn suggest(&mut self, obs: &Observation) -> Result<Action> {
        let (Some(rng), Some(tr)) = (self.rng.as_mut(), self.tracker.as_mut()) else {
            return Err(Error::NotTrained("random_search: start_episode was not called"));
        };
        tr.observe(obs);
        tr.record_action();
        let m = tr.n_algorithms();
        Ok(match obs {
            Observation::R2(_) => {
                let open: Vec<usize> = (0..m).filter(|&a| tr.next_p(a).is_some()).collect();
                if open.is_empty() {
                    Action::R2(ActionR2 {
                        algo: rng.random_range(0..m),
                        p: GridFraction::LAST,
                    })
                } else {
                    let algo = open[rng.random_range(0..open.len())];
                    Action::R2(ActionR2 {
                        algo,
                        p: tr.next_p(algo).expect("open algorithm"),
                    })
                }
            }
            Observation::R1(_) => {
                let algo = rng.random_range(0..m);
                let portion = R1_PORTIONS[rng.random_range(0..R1_PORTIONS.len())];
                Action::R1(ActionR1 {
                    reveal_algo: algo,
                    delta_t: portion * tr.budget,
                    incumbent: tr.incumbent_or(algo),
                })
            }
        })
    }

    fn clone_box(&self) -> Box<dyn Agent> {
        Box::new(self.clone())
    }
}
