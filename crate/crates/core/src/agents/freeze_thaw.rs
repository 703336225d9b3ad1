use serde::{Deserialize, Serialize};

use super::{Agent, EpisodeContext, Tracker, R1_PORTIONS};
use crate::env::{Action, ActionR1, ActionR2, Observation};
use crate::error::{Error, Result};
use crate::lc::GridFraction;
use crate::meta::{MetaSlice, Round};

const C_MIN: f64 = 1e-3;
const C_MAX: f64 = 100.0;
const C_GRID: usize = 121;

/// Least-squares fit of `y(x) = a - b·exp(-c·x)` to one algorithm's
/// validation observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreezeThawFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Sum of squared residuals.
    pub residual: f64,
    pub n: usize,
}

impl FreezeThawFit {
    /// Flat curve at the last observed score, or at 0 with no data.
    pub fn prior(points: &[(f64, f64)]) -> Self {
        let a = points.last().map_or(0.0, |&(_, y)| y);
        let residual = points.iter().map(|&(_, y)| (y - a) * (y - a)).sum();
        Self {
            a,
            b: 0.0,
            c: 0.0,
            residual,
            n: points.len(),
        }
    }

    /// Fits `(a, b)` in closed form for each rate `c` and searches `c` on a
    /// log grid followed by golden-section refinement. Fewer than three
    /// points, or no solvable rate, gives the prior.
    pub fn fit(points: &[(f64, f64)]) -> Self {
        if points.len() < 3 {
            return Self::prior(points);
        }
        let ln_lo = C_MIN.ln();
        let step = (C_MAX.ln() - ln_lo) / (C_GRID - 1) as f64;
        let cost = |ln_c: f64| solve_ab(points, ln_c.exp()).map_or(f64::INFINITY, |(_, _, r)| r);

        let mut best: Option<(usize, f64)> = None;
        for g in 0..C_GRID {
            let r = cost(ln_lo + step * g as f64);
            if r.is_finite() && best.is_none_or(|(_, b)| r < b) {
                best = Some((g, r));
            }
        }
        let Some((g, _)) = best else {
            return Self::prior(points);
        };

        let lo = ln_lo + step * g.saturating_sub(1) as f64;
        let hi = ln_lo + step * (g + 1).min(C_GRID - 1) as f64;
        let ln_c = golden_min(cost, lo, hi, 1e-12);
        let mut c = ln_c.exp();
        if cost(ln_c) > cost(ln_lo + step * g as f64) {
            c = (ln_lo + step * g as f64).exp();
        }
        match solve_ab(points, c) {
            Some((a, b, residual)) => Self {
                a,
                b,
                c,
                residual,
                n: points.len(),
            },
            None => Self::prior(points),
        }
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.a - self.b * (-self.c * x).exp()
    }
}

/// Linear least squares for `(a, b)` at a fixed rate, with its residual.
fn solve_ab(points: &[(f64, f64)], c: f64) -> Option<(f64, f64, f64)> {
    // Columns: 1 and -exp(-c x).
    let (mut n, mut se, mut see, mut sy, mut sey) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let e = -(-c * x).exp();
        n += 1.0;
        se += e;
        see += e * e;
        sy += y;
        sey += e * y;
    }
    let det = n * see - se * se;
    if !(det.abs() > 1e-12 * n * see.max(1e-300)) {
        return None;
    }
    let a = (see * sy - se * sey) / det;
    let b = (n * sey - se * sy) / det;
    let residual = points
        .iter()
        .map(|&(x, y)| {
            let d = y - (a - b * (-c * x).exp());
            d * d
        })
        .sum();
    (a.is_finite() && b.is_finite()).then_some((a, b, residual))
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    (lo + hi) / 2.0
}

/// Parametric stand-in for freeze-thaw: extrapolates each algorithm's
/// validation curve one step ahead and extends the one with the highest
/// prediction plus an exploration bonus `beta / sqrt(n + 1)`.
#[derive(Debug, Clone)]
pub struct FreezeThaw {
    beta: f64,
    round: Option<Round>,
    actions: Vec<usize>,
    tracker: Option<Tracker>,
}

impl FreezeThaw {
    pub fn new(beta: f64) -> Self {
        Self {
            beta,
            round: None,
            actions: Vec::new(),
            tracker: None,
        }
    }

    /// Next input at which algorithm `a` would be observed, if it can be extended.
    fn next_x(&self, tr: &Tracker, a: usize) -> Option<f64> {
        match self.round? {
            Round::R2 => tr.next_p(a).map(GridFraction::fraction),
            Round::R1 => {
                let portion = R1_PORTIONS[self.actions[a] % R1_PORTIONS.len()];
                Some(tr.frontier(a) / tr.budget + portion)
            }
        }
    }

    /// Acquisition value per algorithm given everything observed so far;
    /// `-inf` for algorithms that cannot be extended.
    pub fn acquisitions(&self) -> Vec<f64> {
        let Some(tr) = &self.tracker else {
            return Vec::new();
        };
        (0..tr.n_algorithms())
            .map(|a| match self.next_x(tr, a) {
                Some(x) => {
                    let h = tr.history(a);
                    FreezeThawFit::fit(h).predict(x) + self.beta / ((h.len() + 1) as f64).sqrt()
                }
                None => f64::NEG_INFINITY,
            })
            .collect()
    }

    /// Feeds an observation without choosing an action.
    pub fn observe(&mut self, obs: &Observation) {
        if let Some(tr) = &mut self.tracker {
            tr.observe(obs);
        }
    }
}

impl Agent for FreezeThaw {
    fn meta_train(&mut self, _slice: &MetaSlice<'_>) -> Result<()> {
        Ok(())
    }

    fn start_episode(&mut self, ctx: &EpisodeContext) -> Result<()> {
        self.round = Some(ctx.round);
        self.actions = vec![0; ctx.n_algorithms];
        self.tracker = Some(Tracker::new(ctx));
        Ok(())
    }

    fn suggest(&mut self, obs: &Observation) -> Result<Action> {
        if self.tracker.is_none() {
            return Err(Error::NotTrained("freeze_thaw: start_episode was not called"));
        }
        self.observe(obs);
        let acq = self.acquisitions();
        let mut pick: Option<(usize, f64)> = None;
        for (a, &v) in acq.iter().enumerate() {
            if v > f64::NEG_INFINITY && pick.is_none_or(|(_, b)| v > b) {
                pick = Some((a, v));
            }
        }
        let tr = self.tracker.as_mut().expect("checked above");
        tr.record_action();
        Ok(match (obs, pick) {
            (Observation::R2(_), Some((algo, _))) => Action::R2(ActionR2 {
                algo,
                p: tr.next_p(algo).expect("open algorithm"),
            }),
            (Observation::R2(_), None) => Action::R2(ActionR2 {
                algo: tr.incumbent_or(0),
                p: GridFraction::LAST,
            }),
            (Observation::R1(_), pick) => {
                let algo = pick.map_or(0, |(a, _)| a);
                let portion = R1_PORTIONS[self.actions[algo] % R1_PORTIONS.len()];
                self.actions[algo] += 1;
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
