use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One observed point of a learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint<S> {
    pub t: S,
    pub s: S,
}

/// Score of one algorithm on one dataset as a function of training time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeCurve<S> {
    points: Vec<CurvePoint<S>>,
    metric_name: String,
}

impl<S: Scalar> TimeCurve<S> {
    /// Validates that times are finite, positive and strictly increasing and
    /// that every score lies in `[0, 1]`.
    pub fn new(points: Vec<CurvePoint<S>>, metric_name: impl Into<String>) -> Result<Self> {
        let mut prev: Option<S> = None;
        for (i, pt) in points.iter().enumerate() {
            if !pt.t.is_finite() || pt.t <= S::zero() {
                return Err(Error::validation(Some(i), format!("time {} must be finite and > 0", pt.t)));
            }
            if let Some(p) = prev {
                if pt.t <= p {
                    return Err(Error::validation(
                        Some(i),
                        format!("times not strictly increasing ({p} then {})", pt.t),
                    ));
                }
            }
            check_score(pt.s, i)?;
            prev = Some(pt.t);
        }
        Ok(Self {
            points,
            metric_name: metric_name.into(),
        })
    }

    pub fn from_columns(times: &[S], scores: &[S], metric_name: impl Into<String>) -> Result<Self> {
        if times.len() != scores.len() {
            return Err(Error::validation(
                None,
                format!("{} times but {} scores", times.len(), scores.len()),
            ));
        }
        let points = times
            .iter()
            .zip(scores)
            .map(|(&t, &s)| CurvePoint { t, s })
            .collect();
        Self::new(points, metric_name)
    }

    pub fn empty(metric_name: impl Into<String>) -> Self {
        Self {
            points: Vec::new(),
            metric_name: metric_name.into(),
        }
    }

    pub fn points(&self) -> &[CurvePoint<S>] {
        &self.points
    }

    pub fn metric_name(&self) -> &str {
        &self.metric_name
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&CurvePoint<S>> {
        self.points.last()
    }

    /// Number of points with `t_k <= t`.
    pub fn count_until(&self, t: S) -> usize {
        self.points.partition_point(|p| p.t <= t)
    }

    /// Score of the last point recorded at or before `t`, or 0 when nothing
    /// has been recorded yet.
    pub fn value_at(&self, t: S) -> S {
        match self.count_until(t) {
            0 => S::zero(),
            n => self.points[n - 1].s,
        }
    }
}

impl<'de, S: Scalar> Deserialize<'de> for TimeCurve<S> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw<S> {
            points: Vec<CurvePoint<S>>,
            metric_name: String,
        }
        let raw = Raw::<S>::deserialize(de)?;
        TimeCurve::new(raw.points, raw.metric_name).map_err(serde::de::Error::custom)
    }
}

fn check_score<S: Scalar>(s: S, index: usize) -> Result<()> {
    if !s.is_finite() || s < S::zero() || s > S::one() {
        return Err(Error::validation(Some(index), format!("score {s} outside [0, 1]")));
    }
    Ok(())
}

/// A point of the ten-step training-fraction grid `{0.1, 0.2, ..., 1.0}`,
/// stored as its step number 1..=10 so grid arithmetic is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridFraction(u8);

impl GridFraction {
    pub const STEPS: u8 = 10;
    pub const FIRST: GridFraction = GridFraction(1);
    pub const LAST: GridFraction = GridFraction(Self::STEPS);

    pub fn from_step(step: u8) -> Option<Self> {
        (1..=Self::STEPS).contains(&step).then_some(Self(step))
    }

    /// Maps a fraction such as `0.3` onto the grid. Values more than 1e-9
    /// away from a grid point are rejected.
    pub fn from_fraction(p: f64) -> Option<Self> {
        if !p.is_finite() {
            return None;
        }
        let scaled = p * f64::from(Self::STEPS);
        let step = scaled.round();
        if (scaled - step).abs() > 1e-9 || !(1.0..=f64::from(Self::STEPS)).contains(&step) {
            return None;
        }
        Some(Self(step as u8))
    }

    pub fn step(self) -> u8 {
        self.0
    }

    /// Zero-based position on the grid.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn fraction<S: Scalar>(self) -> S {
        S::lit(f64::from(self.0) / f64::from(Self::STEPS))
    }

    pub fn next(self) -> Option<Self> {
        Self::from_step(self.0 + 1)
    }

    pub fn all() -> impl Iterator<Item = GridFraction> {
        (1..=Self::STEPS).map(GridFraction)
    }
}

impl fmt::Display for GridFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.fraction::<f64>())
    }
}

impl Serialize for GridFraction {
    fn serialize<Ser: Serializer>(&self, ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        ser.serialize_f64(self.fraction())
    }
}

impl<'de> Deserialize<'de> for GridFraction {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let p = f64::deserialize(de)?;
        GridFraction::from_fraction(p)
            .ok_or_else(|| serde::de::Error::custom(format!("fraction {p} is not on the 0.1 grid")))
    }
}

/// Per-fraction quantities of one algorithm on one dataset: training cost
/// and train/validation/test scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor<S> {
    pub p: GridFraction,
    pub cost: S,
    pub train: S,
    pub valid: S,
    pub test: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeCurveTriplet<S> {
    anchors: Vec<Anchor<S>>,
}

impl<S: Scalar> SizeCurveTriplet<S> {
    pub fn new(anchors: Vec<Anchor<S>>) -> Result<Self> {
        let mut prev: Option<GridFraction> = None;
        for (i, a) in anchors.iter().enumerate() {
            if prev.is_some_and(|p| a.p <= p) {
                return Err(Error::validation(Some(i), format!("fraction {} not strictly increasing", a.p)));
            }
            if !a.cost.is_finite() || a.cost <= S::zero() {
                return Err(Error::validation(Some(i), format!("cost {} must be finite and > 0", a.cost)));
            }
            check_score(a.train, i)?;
            check_score(a.valid, i)?;
            check_score(a.test, i)?;
            prev = Some(a.p);
        }
        Ok(Self { anchors })
    }

    pub fn anchors(&self) -> &[Anchor<S>] {
        &self.anchors
    }

    pub fn anchor(&self, p: GridFraction) -> Option<&Anchor<S>> {
        self.anchors
            .binary_search_by_key(&p, |a| a.p)
            .ok()
            .map(|i| &self.anchors[i])
    }

    /// True when every grid point is present.
    pub fn is_full_grid(&self) -> bool {
        self.anchors.len() == usize::from(GridFraction::STEPS)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for SizeCurveTriplet<S> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw<S> {
            anchors: Vec<Anchor<S>>,
        }
        let raw = Raw::<S>::deserialize(de)?;
        SizeCurveTriplet::new(raw.anchors).map_err(serde::de::Error::custom)
    }
}

/// One point of an agent's any-time curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step<S> {
    pub wallclock: S,
    pub s: S,
}

/// Right-continuous step function of the incumbent's score over wallclock
/// time in `[0, horizon]`. The value is 0 before the first step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentCurve<S> {
    steps: Vec<Step<S>>,
    horizon: S,
}

impl<S: Scalar> AgentCurve<S> {
    pub fn new(steps: Vec<Step<S>>, horizon: S) -> Result<Self> {
        if !horizon.is_finite() || horizon <= S::zero() {
            return Err(Error::InvalidHorizon(horizon.as_f64()));
        }
        let mut prev = S::zero();
        for (i, st) in steps.iter().enumerate() {
            if !st.wallclock.is_finite() || st.wallclock < prev || st.wallclock > horizon {
                return Err(Error::validation(
                    Some(i),
                    format!("wallclock {} out of order or beyond horizon {horizon}", st.wallclock),
                ));
            }
            if !st.s.is_finite() {
                return Err(Error::validation(Some(i), "non-finite step score"));
            }
            prev = st.wallclock;
        }
        Ok(Self { steps, horizon })
    }

    pub fn empty(horizon: S) -> Result<Self> {
        Self::new(Vec::new(), horizon)
    }

    pub fn steps(&self) -> &[Step<S>] {
        &self.steps
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn value_at(&self, t: S) -> S {
        match self.steps.partition_point(|st| st.wallclock <= t) {
            0 => S::zero(),
            n => self.steps[n - 1].s,
        }
    }

    pub fn max_score(&self) -> S {
        self.steps.iter().fold(S::zero(), |m, st| m.max(st.s))
    }
}

impl<'de, S: Scalar> Deserialize<'de> for AgentCurve<S> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw<S> {
            steps: Vec<Step<S>>,
            horizon: S,
        }
        let raw = Raw::<S>::deserialize(de)?;
        AgentCurve::new(raw.steps, raw.horizon).map_err(serde::de::Error::custom)
    }
}

/// Accumulates steps in wallclock order, keeping only the last value written
/// at a given instant and skipping steps that do not change the value.
#[derive(Debug)]
pub(crate) struct StepBuilder<S> {
    steps: Vec<Step<S>>,
}

impl<S: Scalar> StepBuilder<S> {
    pub fn new() -> Self {
        Self { steps: Vec::new() }
    }

    pub fn push(&mut self, wallclock: S, s: S) {
        if let Some(last) = self.steps.last_mut() {
            if last.wallclock == wallclock {
                last.s = s;
                let n = self.steps.len();
                let before = if n >= 2 { self.steps[n - 2].s } else { S::zero() };
                if before == s {
                    self.steps.pop();
                }
                return;
            }
            if last.s == s {
                return;
            }
        } else if s == S::zero() {
            return;
        }
        self.steps.push(Step { wallclock, s });
    }

    pub fn finish(self, horizon: S) -> Result<AgentCurve<S>> {
        AgentCurve::new(self.steps, horizon)
    }
}
