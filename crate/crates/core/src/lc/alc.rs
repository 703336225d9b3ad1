use serde::{Deserialize, Serialize};

use super::curve::AgentCurve;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How wallclock time is mapped onto the unit interval before integrating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Normalization<S> {
    /// `t / T`
    Linear,
    /// `log(1 + t/t0) / log(1 + T/t0)`
    Log { t0: S },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlcConfig<S> {
    pub normalization: Normalization<S>,
}

impl<S: Scalar> Default for AlcConfig<S> {
    fn default() -> Self {
        Self::linear()
    }
}

impl<S: Scalar> AlcConfig<S> {
    pub fn linear() -> Self {
        Self {
            normalization: Normalization::Linear,
        }
    }

    pub fn log(t0: S) -> Result<Self> {
        let cfg = Self {
            normalization: Normalization::Log { t0 },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match self.normalization {
            Normalization::Linear => Ok(()),
            Normalization::Log { t0 } if t0.is_finite() && t0 > S::zero() => Ok(()),
            Normalization::Log { t0 } => Err(Error::Config(format!("log-mode t0 must be > 0, got {t0}"))),
        }
    }

    /// Position of wallclock `t` on the normalized `[0, 1]` axis for horizon `horizon`.
    pub fn normalized_time(&self, t: S, horizon: S) -> S {
        let t = t.max(S::zero()).min(horizon);
        match self.normalization {
            Normalization::Linear => t / horizon,
            Normalization::Log { t0 } => (t / t0).ln_1p() / (horizon / t0).ln_1p(),
        }
    }
}

/// Area under an agent's step curve over normalized time.
///
/// Each step contributes its score times the normalized width of the
/// interval until the next step (or the horizon), so the result lies in
/// `[0, max step score]`.
pub fn alc<S: Scalar>(curve: &AgentCurve<S>, cfg: &AlcConfig<S>) -> Result<S> {
    let horizon = curve.horizon();
    if !horizon.is_finite() || horizon <= S::zero() {
        return Err(Error::InvalidHorizon(horizon.as_f64()));
    }
    cfg.validate()?;
    let steps = curve.steps();
    let mut area = S::zero();
    for (k, st) in steps.iter().enumerate() {
        let end = steps.get(k + 1).map_or(horizon, |next| next.wallclock);
        let width = cfg.normalized_time(end, horizon) - cfg.normalized_time(st.wallclock, horizon);
        area = area + st.s * width;
    }
    Ok(area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lc::curve::Step;
    use proptest::prelude::*;

    fn curve(steps: &[(f64, f64)], horizon: f64) -> AgentCurve<f64> {
        AgentCurve::new(
            steps.iter().map(|&(wallclock, s)| Step { wallclock, s }).collect(),
            horizon,
        )
        .unwrap()
    }

    /// Midpoint Riemann sum of the step function on a uniform grid of the
    /// normalized axis, inverting the normalization to find wallclock.
    fn riemann(c: &AgentCurve<f64>, cfg: &AlcConfig<f64>, n: usize) -> f64 {
        let horizon = c.horizon();
        let inverse = |u: f64| match cfg.normalization {
            Normalization::Linear => u * horizon,
            Normalization::Log { t0 } => t0 * (u * (horizon / t0).ln_1p()).exp_m1(),
        };
        let h = 1.0 / n as f64;
        (0..n).map(|i| c.value_at(inverse((i as f64 + 0.5) * h))).sum::<f64>() * h
    }

    #[test]
    fn constant_curve() {
        let c = curve(&[(0.0, 0.5)], 100.0);
        assert_eq!(alc(&c, &AlcConfig::linear()).unwrap(), 0.5);
    }

    #[test]
    fn half_interval() {
        let c = curve(&[(0.0, 0.0), (50.0, 1.0)], 100.0);
        assert_eq!(alc(&c, &AlcConfig::linear()).unwrap(), 0.5);
    }

    #[test]
    fn three_steps_match_oracle() {
        let c = curve(&[(0.0, 0.2), (25.0, 0.6), (75.0, 0.8)], 100.0);
        let cfg = AlcConfig::linear();
        let closed = alc(&c, &cfg).unwrap();
        let oracle = riemann(&c, &cfg, 1_000_000);
        assert!((closed - 0.55).abs() < 1e-12, "{closed}");
        assert!((closed - oracle).abs() < 1e-6, "{closed} vs {oracle}");
    }

    #[test]
    fn empty_curve_scores_zero() {
        let c = AgentCurve::<f64>::empty(10.0).unwrap();
        assert_eq!(alc(&c, &AlcConfig::linear()).unwrap(), 0.0);
        assert_eq!(alc(&c, &AlcConfig::log(1.0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn log_mode_rejects_bad_t0() {
        assert!(AlcConfig::<f64>::log(0.0).is_err());
        assert!(AlcConfig::<f64>::log(f64::NAN).is_err());
    }

    #[test]
    fn log_mode_weights_early_time_more() {
        let early = curve(&[(0.0, 1.0), (50.0, 0.0)], 100.0);
        let cfg = AlcConfig::log(1.0).unwrap();
        assert!(alc(&early, &cfg).unwrap() > 0.5);
    }

    #[test]
    fn works_in_f32() {
        let c = AgentCurve::<f32>::new(vec![Step { wallclock: 0.0, s: 0.5 }], 4.0).unwrap();
        assert_eq!(alc(&c, &AlcConfig::linear()).unwrap(), 0.5f32);
    }

    #[test]
    fn serde_shape() {
        let json = serde_json::to_string(&AlcConfig::<f64>::log(2.0).unwrap()).unwrap();
        assert_eq!(json, r#"{"mode":"log","t0":2.0}"#);
        let lin: AlcConfig<f64> = serde_json::from_str(r#"{"mode":"linear"}"#).unwrap();
        assert_eq!(lin, AlcConfig::linear());
    }

    fn arb_curve() -> impl Strategy<Value = AgentCurve<f64>> {
        (1.0f64..1000.0, prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..12)).prop_map(|(h, raw)| {
            let mut ws: Vec<(f64, f64)> = raw.into_iter().map(|(u, s)| (u * h, s)).collect();
            ws.sort_by(|a, b| a.0.total_cmp(&b.0));
            curve(&ws, h)
        })
    }

    proptest! {
        #[test]
        fn bounded_by_max_step(c in arb_curve(), t0 in 0.01f64..100.0) {
            for cfg in [AlcConfig::linear(), AlcConfig::log(t0).unwrap()] {
                let v = alc(&c, &cfg).unwrap();
                prop_assert!(v >= 0.0);
                prop_assert!(v <= c.max_score() + 1e-12);
            }
        }

        #[test]
        fn pointwise_dominance(c in arb_curve(), bump in 0.0f64..0.5) {
            let lifted: Vec<(f64, f64)> = c.steps().iter().map(|s| (s.wallclock, (s.s + bump).min(1.5))).collect();
            let d = curve(&lifted, c.horizon());
            for cfg in [AlcConfig::linear(), AlcConfig::log(3.0).unwrap()] {
                prop_assert!(alc(&d, &cfg).unwrap() >= alc(&c, &cfg).unwrap() - 1e-12);
            }
        }

        #[test]
        fn scale_equivariance(c in arb_curve(), scale in 0.1f64..10.0, t0 in 0.1f64..10.0) {
            let scaled_steps: Vec<(f64, f64)> = c.steps().iter().map(|s| (s.wallclock * scale, s.s)).collect();
            let scaled = curve(&scaled_steps, c.horizon() * scale);
            let lin = AlcConfig::linear();
            prop_assert!((alc(&c, &lin).unwrap() - alc(&scaled, &lin).unwrap()).abs() < 1e-9);
            let a = alc(&c, &AlcConfig::log(t0).unwrap()).unwrap();
            let b = alc(&scaled, &AlcConfig::log(t0 * scale).unwrap()).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
