//! Trajectory distance between a simulated and an observed follower.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::simulator::{simulate_follower, SimOptions};
use crate::trajectory::{CFPair, StatePortfolio};

/// Channel weights `(position, speed, acceleration)`; non-negative and
/// summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub position: f64,
    pub speed: f64,
    pub accel: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            position: 0.5,
            speed: 0.3,
            accel: 0.2,
        }
    }
}

impl Weights {
    pub fn new(position: f64, speed: f64, accel: f64) -> Result<Self> {
        let w = Self {
            position,
            speed,
            accel,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.position, self.speed, self.accel];
        if parts.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput("weights must be non-negative".into()));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "weights must sum to 1, got {}",
                parts.iter().sum::<f64>()
            )));
        }
        Ok(())
    }

    pub fn combine(&self, e: ChannelErrors) -> f64 {
        self.position * e.position + self.speed * e.speed + self.accel * e.accel
    }
}

/// How a per-sample deviation series is reduced to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryNorm {
    /// Root mean square over time steps.
    #[default]
    Rms,
    MeanAbsolute,
}

impl TrajectoryNorm {
    pub fn apply(self, sim: &[f64], obs: &[f64]) -> f64 {
        let n = sim.len().min(obs.len()) as f64;
        let diffs = sim.iter().zip(obs).map(|(a, b)| a - b);
        match self {
            TrajectoryNorm::Rms => (diffs.map(|d| d * d).sum::<f64>() / n).sqrt(),
            TrajectoryNorm::MeanAbsolute => diffs.map(f64::abs).sum::<f64>() / n,
        }
    }
}

/// Per-channel deviations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelErrors {
    pub position: f64,
    pub speed: f64,
    pub accel: f64,
}

impl ChannelErrors {
    pub fn between(sim: &StatePortfolio, obs: &StatePortfolio, norm: TrajectoryNorm) -> Self {
        Self {
            position: norm.apply(sim.positions(), obs.positions()),
            speed: norm.apply(sim.speeds(), obs.speeds()),
            accel: norm.apply(sim.accelerations(), obs.accelerations()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.speed.is_finite() && self.accel.is_finite()
    }
}

/// Everything needed to turn a particle and a pair into a score.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScoreConfig {
    pub weights: Weights,
    pub norm: TrajectoryNorm,
    pub sim: SimOptions,
}

/// Channel errors of `params` on `pair`, or `None` when the rollout aborts.
pub fn channel_errors(
    params: &ModelParams,
    pair: &CFPair,
    cfg: &ScoreConfig,
) -> Option<ChannelErrors> {
    let sim = simulate_follower(params, pair, &cfg.sim).ok()?;
    let e = ChannelErrors::between(&sim.portfolio, pair.follower(), cfg.norm);
    e.is_finite().then_some(e)
}

/// Weighted trajectory distance; `+inf` when the rollout aborts.
pub fn score_particle(params: &ModelParams, pair: &CFPair, cfg: &ScoreConfig) -> f64 {
    channel_errors(params, pair, cfg).map_or(f64::INFINITY, |e| cfg.weights.combine(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_of_constant_offset() {
        let sim = [3.0, 4.0, 5.0];
        let obs = [1.0, 2.0, 3.0];
        assert_eq!(TrajectoryNorm::Rms.apply(&sim, &obs), 2.0);
        assert_eq!(TrajectoryNorm::MeanAbsolute.apply(&sim, &obs), 2.0);
        assert_eq!(TrajectoryNorm::Rms.apply(&obs, &obs), 0.0);
    }

    #[test]
    fn default_weights() {
        let w = Weights::default();
        assert_eq!((w.position, w.speed, w.accel), (0.5, 0.3, 0.2));
        // 2 m constant position error, speed and acceleration exact.
        let e = ChannelErrors {
            position: 2.0,
            speed: 0.0,
            accel: 0.0,
        };
        assert_eq!(w.combine(e), 1.0);
    }

    #[test]
    fn weights_must_be_a_distribution() {
        assert!(Weights::new(0.5, 0.5, 0.5).is_err());
        assert!(Weights::new(1.2, -0.1, -0.1).is_err());
        assert!(Weights::new(1.0, 0.0, 0.0).is_ok());
    }
}
