//! Synthetic car-following data with a known generating particle.
//!
//! Leaders follow piecewise-constant acceleration profiles. Followers start
//! at the true model's equilibrium behind the leader and are simulated with
//! the true particle; Gaussian noise is then added to the follower channels.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelId, ModelParams};
use crate::priors::PriorBounds;
use crate::rng::{stream_rng, StreamRng, STREAM_SYNTH};
use crate::simulator::{simulate_follower, SimOptions};
use crate::trajectory::{CFPair, Dataset, StatePortfolio, DEFAULT_LEADER_LENGTH};

/// Leader speed range kept by the profile generator (m/s).
const LEADER_SPEED_MAX: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub params: ModelParams,
    pub n_pairs: usize,
    /// Horizon in seconds; each pair has `round(horizon / dt)` samples.
    pub horizon: f64,
    pub dt: f64,
    /// Noise standard deviations on follower position, speed and
    /// acceleration.
    pub noise: [f64; 3],
    pub leader_length: f64,
    pub seed: u64,
    pub sim: SimOptions,
}

impl SynthConfig {
    /// Noise-free configuration for `params` with 10 Hz sampling.
    pub fn new(params: ModelParams, n_pairs: usize, horizon: f64, seed: u64) -> Self {
        Self {
            params,
            n_pairs,
            horizon,
            dt: 0.1,
            noise: [0.0; 3],
            leader_length: DEFAULT_LEADER_LENGTH,
            seed,
            sim: SimOptions::default(),
        }
    }

    /// Configuration using the midpoints of `model`'s default prior box.
    pub fn at_prior_midpoint(
        model: ModelId,
        n_pairs: usize,
        horizon: f64,
        seed: u64,
    ) -> Result<Self> {
        Ok(Self::new(
            PriorBounds::default().midpoint(model)?,
            n_pairs,
            horizon,
            seed,
        ))
    }

    pub fn samples(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// Ground truth written next to a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub model: String,
    pub params: String,
    pub n_pairs: usize,
    pub horizon: f64,
    pub dt: f64,
    pub noise: [f64; 3],
    pub leader_length: f64,
    pub seed: u64,
}

impl SynthTruth {
    pub fn from_config(cfg: &SynthConfig) -> Self {
        Self {
            model: cfg.params.model_id().name().to_string(),
            params: cfg.params.to_assignments(),
            n_pairs: cfg.n_pairs,
            horizon: cfg.horizon,
            dt: cfg.dt,
            noise: cfg.noise,
            leader_length: cfg.leader_length,
            seed: cfg.seed,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn true_params(&self) -> Result<ModelParams> {
        let model: ModelId = self.model.parse()?;
        ModelParams::from_assignments(model, &self.params)
    }
}

/// Raw spacing (leader position minus follower position) at which a
/// follower at `speed` behind a leader at the same speed and zero
/// acceleration stays put. `None` if the model has no such spacing.
pub fn equilibrium_spacing(
    params: &ModelParams,
    speed: f64,
    leader_length: f64,
    opts: &SimOptions,
) -> Option<f64> {
    use crate::models::HdvParams;
    let ov_inverse = |v1: f64, v2: f64, c1: f64, c2: f64| {
        let r = (speed - v1) / v2;
        (r.abs() < 1.0).then(|| (r.atanh() + c2) / c1 + leader_length)
    };
    let s = match params {
        ModelParams::Hdv(HdvParams::Ovm(p)) => ov_inverse(p.v1, p.v2, p.c1, p.c2)?,
        ModelParams::Hdv(HdvParams::Gfm(p)) => ov_inverse(p.v1, p.v2, p.c1, p.c2)?,
        ModelParams::Hdv(HdvParams::Fvdm(p)) => {
            let r = (speed - p.v1) / p.v2;
            if r.abs() >= 1.0 {
                return None;
            }
            leader_length + p.l_int * (r.atanh() + p.beta)
        }
        ModelParams::Hdv(HdvParams::Idm(p)) => p.equilibrium_spacing(speed)?,
        ModelParams::Av(p) => {
            let extra = if opts.controller_subtract_length {
                leader_length
            } else {
                0.0
            };
            p.desired_spacing(speed) + extra
        }
    };
    (s.is_finite() && s > 0.0).then_some(s)
}

/// Exact kinematics of a piecewise-constant acceleration leader.
fn leader_profile(rng: &mut StreamRng, n: usize, dt: f64, p0: f64) -> Result<StatePortfolio> {
    let mut pos = Vec::with_capacity(n);
    let mut vel = Vec::with_capacity(n);
    let mut acc = Vec::with_capacity(n);
    let (mut p, mut v) = (p0, rng.random_range(8.0..20.0));
    let mut seg_left = 0usize;
    let mut a_cmd: f64 = 0.0;
    for _ in 0..n {
        if seg_left == 0 {
            seg_left = (rng.random_range(2.0..8.0) / dt).round().max(1.0) as usize;
            a_cmd = match rng.random_range(0..3) {
                0 => rng.random_range(0.3..1.5),
                1 => 0.0,
                _ => -rng.random_range(0.5..2.5),
            };
        }
        seg_left -= 1;
        // Acceleration over this interval, limited so the speed stays in range.
        let a = a_cmd.clamp(-v / dt, (LEADER_SPEED_MAX - v) / dt);
        pos.push(p);
        vel.push(v);
        acc.push(a);
        p += v * dt + 0.5 * a * dt * dt;
        v = (v + a * dt).max(0.0);
    }
    StatePortfolio::new(pos, vel, acc, dt, 0.0)
}

/// One synthetic pair, noise-free.
fn clean_pair(cfg: &SynthConfig, k: usize, rng: &mut StreamRng) -> Result<CFPair> {
    let n = cfg.samples();
    let leader = leader_profile(rng, n, cfg.dt, 0.0)?;
    let v0 = leader.speeds()[0];
    let spacing = equilibrium_spacing(&cfg.params, v0, cfg.leader_length, &cfg.sim)
        .unwrap_or(cfg.leader_length + 2.0 + 1.5 * v0);
    let f0 = leader.positions()[0] - spacing;
    let seed_follower = StatePortfolio::new(
        (0..n).map(|i| f0 + v0 * cfg.dt * i as f64).collect(),
        vec![v0; n],
        vec![0.0; n],
        cfg.dt,
        0.0,
    )?;
    let id = format!("synth-{k:03}");
    let pair = CFPair::new(id.clone(), leader.clone(), seed_follower, cfg.leader_length)?;
    let sim = simulate_follower(&cfg.params, &pair, &cfg.sim)?;
    CFPair::new(id, leader, sim.portfolio, cfg.leader_length)
}

fn add_noise(p: &StatePortfolio, noise: [f64; 3], rng: &mut StreamRng) -> Result<StatePortfolio> {
    let mut channel = |values: &[f64], sd: f64| -> Result<Vec<f64>> {
        if sd == 0.0 {
            return Ok(values.to_vec());
        }
        let dist = Normal::new(0.0, sd).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(values.iter().map(|x| x + dist.sample(rng)).collect())
    };
    let pos = channel(p.positions(), noise[0])?;
    let vel = channel(p.speeds(), noise[1])?;
    let acc = channel(p.accelerations(), noise[2])?;
    StatePortfolio::new(pos, vel, acc, p.dt(), p.t0())
}

/// Generates a dataset from `cfg`.
pub fn generate(cfg: &SynthConfig) -> Result<Dataset> {
    if cfg.n_pairs == 0 {
        return Err(Error::InvalidInput("n_pairs must be positive".into()));
    }
    if cfg.samples() < 3 {
        return Err(Error::InvalidInput(
            "horizon must cover at least 3 samples".into(),
        ));
    }
    if cfg.noise.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::InvalidInput(
            "noise levels must be non-negative".into(),
        ));
    }
    let pairs = (0..cfg.n_pairs)
        .map(|k| {
            let mut rng = stream_rng(cfg.seed, STREAM_SYNTH, k as u64);
            let clean = clean_pair(cfg, k, &mut rng)?;
            if cfg.noise == [0.0; 3] {
                return Ok(clean);
            }
            let follower = add_noise(clean.follower(), cfg.noise, &mut rng)?;
            CFPair::new(
                clean.id(),
                clean.leader().clone(),
                follower,
                cfg.leader_length,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(format!("synth-{}", cfg.params.model_id()), pairs)
}
