//! Open-loop follower rollouts driven by an observed leader.
//!
//! Human-driver models are integrated with semi-implicit Euler at the data
//! interval (optionally sub-stepped): `v' = max(0, v + u dt)`, `p' = p + v' dt`.
//! Controllers advance their discrete state with the observed leader
//! acceleration as exogenous input, and the follower's speed and position
//! are reconstructed from the state and the leader at each step.

use crate::controllers::{
    build_discrete_system, control, controller_state_from_kinematics, AvParams,
};
use crate::error::{Error, Result};
use crate::models::KinematicContext;
use crate::params::ModelParams;
use crate::trajectory::{CFPair, StatePortfolio};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Integration sub-steps per data interval for the continuous-time
    /// models. The leader state is linearly interpolated between samples.
    pub substeps: usize,
    /// Measure controller spacing bumper-to-bumper (leader length
    /// subtracted). Clear it for data whose positions are already
    /// gap-referenced.
    pub controller_subtract_length: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            substeps: 1,
            controller_subtract_length: true,
        }
    }
}

/// Conditions met during a rollout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimFlags {
    pub negative_gap_encountered: bool,
    pub speed_clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPortfolio {
    pub portfolio: StatePortfolio,
    pub flags: SimFlags,
}

/// Simulates the follower of `pair` under `params`, starting from the
/// observed follower state at the first sample.
pub fn simulate_follower(
    params: &ModelParams,
    pair: &CFPair,
    opts: &SimOptions,
) -> Result<SimulatedPortfolio> {
    match params {
        ModelParams::Hdv(p) => simulate_with_law(pair, opts, |ctx| p.acceleration(ctx)),
        ModelParams::Av(p) => simulate_controller(p, pair, opts),
    }
}

fn aborted(pair: &CFPair, k: usize) -> Error {
    Error::SimulationAborted(format!(
        "non-finite state in pair {} at step {k}",
        pair.id()
    ))
}

/// Semi-implicit Euler rollout for an arbitrary acceleration law.
pub fn simulate_with_law<F>(pair: &CFPair, opts: &SimOptions, law: F) -> Result<SimulatedPortfolio>
where
    F: Fn(&KinematicContext) -> f64,
{
    let leader = pair.leader();
    let n = pair.len();
    let dt = pair.dt();
    let substeps = opts.substeps.max(1);
    let h = dt / substeps as f64;
    let length = pair.leader_length();
    let (lp, lv) = (leader.positions(), leader.speeds());

    let mut flags = SimFlags::default();
    let mut positions = Vec::with_capacity(n);
    let mut speeds = Vec::with_capacity(n);
    let mut accels = Vec::with_capacity(n);

    let mut p = pair.follower().positions()[0];
    let mut v = pair.follower().speeds()[0];
    if v < 0.0 {
        v = 0.0;
        flags.speed_clamped = true;
    }

    for k in 0..n {
        positions.push(p);
        speeds.push(v);
        if k + 1 == n {
            let ctx = KinematicContext {
                follower_speed: v,
                leader_speed: lv[k],
                raw_spacing: lp[k] - p,
                leader_length: length,
            };
            accels.push(law(&ctx));
            break;
        }
        for j in 0..substeps {
            let frac = j as f64 / substeps as f64;
            let ctx = KinematicContext {
                follower_speed: v,
                leader_speed: lv[k] + frac * (lv[k + 1] - lv[k]),
                raw_spacing: lp[k] + frac * (lp[k + 1] - lp[k]) - p,
                leader_length: length,
            };
            if ctx.gap() < 0.0 {
                flags.negative_gap_encountered = true;
            }
            let u = law(&ctx);
            if j == 0 {
                accels.push(u);
            }
            let next = v + u * h;
            if next < 0.0 {
                flags.speed_clamped = true;
            }
            v = next.max(0.0);
            p += v * h;
        }
        if !(p.is_finite() && v.is_finite() && accels[k].is_finite()) {
            return Err(aborted(pair, k));
        }
    }
    if !accels[n - 1].is_finite() {
        return Err(aborted(pair, n - 1));
    }
    if lp[n - 1] - p - length < 0.0 {
        flags.negative_gap_encountered = true;
    }
    let portfolio = StatePortfolio::new(positions, speeds, accels, dt, leader.t0())?;
    Ok(SimulatedPortfolio { portfolio, flags })
}

fn simulate_controller(
    p: &AvParams,
    pair: &CFPair,
    opts: &SimOptions,
) -> Result<SimulatedPortfolio> {
    let leader = pair.leader();
    let follower = pair.follower();
    let n = pair.len();
    let dt = pair.dt();
    let sys = build_discrete_system(p, dt);
    let offset = if opts.controller_subtract_length {
        pair.leader_length()
    } else {
        0.0
    };
    let (lp, lv, la) = (leader.positions(), leader.speeds(), leader.accelerations());
    let lagged = p.state_dim() == 3;

    let mut flags = SimFlags::default();
    let mut positions = Vec::with_capacity(n);
    let mut speeds = Vec::with_capacity(n);
    let mut accels = Vec::with_capacity(n);

    let mut v0 = follower.speeds()[0];
    if v0 < 0.0 {
        v0 = 0.0;
        flags.speed_clamped = true;
    }
    let ctx0 = KinematicContext {
        follower_speed: v0,
        leader_speed: lv[0],
        raw_spacing: lp[0] - follower.positions()[0],
        leader_length: pair.leader_length(),
    };
    let mut x = controller_state_from_kinematics(
        &ctx0,
        follower.accelerations()[0],
        p,
        opts.controller_subtract_length,
    )
    .to_array();
    positions.push(follower.positions()[0]);
    speeds.push(v0);
    if ctx0.gap() < 0.0 {
        flags.negative_gap_encountered = true;
    }

    for k in 0..n - 1 {
        let u = control(x, la[k], &sys, p);
        accels.push(if lagged { x[2] } else { u });
        let mut next = sys.step(x, u, la[k]);

        let mut v = lv[k + 1] - next[1];
        let gap = p.desired_spacing(v) + next[0];
        if v < 0.0 {
            flags.speed_clamped = true;
            v = 0.0;
            next[1] = lv[k + 1];
            next[0] = gap - p.desired_spacing(0.0);
        }
        let pos = lp[k + 1] - offset - gap;
        if !(pos.is_finite()
            && v.is_finite()
            && u.is_finite()
            && next.iter().all(|s| s.is_finite()))
        {
            return Err(aborted(pair, k));
        }
        if lp[k + 1] - pos - pair.leader_length() < 0.0 {
            flags.negative_gap_encountered = true;
        }
        positions.push(pos);
        speeds.push(v);
        x = next;
    }
    let last = if lagged {
        x[2]
    } else {
        control(x, la[n - 1], &sys, p)
    };
    if !last.is_finite() {
        return Err(aborted(pair, n - 1));
    }
    accels.push(last);

    let portfolio = StatePortfolio::new(positions, speeds, accels, dt, leader.t0())?;
    Ok(SimulatedPortfolio { portfolio, flags })
}
