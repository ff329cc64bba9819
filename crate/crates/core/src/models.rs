//! Acceleration laws of the four human-driver car-following models.
//!
//! Each law is a pure function of a [`KinematicContext`] and a parameter
//! set. The models disagree on how spacing is measured: OVM and GFM use the
//! bumper-to-bumper gap (leader length subtracted), FVDM subtracts the
//! length inside its optimal-velocity function, and IDM uses the raw
//! position difference.

use crate::params::ModelId;

/// Acceleration returned by IDM when the raw spacing is not positive.
pub const IDM_BRAKING_FLOOR: f64 = -10.0;

/// Instantaneous state seen by a follower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicContext {
    pub follower_speed: f64,
    pub leader_speed: f64,
    /// Leader position minus follower position (m).
    pub raw_spacing: f64,
    pub leader_length: f64,
}

impl KinematicContext {
    /// Bumper-to-bumper gap.
    pub fn gap(&self) -> f64 {
        self.raw_spacing - self.leader_length
    }

    /// Leader speed minus follower speed.
    pub fn closing_speed(&self) -> f64 {
        self.leader_speed - self.follower_speed
    }
}

/// Optimal velocity model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OvmParams {
    /// Sensitivity (1/s).
    pub kappa: f64,
    pub v1: f64,
    pub v2: f64,
    pub c1: f64,
    pub c2: f64,
}

impl OvmParams {
    /// `v1 + v2 tanh(c1 s - c2)` for bumper-to-bumper gap `s`.
    pub fn optimal_velocity(&self, gap: f64) -> f64 {
        optimal_velocity(self.v1, self.v2, self.c1, self.c2, gap)
    }
}

/// Generalized force model: OVM plus a braking term that only acts when the
/// follower is faster than its leader.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfmParams {
    pub k: f64,
    pub lambda: f64,
    pub v1: f64,
    pub v2: f64,
    pub c1: f64,
    pub c2: f64,
}

impl GfmParams {
    pub fn optimal_velocity(&self, gap: f64) -> f64 {
        optimal_velocity(self.v1, self.v2, self.c1, self.c2, gap)
    }
}

/// Full velocity difference model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FvdmParams {
    /// Relaxation time in seconds.
    pub tau: f64,
    pub lambda: f64,
    pub v1: f64,
    pub v2: f64,
    pub l_int: f64,
    pub beta: f64,
}

impl FvdmParams {
    /// `V1 + V2 tanh((s - L)/l_int - beta)` on the raw spacing `s`.
    pub fn optimal_velocity(&self, raw_spacing: f64, leader_length: f64) -> f64 {
        self.v1 + self.v2 * ((raw_spacing - leader_length) / self.l_int - self.beta).tanh()
    }
}

/// Intelligent driver model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmParams {
    pub v_max: f64,
    /// Desired time gap T (s).
    pub time_gap: f64,
    pub s0: f64,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
}

impl IdmParams {
    /// Desired spacing `s0 + vT + v dv / (2 sqrt(ab))` with `dv` the
    /// follower speed minus the leader speed.
    pub fn desired_spacing(&self, speed: f64, approach_rate: f64) -> f64 {
        self.s0 + speed * self.time_gap + speed * approach_rate / (2.0 * (self.a * self.b).sqrt())
    }

    /// Raw spacing at which a follower driving at `speed` behind a leader at
    /// the same speed has zero acceleration. `None` when `speed >= v_max`.
    pub fn equilibrium_spacing(&self, speed: f64) -> Option<f64> {
        let free = 1.0 - (speed / self.v_max).powf(self.delta);
        (free > 0.0).then(|| (self.s0 + speed * self.time_gap) / free.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HdvParams {
    Ovm(OvmParams),
    Gfm(GfmParams),
    Fvdm(FvdmParams),
    Idm(IdmParams),
}

impl HdvParams {
    pub fn model_id(&self) -> ModelId {
        match self {
            HdvParams::Ovm(_) => ModelId::Ovm,
            HdvParams::Gfm(_) => ModelId::Gfm,
            HdvParams::Fvdm(_) => ModelId::Fvdm,
            HdvParams::Idm(_) => ModelId::Idm,
        }
    }

    pub fn acceleration(&self, ctx: &KinematicContext) -> f64 {
        match self {
            HdvParams::Ovm(p) => ovm_accel(ctx, p),
            HdvParams::Gfm(p) => gfm_accel(ctx, p),
            HdvParams::Fvdm(p) => fvdm_accel(ctx, p),
            HdvParams::Idm(p) => idm_accel(ctx, p),
        }
    }
}

fn optimal_velocity(v1: f64, v2: f64, c1: f64, c2: f64, gap: f64) -> f64 {
    v1 + v2 * (c1 * gap - c2).tanh()
}

pub fn ovm_accel(ctx: &KinematicContext, p: &OvmParams) -> f64 {
    p.kappa * (p.optimal_velocity(ctx.gap()) - ctx.follower_speed)
}

pub fn gfm_accel(ctx: &KinematicContext, p: &GfmParams) -> f64 {
    let dv = ctx.closing_speed();
    let braking = if -dv > 0.0 { p.lambda * dv } else { 0.0 };
    p.k * (p.optimal_velocity(ctx.gap()) - ctx.follower_speed) + braking
}

pub fn fvdm_accel(ctx: &KinematicContext, p: &FvdmParams) -> f64 {
    let v = p.optimal_velocity(ctx.raw_spacing, ctx.leader_length);
    (v - ctx.follower_speed) / p.tau + p.lambda * ctx.closing_speed()
}

pub fn idm_accel(ctx: &KinematicContext, p: &IdmParams) -> f64 {
    let s = ctx.raw_spacing;
    if s <= 0.0 {
        return IDM_BRAKING_FLOOR;
    }
    let v = ctx.follower_speed;
    let desired = p.desired_spacing(v, v - ctx.leader_speed);
    p.a * (1.0 - (v / p.v_max).powf(p.delta) - (desired / s).powi(2))
}
