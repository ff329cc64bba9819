//! Discrete-time AV controllers: linear feedback with constant time gap
//! (LLCTG) or constant spacing (LLCS), the higher-order controller with
//! first-order actuation lag (HL), and a one-step MPC.
//!
//! All four act on the spacing deviation `ds = s - s*` and relative speed
//! `dv = v_leader - v_follower`; HL adds the realized acceleration as a
//! third state. The state advances as `x' = A x + B u + D a_leader`.

use crate::error::{Error, Result};
use crate::models::KinematicContext;
use crate::params::ModelId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlctgParams {
    pub tau_star: f64,
    pub k_s: f64,
    pub k_v: f64,
    /// Standstill distance (m).
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlcsParams {
    /// Desired constant spacing (m).
    pub s0: f64,
    pub k_s: f64,
    pub k_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HlParams {
    pub tau_star: f64,
    /// Actuation lag (s).
    pub tt: f64,
    pub k_s: f64,
    pub k_v: f64,
    pub k_a: f64,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcParams {
    pub tau_star: f64,
    /// Control effort weight.
    pub r: f64,
    /// Relative-speed weight in the state cost `diag(1, alpha)`.
    pub alpha: f64,
    pub l: f64,
    pub a_min: f64,
    pub a_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AvParams {
    Llctg(LlctgParams),
    Llcs(LlcsParams),
    Hl(HlParams),
    Mpc(MpcParams),
}

impl AvParams {
    pub fn model_id(&self) -> ModelId {
        match self {
            AvParams::Llctg(_) => ModelId::Llctg,
            AvParams::Llcs(_) => ModelId::Llcs,
            AvParams::Hl(_) => ModelId::Hl,
            AvParams::Mpc(_) => ModelId::Mpc,
        }
    }

    /// Desired spacing for a follower at `speed`: `speed * tau* + l` under
    /// the constant time gap policy, `s0` under constant spacing.
    pub fn desired_spacing(&self, speed: f64) -> f64 {
        match self {
            AvParams::Llctg(p) => speed * p.tau_star + p.l,
            AvParams::Llcs(p) => p.s0,
            AvParams::Hl(p) => speed * p.tau_star + p.l,
            AvParams::Mpc(p) => speed * p.tau_star + p.l,
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            AvParams::Hl(_) => 3,
            _ => 2,
        }
    }

    /// Feedback gains `[k_s, k_v, k_a]` for the linear controllers.
    fn gains(&self) -> Option<[f64; 3]> {
        match *self {
            AvParams::Llctg(p) => Some([p.k_s, p.k_v, 0.0]),
            AvParams::Llcs(p) => Some([p.k_s, p.k_v, 0.0]),
            AvParams::Hl(p) => Some([p.k_s, p.k_v, p.k_a]),
            AvParams::Mpc(_) => None,
        }
    }
}

/// Controller state `[ds, dv]` or, for HL, `[ds, dv, a]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub delta_s: f64,
    pub delta_v: f64,
    pub accel: Option<f64>,
}

impl ControllerState {
    pub fn dim(&self) -> usize {
        if self.accel.is_some() {
            3
        } else {
            2
        }
    }

    pub(crate) fn to_array(self) -> [f64; 3] {
        [self.delta_s, self.delta_v, self.accel.unwrap_or(0.0)]
    }

    pub(crate) fn from_array(x: [f64; 3], dim: usize) -> Self {
        Self {
            delta_s: x[0],
            delta_v: x[1],
            accel: (dim == 3).then_some(x[2]),
        }
    }
}

/// `x' = A x + B u + D a_leader` with an `n`-dimensional state (2 or 3).
/// Entries beyond `n` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteSystem {
    pub a: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub d: [f64; 3],
    pub n: usize,
    pub t_s: f64,
}

impl DiscreteSystem {
    pub fn step(&self, x: [f64; 3], u: f64, leader_accel: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let ax: f64 = (0..self.n).map(|j| self.a[i][j] * x[j]).sum();
            *o = ax + self.b[i] * u + self.d[i] * leader_accel;
        }
        out
    }
}

/// Discretized system matrices for a controller at interval `t_s`.
pub fn build_discrete_system(p: &AvParams, t_s: f64) -> DiscreteSystem {
    let ts2 = t_s * t_s / 2.0;
    let double_integrator = [[1.0, t_s, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
    match *p {
        AvParams::Llctg(c) => DiscreteSystem {
            a: double_integrator,
            b: [-t_s * c.tau_star - ts2, -t_s, 0.0],
            d: [t_s + ts2, t_s, 0.0],
            n: 2,
            t_s,
        },
        AvParams::Llcs(_) => DiscreteSystem {
            a: double_integrator,
            b: [-ts2, -t_s, 0.0],
            d: [ts2, t_s, 0.0],
            n: 2,
            t_s,
        },
        AvParams::Hl(c) => {
            let tt = c.tt;
            let e = (-t_s / tt).exp();
            DiscreteSystem {
                a: [
                    [1.0, t_s, tt * (c.tau_star - tt) * (e - 1.0) - t_s * tt],
                    [0.0, 1.0, tt * (e - 1.0)],
                    [0.0, 0.0, e],
                ],
                b: [
                    -tt * (c.tau_star - tt) * (e + t_s / tt - 1.0) - ts2,
                    tt * (1.0 - e) - t_s,
                    1.0 - e,
                ],
                d: [ts2, t_s, 0.0],
                n: 3,
                t_s,
            }
        }
        AvParams::Mpc(c) => DiscreteSystem {
            a: double_integrator,
            b: [-c.tau_star * t_s - t_s - ts2, -t_s, 0.0],
            d: [t_s + ts2, t_s, 0.0],
            n: 2,
            t_s,
        },
    }
}

fn gains_dot(gains: [f64; 3], x: [f64; 3]) -> f64 {
    gains[0] * x[0] + gains[1] * x[1] + gains[2] * x[2]
}

/// `u = k . x` for LLCTG, LLCS and HL.
pub fn linear_control(state: &ControllerState, p: &AvParams) -> Result<f64> {
    let gains = p.gains().ok_or_else(|| {
        Error::InvalidInput(format!("{} is not a linear controller", p.model_id()))
    })?;
    if state.dim() != p.state_dim() {
        return Err(Error::InvalidInput(format!(
            "{} expects a {}-dimensional state, got {}",
            p.model_id(),
            p.state_dim(),
            state.dim()
        )));
    }
    Ok(gains_dot(gains, state.to_array()))
}

/// One-step MPC: minimizes `x'^T Q x' + R u^2` over the next state
/// `x' = A x + B u + D a_leader`, then clips to `[a_min, a_max]`. The
/// objective is a convex quadratic in `u`, so clipping the unconstrained
/// minimizer is exact.
pub fn mpc_control(
    state: &ControllerState,
    leader_accel: f64,
    sys: &DiscreteSystem,
    p: &MpcParams,
) -> f64 {
    let y = sys.step(state.to_array(), 0.0, leader_accel);
    let (b0, b1) = (sys.b[0], sys.b[1]);
    let num = b0 * y[0] + p.alpha * b1 * y[1];
    let den = b0 * b0 + p.alpha * b1 * b1 + p.r;
    (-num / den).clamp(p.a_min, p.a_max)
}

/// The MPC objective for a candidate control. Exposed for cross-checks.
pub fn mpc_objective(
    state: &ControllerState,
    leader_accel: f64,
    sys: &DiscreteSystem,
    p: &MpcParams,
    u: f64,
) -> f64 {
    let x = sys.step(state.to_array(), u, leader_accel);
    x[0] * x[0] + p.alpha * x[1] * x[1] + p.r * u * u
}

/// Controller state for a follower in context `ctx`. `subtract_length`
/// selects bumper-to-bumper spacing; `observed_accel` seeds HL's lag state.
pub fn controller_state_from_kinematics(
    ctx: &KinematicContext,
    observed_accel: f64,
    p: &AvParams,
    subtract_length: bool,
) -> ControllerState {
    let s = if subtract_length {
        ctx.gap()
    } else {
        ctx.raw_spacing
    };
    ControllerState {
        delta_s: s - p.desired_spacing(ctx.follower_speed),
        delta_v: ctx.closing_speed(),
        accel: (p.state_dim() == 3).then_some(observed_accel),
    }
}

/// Control input for any controller kind.
pub(crate) fn control(x: [f64; 3], leader_accel: f64, sys: &DiscreteSystem, p: &AvParams) -> f64 {
    match p {
        AvParams::Mpc(m) => mpc_control(&ControllerState::from_array(x, 2), leader_accel, sys, m),
        _ => gains_dot(p.gains().unwrap_or_default(), x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LLCS: AvParams = AvParams::Llcs(LlcsParams {
        s0: 10.0,
        k_s: 1.0,
        k_v: 0.5,
    });

    #[test]
    fn llcs_matrices_at_tenth_of_second() {
        let sys = build_discrete_system(&LLCS, 0.1);
        assert_eq!(sys.n, 2);
        assert_eq!(sys.a[0][..2], [1.0, 0.1]);
        assert_eq!(sys.a[1][..2], [0.0, 1.0]);
        assert!((sys.b[0] + 0.005).abs() < 1e-18);
        assert_eq!(sys.b[1], -0.1);
        assert!((sys.d[0] - 0.005).abs() < 1e-18);
        assert_eq!(sys.d[1], 0.1);
        assert_eq!(sys.b[0], -sys.d[0]);
        assert_eq!(sys.b[1], -sys.d[1]);
    }

    #[test]
    fn llctg_matrices_follow_printed_entries() {
        let p = AvParams::Llctg(LlctgParams {
            tau_star: 1.2,
            k_s: 1.0,
            k_v: 1.0,
            l: 5.0,
        });
        let sys = build_discrete_system(&p, 0.1);
        assert!((sys.b[0] - (-0.12 - 0.005)).abs() < 1e-15);
        assert!((sys.d[0] - (0.1 + 0.005)).abs() < 1e-15);
        assert_eq!((sys.b[1], sys.d[1]), (-0.1, 0.1));
    }

    #[test]
    fn mpc_matrices_keep_the_extra_interval_term() {
        let p = MpcParams {
            tau_star: 1.0,
            r: 1.0,
            alpha: 1.0,
            l: 5.0,
            a_min: -4.0,
            a_max: 4.0,
        };
        let sys = build_discrete_system(&AvParams::Mpc(p), 0.1);
        assert!((sys.b[0] - (-0.1 - 0.1 - 0.005)).abs() < 1e-15);
        assert!((sys.d[0] - 0.105).abs() < 1e-15);
    }

    fn hl(tt: f64) -> AvParams {
        AvParams::Hl(HlParams {
            tau_star: 1.0,
            tt,
            k_s: 1.0,
            k_v: 1.0,
            k_a: -1.0,
            l: 5.0,
        })
    }

    #[test]
    fn hl_lag_entry_is_a_contraction() {
        for tt in [0.01, 0.1, 0.3, 0.5, 5.0] {
            let a22 = build_discrete_system(&hl(tt), 0.1).a[2][2];
            assert!(a22 > 0.0 && a22 < 1.0, "tt={tt}");
        }
        let a22 = build_discrete_system(&hl(1e-6), 0.1).a[2][2];
        assert_eq!(a22, 0.0);
    }

    #[test]
    fn hl_velocity_lag_entry() {
        let sys = build_discrete_system(&hl(0.3), 0.1);
        let expected = 0.3 * ((-1.0f64 / 3.0).exp() - 1.0);
        assert!((sys.a[1][2] - expected).abs() < 1e-15);
    }

    #[test]
    fn linear_control_arithmetic() {
        let zero = ControllerState {
            delta_s: 0.0,
            delta_v: 0.0,
            accel: None,
        };
        assert_eq!(linear_control(&zero, &LLCS).unwrap(), 0.0);
        let x = ControllerState {
            delta_s: 2.0,
            delta_v: -1.0,
            accel: None,
        };
        assert_eq!(linear_control(&x, &LLCS).unwrap(), 1.5);

        let p = AvParams::Hl(HlParams {
            tau_star: 1.0,
            tt: 0.3,
            k_s: 1.0,
            k_v: 0.5,
            k_a: -1.0,
            l: 5.0,
        });
        let x3 = ControllerState {
            accel: Some(0.5),
            ..x
        };
        assert_eq!(linear_control(&x3, &p).unwrap(), 1.0);
        assert!(linear_control(&x, &p).is_err());
    }

    #[test]
    fn mpc_origin_and_clipping() {
        let p = MpcParams {
            tau_star: 1.0,
            r: 0.5,
            alpha: 1.0,
            l: 5.0,
            a_min: -4.0,
            a_max: 4.0,
        };
        let sys = build_discrete_system(&AvParams::Mpc(p), 0.1);
        let origin = ControllerState {
            delta_s: 0.0,
            delta_v: 0.0,
            accel: None,
        };
        assert_eq!(mpc_control(&origin, 0.0, &sys, &p), 0.0);

        // A large positive spacing error asks for more than a_max.
        let far = ControllerState {
            delta_s: 500.0,
            delta_v: 0.0,
            accel: None,
        };
        let y = sys.step(far.to_array(), 0.0, 0.0);
        let unclipped = -(sys.b[0] * y[0] + p.alpha * sys.b[1] * y[1])
            / (sys.b[0] * sys.b[0] + p.alpha * sys.b[1] * sys.b[1] + p.r);
        assert!(unclipped > p.a_max);
        assert_eq!(mpc_control(&far, 0.0, &sys, &p), 4.0);
    }

    #[test]
    fn state_from_kinematics() {
        let ctx = KinematicContext {
            follower_speed: 20.0,
            leader_speed: 20.0,
            raw_spacing: 30.0,
            leader_length: 5.0,
        };
        let ctg = AvParams::Llctg(LlctgParams {
            tau_star: 1.0,
            k_s: 1.0,
            k_v: 1.0,
            l: 5.0,
        });
        let x = controller_state_from_kinematics(&ctx, 0.0, &ctg, true);
        assert_eq!((x.delta_s, x.delta_v, x.accel), (0.0, 0.0, None));

        let ctx_cs = KinematicContext {
            raw_spacing: 15.0,
            ..ctx
        };
        let x = controller_state_from_kinematics(&ctx_cs, 0.0, &LLCS, true);
        assert_eq!(x.delta_s, 0.0);

        let x = controller_state_from_kinematics(&ctx, 0.7, &hl(0.3), true);
        assert_eq!(x.accel, Some(0.7));
    }

    #[test]
    fn linear_control_is_linear() {
        let p = hl(0.3);
        let xs = [[1.5, -0.25, 0.75], [-3.0, 2.0, 0.5], [0.125, 0.5, -2.0]];
        let f = |x: [f64; 3]| linear_control(&ControllerState::from_array(x, 3), &p).unwrap();
        for x in xs {
            for y in xs {
                let sum = [x[0] + y[0], x[1] + y[1], x[2] + y[2]];
                assert_eq!(f(sum), f(x) + f(y));
            }
            assert_eq!(f([2.0 * x[0], 2.0 * x[1], 2.0 * x[2]]), 2.0 * f(x));
        }
    }
}
