mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hybrid_cf::controllers::{
    build_discrete_system, mpc_control, mpc_objective, AvParams, ControllerState, HlParams,
    LlcsParams, LlctgParams, MpcParams,
};
use hybrid_cf::params::{ModelId, ModelParams};
use hybrid_cf::priors::PriorBounds;
use hybrid_cf::simulator::{simulate_follower, SimOptions};
use hybrid_cf::synth::{generate, SynthConfig};

fn random_mpc(rng: &mut ChaCha8Rng) -> MpcParams {
    MpcParams {
        tau_star: rng.random_range(0.6..1.4),
        r: rng.random_range(0.05..2.0),
        alpha: rng.random_range(0.1..2.0),
        l: rng.random_range(3.0..7.0),
        a_min: rng.random_range(-5.0..-1.0),
        a_max: rng.random_range(1.0..5.0),
    }
}

#[test]
fn mpc_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let p = random_mpc(&mut rng);
        let sys = build_discrete_system(&AvParams::Mpc(p), 0.1);
        let state = ControllerState {
            delta_s: rng.random_range(-40.0..40.0),
            delta_v: rng.random_range(-8.0..8.0),
            accel: None,
        };
        let a_l = rng.random_range(-3.0..3.0);
        let u = mpc_control(&state, a_l, &sys, &p);
        assert!(u >= p.a_min && u <= p.a_max);

        // One extra point so the grid reaches a_max.
        let steps = ((p.a_max - p.a_min) / 1e-3).floor() as usize + 1;
        let (mut best_u, mut best) = (p.a_min, f64::INFINITY);
        for k in 0..=steps {
            let g = (p.a_min + k as f64 * 1e-3).min(p.a_max);
            let j = mpc_objective(&state, a_l, &sys, &p, g);
            if j < best {
                (best_u, best) = (g, j);
            }
        }
        assert!(
            (u - best_u).abs() <= 1e-3,
            "closed form {u} vs grid {best_u}"
        );
        assert!(mpc_objective(&state, a_l, &sys, &p, u) <= best + 1e-12);
    }
}

/// Classic fourth-order Runge-Kutta over `t` with `steps` sub-steps.
fn rk4<const N: usize>(
    f: impl Fn(&[f64; N]) -> [f64; N],
    x0: [f64; N],
    t: f64,
    steps: usize,
) -> [f64; N] {
    let h = t / steps as f64;
    let add = |x: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] {
        std::array::from_fn(|i| x[i] + s * k[i])
    };
    let mut x = x0;
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&add(&x, &k1, h / 2.0));
        let k3 = f(&add(&x, &k2, h / 2.0));
        let k4 = f(&add(&x, &k3, h));
        x = std::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    x
}

#[test]
fn lag_discretization_matches_integration() {
    let p = HlParams {
        tau_star: 1.0,
        tt: 0.3,
        k_s: 0.5,
        k_v: 0.5,
        k_a: -1.0,
        l: 5.0,
    };
    let sys = build_discrete_system(&AvParams::Hl(p), 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let x = [
            rng.random_range(-5.0..5.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-2.0..2.0),
        ];
        let (u, a_l) = (rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0));
        // ds' = dv - tau* a, dv' = a_l - a, a' = (u - a) / tt
        let cont = |s: &[f64; 3]| [s[1] - p.tau_star * s[2], a_l - s[2], (u - s[2]) / p.tt];
        let exact = rk4(cont, x, 0.1, 200);
        let disc = sys.step(x, u, a_l);
        for i in 0..3 {
            assert!(
                (exact[i] - disc[i]).abs() < 1e-10,
                "state {i}: {} vs {}",
                exact[i],
                disc[i]
            );
        }
    }
}

#[test]
fn spacing_controllers_match_integration() {
    let llcs = AvParams::Llcs(LlcsParams {
        s0: 10.0,
        k_s: 1.0,
        k_v: 1.0,
    });
    let llctg = LlctgParams {
        tau_star: 1.0,
        k_s: 1.0,
        k_v: 1.0,
        l: 5.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let x = [
            rng.random_range(-5.0..5.0),
            rng.random_range(-3.0..3.0),
            0.0,
        ];
        let (u, a_l) = (rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0));

        let exact = rk4(|s: &[f64; 2]| [s[1], a_l - u], [x[0], x[1]], 0.1, 50);
        let disc = build_discrete_system(&llcs, 0.1).step(x, u, a_l);
        assert!((exact[0] - disc[0]).abs() < 1e-10 && (exact[1] - disc[1]).abs() < 1e-10);

        // The time-gap controller is checked with a cruising leader only.
        let exact = rk4(
            |s: &[f64; 2]| [s[1] - llctg.tau_star * u, -u],
            [x[0], x[1]],
            0.1,
            50,
        );
        let disc = build_discrete_system(&AvParams::Llctg(llctg), 0.1).step(x, u, 0.0);
        assert!((exact[0] - disc[0]).abs() < 1e-10 && (exact[1] - disc[1]).abs() < 1e-10);
    }
}

/// Follower rollouts agree with zero-order-hold integration of the
/// recorded control.
/// Returns false, without checking, for rollouts that hit the zero-speed
/// clamp.
fn check_kinematic(params: &ModelParams, pair: &hybrid_cf::trajectory::CFPair) -> bool {
    let sim = simulate_follower(params, pair, &SimOptions::default()).unwrap();
    if sim.flags.speed_clamped {
        return false;
    }
    let s = &sim.portfolio;
    let dt = pair.dt();
    for k in 0..pair.len() - 1 {
        let (p, v, u) = (s.positions()[k], s.speeds()[k], s.accelerations()[k]);
        assert!(
            (s.speeds()[k + 1] - (v + u * dt)).abs() < 1e-6,
            "speed at {k}"
        );
        assert!(
            (s.positions()[k + 1] - (p + v * dt + 0.5 * u * dt * dt)).abs() < 1e-6,
            "position at {k}"
        );
    }
    true
}

#[test]
fn constant_spacing_rollout_is_kinematic() {
    let priors = PriorBounds::default();
    let params = priors.midpoint(ModelId::Llcs).unwrap();
    let ds = generate(&SynthConfig::at_prior_midpoint(ModelId::Idm, 10, 30.0, 9).unwrap()).unwrap();
    let checked: Vec<_> = ds
        .pairs()
        .iter()
        .filter(|p| check_kinematic(&params, p))
        .collect();
    assert!(
        checked.len() >= 3,
        "only {} unclamped rollouts",
        checked.len()
    );
    assert!(checked
        .iter()
        .any(|p| p.leader().accelerations().iter().any(|&a| a != 0.0)));
}

#[test]
fn time_gap_rollout_is_kinematic_behind_a_cruising_leader() {
    let params = PriorBounds::default().midpoint(ModelId::Llctg).unwrap();
    // Start 8 m closer than desired and 2 m/s slower than the leader.
    let pair = common::analytic_pair(
        "cruise",
        300,
        0.1,
        40.0,
        15.0,
        |t| (13.0 * t, 13.0, 0.0),
        5.0,
    );
    assert!(check_kinematic(&params, &pair));
}
