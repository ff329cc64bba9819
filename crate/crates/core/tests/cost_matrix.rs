mod common;

use hybrid_cf::controllers::{AvParams, LlcsParams};
use hybrid_cf::metrics::{beta_wasserstein, build_cost_matrix, minimum_distance, wasserstein};
use hybrid_cf::models::{GfmParams, HdvParams};
use hybrid_cf::params::ModelParams;
use hybrid_cf::score::ScoreConfig;
use hybrid_cf::trajectory::Dataset;

const N: usize = 21;
const DT: f64 = 0.1;

/// Two pairs behind a leader cruising at 10 m/s: on `a` the follower
/// matches it, on `b` it starts at 8 m/s and accelerates at 0.5 m/s^2.
fn dataset() -> Dataset {
    let a = common::analytic_pair("a", N, DT, 50.0, 10.0, |t| (10.0 * t, 10.0, 0.0), 5.0);
    let b = common::analytic_pair(
        "b",
        N,
        DT,
        50.0,
        10.0,
        |t| (8.0 * t + 0.25 * t * t, 8.0 + 0.5 * t, 0.5),
        5.0,
    );
    Dataset::new("hand", vec![a, b]).unwrap()
}

fn particles() -> Vec<ModelParams> {
    vec![
        // No acceleration ever: the follower keeps its initial speed.
        ModelParams::Hdv(HdvParams::Gfm(GfmParams {
            k: 0.0,
            lambda: 0.0,
            v1: 6.0,
            v2: 20.0,
            c1: 0.1,
            c2: 1.5,
        })),
        // Pure relative-speed feedback with unit gain.
        ModelParams::Av(AvParams::Llcs(LlcsParams {
            s0: 15.0,
            k_s: 0.0,
            k_v: 1.0,
        })),
    ]
}

fn score(ep: impl Fn(usize) -> f64, ev: impl Fn(usize) -> f64, ea: impl Fn(usize) -> f64) -> f64 {
    0.5 * common::rms((0..N).map(ep))
        + 0.3 * common::rms((0..N).map(ev))
        + 0.2 * common::rms((0..N).map(ea))
}

#[test]
fn entries_match_hand_rollouts() {
    let cm = build_cost_matrix(&particles(), &dataset(), &ScoreConfig::default()).unwrap();
    let t = |k: usize| k as f64 * DT;

    // Both particles reproduce the cruising pair.
    assert!(cm.get(0, 0).abs() < 1e-9);
    assert!(cm.get(0, 1).abs() < 1e-9);

    // Null law on `b`: p = 8t, v = 8, a = 0.
    let null_b = score(|k| 0.25 * t(k) * t(k), |k| 0.5 * t(k), |_| 0.5);
    assert!(
        (cm.get(1, 0) - null_b).abs() < 1e-9,
        "{} vs {null_b}",
        cm.get(1, 0)
    );

    // Feedback on `b`: dv_k = 2 (0.9)^k, u_k = dv_k, and the spacing error
    // grows by 0.095 dv_k per step, so p_k = 10 t_k - 1.9 (1 - 0.9^k).
    let g = |k: usize| 0.9f64.powi(k as i32);
    let fb_b = score(
        |k| 8.0 * t(k) + 0.25 * t(k) * t(k) - (10.0 * t(k) - 1.9 * (1.0 - g(k))),
        |k| 8.0 + 0.5 * t(k) - (10.0 - 2.0 * g(k)),
        |k| 0.5 - 2.0 * g(k),
    );
    assert!(
        (cm.get(1, 1) - fb_b).abs() < 1e-9,
        "{} vs {fb_b}",
        cm.get(1, 1)
    );

    // Either column can absorb pair `a`, so every distance sends pair `b`
    // to its cheaper particle.
    let best = 0.5 * null_b.min(fb_b);
    assert!((wasserstein(&cm).unwrap().0 - best).abs() < 1e-12);
    assert!((beta_wasserstein(&cm, 0.15).unwrap().0 - best).abs() < 1e-12);
    assert!((minimum_distance(&cm).unwrap() - best).abs() < 1e-12);
}
