mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hybrid_cf::metrics::{beta_wasserstein, minimum_distance, wasserstein, CostMatrix};
use hybrid_cf::transport::solve_transport;

fn matrix(m: usize, n: usize, cost: Vec<f64>) -> CostMatrix {
    CostMatrix::from_costs((0..m).map(|i| format!("p{i}")).collect(), n, cost).unwrap()
}

#[test]
fn ws_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let (m, n) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let cost = common::integer_costs(&mut rng, m, n);
        let expected = common::ws_by_enumeration(&cost, m, n);
        let (got, plan) = wasserstein(&matrix(m, n, cost.clone())).unwrap();
        assert!(
            (got - expected).abs() < 1e-9,
            "{m}x{n} {cost:?}: {got} vs {expected}"
        );
        let recomputed: f64 = plan.flow().iter().zip(&cost).map(|(f, c)| f * c).sum();
        assert!((recomputed - got).abs() < 1e-12);
    }
}

#[test]
fn beta_ws_matches_relaxed_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let (m, n) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let cost = common::integer_costs(&mut rng, m, n);
        let beta = [0.05, 0.15, 0.5, 0.95, 1.0][rng.random_range(0..5)];
        let expected = common::beta_ws_by_enumeration(&cost, m, n, beta);
        let (got, _) = beta_wasserstein(&matrix(m, n, cost.clone()), beta).unwrap();
        assert!(
            (got - expected).abs() < 1e-9,
            "{cost:?} beta {beta}: {got} vs {expected}"
        );
    }
}

#[test]
fn outlier_particle_is_mostly_ignored() {
    // Particle 2 is far from both pairs; WS must still ship it a third of
    // the mass while the relaxed distance ships it only beta / 3.
    let cost = vec![1.0, 2.0, 50.0, 2.0, 1.0, 60.0];
    let cm = matrix(2, 3, cost.clone());
    let (ws, _) = wasserstein(&cm).unwrap();
    let (bws, plan) = beta_wasserstein(&cm, 0.15).unwrap();
    assert!((ws - common::ws_by_enumeration(&cost, 2, 3)).abs() < 1e-9);
    assert!((bws - common::beta_ws_by_enumeration(&cost, 2, 3, 0.15)).abs() < 1e-9);
    assert!(bws < ws / 5.0);
    assert!((plan.col_sums()[2] - 0.05).abs() < 1e-12);
}

#[test]
fn small_beta_approaches_minimum() {
    let cost = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
    let cm = matrix(2, 3, cost);
    let (bws, _) = beta_wasserstein(&cm, 1e-6).unwrap();
    let min = minimum_distance(&cm).unwrap();
    assert!(bws >= min - 1e-12);
    assert!(bws - min < 1e-4);
}

fn costs(max_m: usize, max_n: usize) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1..=max_m, 1..=max_n).prop_flat_map(|(m, n)| {
        (
            Just(m),
            Just(n),
            proptest::collection::vec(0.0..100.0f64, m * n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn marginals_hold((m, n, cost) in costs(8, 12)) {
        let plan = solve_transport(&cost, &vec![1.0 / m as f64; m], &vec![1.0 / n as f64; n]).unwrap();
        for r in plan.row_sums() {
            prop_assert!((r - 1.0 / m as f64).abs() < 1e-9);
        }
        for c in plan.col_sums() {
            prop_assert!((c - 1.0 / n as f64).abs() < 1e-9);
        }
        prop_assert!(plan.flow().iter().all(|&f| f >= -1e-12));
    }

    #[test]
    fn invariant_under_permutation((m, n, cost) in costs(6, 8), shift in 0usize..64) {
        let (ws, _) = wasserstein(&matrix(m, n, cost.clone())).unwrap();
        // Rotate rows and columns.
        let (ri, ci) = (shift % m, shift % n);
        let permuted: Vec<f64> = (0..m * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                cost[((i + ri) % m) * n + (j + ci) % n]
            })
            .collect();
        let (wp, _) = wasserstein(&matrix(m, n, permuted)).unwrap();
        prop_assert!((ws - wp).abs() < 1e-9 * (1.0 + ws));
    }

    #[test]
    fn scales_linearly((m, n, cost) in costs(6, 8), k in 0.1..10.0f64) {
        let (ws, _) = wasserstein(&matrix(m, n, cost.clone())).unwrap();
        let scaled: Vec<f64> = cost.iter().map(|c| c * k).collect();
        let (wk, _) = wasserstein(&matrix(m, n, scaled)).unwrap();
        prop_assert!((wk - k * ws).abs() < 1e-9 * (1.0 + k * ws));
    }

    #[test]
    fn distances_are_ordered((m, n, cost) in costs(10, 20)) {
        let cm = matrix(m, n, cost);
        let (ws, _) = wasserstein(&cm).unwrap();
        let min = minimum_distance(&cm).unwrap();
        let mut prev = min;
        for beta in [0.05, 0.15, 0.5, 0.95, 1.0] {
            let (b, _) = beta_wasserstein(&cm, beta).unwrap();
            prop_assert!(b >= prev - 1e-9 * (1.0 + b));
            prev = b;
        }
        prop_assert!((prev - ws).abs() < 1e-9 * (1.0 + ws));
    }
}
