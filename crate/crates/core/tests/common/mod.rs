//! Independent oracles shared by the integration tests and the acceptance
//! harness.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use hybrid_cf::trajectory::{CFPair, StatePortfolio};

/// Minimum of `c . x` subject to `A x = b`, `x >= 0`, by enumerating every
/// basic solution. Exponential, so only for a handful of variables.
pub fn lp_vertex_min(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Option<f64> {
    // Keep a maximal set of linearly independent constraint rows.
    let mut rows: Vec<usize> = Vec::new();
    for i in 0..a.nrows() {
        let mut trial = rows.clone();
        trial.push(i);
        let sub = DMatrix::from_fn(trial.len(), a.ncols(), |r, j| a[(trial[r], j)]);
        if sub.rank(1e-9) == trial.len() {
            rows = trial;
        }
    }
    let r = rows.len();
    let n = a.ncols();
    let mut best: Option<f64> = None;
    for basis in combinations(n, r) {
        let sub = DMatrix::from_fn(r, r, |i, j| a[(rows[i], basis[j])]);
        let rhs = DVector::from_fn(r, |i, _| b[rows[i]]);
        if sub.determinant().abs() < 1e-9 {
            continue;
        }
        let Some(x) = sub.lu().solve(&rhs) else {
            continue;
        };
        if x.iter().any(|&v| v < -1e-9) {
            continue;
        }
        let value: f64 = basis.iter().zip(x.iter()).map(|(&j, &v)| c[j] * v).sum();
        best = Some(best.map_or(value, |b: f64| b.min(value)));
    }
    best
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Uniform-mass transport written as an explicit LP.
pub fn ws_by_enumeration(cost: &[f64], m: usize, n: usize) -> f64 {
    let vars = m * n;
    let mut a = DMatrix::zeros(m + n, vars);
    let mut b = DVector::zeros(m + n);
    for i in 0..m {
        for j in 0..n {
            a[(i, i * n + j)] = 1.0;
            a[(m + j, i * n + j)] = 1.0;
        }
        b[i] = 1.0 / m as f64;
    }
    for j in 0..n {
        b[m + j] = 1.0 / n as f64;
    }
    let c = DVector::from_column_slice(cost);
    lp_vertex_min(&a, &b, &c).expect("transport LP is feasible")
}

/// Relaxed transport: rows ship `1/m`, each column receives at least
/// `beta/n`. Surplus variables turn the lower bounds into equalities.
pub fn beta_ws_by_enumeration(cost: &[f64], m: usize, n: usize, beta: f64) -> f64 {
    let vars = m * n + n;
    let mut a = DMatrix::zeros(m + n, vars);
    let mut b = DVector::zeros(m + n);
    for i in 0..m {
        for j in 0..n {
            a[(i, i * n + j)] = 1.0;
            a[(m + j, i * n + j)] = 1.0;
        }
        b[i] = 1.0 / m as f64;
    }
    for j in 0..n {
        a[(m + j, m * n + j)] = -1.0;
        b[m + j] = beta / n as f64;
    }
    let mut c = DVector::zeros(vars);
    c.rows_mut(0, m * n)
        .copy_from(&DVector::from_column_slice(cost));
    lp_vertex_min(&a, &b, &c).expect("relaxed LP is feasible")
}

/// Random integer costs in `0..=10`.
pub fn integer_costs<R: Rng>(rng: &mut R, m: usize, n: usize) -> Vec<f64> {
    (0..m * n)
        .map(|_| rng.random_range(0..=10) as f64)
        .collect()
}

/// Leader cruising at `v_leader` from position `lead0`; follower described
/// by closed-form position, speed and acceleration functions of time.
pub fn analytic_pair(
    id: &str,
    n: usize,
    dt: f64,
    lead0: f64,
    v_leader: f64,
    follower: impl Fn(f64) -> (f64, f64, f64),
    leader_length: f64,
) -> CFPair {
    let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let leader = StatePortfolio::new(
        t.iter().map(|&t| lead0 + v_leader * t).collect(),
        vec![v_leader; n],
        vec![0.0; n],
        dt,
        0.0,
    )
    .unwrap();
    let f: Vec<(f64, f64, f64)> = t.iter().map(|&t| follower(t)).collect();
    let follower = StatePortfolio::new(
        f.iter().map(|x| x.0).collect(),
        f.iter().map(|x| x.1).collect(),
        f.iter().map(|x| x.2).collect(),
        dt,
        0.0,
    )
    .unwrap();
    CFPair::new(id, leader, follower, leader_length).unwrap()
}

pub fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    (sum / n as f64).sqrt()
}
