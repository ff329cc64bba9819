//! Balanced transportation problems solved with the transportation simplex
//! (least-cost start, u-v potentials, Dantzig pricing with a Bland fallback).
//!
//! `+inf` costs mark forbidden cells. Internally they are replaced by a
//! large finite cost; a solution that still routes mass through one is
//! reported as infeasible.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Mass below this is treated as zero when checking forbidden cells.
const FLOW_EPS: f64 = 1e-12;
/// Degenerate pivots in a row before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;

/// Optimal flow of a balanced transportation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    flow: Vec<f64>,
    objective: f64,
}

impl TransportPlan {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.flow[i * self.cols + j]
    }

    /// Flow in row-major order.
    pub fn flow(&self) -> &[f64] {
        &self.flow
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.flow
            .chunks(self.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.flow.chunks(self.cols) {
            for (o, x) in out.iter_mut().zip(row) {
                *o += x;
            }
        }
        out
    }

    pub(crate) fn from_parts(rows: usize, cols: usize, flow: Vec<f64>, objective: f64) -> Self {
        Self {
            rows,
            cols,
            flow,
            objective,
        }
    }
}

/// Solves `min sum c_ij x_ij` subject to row sums `supply`, column sums
/// `demand`, `x >= 0`. `cost` is row-major with `supply.len()` rows.
///
/// ```
/// use hybrid_cf::transport::solve_transport;
/// let plan = solve_transport(&[0.0, 10.0, 10.0, 0.0], &[0.5, 0.5], &[0.5, 0.5]).unwrap();
/// assert_eq!(plan.objective(), 0.0);
/// assert_eq!(plan.get(0, 0), 0.5);
/// ```
pub fn solve_transport(cost: &[f64], supply: &[f64], demand: &[f64]) -> Result<TransportPlan> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput(
            "transport problem has no rows or columns".into(),
        ));
    }
    if cost.len() != m * n {
        return Err(Error::InvalidInput(format!(
            "cost has {} entries, expected {m}x{n}",
            cost.len()
        )));
    }
    if supply
        .iter()
        .chain(demand)
        .any(|x| !(x.is_finite() && *x >= 0.0))
    {
        return Err(Error::InvalidInput(
            "marginals must be finite and non-negative".into(),
        ));
    }
    if cost.iter().any(|c| c.is_nan() || *c == f64::NEG_INFINITY) {
        return Err(Error::InvalidInput("costs must be real or +inf".into()));
    }
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if (total_s - total_d).abs() > 1e-9 * total_s.max(total_d).max(1.0) {
        return Err(Error::InvalidInput(format!(
            "unbalanced marginals: supply {total_s}, demand {total_d}"
        )));
    }
    for i in 0..m {
        if supply[i] > 0.0 && cost[i * n..(i + 1) * n].iter().all(|c| c.is_infinite()) {
            return Err(Error::Infeasible(format!("row {i} has no finite cost")));
        }
    }
    for j in 0..n {
        if demand[j] > 0.0 && (0..m).all(|i| cost[i * n + j].is_infinite()) {
            return Err(Error::Infeasible(format!("column {j} has no finite cost")));
        }
    }

    let cmax = cost
        .iter()
        .filter(|c| c.is_finite())
        .fold(0.0_f64, |a, c| a.max(c.abs()));
    let min_mass = supply
        .iter()
        .chain(demand)
        .filter(|x| **x > 0.0)
        .fold(f64::INFINITY, |a, x| a.min(*x));
    let has_forbidden = cost.iter().any(|c| c.is_infinite());
    let sentinel = if has_forbidden {
        4.0 * (cmax + 1.0) * (m * n) as f64 / min_mass.min(1.0)
    } else {
        0.0
    };
    let work: Vec<f64> = cost
        .iter()
        .map(|&c| if c.is_infinite() { sentinel } else { c })
        .collect();
    let scale = if has_forbidden {
        sentinel
    } else {
        cmax.max(1.0)
    };
    let tol = 1e-12 * scale;

    let mut solver = Simplex::new(&work, supply, demand);
    solver.initial_basis();
    solver.optimize(tol)?;

    let mut flow = vec![0.0; m * n];
    for (&(i, j), &x) in solver.basis.iter().zip(&solver.amount) {
        flow[i * n + j] = x;
    }
    let mut objective = 0.0;
    for (idx, &x) in flow.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        if cost[idx].is_infinite() {
            if x > FLOW_EPS {
                return Err(Error::Infeasible(format!(
                    "no plan avoids forbidden cell ({}, {})",
                    idx / n,
                    idx % n
                )));
            }
            continue;
        }
        objective += cost[idx] * x;
    }
    Ok(TransportPlan::from_parts(m, n, flow, objective))
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    supply: &'a [f64],
    demand: &'a [f64],
    basis: Vec<(usize, usize)>,
    amount: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn new(cost: &'a [f64], supply: &'a [f64], demand: &'a [f64]) -> Self {
        Self {
            m: supply.len(),
            n: demand.len(),
            cost,
            supply,
            demand,
            basis: Vec::with_capacity(supply.len() + demand.len()),
            amount: Vec::with_capacity(supply.len() + demand.len()),
        }
    }

    /// Least-cost rule. Every allocation crosses out exactly one line, the
    /// last one both, so the result is a spanning tree of `m + n - 1` cells.
    fn initial_basis(&mut self) {
        let (m, n) = (self.m, self.n);
        let mut order: Vec<usize> = (0..m * n).collect();
        order.sort_by(|&a, &b| self.cost[a].total_cmp(&self.cost[b]).then(a.cmp(&b)));
        let mut rem_s = self.supply.to_vec();
        let mut rem_d = self.demand.to_vec();
        let mut row_live = vec![true; m];
        let mut col_live = vec![true; n];
        let (mut live_rows, mut live_cols) = (m, n);
        for idx in order {
            let (i, j) = (idx / n, idx % n);
            if !row_live[i] || !col_live[j] {
                continue;
            }
            let x = rem_s[i].min(rem_d[j]);
            self.basis.push((i, j));
            self.amount.push(x);
            if live_rows == 1 && live_cols == 1 {
                break;
            }
            let cross_row = live_cols == 1 || (live_rows > 1 && rem_s[i] <= rem_d[j]);
            if cross_row {
                rem_d[j] -= rem_s[i];
                rem_s[i] = 0.0;
                row_live[i] = false;
                live_rows -= 1;
            } else {
                rem_s[i] -= rem_d[j];
                rem_d[j] = 0.0;
                col_live[j] = false;
                live_cols -= 1;
            }
        }
        for r in rem_d.iter_mut().chain(rem_s.iter_mut()) {
            *r = r.max(0.0);
        }
    }

    /// Tree adjacency: node `i < m` is a row, `m + j` is column `j`.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (b, &(i, j)) in self.basis.iter().enumerate() {
            adj[i].push((self.m + j, b));
            adj[self.m + j].push((i, b));
        }
        adj
    }

    fn potentials(&self, adj: &[Vec<(usize, usize)>]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut pot = vec![f64::NAN; m + n];
        let mut seen = vec![false; m + n];
        pot[0] = 0.0;
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &(next, b) in &adj[node] {
                if seen[next] {
                    continue;
                }
                let (i, j) = self.basis[b];
                pot[next] = self.cost[i * n + j] - pot[node];
                seen[next] = true;
                queue.push_back(next);
            }
        }
        let v = pot.split_off(m);
        (pot, v)
    }

    /// Basis indices on the tree path from row `p` to column `q`, starting
    /// at the edge touching `q`.
    fn path(&self, adj: &[Vec<(usize, usize)>], p: usize, q: usize) -> Vec<usize> {
        let target = self.m + q;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        seen[p] = true;
        let mut queue = VecDeque::from([p]);
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &(next, b) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, b));
                    queue.push_back(next);
                }
            }
        }
        let mut edges = Vec::new();
        let mut node = target;
        while let Some((prev, b)) = parent[node] {
            edges.push(b);
            node = prev;
        }
        edges
    }

    fn optimize(&mut self, tol: f64) -> Result<()> {
        let (m, n) = (self.m, self.n);
        let max_iter = 50 * (m + n) * m.max(n) + 10_000;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut in_basis = vec![false; m * n];
        for &(i, j) in &self.basis {
            in_basis[i * n + j] = true;
        }
        for _ in 0..max_iter {
            let adj = self.adjacency();
            let (u, v) = self.potentials(&adj);

            let mut entering: Option<(usize, f64)> = None;
            'scan: for (i, ui) in u.iter().enumerate() {
                for (j, vj) in v.iter().enumerate() {
                    let idx = i * n + j;
                    if in_basis[idx] {
                        continue;
                    }
                    let r = self.cost[idx] - ui - vj;
                    if r < -tol && entering.is_none_or(|(_, best)| r < best) {
                        entering = Some((idx, r));
                        if bland {
                            break 'scan;
                        }
                    }
                }
            }
            let Some((enter, _)) = entering else {
                return Ok(());
            };
            let (p, q) = (enter / n, enter % n);
            let path = self.path(&adj, p, q);

            // Path edges alternate donor / receiver, beginning with a donor.
            let mut leave: Option<usize> = None;
            for &b in path.iter().step_by(2) {
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let (x, y) = (self.amount[b], self.amount[l]);
                        x < y || (x == y && self.cell(b) < self.cell(l))
                    }
                };
                if better {
                    leave = Some(b);
                }
            }
            let leave = leave.expect("cycle has a donor cell");
            let theta = self.amount[leave];
            for (k, &b) in path.iter().enumerate() {
                if k % 2 == 0 {
                    self.amount[b] -= theta;
                } else {
                    self.amount[b] += theta;
                }
            }
            self.amount[leave] = 0.0;
            in_basis[self.cell(leave)] = false;
            in_basis[enter] = true;
            self.basis[leave] = (p, q);
            self.amount[leave] = theta;

            if theta == 0.0 {
                degenerate_run += 1;
                if degenerate_run >= DEGENERATE_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
        }
        Err(Error::Infeasible(format!(
            "transport simplex did not converge in {max_iter} pivots"
        )))
    }

    fn cell(&self, b: usize) -> usize {
        let (i, j) = self.basis[b];
        i * self.n + j
    }
}
