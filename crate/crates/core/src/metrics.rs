//! Error tables and distribution distances between a particle set and a set
//! of observed pairs.
//!
//! All three distances read a cost matrix whose rows are pairs and whose
//! columns are particles. Every pair carries mass `1/I`. Under the plain
//! Wasserstein distance every particle carries `1/n`. The partial variant
//! only requires `beta/n` per particle. The minimum distance drops the
//! particle side entirely.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::score::{channel_errors, ChannelErrors, ScoreConfig};
use crate::trajectory::Dataset;
use crate::transport::{solve_transport, TransportPlan};

/// Default particle-side mass fraction of the partial distance.
pub const DEFAULT_BETA: f64 = 0.15;

/// Scores of every particle on every pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: Vec<String>,
    cols: usize,
    cost: Vec<f64>,
    channels: Vec<Option<ChannelErrors>>,
}

impl CostMatrix {
    /// A matrix from raw costs in row-major order. Entries must be finite
    /// and non-negative, or `+inf`.
    pub fn from_costs(rows: Vec<String>, cols: usize, cost: Vec<f64>) -> Result<Self> {
        if rows.is_empty() || cols == 0 || cost.len() != rows.len() * cols {
            return Err(Error::InvalidInput(format!(
                "cost matrix of {} entries does not match {}x{cols}",
                cost.len(),
                rows.len()
            )));
        }
        if cost.iter().any(|c| c.is_nan() || *c < 0.0) {
            return Err(Error::InvalidInput("costs must be non-negative".into()));
        }
        let channels = vec![None; cost.len()];
        Ok(Self {
            rows,
            cols,
            cost,
            channels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row_ids(&self) -> &[String] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.cost[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.cost
    }

    /// Per-channel errors of a cell, when the matrix came from rollouts and
    /// the rollout finished.
    pub fn channels(&self, i: usize, j: usize) -> Option<ChannelErrors> {
        self.channels[i * self.cols + j]
    }

    fn check_rows(&self) -> Result<()> {
        for (i, id) in self.rows.iter().enumerate() {
            if self.row(i).iter().all(|c| c.is_infinite()) {
                return Err(Error::Infeasible(format!(
                    "every particle aborted on pair {id}"
                )));
            }
        }
        Ok(())
    }

    fn check_cols(&self) -> Result<()> {
        for j in 0..self.cols {
            if (0..self.rows.len()).all(|i| self.get(i, j).is_infinite()) {
                return Err(Error::Infeasible(format!(
                    "particle {j} aborted on every pair"
                )));
            }
        }
        Ok(())
    }
}

/// Simulates every particle on every pair of `test`.
pub fn build_cost_matrix(
    particles: &[ModelParams],
    test: &Dataset,
    cfg: &ScoreConfig,
) -> Result<CostMatrix> {
    if particles.is_empty() {
        return Err(Error::EmptyParticleSet);
    }
    if test.is_empty() {
        return Err(Error::InvalidInput("test set has no pairs".into()));
    }
    let n = particles.len();
    let channels: Vec<Option<ChannelErrors>> = (0..test.len() * n)
        .into_par_iter()
        .map(|idx| channel_errors(&particles[idx % n], &test.pairs()[idx / n], cfg))
        .collect();
    let cost = channels
        .iter()
        .map(|e| e.map_or(f64::INFINITY, |e| cfg.weights.combine(e)))
        .collect();
    Ok(CostMatrix {
        rows: test.pairs().iter().map(|p| p.id().to_string()).collect(),
        cols: n,
        cost,
        channels,
    })
}

/// Optimal transport with uniform masses on both sides.
pub fn wasserstein(cost: &CostMatrix) -> Result<(f64, TransportPlan)> {
    cost.check_rows()?;
    cost.check_cols()?;
    let (m, n) = (cost.n_rows(), cost.n_cols());
    let plan = solve_transport(
        &cost.cost,
        &vec![1.0 / m as f64; m],
        &vec![1.0 / n as f64; n],
    )?;
    Ok((plan.objective(), plan))
}

/// Optimal transport where each particle must receive at least `beta / n`
/// and the remaining mass may go anywhere.
///
/// The free mass `1 - beta` is routed through an auxiliary column whose
/// cost in each row is that row's minimum, then folded back onto the
/// row's cheapest particle in the returned plan.
pub fn beta_wasserstein(cost: &CostMatrix, beta: f64) -> Result<(f64, TransportPlan)> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "beta must be in (0, 1], got {beta}"
        )));
    }
    cost.check_rows()?;
    cost.check_cols()?;
    let (m, n) = (cost.n_rows(), cost.n_cols());
    let argmin: Vec<usize> = (0..m)
        .map(|i| {
            let row = cost.row(i);
            (0..n).fold(0, |b, j| if row[j] < row[b] { j } else { b })
        })
        .collect();
    let mut ext = Vec::with_capacity(m * (n + 1));
    for (i, &k) in argmin.iter().enumerate() {
        ext.extend_from_slice(cost.row(i));
        ext.push(cost.get(i, k));
    }
    let mut demand = vec![beta / n as f64; n];
    demand.push((1.0 - beta).max(0.0));
    let ext_plan = solve_transport(&ext, &vec![1.0 / m as f64; m], &demand)?;
    let mut flow = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            flow[i * n + j] = ext_plan.get(i, j);
        }
        flow[i * n + argmin[i]] += ext_plan.get(i, n);
    }
    let plan = TransportPlan::from_parts(m, n, flow, ext_plan.objective());
    Ok((plan.objective(), plan))
}

/// Mean over pairs of the cheapest particle's cost.
pub fn minimum_distance(cost: &CostMatrix) -> Result<f64> {
    cost.check_rows()?;
    let m = cost.n_rows();
    let total: f64 = (0..m)
        .map(|i| cost.row(i).iter().copied().fold(f64::INFINITY, f64::min))
        .sum();
    Ok(total / m as f64)
}

/// Mean per-channel errors over all cells whose rollout finished.
pub fn average_errors(cost: &CostMatrix) -> Result<ChannelErrors> {
    let finished: Vec<ChannelErrors> = cost.channels.iter().flatten().copied().collect();
    if finished.is_empty() {
        return Err(Error::InvalidInput(
            "cost matrix carries no finished rollouts".into(),
        ));
    }
    let skipped = cost.channels.len() - finished.len();
    if skipped > 0 {
        log::warn!("{skipped} aborted cells left out of the average errors");
    }
    let k = finished.len() as f64;
    Ok(ChannelErrors {
        position: finished.iter().map(|e| e.position).sum::<f64>() / k,
        speed: finished.iter().map(|e| e.speed).sum::<f64>() / k,
        accel: finished.iter().map(|e| e.accel).sum::<f64>() / k,
    })
}

/// The six evaluation numbers of one particle set on one test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub position_error: f64,
    pub speed_error: f64,
    pub accel_error: f64,
    pub wasserstein: f64,
    pub beta_wasserstein: f64,
    pub minimum: f64,
}

impl MetricRow {
    pub const NAMES: [&'static str; 6] = [
        "position_error",
        "speed_error",
        "accel_error",
        "wasserstein",
        "beta_wasserstein",
        "minimum",
    ];

    pub fn to_array(self) -> [f64; 6] {
        [
            self.position_error,
            self.speed_error,
            self.accel_error,
            self.wasserstein,
            self.beta_wasserstein,
            self.minimum,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            position_error: a[0],
            speed_error: a[1],
            accel_error: a[2],
            wasserstein: a[3],
            beta_wasserstein: a[4],
            minimum: a[5],
        }
    }

    /// Element-wise arithmetic mean.
    pub fn mean(rows: &[MetricRow]) -> Option<Self> {
        if rows.is_empty() {
            return None;
        }
        let mut acc = [0.0; 6];
        for r in rows {
            for (a, x) in acc.iter_mut().zip(r.to_array()) {
                *a += x;
            }
        }
        Some(Self::from_array(acc.map(|a| a / rows.len() as f64)))
    }
}

/// Evaluates all six metrics from a cost matrix.
pub fn evaluate(cost: &CostMatrix, beta: f64) -> Result<MetricRow> {
    let e = average_errors(cost)?;
    Ok(MetricRow {
        position_error: e.position,
        speed_error: e.speed,
        accel_error: e.accel,
        wasserstein: wasserstein(cost)?.0,
        beta_wasserstein: beta_wasserstein(cost, beta)?.0,
        minimum: minimum_distance(cost)?,
    })
}

/// Rescales each column to `[0, 1]` with 1 for the smallest value. A
/// column with a single distinct value maps to all ones.
///
/// ```
/// use hybrid_cf::metrics::normalize_column;
/// assert_eq!(normalize_column(&[2.0, 4.0]), vec![1.0, 0.0]);
/// assert_eq!(normalize_column(&[3.0, 3.0]), vec![1.0, 1.0]);
/// ```
pub fn normalize_column(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= min {
        return vec![1.0; values.len()];
    }
    values.iter().map(|x| (max - x) / (max - min)).collect()
}

/// Column-wise normalization of a metric table.
pub fn normalize_metrics(rows: &[MetricRow]) -> Vec<MetricRow> {
    let cols: Vec<Vec<f64>> = (0..6)
        .map(|c| normalize_column(&rows.iter().map(|r| r.to_array()[c]).collect::<Vec<_>>()))
        .collect();
    (0..rows.len())
        .map(|r| MetricRow::from_array(std::array::from_fn(|c| cols[c][r])))
        .collect()
}
