//! End-to-end runs: cross-validated calibration, pairwise comparison and
//! error evolution.

use crate::abc::{run_abc_rs, PosteriorSet};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::hybrid::{merge_hybrid, pairwise_matrix, HybridPosterior, PairwiseMatrix, Share};
use crate::metrics::{build_cost_matrix, evaluate, normalize_metrics, MetricRow};
use crate::params::{ModelId, ModelParams};
use crate::priors::PriorBounds;
use crate::rng::derive_seed;
use crate::score::{score_particle, ScoreConfig};
use crate::simulator::simulate_follower;
use crate::trajectory::{split_folds, Dataset, Fold};

/// Label of the merged particle set in metric tables.
pub const HYBRID_LABEL: &str = "hybrid";

/// Seed of the sampling streams of fold `fold`.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, "fold", fold as u64)
}

/// One model's posterior per entry of `models`, all on `train`.
pub fn run_models(
    models: &[ModelId],
    train: &Dataset,
    priors: &PriorBounds,
    cfg: &RunConfig,
    seed: u64,
) -> Result<Vec<PosteriorSet>> {
    let abc = cfg.abc_config()?;
    models
        .iter()
        .map(|&m| {
            log::info!("sampling {m} on {} pairs", train.len());
            run_abc_rs(m, train, priors, &abc, seed)
        })
        .collect()
}

fn truncate_all(posteriors: &[PosteriorSet], n: usize) -> Vec<PosteriorSet> {
    posteriors.iter().map(|p| p.truncated(n)).collect()
}

/// Results of one fold.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub index: usize,
    pub train_pairs: Vec<String>,
    pub test_pairs: Vec<String>,
    /// Posteriors at the configured per-pair size.
    pub posteriors: Vec<PosteriorSet>,
    pub hybrid: HybridPosterior,
    /// One row per model, then the hybrid.
    pub metrics: Vec<(String, MetricRow)>,
    /// Hybrid shares for each swept per-pair size.
    pub sensitivity: Vec<(usize, Vec<Share>)>,
}

#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub models: Vec<ModelId>,
    pub folds: Vec<FoldOutcome>,
    /// Element-wise mean of the fold tables.
    pub mean: Vec<(String, MetricRow)>,
    pub normalized: Vec<(String, MetricRow)>,
}

impl CalibrationReport {
    /// Counts summed over folds, per model.
    pub fn pooled_shares(&self) -> Vec<Share> {
        pool(self.folds.iter().map(|f| {
            (0..self.models.len())
                .map(|s| f.hybrid.share(s))
                .collect::<Vec<_>>()
        }))
    }

    /// Pooled shares for each swept size.
    pub fn pooled_sensitivity(&self) -> Vec<(usize, Vec<Share>)> {
        let Some(first) = self.folds.first() else {
            return Vec::new();
        };
        (0..first.sensitivity.len())
            .map(|k| {
                let n = first.sensitivity[k].0;
                (
                    n,
                    pool(self.folds.iter().map(|f| f.sensitivity[k].1.clone())),
                )
            })
            .collect()
    }
}

fn pool(per_fold: impl Iterator<Item = Vec<Share>>) -> Vec<Share> {
    let mut acc: Vec<Share> = Vec::new();
    for shares in per_fold {
        if acc.is_empty() {
            acc = shares;
            continue;
        }
        for (a, s) in acc.iter_mut().zip(shares) {
            a.count += s.count;
            a.total += s.total;
        }
    }
    acc
}

fn folds_for(cfg: &RunConfig, dataset: &Dataset) -> Result<Vec<Fold>> {
    if cfg.folds == 1 {
        log::warn!("a single fold evaluates on the training pairs");
        return Ok(vec![Fold {
            train: dataset.clone(),
            test: dataset.clone(),
        }]);
    }
    split_folds(dataset, cfg.folds, cfg.seed)
}

fn metrics_of(
    particles: &[ModelParams],
    test: &Dataset,
    score: &ScoreConfig,
    beta: f64,
) -> Result<MetricRow> {
    let cost = build_cost_matrix(particles, test, score)?;
    evaluate(&cost, beta)
}

/// Calibrates every configured model on each training fold, merges the
/// hybrid and evaluates all particle sets on the matching test fold.
pub fn cmd_calibrate(cfg: &RunConfig, dataset: &Dataset) -> Result<CalibrationReport> {
    cfg.validate()?;
    let models = cfg.model_ids()?;
    let priors = cfg.prior_bounds()?;
    let score = cfg.score_config()?;
    let mut folds = Vec::new();
    for (f, fold) in folds_for(cfg, dataset)?.into_iter().enumerate() {
        log::info!(
            "fold {f}: {} train, {} test",
            fold.train.len(),
            fold.test.len()
        );
        let raw = run_models(&models, &fold.train, &priors, cfg, fold_seed(cfg.seed, f))?;
        let posteriors = truncate_all(&raw, cfg.n_keep);
        let n_a = cfg.hybrid_size(fold.train.len(), cfg.n_keep);
        let hybrid = merge_hybrid(&posteriors, n_a, cfg.merge_mode)?;

        let mut metrics = Vec::new();
        for p in &posteriors {
            let params: Vec<ModelParams> = p.particles().map(|x| x.params).collect();
            if params.is_empty() {
                return Err(Error::Config(format!(
                    "{}: no particle accepted",
                    p.model()
                )));
            }
            metrics.push((
                p.model().name().to_string(),
                metrics_of(&params, &fold.test, &score, cfg.beta)?,
            ));
        }
        let params: Vec<ModelParams> = hybrid
            .particles()
            .iter()
            .map(|s| s.particle.params)
            .collect();
        metrics.push((
            HYBRID_LABEL.to_string(),
            metrics_of(&params, &fold.test, &score, cfg.beta)?,
        ));

        let mut sensitivity = Vec::new();
        if cfg.sensitivity {
            for &n in &cfg.sensitivity_sizes {
                let h = merge_hybrid(&truncate_all(&raw, n), n * fold.train.len(), cfg.merge_mode)?;
                sensitivity.push((n, (0..models.len()).map(|s| h.share(s)).collect()));
            }
        }
        folds.push(FoldOutcome {
            index: f,
            train_pairs: fold
                .train
                .pairs()
                .iter()
                .map(|p| p.id().to_string())
                .collect(),
            test_pairs: fold
                .test
                .pairs()
                .iter()
                .map(|p| p.id().to_string())
                .collect(),
            posteriors,
            hybrid,
            metrics,
            sensitivity,
        });
    }

    let labels: Vec<String> = folds[0].metrics.iter().map(|(l, _)| l.clone()).collect();
    let mean: Vec<(String, MetricRow)> = labels
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let rows: Vec<MetricRow> = folds.iter().map(|f| f.metrics[k].1).collect();
            (
                l.clone(),
                MetricRow::mean(&rows).expect("at least one fold"),
            )
        })
        .collect();
    let normalized_rows = normalize_metrics(&mean.iter().map(|(_, r)| *r).collect::<Vec<_>>());
    let normalized = labels.into_iter().zip(normalized_rows).collect();
    Ok(CalibrationReport {
        models,
        folds,
        mean,
        normalized,
    })
}

/// Pairwise shares over all configured models, calibrated on the full
/// dataset.
pub fn cmd_pairwise(cfg: &RunConfig, dataset: &Dataset) -> Result<PairwiseMatrix> {
    cfg.validate()?;
    let models = cfg.model_ids()?;
    if models.len() < 2 {
        return Err(Error::Config(
            "pairwise comparison needs at least two models".into(),
        ));
    }
    let raw = run_models(
        &models,
        dataset,
        &cfg.prior_bounds()?,
        cfg,
        fold_seed(cfg.seed, 0),
    )?;
    let posteriors = truncate_all(&raw, cfg.n_keep);
    pairwise_matrix(
        &posteriors,
        cfg.hybrid_size(dataset.len(), cfg.n_keep),
        cfg.merge_mode,
    )
}

/// Position error series of one hybrid particle on the chosen pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSeries {
    /// Index in the hybrid particle list.
    pub particle: usize,
    pub model: ModelId,
    pub draw_index: u64,
    /// Score on the chosen pair.
    pub score: f64,
    /// Rank by score on the chosen pair, 0 = best.
    pub rank: usize,
    pub top: bool,
    /// `|simulated - observed|` follower position per sample; empty if the
    /// rollout aborted.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionReport {
    pub pair_id: String,
    pub dt: f64,
    pub t0: f64,
    pub top_fraction: f64,
    pub series: Vec<EvolutionSeries>,
}

/// Rolls every hybrid particle out on `pair_id` and marks the best
/// `ceil(top_fraction * n)` of them.
pub fn error_evolution(
    hybrid: &HybridPosterior,
    dataset: &Dataset,
    pair_id: &str,
    top_fraction: f64,
    score: &ScoreConfig,
) -> Result<EvolutionReport> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::InvalidInput("top fraction must be in (0, 1]".into()));
    }
    let pair = dataset
        .get(pair_id)
        .ok_or_else(|| Error::UnknownPair(pair_id.to_string()))?;
    let mut series: Vec<EvolutionSeries> = hybrid
        .particles()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let params = &s.particle.params;
            let errors = simulate_follower(params, pair, &score.sim)
                .map(|sim| {
                    sim.portfolio
                        .positions()
                        .iter()
                        .zip(pair.follower().positions())
                        .map(|(a, b)| (a - b).abs())
                        .collect()
                })
                .unwrap_or_default();
            EvolutionSeries {
                particle: i,
                model: params.model_id(),
                draw_index: s.particle.draw_index,
                score: score_particle(params, pair, score),
                rank: 0,
                top: false,
                errors,
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..series.len()).collect();
    order.sort_by(|&a, &b| series[a].score.total_cmp(&series[b].score).then(a.cmp(&b)));
    let n_top =
        ((top_fraction * series.len() as f64).ceil() as usize).clamp(1, series.len().max(1));
    for (rank, &i) in order.iter().enumerate() {
        series[i].rank = rank;
        series[i].top = rank < n_top;
    }
    Ok(EvolutionReport {
        pair_id: pair_id.to_string(),
        dt: pair.dt(),
        t0: pair.leader().t0(),
        top_fraction,
        series,
    })
}

/// Calibrates on the full dataset, merges the hybrid and reports its error
/// evolution on the configured pair.
pub fn cmd_error_evolution(
    cfg: &RunConfig,
    dataset: &Dataset,
) -> Result<(HybridPosterior, EvolutionReport)> {
    cfg.validate()?;
    let models = cfg.model_ids()?;
    let pair_id = match &cfg.evolution.pair {
        Some(p) => p.clone(),
        None => dataset
            .pairs()
            .first()
            .ok_or_else(|| Error::InvalidInput("dataset has no pairs".into()))?
            .id()
            .to_string(),
    };
    if dataset.get(&pair_id).is_none() {
        return Err(Error::UnknownPair(pair_id));
    }
    let raw = run_models(
        &models,
        dataset,
        &cfg.prior_bounds()?,
        cfg,
        fold_seed(cfg.seed, 0),
    )?;
    let posteriors = truncate_all(&raw, cfg.n_keep);
    let hybrid = merge_hybrid(
        &posteriors,
        cfg.hybrid_size(dataset.len(), cfg.n_keep),
        cfg.merge_mode,
    )?;
    let report = error_evolution(
        &hybrid,
        dataset,
        &pair_id,
        cfg.evolution.top_fraction,
        &cfg.score_config()?,
    )?;
    Ok((hybrid, report))
}
