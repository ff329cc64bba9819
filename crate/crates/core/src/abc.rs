//! Rejection sampling with per-pair top-N selection.
//!
//! Each particle is drawn from the prior, assigned one pair uniformly at
//! random and scored on that pair only. A pair's bucket keeps the `N`
//! lowest-scoring particles assigned to it.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{ModelId, ModelParams};
use crate::priors::PriorBounds;
use crate::rng::{derive_seed, stream_rng, STREAM_ASSIGN, STREAM_PRIOR};
use crate::score::{score_particle, ScoreConfig};
use crate::trajectory::Dataset;

/// Particles evaluated per parallel work item.
const CHUNK: u64 = 1024;

/// A parameter draw together with the pair it was scored on.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub params: ModelParams,
    pub pair_id: String,
    /// Position of the draw in its model's particle stream.
    pub draw_index: u64,
    /// Weighted trajectory distance; `+inf` if the rollout aborted.
    pub score: f64,
}

impl Particle {
    pub fn model(&self) -> ModelId {
        self.params.model_id()
    }
}

/// Orders by score, then by draw index.
pub(crate) fn by_score(a: &Particle, b: &Particle) -> Ordering {
    a.score
        .total_cmp(&b.score)
        .then(a.draw_index.cmp(&b.draw_index))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbcConfig {
    pub n_particles: u64,
    /// Particles kept per pair.
    pub n_keep: usize,
    /// Optional absolute acceptance threshold applied before ranking.
    pub threshold: Option<f64>,
    pub score: ScoreConfig,
}

impl AbcConfig {
    pub fn new(n_particles: u64, n_keep: usize) -> Self {
        Self {
            n_particles,
            n_keep,
            threshold: None,
            score: ScoreConfig::default(),
        }
    }
}

/// Counters gathered while sampling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AbcStats {
    pub evaluated: u64,
    pub aborted: u64,
    pub above_threshold: u64,
}

/// Accepted particles of one model, bucketed by pair in dataset order.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSet {
    model: ModelId,
    pair_ids: Vec<String>,
    buckets: Vec<Vec<Particle>>,
    n_keep: usize,
    stats: AbcStats,
}

impl PosteriorSet {
    /// Builds a set from already-scored particles, keeping the best
    /// `n_keep` finite scores per pair.
    pub fn from_particles(
        model: ModelId,
        pair_ids: Vec<String>,
        n_keep: usize,
        particles: impl IntoIterator<Item = Particle>,
    ) -> Result<Self> {
        let mut buckets = vec![Vec::new(); pair_ids.len()];
        for p in particles {
            if p.model() != model {
                return Err(Error::InvalidInput(format!(
                    "{} particle in {model} posterior",
                    p.model()
                )));
            }
            let k = pair_ids
                .iter()
                .position(|id| *id == p.pair_id)
                .ok_or_else(|| Error::UnknownPair(p.pair_id.clone()))?;
            if p.score.is_finite() {
                buckets[k].push(p);
            }
        }
        for b in &mut buckets {
            b.sort_by(by_score);
            b.truncate(n_keep);
        }
        Ok(Self {
            model,
            pair_ids,
            buckets,
            n_keep,
            stats: AbcStats::default(),
        })
    }

    pub fn model(&self) -> ModelId {
        self.model
    }

    pub fn pair_ids(&self) -> &[String] {
        &self.pair_ids
    }

    pub fn n_keep(&self) -> usize {
        self.n_keep
    }

    pub fn stats(&self) -> AbcStats {
        self.stats
    }

    /// Buckets in dataset pair order, each sorted by ascending score.
    pub fn buckets(&self) -> &[Vec<Particle>] {
        &self.buckets
    }

    pub fn bucket(&self, pair_id: &str) -> Option<&[Particle]> {
        let k = self.pair_ids.iter().position(|id| id == pair_id)?;
        Some(&self.buckets[k])
    }

    pub fn particles(&self) -> impl Iterator<Item = &Particle> {
        self.buckets.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The same set keeping only the best `n` per pair.
    pub fn truncated(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.n_keep = n.min(self.n_keep);
        for b in &mut out.buckets {
            b.truncate(n);
        }
        out
    }
}

/// Seed of a model's particle stream under a run seed.
pub fn model_seed(seed: u64, model: ModelId) -> u64 {
    derive_seed(seed, model.name(), 0)
}

/// Uniform pair index.
pub fn assign_pair<R: Rng + ?Sized>(rng: &mut R, dataset: &Dataset) -> Result<usize> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput(
            "cannot assign a pair from an empty dataset".into(),
        ));
    }
    Ok(rng.random_range(0..dataset.len()))
}

/// The prior draw and pair assignment of particle `index`, exactly as
/// `run_abc_rs` produces them.
pub fn draw_particle(
    model: ModelId,
    dataset: &Dataset,
    priors: &PriorBounds,
    seed: u64,
    index: u64,
) -> Result<(ModelParams, usize)> {
    let root = model_seed(seed, model);
    let params = priors.sample(model, &mut stream_rng(root, STREAM_PRIOR, index))?;
    let pair = assign_pair(&mut stream_rng(root, STREAM_ASSIGN, index), dataset)?;
    Ok((params, pair))
}

type Buckets = Vec<Vec<Particle>>;

fn merge_buckets(mut a: Buckets, b: Buckets, n_keep: usize) -> Buckets {
    for (x, y) in a.iter_mut().zip(b) {
        x.extend(y);
        x.sort_by(by_score);
        x.truncate(n_keep);
    }
    a
}

/// Samples `n_particles` from `model`'s prior and keeps the best `n_keep`
/// per pair of `dataset`.
///
/// The outcome depends only on the arguments, not on the rayon pool size.
pub fn run_abc_rs(
    model: ModelId,
    dataset: &Dataset,
    priors: &PriorBounds,
    cfg: &AbcConfig,
    seed: u64,
) -> Result<PosteriorSet> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("dataset has no pairs".into()));
    }
    if cfg.n_keep == 0 {
        return Err(Error::InvalidInput("n_keep must be positive".into()));
    }
    cfg.score.weights.validate()?;
    let n_pairs = dataset.len();
    if cfg.n_particles < (cfg.n_keep * n_pairs) as u64 {
        log::warn!(
            "{model}: {} particles cannot fill {} pairs x {} slots",
            cfg.n_particles,
            n_pairs,
            cfg.n_keep
        );
    }

    let n_chunks = cfg.n_particles.div_ceil(CHUNK);
    let results: Vec<Result<(Buckets, AbcStats)>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut buckets: Buckets = vec![Vec::new(); n_pairs];
            let mut stats = AbcStats::default();
            let end = ((c + 1) * CHUNK).min(cfg.n_particles);
            for index in c * CHUNK..end {
                let (params, k) = draw_particle(model, dataset, priors, seed, index)?;
                let pair = &dataset.pairs()[k];
                let score = score_particle(&params, pair, &cfg.score);
                stats.evaluated += 1;
                if !score.is_finite() {
                    stats.aborted += 1;
                    continue;
                }
                if cfg.threshold.is_some_and(|t| score > t) {
                    stats.above_threshold += 1;
                    continue;
                }
                let bucket = &mut buckets[k];
                if bucket.len() == cfg.n_keep && bucket.last().is_some_and(|w| score >= w.score) {
                    continue;
                }
                bucket.push(Particle {
                    params,
                    pair_id: pair.id().to_string(),
                    draw_index: index,
                    score,
                });
                bucket.sort_by(by_score);
                bucket.truncate(cfg.n_keep);
            }
            Ok((buckets, stats))
        })
        .collect();

    let mut buckets: Buckets = vec![Vec::new(); n_pairs];
    let mut stats = AbcStats::default();
    for r in results {
        let (b, s) = r?;
        buckets = merge_buckets(buckets, b, cfg.n_keep);
        stats.evaluated += s.evaluated;
        stats.aborted += s.aborted;
        stats.above_threshold += s.above_threshold;
    }
    for (id, b) in dataset.pairs().iter().zip(&buckets) {
        if b.is_empty() {
            log::warn!("{model}: no particle accepted for pair {}", id.id());
        }
    }
    Ok(PosteriorSet {
        model,
        pair_ids: dataset.pairs().iter().map(|p| p.id().to_string()).collect(),
        buckets,
        n_keep: cfg.n_keep,
        stats,
    })
}

/// Uniform draw over a particle collection.
pub fn sample_posterior<'a, T, R: Rng + ?Sized>(particles: &'a [T], rng: &mut R) -> Result<&'a T> {
    if particles.is_empty() {
        return Err(Error::EmptyParticleSet);
    }
    Ok(&particles[rng.random_range(0..particles.len())])
}
