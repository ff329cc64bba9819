//! Merging single-model posteriors into one hybrid particle set.
//!
//! Shares are kept as integer counts over the number of selected particles,
//! so they add up to one exactly.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::abc::{Particle, PosteriorSet};
use crate::error::{Error, Result};
use crate::params::ModelId;

/// How the merged pool is cut down to `N_A` particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeMode {
    /// Best `N_A / |pairs|` per pair, pooled across models.
    #[default]
    Balanced,
    /// Best `N_A` overall.
    Global,
}

/// A particle of the hybrid together with the index of its source posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct Selected {
    pub source: usize,
    pub particle: Particle,
}

fn by_rank(a: &Selected, b: &Selected) -> Ordering {
    a.particle
        .score
        .total_cmp(&b.particle.score)
        .then(a.source.cmp(&b.source))
        .then(a.particle.draw_index.cmp(&b.particle.draw_index))
}

/// Count of selected particles from one source out of a total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Share {
    pub count: usize,
    pub total: usize,
}

impl Share {
    pub fn value(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridPosterior {
    sources: Vec<ModelId>,
    pair_ids: Vec<String>,
    particles: Vec<Selected>,
    counts: Vec<usize>,
}

impl HybridPosterior {
    /// Model of each source posterior, in merge order.
    pub fn sources(&self) -> &[ModelId] {
        &self.sources
    }

    pub fn pair_ids(&self) -> &[String] {
        &self.pair_ids
    }

    /// Selected particles sorted by pair, then rank within the pair.
    pub fn particles(&self) -> &[Selected] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn share(&self, source: usize) -> Share {
        Share {
            count: self.counts[source],
            total: self.particles.len(),
        }
    }

    /// Share of all sources of `model`.
    pub fn model_share(&self, model: ModelId) -> Share {
        let count = self
            .sources
            .iter()
            .zip(&self.counts)
            .filter(|(m, _)| **m == model)
            .map(|(_, c)| c)
            .sum();
        Share {
            count,
            total: self.particles.len(),
        }
    }

    /// Source with the largest count; ties go to the earlier source.
    pub fn top_source(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (s, &c) in self.counts.iter().enumerate() {
            if best.is_none_or(|b| c > self.counts[b]) {
                best = Some(s);
            }
        }
        best
    }
}

/// Per-pair quota for a requested hybrid size.
pub fn pair_quota(n_a: usize, n_pairs: usize) -> usize {
    let q = ((n_a as f64 / n_pairs as f64).round() as usize).max(1);
    if q * n_pairs != n_a {
        log::info!(
            "hybrid size {n_a} is not a multiple of {n_pairs} pairs; using {q} per pair ({} total)",
            q * n_pairs
        );
    }
    q
}

/// Pools the posteriors and keeps the best `n_a` particles.
///
/// Ties in score go to the earlier source, then to the earlier draw.
pub fn merge_hybrid(
    posteriors: &[PosteriorSet],
    n_a: usize,
    mode: MergeMode,
) -> Result<HybridPosterior> {
    let first = posteriors.first().ok_or(Error::EmptyParticleSet)?;
    if n_a == 0 {
        return Err(Error::InvalidInput("hybrid size must be positive".into()));
    }
    if posteriors.iter().any(|p| p.pair_ids() != first.pair_ids()) {
        return Err(Error::InvalidInput(
            "posteriors were built on different pair sets".into(),
        ));
    }
    let n_pairs = first.pair_ids().len();
    let pooled = |k: usize| -> Vec<Selected> {
        posteriors
            .iter()
            .enumerate()
            .flat_map(|(s, p)| {
                p.buckets()[k].iter().map(move |particle| Selected {
                    source: s,
                    particle: particle.clone(),
                })
            })
            .collect()
    };

    let particles = match mode {
        MergeMode::Balanced => {
            let quota = pair_quota(n_a, n_pairs);
            let mut out = Vec::new();
            for k in 0..n_pairs {
                let mut pool = pooled(k);
                pool.sort_by(by_rank);
                pool.truncate(quota);
                out.extend(pool);
            }
            out
        }
        MergeMode::Global => {
            let mut pool: Vec<(usize, Selected)> = (0..n_pairs)
                .flat_map(|k| pooled(k).into_iter().map(move |s| (k, s)))
                .collect();
            pool.sort_by(|a, b| by_rank(&a.1, &b.1));
            pool.truncate(n_a);
            pool.sort_by(|a, b| a.0.cmp(&b.0).then(by_rank(&a.1, &b.1)));
            pool.into_iter().map(|(_, s)| s).collect()
        }
    };
    if particles.is_empty() {
        return Err(Error::EmptyParticleSet);
    }
    let mut counts = vec![0; posteriors.len()];
    for s in &particles {
        counts[s.source] += 1;
    }
    Ok(HybridPosterior {
        sources: posteriors.iter().map(PosteriorSet::model).collect(),
        pair_ids: first.pair_ids().to_vec(),
        particles,
        counts,
    })
}

/// Head-to-head merge of two posteriors; returns each side's share.
pub fn pairwise_comparison(
    a: &PosteriorSet,
    b: &PosteriorSet,
    n_a: usize,
    mode: MergeMode,
) -> Result<(Share, Share)> {
    let h = merge_hybrid(&[a.clone(), b.clone()], n_a, mode)?;
    Ok((h.share(0), h.share(1)))
}

/// Row-versus-column shares for every pair of sources.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMatrix {
    models: Vec<ModelId>,
    /// `cells[r * m + c]`: row's count against column, out of the total.
    cells: Vec<Option<Share>>,
}

impl PairwiseMatrix {
    pub fn from_cells(models: Vec<ModelId>, cells: Vec<Option<Share>>) -> Result<Self> {
        if cells.len() != models.len() * models.len() {
            return Err(Error::InvalidInput("pairwise matrix shape mismatch".into()));
        }
        Ok(Self { models, cells })
    }

    pub fn models(&self) -> &[ModelId] {
        &self.models
    }

    pub fn cell(&self, r: usize, c: usize) -> Option<Share> {
        self.cells[r * self.models.len() + c]
    }

    /// Row share as a float. Of the two opposing cells the larger one is
    /// a plain ratio and the smaller is one minus it, which keeps their sum
    /// at exactly 1.
    pub fn value(&self, r: usize, c: usize) -> Option<f64> {
        let here = self.cell(r, c)?;
        let there = self.cell(c, r)?;
        if (here.count, c) >= (there.count, r) {
            Some(here.value())
        } else {
            Some(1.0 - there.value())
        }
    }

    /// Number of unordered comparisons.
    pub fn comparisons(&self) -> usize {
        let m = self.models.len();
        m * m.saturating_sub(1) / 2
    }
}

/// Compares every unordered pair of posteriors.
pub fn pairwise_matrix(
    posteriors: &[PosteriorSet],
    n_a: usize,
    mode: MergeMode,
) -> Result<PairwiseMatrix> {
    let m = posteriors.len();
    let mut cells = vec![None; m * m];
    for r in 0..m {
        for c in r + 1..m {
            let (a, b) = pairwise_comparison(&posteriors[r], &posteriors[c], n_a, mode)?;
            cells[r * m + c] = Some(a);
            cells[c * m + r] = Some(b);
        }
    }
    PairwiseMatrix::from_cells(posteriors.iter().map(PosteriorSet::model).collect(), cells)
}
