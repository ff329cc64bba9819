//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::abc::AbcConfig;
use crate::error::{Error, Result};
use crate::hybrid::MergeMode;
use crate::metrics::DEFAULT_BETA;
use crate::params::{ModelId, ModelParams};
use crate::priors::PriorBounds;
use crate::score::{ScoreConfig, TrajectoryNorm, Weights};
use crate::simulator::SimOptions;
use crate::synth::SynthConfig;
use crate::trajectory::{LoadOptions, DEFAULT_DT, DEFAULT_LEADER_LENGTH};

/// Default share of best particles shown in error-evolution output.
pub const DEFAULT_TOP_FRACTION: f64 = 0.05;

fn default_models() -> Vec<String> {
    ModelId::ALL.iter().map(|m| m.name().to_string()).collect()
}
fn default_particles() -> u64 {
    100_000
}
fn default_n_keep() -> usize {
    5
}
fn default_weights() -> [f64; 3] {
    [0.5, 0.3, 0.2]
}
fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_folds() -> usize {
    3
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_substeps() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_length() -> f64 {
    DEFAULT_LEADER_LENGTH
}
fn default_top_fraction() -> f64 {
    DEFAULT_TOP_FRACTION
}
fn default_sweep() -> Vec<usize> {
    vec![5, 10, 15]
}
fn default_synth_pairs() -> usize {
    30
}
fn default_horizon() -> f64 {
    60.0
}

/// Settings of the `synth` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub model: String,
    /// `name=value` pairs; prior midpoints when absent.
    #[serde(default)]
    pub params: Option<String>,
    #[serde(default = "default_synth_pairs")]
    pub n_pairs: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub noise: [f64; 3],
    #[serde(default = "default_length")]
    pub leader_length: f64,
    /// Where the trajectory file is written; the config's `dataset` when
    /// absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            model: String::new(),
            params: None,
            n_pairs: default_synth_pairs(),
            horizon: default_horizon(),
            dt: default_dt(),
            noise: [0.0; 3],
            leader_length: default_length(),
            output: None,
        }
    }
}

/// Settings of the `evolution` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    /// Pair to roll out on; the first pair of the dataset when absent.
    #[serde(default)]
    pub pair: Option<String>,
    #[serde(default = "default_top_fraction")]
    pub top_fraction: f64,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self {
            pair: None,
            top_fraction: DEFAULT_TOP_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    #[serde(default = "default_particles")]
    pub n_particles: u64,
    /// Particles kept per pair and model.
    #[serde(default = "default_n_keep")]
    pub n_keep: usize,
    /// Hybrid size; `n_keep` times the number of training pairs when absent.
    #[serde(default)]
    pub n_hybrid: Option<usize>,
    #[serde(default)]
    pub merge_mode: MergeMode,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default = "default_weights")]
    pub weights: [f64; 3],
    #[serde(default)]
    pub norm: TrajectoryNorm,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub priors: Option<PathBuf>,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default = "default_true")]
    pub controller_subtract_length: bool,
    #[serde(default = "default_dt")]
    pub frame_dt: f64,
    #[serde(default = "default_length")]
    pub default_leader_length: f64,
    /// Report hybrid shares for several per-pair sizes as well.
    #[serde(default)]
    pub sensitivity: bool,
    #[serde(default = "default_sweep")]
    pub sensitivity_sizes: Vec<usize>,
    /// Worker threads; all cores when absent. Does not affect results.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub synth: Option<SynthSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.dataset.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.priors.as_mut() {
            rebase(p);
        }
        rebase(&mut cfg.out);
        if let Some(p) = cfg.synth.as_mut().and_then(|s| s.output.as_mut()) {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        self.model_ids()?;
        self.weights()?;
        if self.n_particles == 0 || self.n_keep == 0 || self.n_hybrid == Some(0) {
            return bad("particle counts must be positive");
        }
        if self.folds == 0 {
            return bad("folds must be at least 1");
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad("beta must be in (0, 1]");
        }
        if self.substeps == 0 {
            return bad("substeps must be positive");
        }
        if self.frame_dt.is_nan()
            || self.frame_dt <= 0.0
            || self.default_leader_length.is_nan()
            || self.default_leader_length < 0.0
        {
            return bad("frame_dt must be positive and default_leader_length non-negative");
        }
        if self.sensitivity && self.sensitivity_sizes.contains(&0) {
            return bad("sensitivity sizes must be positive");
        }
        if !(self.evolution.top_fraction > 0.0 && self.evolution.top_fraction <= 1.0) {
            return bad("top_fraction must be in (0, 1]");
        }
        if self.workers == Some(0) {
            return bad("workers must be positive");
        }
        Ok(())
    }

    /// Models in config order, without repeats.
    pub fn model_ids(&self) -> Result<Vec<ModelId>> {
        if self.models.is_empty() {
            return Err(Error::Config("no models selected".into()));
        }
        let mut out: Vec<ModelId> = Vec::new();
        for name in &self.models {
            let m: ModelId = name
                .parse()
                .map_err(|_| Error::Config(format!("unknown model `{name}`")))?;
            if out.contains(&m) {
                return Err(Error::Config(format!("model {m} listed twice")));
            }
            out.push(m);
        }
        Ok(out)
    }

    pub fn weights(&self) -> Result<Weights> {
        let [p, v, a] = self.weights;
        Weights::new(p, v, a).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn score_config(&self) -> Result<ScoreConfig> {
        Ok(ScoreConfig {
            weights: self.weights()?,
            norm: self.norm,
            sim: SimOptions {
                substeps: self.substeps,
                controller_subtract_length: self.controller_subtract_length,
            },
        })
    }

    /// Sampling settings; `n_keep` is raised to cover the sensitivity sweep.
    pub fn abc_config(&self) -> Result<AbcConfig> {
        let sweep_max = if self.sensitivity {
            self.sensitivity_sizes.iter().copied().max().unwrap_or(0)
        } else {
            0
        };
        Ok(AbcConfig {
            n_particles: self.n_particles,
            n_keep: self.n_keep.max(sweep_max),
            threshold: self.threshold,
            score: self.score_config()?,
        })
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            frame_dt: self.frame_dt,
            default_leader_length: self.default_leader_length,
        }
    }

    pub fn prior_bounds(&self) -> Result<PriorBounds> {
        match &self.priors {
            Some(p) => PriorBounds::load(p),
            None => Ok(PriorBounds::default()),
        }
    }

    /// Hybrid size for a training set of `n_pairs` pairs and a per-pair
    /// keep count.
    pub fn hybrid_size(&self, n_pairs: usize, n_keep: usize) -> usize {
        self.n_hybrid.unwrap_or(n_keep * n_pairs)
    }

    pub fn synth_config(&self) -> Result<SynthConfig> {
        let s = self
            .synth
            .as_ref()
            .ok_or_else(|| Error::Config("missing [synth] section".into()))?;
        let model: ModelId = s
            .model
            .parse()
            .map_err(|_| Error::Config(format!("unknown model `{}`", s.model)))?;
        let params = match &s.params {
            Some(text) => ModelParams::from_assignments(model, text)?,
            None => self.prior_bounds()?.midpoint(model)?,
        };
        Ok(SynthConfig {
            params,
            n_pairs: s.n_pairs,
            horizon: s.horizon,
            dt: s.dt,
            noise: s.noise,
            leader_length: s.leader_length,
            seed: self.seed,
            sim: self.score_config()?.sim,
        })
    }

    /// The config with settings that cannot change results (worker count,
    /// output directory) reset to their defaults.
    pub fn canonical_config(&self) -> RunConfig {
        let mut c = self.clone();
        c.workers = None;
        c.out = default_out();
        c
    }

    /// Canonical TOML of everything that can change results.
    pub fn canonical(&self) -> Result<String> {
        toml::to_string(&self.canonical_config()).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.canonical()?.as_bytes())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.model_ids().unwrap(), ModelId::ALL);
        assert_eq!(c.n_keep, 5);
        assert_eq!(c.beta, 0.15);
        assert_eq!(c.folds, 3);
        assert_eq!(c.weights, [0.5, 0.3, 0.2]);
        assert_eq!(c.evolution.top_fraction, 0.05);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "weights = [0.5, 0.5, 0.5]",
            "models = [\"XYZ\"]",
            "models = [\"IDM\", \"idm\"]",
            "folds = 0",
            "beta = 0.0",
            "n_particles = 0",
        ] {
            let c = RunConfig::from_toml_str(text).unwrap();
            assert!(c.validate().is_err(), "{text}");
        }
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn workers_do_not_change_the_hash() {
        let a = RunConfig::from_toml_str("seed = 3\nworkers = 1").unwrap();
        let b = RunConfig::from_toml_str("seed = 3\nworkers = 8").unwrap();
        let c = RunConfig::from_toml_str("seed = 4").unwrap();
        let d = RunConfig::from_toml_str("seed = 3\nout = \"elsewhere\"").unwrap();
        assert_eq!(a.hash().unwrap(), d.hash().unwrap());
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn sensitivity_raises_keep() {
        let c = RunConfig::from_toml_str("sensitivity = true").unwrap();
        assert_eq!(c.abc_config().unwrap().n_keep, 15);
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "dataset = \"d.csv\"\nout = \"res\"").unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.dataset.unwrap(), dir.path().join("d.csv"));
        assert_eq!(c.out, dir.path().join("res"));
    }

    #[test]
    fn synth_section() {
        let c = RunConfig::from_toml_str(
            "seed = 9\n[synth]\nmodel = \"IDM\"\nn_pairs = 4\nnoise = [0.1, 0.05, 0.05]",
        )
        .unwrap();
        let s = c.synth_config().unwrap();
        assert_eq!(s.n_pairs, 4);
        assert_eq!(s.seed, 9);
        assert_eq!(
            s.params,
            PriorBounds::default().midpoint(ModelId::Idm).unwrap()
        );
    }
}
