//! Uniform prior bounds and independent parameter sampling.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::Rng;
use serde::Deserialize;

use crate::controllers::AvParams;
use crate::error::{Error, Result};
use crate::models::HdvParams;
use crate::params::{ModelId, ModelParams};

/// The shipped prior-bounds file.
pub const DEFAULT_PRIORS_TOML: &str = include_str!("../data/priors.toml");

/// Uniform interval for one parameter, as written in the bounds file.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl Bound {
    /// Interval in the units used by the acceleration laws.
    pub fn scaled(&self) -> (f64, f64) {
        (self.lower * self.scale, self.upper * self.scale)
    }
}

/// Prior bounds for every model, indexed by parameter in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorBounds {
    bounds: HashMap<ModelId, Vec<Bound>>,
}

type RawFile = BTreeMap<String, BTreeMap<String, Bound>>;

impl Default for PriorBounds {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_PRIORS_TOML).expect("shipped priors file is valid")
    }
}

impl PriorBounds {
    /// Parses a complete bounds file; every model and parameter must appear.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut bounds = HashMap::new();
        apply(&mut bounds, raw)?;
        for m in ModelId::ALL {
            match bounds.get(&m) {
                Some(v) if v.iter().all(|b: &Bound| b.lower.is_finite()) => {}
                _ => return Err(Error::Config(format!("priors: incomplete section [{m}]"))),
            }
        }
        Ok(Self { bounds })
    }

    /// Applies a partial bounds file on top of these bounds.
    pub fn with_overrides(mut self, text: &str) -> Result<Self> {
        let raw: RawFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        apply(&mut self.bounds, raw)?;
        Ok(self)
    }

    /// Default bounds overlaid with the file at `path`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::default().with_overrides(&text)
    }

    pub fn get(&self, model: ModelId) -> &[Bound] {
        &self.bounds[&model]
    }

    pub fn bound(&self, model: ModelId, name: &str) -> Option<Bound> {
        let idx = model.param_names().iter().position(|n| *n == name)?;
        Some(self.bounds[&model][idx])
    }

    /// Midpoint of every interval, in law units.
    pub fn midpoint(&self, model: ModelId) -> Result<ModelParams> {
        let values: Vec<f64> = self
            .get(model)
            .iter()
            .map(|b| {
                let (lo, hi) = b.scaled();
                0.5 * (lo + hi)
            })
            .collect();
        ModelParams::from_values(model, &values)
    }

    /// True when every value lies inside its (scaled) interval.
    pub fn contains(&self, params: &ModelParams) -> bool {
        self.get(params.model_id())
            .iter()
            .zip(params.values())
            .all(|(b, v)| {
                let (lo, hi) = b.scaled();
                lo <= v && v <= hi
            })
    }

    /// Draws every parameter independently and uniformly. Draws that break
    /// a structural constraint (a zero divisor at an interval edge) are
    /// redrawn.
    pub fn sample<R: Rng + ?Sized>(&self, model: ModelId, rng: &mut R) -> Result<ModelParams> {
        let bounds = self.get(model);
        let mut last_err = None;
        for _ in 0..1000 {
            let values: Vec<f64> = bounds
                .iter()
                .map(|b| {
                    let u: f64 = rng.random();
                    (b.lower + (b.upper - b.lower) * u) * b.scale
                })
                .collect();
            match ModelParams::from_values(model, &values) {
                Ok(p) => return Ok(p),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Config(format!("cannot sample {model}"))))
    }
}

fn apply(bounds: &mut HashMap<ModelId, Vec<Bound>>, raw: RawFile) -> Result<()> {
    for (section, entries) in raw {
        let model: ModelId = section
            .parse()
            .map_err(|_| Error::Config(format!("priors: unknown model section [{section}]")))?;
        let names = model.param_names();
        let slot = bounds.entry(model).or_insert_with(|| {
            vec![
                Bound {
                    lower: f64::NAN,
                    upper: f64::NAN,
                    scale: 1.0,
                };
                names.len()
            ]
        });
        for (name, b) in entries {
            let idx = names.iter().position(|n| *n == name).ok_or_else(|| {
                Error::Config(format!("priors: unknown parameter `{name}` in [{section}]"))
            })?;
            if !(b.lower.is_finite() && b.upper.is_finite() && b.lower <= b.upper) {
                return Err(Error::Config(format!(
                    "priors: [{section}] {name} needs finite lower <= upper"
                )));
            }
            if !(b.scale.is_finite() && b.scale > 0.0) {
                return Err(Error::Config(format!(
                    "priors: [{section}] {name} scale must be positive"
                )));
            }
            slot[idx] = b;
        }
    }
    Ok(())
}

/// Draws a human-driver parameter set.
pub fn sample_hdv_prior<R: Rng + ?Sized>(
    model: ModelId,
    bounds: &PriorBounds,
    rng: &mut R,
) -> Result<HdvParams> {
    if !model.is_hdv() {
        return Err(Error::InvalidInput(format!(
            "{model} is not a human-driver model"
        )));
    }
    match bounds.sample(model, rng)? {
        ModelParams::Hdv(p) => Ok(p),
        ModelParams::Av(_) => unreachable!("HDV model sampled AV parameters"),
    }
}

/// Draws an AV controller parameter set.
pub fn sample_av_prior<R: Rng + ?Sized>(
    model: ModelId,
    bounds: &PriorBounds,
    rng: &mut R,
) -> Result<AvParams> {
    if model.is_hdv() {
        return Err(Error::InvalidInput(format!(
            "{model} is not an AV controller"
        )));
    }
    match bounds.sample(model, rng)? {
        ModelParams::Av(p) => Ok(p),
        ModelParams::Hdv(_) => unreachable!("AV model sampled HDV parameters"),
    }
}
