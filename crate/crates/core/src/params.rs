//! Model identifiers and the tagged parameter vector shared by every model
//! and controller.

use std::fmt;
use std::str::FromStr;

use crate::controllers::{AvParams, HlParams, LlcsParams, LlctgParams, MpcParams};
use crate::error::{Error, Result};
use crate::models::{FvdmParams, GfmParams, HdvParams, IdmParams, OvmParams};

/// The eight candidate car-following laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    Ovm,
    Gfm,
    Fvdm,
    Idm,
    Llctg,
    Llcs,
    Hl,
    Mpc,
}

impl ModelId {
    pub const ALL: [ModelId; 8] = [
        ModelId::Ovm,
        ModelId::Gfm,
        ModelId::Fvdm,
        ModelId::Idm,
        ModelId::Llctg,
        ModelId::Llcs,
        ModelId::Hl,
        ModelId::Mpc,
    ];

    pub const HDV: [ModelId; 4] = [ModelId::Ovm, ModelId::Gfm, ModelId::Fvdm, ModelId::Idm];
    pub const AV: [ModelId; 4] = [ModelId::Llctg, ModelId::Llcs, ModelId::Hl, ModelId::Mpc];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Ovm => "OVM",
            ModelId::Gfm => "GFM",
            ModelId::Fvdm => "FVDM",
            ModelId::Idm => "IDM",
            ModelId::Llctg => "LLCTG",
            ModelId::Llcs => "LLCS",
            ModelId::Hl => "HL",
            ModelId::Mpc => "MPC",
        }
    }

    /// True for the human-driver models, false for the AV controllers.
    pub fn is_hdv(self) -> bool {
        ModelId::HDV.contains(&self)
    }

    /// Parameter names in canonical order. These are the keys used by the
    /// prior-bounds file and the posterior archive.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelId::Ovm => &["kappa", "v1", "v2", "c1", "c2"],
            ModelId::Gfm => &["k", "lambda", "v1", "v2", "c1", "c2"],
            ModelId::Fvdm => &["tau", "lambda", "v1", "v2", "l_int", "beta"],
            ModelId::Idm => &["v_max", "t", "s0", "a", "b", "delta"],
            ModelId::Llctg => &["tau_star", "k_s", "k_v", "l"],
            ModelId::Llcs => &["s0", "k_s", "k_v"],
            ModelId::Hl => &["tau_star", "tt", "k_s", "k_v", "k_a", "l"],
            ModelId::Mpc => &["tau_star", "r", "alpha", "l", "a_min", "a_max"],
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown model `{s}`")))
    }
}

/// A parameter vector for any of the eight models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Hdv(HdvParams),
    Av(AvParams),
}

impl ModelParams {
    pub fn model_id(&self) -> ModelId {
        match self {
            ModelParams::Hdv(p) => p.model_id(),
            ModelParams::Av(p) => p.model_id(),
        }
    }

    /// Values in the order of [`ModelId::param_names`].
    pub fn values(&self) -> Vec<f64> {
        match *self {
            ModelParams::Hdv(HdvParams::Ovm(p)) => vec![p.kappa, p.v1, p.v2, p.c1, p.c2],
            ModelParams::Hdv(HdvParams::Gfm(p)) => vec![p.k, p.lambda, p.v1, p.v2, p.c1, p.c2],
            ModelParams::Hdv(HdvParams::Fvdm(p)) => {
                vec![p.tau, p.lambda, p.v1, p.v2, p.l_int, p.beta]
            }
            ModelParams::Hdv(HdvParams::Idm(p)) => {
                vec![p.v_max, p.time_gap, p.s0, p.a, p.b, p.delta]
            }
            ModelParams::Av(AvParams::Llctg(p)) => vec![p.tau_star, p.k_s, p.k_v, p.l],
            ModelParams::Av(AvParams::Llcs(p)) => vec![p.s0, p.k_s, p.k_v],
            ModelParams::Av(AvParams::Hl(p)) => {
                vec![p.tau_star, p.tt, p.k_s, p.k_v, p.k_a, p.l]
            }
            ModelParams::Av(AvParams::Mpc(p)) => {
                vec![p.tau_star, p.r, p.alpha, p.l, p.a_min, p.a_max]
            }
        }
    }

    /// Rebuilds a parameter vector from values in canonical order and checks
    /// the model's structural constraints.
    pub fn from_values(model: ModelId, v: &[f64]) -> Result<Self> {
        let expected = model.param_names().len();
        if v.len() != expected {
            return Err(Error::InvalidParams {
                model: model.to_string(),
                reason: format!("expected {expected} values, got {}", v.len()),
            });
        }
        let p = match model {
            ModelId::Ovm => ModelParams::Hdv(HdvParams::Ovm(OvmParams {
                kappa: v[0],
                v1: v[1],
                v2: v[2],
                c1: v[3],
                c2: v[4],
            })),
            ModelId::Gfm => ModelParams::Hdv(HdvParams::Gfm(GfmParams {
                k: v[0],
                lambda: v[1],
                v1: v[2],
                v2: v[3],
                c1: v[4],
                c2: v[5],
            })),
            ModelId::Fvdm => ModelParams::Hdv(HdvParams::Fvdm(FvdmParams {
                tau: v[0],
                lambda: v[1],
                v1: v[2],
                v2: v[3],
                l_int: v[4],
                beta: v[5],
            })),
            ModelId::Idm => ModelParams::Hdv(HdvParams::Idm(IdmParams {
                v_max: v[0],
                time_gap: v[1],
                s0: v[2],
                a: v[3],
                b: v[4],
                delta: v[5],
            })),
            ModelId::Llctg => ModelParams::Av(AvParams::Llctg(LlctgParams {
                tau_star: v[0],
                k_s: v[1],
                k_v: v[2],
                l: v[3],
            })),
            ModelId::Llcs => ModelParams::Av(AvParams::Llcs(LlcsParams {
                s0: v[0],
                k_s: v[1],
                k_v: v[2],
            })),
            ModelId::Hl => ModelParams::Av(AvParams::Hl(HlParams {
                tau_star: v[0],
                tt: v[1],
                k_s: v[2],
                k_v: v[3],
                k_a: v[4],
                l: v[5],
            })),
            ModelId::Mpc => ModelParams::Av(AvParams::Mpc(MpcParams {
                tau_star: v[0],
                r: v[1],
                alpha: v[2],
                l: v[3],
                a_min: v[4],
                a_max: v[5],
            })),
        };
        p.validate()?;
        Ok(p)
    }

    /// Structural constraints (positivity of divisors, ordered limits). Prior
    /// bounds are checked separately by [`crate::priors::PriorBounds`].
    pub fn validate(&self) -> Result<()> {
        let model = self.model_id();
        let fail = |reason: &str| {
            Err(Error::InvalidParams {
                model: model.to_string(),
                reason: reason.to_string(),
            })
        };
        if self.values().iter().any(|x| !x.is_finite()) {
            return fail("non-finite value");
        }
        match *self {
            ModelParams::Hdv(HdvParams::Idm(p)) if !(p.a > 0.0 && p.b > 0.0 && p.v_max > 0.0) => {
                fail("IDM requires a > 0, b > 0 and v_max > 0")
            }
            ModelParams::Hdv(HdvParams::Fvdm(p)) if !(p.tau > 0.0 && p.l_int > 0.0) => {
                fail("FVDM requires tau > 0 and l_int > 0")
            }
            ModelParams::Av(AvParams::Hl(p)) if p.tt <= 0.0 => fail("HL requires TT > 0"),
            ModelParams::Av(AvParams::Mpc(p))
                if !(p.a_min < 0.0 && 0.0 < p.a_max && p.r > 0.0 && p.alpha > 0.0) =>
            {
                fail("MPC requires a_min < 0 < a_max, R > 0 and alpha > 0")
            }
            _ => Ok(()),
        }
    }

    /// `name=value` pairs separated by spaces, in canonical order.
    pub fn to_assignments(&self) -> String {
        self.model_id()
            .param_names()
            .iter()
            .zip(self.values())
            .map(|(n, v)| format!("{n}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses the output of [`ModelParams::to_assignments`].
    pub fn from_assignments(model: ModelId, text: &str) -> Result<Self> {
        let names = model.param_names();
        let mut values = vec![f64::NAN; names.len()];
        for item in text.split_whitespace() {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("malformed parameter `{item}`")))?;
            let idx = names.iter().position(|n| *n == name).ok_or_else(|| {
                Error::InvalidInput(format!("unknown parameter `{name}` for {model}"))
            })?;
            values[idx] = value
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad number in `{item}`")))?;
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidInput(format!(
                "missing parameter `{}` for {model}",
                names[i]
            )));
        }
        Self::from_values(model, &values)
    }
}

impl From<HdvParams> for ModelParams {
    fn from(p: HdvParams) -> Self {
        ModelParams::Hdv(p)
    }
}

impl From<AvParams> for ModelParams {
    fn from(p: AvParams) -> Self {
        ModelParams::Av(p)
    }
}
