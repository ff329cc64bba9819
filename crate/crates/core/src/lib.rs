//! Stochastic hybrid car-following calibration.
pub mod abc;
pub mod config;
pub mod controllers;
pub mod error;
pub mod hybrid;
pub mod metrics;
pub mod models;
pub mod params;
pub mod pipeline;
pub mod priors;
pub mod report;
pub mod rng;
pub mod score;
pub mod simulator;
pub mod synth;
pub mod trajectory;
pub mod transport;

pub use error::{Error, Result};

// The guide's snippets run as doctests so they stay in sync with the code.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/trajectories.md")]
    pub struct Trajectories;
    #[doc = include_str!("../../../book/src/models.md")]
    pub struct Models;
    #[doc = include_str!("../../../book/src/controllers.md")]
    pub struct Controllers;
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub struct Simulation;
    #[doc = include_str!("../../../book/src/hybrid.md")]
    pub struct Hybrid;
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub struct Metrics;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
