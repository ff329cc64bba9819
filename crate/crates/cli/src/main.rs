use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use hybrid_cf::config::RunConfig;
use hybrid_cf::pipeline::{cmd_calibrate, cmd_error_evolution, cmd_pairwise};
use hybrid_cf::report::{self, Summary};
use hybrid_cf::synth::{generate, SynthTruth};
use hybrid_cf::trajectory::{load_dataset, write_dataset, Dataset};

#[derive(Parser)]
#[command(
    name = "hybrid-cf",
    version,
    about = "Calibrate stochastic hybrid car-following models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trajectory file from a known particle.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Generating model (default: the [synth] section's model).
        #[arg(long)]
        model: Option<String>,
        /// Generating parameters as `name=value` pairs.
        #[arg(long)]
        params: Option<String>,
        #[arg(long)]
        pairs: Option<usize>,
        /// Seconds per pair.
        #[arg(long)]
        horizon: Option<f64>,
        /// Noise standard deviations `pos,speed,accel`.
        #[arg(long, value_delimiter = ',')]
        noise: Option<Vec<f64>>,
        /// Output CSV (default: [synth] output, else the dataset path).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Cross-validated calibration of every model plus the hybrid.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
    /// Head-to-head shares for every pair of models.
    Pairwise {
        #[command(flatten)]
        common: Common,
    },
    /// Position error over time of the hybrid's particles on one pair.
    Evolution {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pair: Option<String>,
        #[arg(long)]
        top_fraction: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trajectory CSV.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated model names.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Particles sampled per model.
    #[arg(long)]
    particles: Option<u64>,
    /// Particles kept per pair.
    #[arg(long)]
    n_keep: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    workers: Option<usize>,
    /// Also report shares for the configured sweep of per-pair sizes.
    #[arg(long)]
    sensitivity: bool,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.dataset {
            cfg.dataset = Some(v.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.models {
            cfg.models = v.clone();
        }
        if let Some(v) = self.particles {
            cfg.n_particles = v;
        }
        if let Some(v) = self.n_keep {
            cfg.n_keep = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.folds {
            cfg.folds = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.workers {
            cfg.workers = Some(v);
        }
        if self.sensitivity {
            cfg.sensitivity = true;
        }
        Ok(cfg)
    }
}

fn load(cfg: &RunConfig) -> Result<(Dataset, usize)> {
    let path = cfg.dataset.as_ref().context("no dataset given")?;
    let outcome = load_dataset(path, &cfg.load_options())?;
    for r in &outcome.rejected {
        log::warn!("rejected pair {}: {}", r.pair_id, r.reason);
    }
    if outcome.dataset.is_empty() {
        bail!("{}: no valid pairs", path.display());
    }
    Ok((outcome.dataset, outcome.rejected.len()))
}

fn with_workers<T>(cfg: &RunConfig, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        b = b.num_threads(n);
    }
    b.build()?.install(f)
}

fn synth(
    cfg: &mut RunConfig,
    model: Option<String>,
    params: Option<String>,
    pairs: Option<usize>,
    horizon: Option<f64>,
    noise: Option<Vec<f64>>,
    output: Option<PathBuf>,
) -> Result<serde_json::Value> {
    let section = cfg.synth.get_or_insert_with(Default::default);
    if let Some(m) = model {
        section.model = m;
        section.params = None;
    }
    if params.is_some() {
        section.params = params;
    }
    if let Some(v) = pairs {
        section.n_pairs = v;
    }
    if let Some(v) = horizon {
        section.horizon = v;
    }
    if let Some(v) = noise {
        let Ok(sd) = <[f64; 3]>::try_from(v.as_slice()) else {
            bail!(hybrid_cf::Error::InvalidInput(format!(
                "--noise takes 3 values (position, speed, acceleration), got {}",
                v.len()
            )));
        };
        section.noise = sd;
    }
    if output.is_some() {
        section.output = output;
    }
    if section.model.is_empty() {
        bail!("no generating model: pass --model or add a [synth] section");
    }
    let path = section
        .output
        .clone()
        .or_else(|| cfg.dataset.clone())
        .unwrap_or_else(|| cfg.out.join("synth.csv"));
    let sc = cfg.synth_config()?;
    let ds = generate(&sc)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
    }
    let file = std::fs::File::create(&path).with_context(|| path.display().to_string())?;
    write_dataset(&ds, std::io::BufWriter::new(file))?;
    let truth_path = truth_path(&path);
    std::fs::write(&truth_path, SynthTruth::from_config(&sc).to_toml()?)
        .with_context(|| truth_path.display().to_string())?;
    Ok(json!({
        "output": path,
        "truth": truth_path,
        "pairs": ds.len(),
    }))
}

fn truth_path(data: &Path) -> PathBuf {
    let mut name = data.file_stem().unwrap_or_default().to_os_string();
    name.push(".truth.toml");
    data.with_file_name(name)
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::Synth {
            common,
            model,
            params,
            pairs,
            horizon,
            noise,
            output,
        } => {
            let mut cfg = common.resolve()?;
            synth(&mut cfg, model, params, pairs, horizon, noise, output)
        }
        Command::Calibrate { common } => {
            let cfg = common.resolve()?;
            let (ds, rejected) = load(&cfg)?;
            let rep = with_workers(&cfg, || Ok(cmd_calibrate(&cfg, &ds)?))?;
            report::write_calibration(&cfg.out, &rep)?;
            let mut summary = Summary::new("calibrate", &cfg, ds.name(), ds.len(), rejected)?;
            let shares = rep.pooled_shares();
            let top = (0..shares.len()).fold(0, |b, s| {
                if shares[s].count > shares[b].count {
                    s
                } else {
                    b
                }
            });
            summary.top_model = Some(rep.models[top].name().to_string());
            report::write_summary(&cfg.out, &summary)?;
            Ok(json!({ "out": cfg.out, "top_model": summary.top_model }))
        }
        Command::Pairwise { common } => {
            let cfg = common.resolve()?;
            let (ds, rejected) = load(&cfg)?;
            let m = with_workers(&cfg, || Ok(cmd_pairwise(&cfg, &ds)?))?;
            report::write_pairwise(&cfg.out, &m)?;
            report::write_summary(
                &cfg.out,
                &Summary::new("pairwise", &cfg, ds.name(), ds.len(), rejected)?,
            )?;
            Ok(json!({ "out": cfg.out, "comparisons": m.comparisons() }))
        }
        Command::Evolution {
            common,
            pair,
            top_fraction,
        } => {
            let mut cfg = common.resolve()?;
            if pair.is_some() {
                cfg.evolution.pair = pair;
            }
            if let Some(f) = top_fraction {
                cfg.evolution.top_fraction = f;
            }
            let (ds, rejected) = load(&cfg)?;
            let (_, rep) = with_workers(&cfg, || Ok(cmd_error_evolution(&cfg, &ds)?))?;
            report::write_evolution(&cfg.out, &rep)?;
            report::write_summary(
                &cfg.out,
                &Summary::new("evolution", &cfg, ds.name(), ds.len(), rejected)?,
            )?;
            Ok(json!({ "out": cfg.out, "pair": rep.pair_id, "particles": rep.series.len() }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            let first = message
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            eprintln!(
                "{}",
                json!({ "status": "error", "kind": "usage", "message": first })
            );
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(v) => {
            println!("{}", json!({ "status": "ok", "result": v }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = e
                .downcast_ref::<hybrid_cf::Error>()
                .map_or("error", hybrid_cf::Error::kind);
            eprintln!(
                "{}",
                json!({ "status": "error", "kind": kind, "message": format!("{e:#}") })
            );
            ExitCode::FAILURE
        }
    }
}
