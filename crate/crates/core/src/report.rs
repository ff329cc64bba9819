//! Flat-file reports: CSV tables plus a TOML summary. Every writer has a
//! matching reader.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::hybrid::{PairwiseMatrix, Share};
use crate::metrics::MetricRow;
use crate::params::{ModelId, ModelParams};
use crate::pipeline::{CalibrationReport, EvolutionReport};

pub const METRICS_FILE: &str = "metrics.csv";
pub const FOLD_METRICS_FILE: &str = "metrics_folds.csv";
pub const NORMALIZED_FILE: &str = "normalized.csv";
pub const SHARES_FILE: &str = "shares.csv";
pub const SENSITIVITY_FILE: &str = "sensitivity.csv";
pub const POSTERIOR_FILE: &str = "posterior.csv";
pub const PAIRWISE_FILE: &str = "pairwise.csv";
pub const PAIRWISE_COUNTS_FILE: &str = "pairwise_counts.csv";
pub const EVOLUTION_FILE: &str = "evolution.csv";
pub const SUMMARY_FILE: &str = "summary.toml";

/// Fold label of rows pooled over all folds.
pub const ALL_FOLDS: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub model: String,
    pub position_error: f64,
    pub speed_error: f64,
    pub accel_error: f64,
    pub wasserstein: f64,
    pub beta_wasserstein: f64,
    pub minimum: f64,
}

impl MetricRecord {
    pub fn new(model: &str, r: &MetricRow) -> Self {
        Self {
            model: model.to_string(),
            position_error: r.position_error,
            speed_error: r.speed_error,
            accel_error: r.accel_error,
            wasserstein: r.wasserstein,
            beta_wasserstein: r.beta_wasserstein,
            minimum: r.minimum,
        }
    }

    pub fn row(&self) -> MetricRow {
        MetricRow {
            position_error: self.position_error,
            speed_error: self.speed_error,
            accel_error: self.accel_error,
            wasserstein: self.wasserstein,
            beta_wasserstein: self.beta_wasserstein,
            minimum: self.minimum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetricRecord {
    pub fold: usize,
    pub model: String,
    pub position_error: f64,
    pub speed_error: f64,
    pub accel_error: f64,
    pub wasserstein: f64,
    pub beta_wasserstein: f64,
    pub minimum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareRow {
    /// Fold index, or `all` for counts pooled over folds.
    pub fold: String,
    pub model: String,
    pub count: usize,
    pub total: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub n_keep: usize,
    pub model: String,
    pub count: usize,
    pub total: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorRecord {
    pub fold: usize,
    pub model: String,
    pub pair_id: String,
    pub draw_index: u64,
    pub score: f64,
    pub in_hybrid: bool,
    /// `name=value` pairs separated by spaces.
    pub params: String,
}

impl PosteriorRecord {
    pub fn parse_params(&self) -> Result<ModelParams> {
        let model: ModelId = self.model.parse()?;
        ModelParams::from_assignments(model, &self.params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseCountRecord {
    pub row: String,
    pub col: String,
    pub count: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionRecord {
    pub pair_id: String,
    pub particle: usize,
    pub model: String,
    pub draw_index: u64,
    pub score: f64,
    pub rank: usize,
    pub top: bool,
    pub t: f64,
    pub position_error: f64,
}

/// Provenance and headline numbers of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub dataset: String,
    pub pairs: usize,
    pub rejected_pairs: usize,
    pub models: Vec<String>,
    #[serde(default)]
    pub top_model: Option<String>,
    /// Result-relevant configuration.
    pub config: RunConfig,
}

impl Summary {
    pub fn new(
        command: &str,
        cfg: &RunConfig,
        dataset: &str,
        pairs: usize,
        rejected: usize,
    ) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash()?,
            seed: cfg.seed,
            dataset: dataset.to_string(),
            pairs,
            rejected_pairs: rejected,
            models: cfg
                .model_ids()?
                .iter()
                .map(|m| m.name().to_string())
                .collect(),
            top_model: None,
            config: cfg.canonical_config(),
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).map_err(|e| Error::io(path, e))?,
    ))
}

pub fn write_records<W: Write, T: Serialize>(writer: W, records: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn read_records<R: Read, T: DeserializeOwned>(reader: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    write_records(create(path)?, records)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_records(open(path)?)
}

fn share_row(fold: String, model: ModelId, s: Share) -> ShareRow {
    ShareRow {
        fold,
        model: model.name().to_string(),
        count: s.count,
        total: s.total,
        share: s.value(),
    }
}

/// Table rows of a calibration report, in file order.
pub struct CalibrationTables {
    pub metrics: Vec<MetricRecord>,
    pub fold_metrics: Vec<FoldMetricRecord>,
    pub normalized: Vec<MetricRecord>,
    pub shares: Vec<ShareRow>,
    pub sensitivity: Vec<SensitivityRow>,
    pub posterior: Vec<PosteriorRecord>,
}

impl CalibrationTables {
    pub fn from_report(r: &CalibrationReport) -> Self {
        let metrics = r
            .mean
            .iter()
            .map(|(l, m)| MetricRecord::new(l, m))
            .collect();
        let normalized = r
            .normalized
            .iter()
            .map(|(l, m)| MetricRecord::new(l, m))
            .collect();
        let mut fold_metrics = Vec::new();
        let mut shares = Vec::new();
        let mut posterior = Vec::new();
        for f in &r.folds {
            for (l, m) in &f.metrics {
                let x = MetricRecord::new(l, m);
                fold_metrics.push(FoldMetricRecord {
                    fold: f.index,
                    model: x.model,
                    position_error: x.position_error,
                    speed_error: x.speed_error,
                    accel_error: x.accel_error,
                    wasserstein: x.wasserstein,
                    beta_wasserstein: x.beta_wasserstein,
                    minimum: x.minimum,
                });
            }
            for (s, &m) in r.models.iter().enumerate() {
                shares.push(share_row(f.index.to_string(), m, f.hybrid.share(s)));
            }
            let selected: std::collections::HashSet<(usize, u64)> = f
                .hybrid
                .particles()
                .iter()
                .map(|s| (s.source, s.particle.draw_index))
                .collect();
            for (s, post) in f.posteriors.iter().enumerate() {
                for p in post.particles() {
                    posterior.push(PosteriorRecord {
                        fold: f.index,
                        model: p.model().name().to_string(),
                        pair_id: p.pair_id.clone(),
                        draw_index: p.draw_index,
                        score: p.score,
                        in_hybrid: selected.contains(&(s, p.draw_index)),
                        params: p.params.to_assignments(),
                    });
                }
            }
        }
        for (&m, s) in r.models.iter().zip(r.pooled_shares()) {
            shares.push(share_row(ALL_FOLDS.to_string(), m, s));
        }
        let mut sensitivity = Vec::new();
        for (n, row) in r.pooled_sensitivity() {
            for (&m, s) in r.models.iter().zip(row) {
                sensitivity.push(SensitivityRow {
                    n_keep: n,
                    model: m.name().to_string(),
                    count: s.count,
                    total: s.total,
                    share: s.value(),
                });
            }
        }
        Self {
            metrics,
            fold_metrics,
            normalized,
            shares,
            sensitivity,
            posterior,
        }
    }
}

/// Writes every calibration table into `dir`.
pub fn write_calibration(dir: &Path, r: &CalibrationReport) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let t = CalibrationTables::from_report(r);
    write_csv(&dir.join(METRICS_FILE), &t.metrics)?;
    write_csv(&dir.join(FOLD_METRICS_FILE), &t.fold_metrics)?;
    write_csv(&dir.join(NORMALIZED_FILE), &t.normalized)?;
    write_csv(&dir.join(SHARES_FILE), &t.shares)?;
    write_csv(&dir.join(POSTERIOR_FILE), &t.posterior)?;
    if !t.sensitivity.is_empty() {
        write_csv(&dir.join(SENSITIVITY_FILE), &t.sensitivity)?;
    }
    Ok(())
}

/// Writes the share matrix (row model's share against the column model,
/// blank diagonal) and the underlying counts.
pub fn write_pairwise(dir: &Path, m: &PairwiseMatrix) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let names: Vec<&str> = m.models().iter().map(|x| x.name()).collect();
    let mut w = csv::Writer::from_writer(create(&dir.join(PAIRWISE_FILE))?);
    w.write_record(std::iter::once("model").chain(names.iter().copied()))?;
    for r in 0..names.len() {
        let mut row = vec![names[r].to_string()];
        for c in 0..names.len() {
            row.push(m.value(r, c).map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()
        .map_err(|e| Error::io(dir.join(PAIRWISE_FILE), e))?;

    let mut counts = Vec::new();
    for r in 0..names.len() {
        for c in 0..names.len() {
            if let Some(s) = m.cell(r, c) {
                counts.push(PairwiseCountRecord {
                    row: names[r].to_string(),
                    col: names[c].to_string(),
                    count: s.count,
                    total: s.total,
                });
            }
        }
    }
    write_csv(&dir.join(PAIRWISE_COUNTS_FILE), &counts)
}

/// Reads the share matrix: model order and row-major cells.
pub fn read_pairwise_values(path: &Path) -> Result<(Vec<ModelId>, Vec<Option<f64>>)> {
    let mut rd = csv::Reader::from_reader(open(path)?);
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let models: Vec<ModelId> = rd
        .headers()?
        .iter()
        .skip(1)
        .map(str::parse)
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != models.len() + 1 {
            return Err(parse_err(format!("row has {} fields", rec.len())));
        }
        for f in rec.iter().skip(1) {
            cells.push(if f.is_empty() {
                None
            } else {
                Some(f.parse::<f64>().map_err(|e| parse_err(e.to_string()))?)
            });
        }
    }
    if cells.len() != models.len() * models.len() {
        return Err(parse_err("matrix is not square".into()));
    }
    Ok((models, cells))
}

/// Rebuilds a pairwise matrix from its count file.
pub fn read_pairwise_counts(path: &Path, models: &[ModelId]) -> Result<PairwiseMatrix> {
    let recs: Vec<PairwiseCountRecord> = read_csv(path)?;
    let m = models.len();
    let mut cells = vec![None; m * m];
    let index = |name: &str| -> Result<usize> {
        let id: ModelId = name.parse()?;
        models
            .iter()
            .position(|x| *x == id)
            .ok_or_else(|| Error::InvalidInput(format!("model {id} not in matrix")))
    };
    for r in recs {
        cells[index(&r.row)? * m + index(&r.col)?] = Some(Share {
            count: r.count,
            total: r.total,
        });
    }
    PairwiseMatrix::from_cells(models.to_vec(), cells)
}

pub fn evolution_records(rep: &EvolutionReport) -> Vec<EvolutionRecord> {
    let mut out = Vec::new();
    for s in &rep.series {
        for (k, e) in s.errors.iter().enumerate() {
            out.push(EvolutionRecord {
                pair_id: rep.pair_id.clone(),
                particle: s.particle,
                model: s.model.name().to_string(),
                draw_index: s.draw_index,
                score: s.score,
                rank: s.rank,
                top: s.top,
                t: rep.t0 + k as f64 * rep.dt,
                position_error: *e,
            });
        }
    }
    out
}

pub fn write_evolution(dir: &Path, rep: &EvolutionReport) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(&dir.join(EVOLUTION_FILE), &evolution_records(rep))
}

pub fn write_summary(dir: &Path, s: &Summary) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let text = toml::to_string(s).map_err(|e| Error::Config(e.to_string()))?;
    let path = dir.join(SUMMARY_FILE);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
