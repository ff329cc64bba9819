//! Trajectory types, finite-difference kinematics, CSV loading and
//! cross-validation folds.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_FOLDS};

/// Sampling interval assumed when a file carries frame indices instead of
/// timestamps (10 Hz).
pub const DEFAULT_DT: f64 = 0.1;

/// Leader length assumed when the file has no `leader_length` column.
pub const DEFAULT_LEADER_LENGTH: f64 = 5.0;

/// Position, speed and acceleration profiles of one vehicle on a uniform
/// time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePortfolio {
    positions: Vec<f64>,
    speeds: Vec<f64>,
    accelerations: Vec<f64>,
    dt: f64,
    t0: f64,
}

impl StatePortfolio {
    pub fn new(
        positions: Vec<f64>,
        speeds: Vec<f64>,
        accelerations: Vec<f64>,
        dt: f64,
        t0: f64,
    ) -> Result<Self> {
        let n = positions.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "portfolio needs at least 2 samples, got {n}"
            )));
        }
        if speeds.len() != n || accelerations.len() != n {
            return Err(Error::InvalidInput(format!(
                "channel lengths differ: {} positions, {} speeds, {} accelerations",
                n,
                speeds.len(),
                accelerations.len()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidInput("t0 must be finite".into()));
        }
        let all_finite = positions
            .iter()
            .chain(&speeds)
            .chain(&accelerations)
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::InvalidInput(
                "portfolio contains non-finite values".into(),
            ));
        }
        Ok(Self {
            positions,
            speeds,
            accelerations,
            dt,
            t0,
        })
    }

    /// Builds a portfolio from positions only; speeds and accelerations are
    /// finite-differenced.
    pub fn from_positions(positions: Vec<f64>, dt: f64, t0: f64) -> Result<Self> {
        check_difference_input(&positions, dt)?;
        let speeds = central_difference(&positions, dt);
        let accelerations = second_difference(&positions, &speeds, dt);
        Self::new(positions, speeds, accelerations, dt, t0)
    }

    /// Builds a portfolio from positions and measured speeds; accelerations
    /// are finite-differenced from the speeds.
    pub fn from_positions_and_speeds(
        positions: Vec<f64>,
        speeds: Vec<f64>,
        dt: f64,
        t0: f64,
    ) -> Result<Self> {
        check_difference_input(&speeds, dt)?;
        let accelerations = central_difference(&speeds, dt);
        Self::new(positions, speeds, accelerations, dt, t0)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn accelerations(&self) -> &[f64] {
        &self.accelerations
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

fn check_difference_input(values: &[f64], dt: f64) -> Result<()> {
    if values.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "finite differences need at least 3 samples, got {}",
            values.len()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if let Some(k) = values.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite sample at index {k}"
        )));
    }
    Ok(())
}

/// First derivative: central differences inside, first-order one-sided
/// differences at both ends.
pub fn central_difference(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    out[0] = (values[1] - values[0]) / dt;
    out[n - 1] = (values[n - 1] - values[n - 2]) / dt;
    for k in 1..n - 1 {
        out[k] = (values[k + 1] - values[k - 1]) / (2.0 * dt);
    }
    out
}

/// Second derivative of positions. Interior points use the compact
/// three-point stencil; the end points are one-sided differences of the
/// already differenced speeds.
fn second_difference(positions: &[f64], speeds: &[f64], dt: f64) -> Vec<f64> {
    let n = positions.len();
    let mut out = vec![0.0; n];
    out[0] = (speeds[1] - speeds[0]) / dt;
    out[n - 1] = (speeds[n - 1] - speeds[n - 2]) / dt;
    for k in 1..n - 1 {
        out[k] = (positions[k + 1] - 2.0 * positions[k] + positions[k - 1]) / (dt * dt);
    }
    out
}

/// Differentiates a uniformly sampled position trace into a full portfolio
/// starting at `t0 = 0`.
pub fn derive_kinematics(positions: &[f64], dt: f64) -> Result<StatePortfolio> {
    StatePortfolio::from_positions(positions.to_vec(), dt, 0.0)
}

/// A leader and its observed follower over the same time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CFPair {
    pair_id: String,
    leader: StatePortfolio,
    follower: StatePortfolio,
    leader_length: f64,
}

impl CFPair {
    pub fn new(
        pair_id: impl Into<String>,
        leader: StatePortfolio,
        follower: StatePortfolio,
        leader_length: f64,
    ) -> Result<Self> {
        let pair_id = pair_id.into();
        if leader.len() != follower.len() {
            return Err(Error::InvalidInput(format!(
                "pair {pair_id}: leader has {} samples, follower {}",
                leader.len(),
                follower.len()
            )));
        }
        if leader.dt != follower.dt || leader.t0 != follower.t0 {
            return Err(Error::InvalidInput(format!(
                "pair {pair_id}: leader and follower time grids differ"
            )));
        }
        if !(leader_length >= 0.0 && leader_length.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "pair {pair_id}: leader length must be a finite non-negative number"
            )));
        }
        if leader.positions[0] < follower.positions[0] {
            return Err(Error::InvalidInput(format!(
                "pair {pair_id}: leader starts behind the follower"
            )));
        }
        Ok(Self {
            pair_id,
            leader,
            follower,
            leader_length,
        })
    }

    pub fn id(&self) -> &str {
        &self.pair_id
    }

    pub fn leader(&self) -> &StatePortfolio {
        &self.leader
    }

    pub fn follower(&self) -> &StatePortfolio {
        &self.follower
    }

    pub fn leader_length(&self) -> f64 {
        self.leader_length
    }

    pub fn len(&self) -> usize {
        self.leader.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leader.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.leader.dt
    }

    /// Leader position minus follower position at sample `k`, minus the
    /// leader length when `subtract_length` is set. Negative gaps are
    /// returned as-is.
    pub fn gap(&self, k: usize, subtract_length: bool) -> f64 {
        let raw = self.leader.positions[k] - self.follower.positions[k];
        if subtract_length {
            raw - self.leader_length
        } else {
            raw
        }
    }
}

/// An ordered collection of pairs with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    pairs: Vec<CFPair>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, pairs: Vec<CFPair>) -> Result<Self> {
        let mut seen = HashSet::new();
        for p in &pairs {
            if !seen.insert(p.id()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate pair id `{}`",
                    p.id()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            pairs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pairs(&self) -> &[CFPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, pair_id: &str) -> Option<&CFPair> {
        self.pairs.iter().find(|p| p.id() == pair_id)
    }

    pub fn index_of(&self, pair_id: &str) -> Option<usize> {
        self.pairs.iter().position(|p| p.id() == pair_id)
    }

    fn subset(&self, name: String, indices: &[usize]) -> Dataset {
        Dataset {
            name,
            pairs: indices.iter().map(|&i| self.pairs[i].clone()).collect(),
        }
    }
}

/// Options for reading trajectory files.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Sampling interval used when the time column holds frame indices.
    pub frame_dt: f64,
    pub default_leader_length: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            frame_dt: DEFAULT_DT,
            default_leader_length: DEFAULT_LEADER_LENGTH,
        }
    }
}

/// A pair dropped during loading.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub pair_id: String,
    pub reason: String,
}

/// A loaded dataset plus the pairs that failed validation.
#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub dataset: Dataset,
    pub rejected: Vec<Rejection>,
}

struct Columns {
    pair_id: usize,
    time: usize,
    frames: bool,
    leader_pos: usize,
    follower_pos: usize,
    speeds: Option<(usize, usize)>,
    accels: Option<(usize, usize)>,
    leader_length: Option<usize>,
}

impl Columns {
    fn from_header(header: &csv::StringRecord) -> Result<Self> {
        let find = |name: &str| header.iter().position(|h| h.trim() == name);
        let need = |name: &str| {
            find(name).ok_or_else(|| Error::InvalidInput(format!("missing column `{name}`")))
        };
        let (time, frames) = match (find("t"), find("frame")) {
            (Some(t), _) => (t, false),
            (None, Some(f)) => (f, true),
            (None, None) => return Err(Error::InvalidInput("missing column `t`".into())),
        };
        let both = |a: &str, b: &str| -> Result<Option<(usize, usize)>> {
            match (find(a), find(b)) {
                (Some(x), Some(y)) => Ok(Some((x, y))),
                (None, None) => Ok(None),
                _ => Err(Error::InvalidInput(format!(
                    "columns `{a}` and `{b}` must appear together"
                ))),
            }
        };
        Ok(Self {
            pair_id: need("pair_id")?,
            time,
            frames,
            leader_pos: need("leader_pos")?,
            follower_pos: need("follower_pos")?,
            speeds: both("leader_speed", "follower_speed")?,
            accels: both("leader_accel", "follower_accel")?,
            leader_length: find("leader_length"),
        })
    }
}

#[derive(Default)]
struct RawPair {
    t: Vec<Option<f64>>,
    leader_pos: Vec<Option<f64>>,
    follower_pos: Vec<Option<f64>>,
    leader_speed: Vec<Option<f64>>,
    follower_speed: Vec<Option<f64>>,
    leader_accel: Vec<Option<f64>>,
    follower_accel: Vec<Option<f64>>,
    leader_length: Option<Option<f64>>,
}

fn cell(record: &csv::StringRecord, idx: usize) -> Option<f64> {
    let s = record.get(idx)?.trim();
    if s.is_empty() {
        return None;
    }
    s.parse::<f64>().ok()
}

fn complete(values: &[Option<f64>], what: &str) -> std::result::Result<Vec<f64>, String> {
    values
        .iter()
        .enumerate()
        .map(|(k, v)| match v {
            Some(x) if x.is_finite() => Ok(*x),
            Some(_) => Err(format!("non-finite {what} at row {k}")),
            None => Err(format!("missing {what} at row {k}")),
        })
        .collect()
}

fn build_pair(
    id: &str,
    raw: &RawPair,
    cols: &Columns,
    opts: &LoadOptions,
) -> std::result::Result<CFPair, String> {
    let n = raw.t.len();
    if n < 3 {
        return Err(format!("only {n} samples; at least 3 are required"));
    }
    let t = complete(&raw.t, "time")?;
    let lp = complete(&raw.leader_pos, "leader position")?;
    let fp = complete(&raw.follower_pos, "follower position")?;
    let span = t[n - 1] - t[0];
    if span <= 0.0 {
        return Err("timestamps are not increasing".into());
    }
    let step = span / (n - 1) as f64;
    for (k, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > 1e-6 * step {
            return Err(format!(
                "non-uniform time step between rows {k} and {}: {} vs {step}",
                k + 1,
                w[1] - w[0]
            ));
        }
    }
    let (dt, t0) = if cols.frames {
        (step * opts.frame_dt, t[0] * opts.frame_dt)
    } else {
        (step, t[0])
    };

    let length = match raw.leader_length {
        Some(Some(l)) => l,
        Some(None) => return Err("missing leader length".into()),
        None => opts.default_leader_length,
    };

    let portfolio = |pos: Vec<f64>,
                     speed: &[Option<f64>],
                     accel: &[Option<f64>],
                     who: &str|
     -> std::result::Result<StatePortfolio, String> {
        let res = match (cols.speeds.is_some(), cols.accels.is_some()) {
            (true, true) => StatePortfolio::new(
                pos,
                complete(speed, &format!("{who} speed"))?,
                complete(accel, &format!("{who} acceleration"))?,
                dt,
                t0,
            ),
            (true, false) => StatePortfolio::from_positions_and_speeds(
                pos,
                complete(speed, &format!("{who} speed"))?,
                dt,
                t0,
            ),
            (false, true) => {
                // Speeds from positions, measured accelerations kept.
                let speeds = central_difference(&pos, dt);
                StatePortfolio::new(
                    pos,
                    speeds,
                    complete(accel, &format!("{who} acceleration"))?,
                    dt,
                    t0,
                )
            }
            (false, false) => StatePortfolio::from_positions(pos, dt, t0),
        };
        res.map_err(|e| e.to_string())
    };

    let leader = portfolio(lp, &raw.leader_speed, &raw.leader_accel, "leader")?;
    let follower = portfolio(fp, &raw.follower_speed, &raw.follower_accel, "follower")?;
    CFPair::new(id, leader, follower, length).map_err(|e| e.to_string())
}

/// Reads trajectory CSV from any reader. Pairs that fail validation are
/// dropped and listed in [`LoadOutcome::rejected`].
pub fn read_dataset<R: Read>(reader: R, name: &str, opts: &LoadOptions) -> Result<LoadOutcome> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let cols = Columns::from_header(rdr.headers()?)?;

    let mut order: Vec<String> = Vec::new();
    let mut raws: HashMap<String, RawPair> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let id = record.get(cols.pair_id).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(Error::InvalidInput("row with empty pair_id".into()));
        }
        let raw = raws.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            RawPair::default()
        });
        raw.t.push(cell(&record, cols.time));
        raw.leader_pos.push(cell(&record, cols.leader_pos));
        raw.follower_pos.push(cell(&record, cols.follower_pos));
        if let Some((l, f)) = cols.speeds {
            raw.leader_speed.push(cell(&record, l));
            raw.follower_speed.push(cell(&record, f));
        }
        if let Some((l, f)) = cols.accels {
            raw.leader_accel.push(cell(&record, l));
            raw.follower_accel.push(cell(&record, f));
        }
        if let Some(c) = cols.leader_length {
            if raw.leader_length.is_none() {
                raw.leader_length = Some(cell(&record, c));
            }
        }
    }
    if cols.leader_length.is_none() && !order.is_empty() {
        warn!(
            "{name}: no leader_length column; assuming {} m",
            opts.default_leader_length
        );
    }

    let mut pairs = Vec::with_capacity(order.len());
    let mut rejected = Vec::new();
    for id in order {
        match build_pair(&id, &raws[&id], &cols, opts) {
            Ok(pair) => pairs.push(pair),
            Err(reason) => {
                warn!("{name}: rejected pair {id}: {reason}");
                rejected.push(Rejection {
                    pair_id: id,
                    reason,
                });
            }
        }
    }
    Ok(LoadOutcome {
        dataset: Dataset::new(name, pairs)?,
        rejected,
    })
}

/// Loads a trajectory CSV file.
pub fn load_dataset(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<LoadOutcome> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_dataset(std::io::BufReader::new(file), &name, opts)
}

/// Writes a dataset with every column of the trajectory schema.
pub fn write_dataset<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "pair_id",
        "t",
        "leader_pos",
        "follower_pos",
        "leader_speed",
        "follower_speed",
        "leader_accel",
        "follower_accel",
        "leader_length",
    ])?;
    for pair in dataset.pairs() {
        let (l, f) = (pair.leader(), pair.follower());
        for k in 0..pair.len() {
            w.write_record([
                pair.id().to_string(),
                l.time(k).to_string(),
                l.positions[k].to_string(),
                f.positions[k].to_string(),
                l.speeds[k].to_string(),
                f.speeds[k].to_string(),
                l.accelerations[k].to_string(),
                f.accelerations[k].to_string(),
                pair.leader_length.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<trajectory writer>", e))?;
    Ok(())
}

/// One cross-validation fold.
#[derive(Debug, Clone)]
pub struct Fold {
    pub train: Dataset,
    pub test: Dataset,
}

/// Shuffles the pairs with `seed` and cuts them into `k` test folds whose
/// sizes differ by at most one. Each fold trains on the complement.
pub fn split_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    let n = dataset.len();
    if k > n {
        return Err(Error::InvalidInput(format!(
            "cannot split {n} pairs into {k} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, STREAM_FOLDS, 0));

    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut test: Vec<usize> = order[start..start + size].to_vec();
        test.sort_unstable();
        let in_test: HashSet<usize> = test.iter().copied().collect();
        let train: Vec<usize> = (0..n).filter(|i| !in_test.contains(i)).collect();
        folds.push(Fold {
            train: dataset.subset(format!("{}-fold{f}-train", dataset.name), &train),
            test: dataset.subset(format!("{}-fold{f}-test", dataset.name), &test),
        });
        start += size;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear_pair(id: &str, leader0: f64, follower0: f64, len: f64) -> CFPair {
        let n = 20;
        let lp: Vec<f64> = (0..n).map(|k| leader0 + k as f64).collect();
        let fp: Vec<f64> = (0..n).map(|k| follower0 + k as f64).collect();
        CFPair::new(
            id,
            StatePortfolio::from_positions(lp, 0.1, 0.0).unwrap(),
            StatePortfolio::from_positions(fp, 0.1, 0.0).unwrap(),
            len,
        )
        .unwrap()
    }

    #[test]
    fn stationary_vehicle_has_zero_kinematics() {
        let p = derive_kinematics(&[10.0; 12], 0.1).unwrap();
        assert!(p.speeds().iter().all(|&v| v == 0.0));
        assert!(p.accelerations().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn linear_positions_give_exact_interior_speed() {
        let pos: Vec<f64> = (0..11).map(|k| 2.0 * (k as f64 * 0.1)).collect();
        let p = derive_kinematics(&pos, 0.1).unwrap();
        for k in 1..10 {
            assert!(
                (p.speeds()[k] - 2.0).abs() < 1e-13,
                "v[{k}] = {}",
                p.speeds()[k]
            );
            assert!(p.accelerations()[k].abs() < 1e-11);
        }
    }

    #[test]
    fn quadratic_positions_are_exact_inside() {
        // p = t^2 on [0, 1]: v = 2t, a = 2 at every interior sample.
        let pos: Vec<f64> = (0..=10).map(|k| (k as f64 * 0.1).powi(2)).collect();
        let p = derive_kinematics(&pos, 0.1).unwrap();
        for k in 1..10 {
            let t = k as f64 * 0.1;
            assert!((p.speeds()[k] - 2.0 * t).abs() < 1e-13);
            assert!((p.accelerations()[k] - 2.0).abs() < 1e-11);
        }
        assert_eq!(p.positions(), pos.as_slice());
    }

    #[test]
    fn differencing_rejects_short_or_non_finite_input() {
        assert!(derive_kinematics(&[1.0, 2.0], 0.1).is_err());
        assert!(derive_kinematics(&[1.0, f64::NAN, 3.0], 0.1).is_err());
        assert!(derive_kinematics(&[1.0, 2.0, 3.0], 0.0).is_err());
    }

    #[test]
    fn gap_conventions() {
        let pair = linear_pair("a", 100.0, 80.0, 5.0);
        assert_eq!(pair.gap(0, true), 15.0);
        assert_eq!(pair.gap(0, false), 20.0);
        let touching = linear_pair("b", 80.0, 80.0, 5.0);
        assert_eq!(touching.gap(0, false), 0.0);
    }

    #[test]
    fn pair_rejects_leader_behind_follower() {
        let n = 5;
        let ahead = StatePortfolio::from_positions((0..n).map(|k| k as f64).collect(), 0.1, 0.0);
        let behind =
            StatePortfolio::from_positions((0..n).map(|k| k as f64 - 3.0).collect(), 0.1, 0.0);
        assert!(CFPair::new("x", behind.unwrap(), ahead.unwrap(), 5.0).is_err());
    }

    #[test]
    fn duplicate_pair_ids_rejected() {
        let a = linear_pair("a", 30.0, 0.0, 5.0);
        assert!(Dataset::new("d", vec![a.clone(), a]).is_err());
    }

    fn synthetic_dataset(n: usize) -> Dataset {
        let pairs = (0..n)
            .map(|i| linear_pair(&format!("p{i}"), 30.0, 0.0, 5.0))
            .collect();
        Dataset::new("d", pairs).unwrap()
    }

    #[test]
    fn folds_of_150_pairs() {
        let folds = split_folds(&synthetic_dataset(150), 3, 1).unwrap();
        for f in &folds {
            assert_eq!(f.test.len(), 50);
            assert_eq!(f.train.len(), 100);
        }
    }

    #[test]
    fn remainder_goes_to_leading_folds() {
        let folds = split_folds(&synthetic_dataset(7), 3, 1).unwrap();
        let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
        assert_eq!(sizes, vec![3, 2, 2]);
    }

    #[test]
    fn folds_are_deterministic_and_seed_dependent() {
        let d = synthetic_dataset(30);
        let ids = |seed| -> Vec<Vec<String>> {
            split_folds(&d, 3, seed)
                .unwrap()
                .iter()
                .map(|f| f.test.pairs().iter().map(|p| p.id().to_string()).collect())
                .collect()
        };
        assert_eq!(ids(9), ids(9));
        assert_ne!(ids(9), ids(10));
    }

    #[test]
    fn too_many_folds_rejected() {
        assert!(split_folds(&synthetic_dataset(2), 3, 0).is_err());
        assert!(split_folds(&synthetic_dataset(5), 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_the_dataset(n in 2usize..60, k in 2usize..6, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let d = synthetic_dataset(n);
            let folds = split_folds(&d, k, seed).unwrap();
            let mut seen = HashSet::new();
            let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
            for f in &folds {
                prop_assert_eq!(f.test.len() + f.train.len(), n);
                for p in f.test.pairs() {
                    prop_assert!(seen.insert(p.id().to_string()));
                    prop_assert!(f.train.get(p.id()).is_none());
                }
            }
            prop_assert_eq!(seen.len(), n);
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
        }

        #[test]
        fn gap_flag_subtracts_length(len in 0.0f64..20.0, offset in 0.0f64..50.0, k in 0usize..20) {
            let pair = linear_pair("p", 10.0 + offset, 10.0, len);
            prop_assert_eq!(pair.gap(k, true), pair.gap(k, false) - len);
        }

        #[test]
        fn quadratics_exact_at_interior(a in -3.0f64..3.0, b in -20.0f64..20.0, c in -100.0f64..100.0) {
            let dt = 0.1;
            let pos: Vec<f64> = (0..40).map(|k| { let t = k as f64 * dt; a * t * t + b * t + c }).collect();
            let p = derive_kinematics(&pos, dt).unwrap();
            for k in 1..39 {
                let t = k as f64 * dt;
                prop_assert!((p.speeds()[k] - (2.0 * a * t + b)).abs() < 1e-11);
                prop_assert!((p.accelerations()[k] - 2.0 * a).abs() < 1e-9);
            }
        }
    }
}
