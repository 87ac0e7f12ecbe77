//! Gridded climate anomalies, the sparsity sweep over `BIC_γ`, and
//! evidence-propagation reports.
//!
//! Inputs are two CSV files: coordinates (`node,lat,lon`) and a monthly series
//! with one row per month and one column per grid point, headed by node ids.

mod grid;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{CriteriaError, Criterion, CriterionKind};
use crate::graph::{unshielded_vstructure_ratio, Dag, GraphError};
use crate::learn::{learn, LearnError, LearnOptions, LearnedGraph, LearnerKind};
use crate::model::{fit_parameters, gaussian_condition, BayesNet, Dataset, ModelError};

pub use grid::{haversine_km, lattice_grid, lattice_series, write_series, GridPoint, GridSpec, EARTH_RADIUS_KM};

/// Default distance above which an arc counts as a teleconnection.
pub const DEFAULT_TELECONNECTION_KM: f64 = 5000.0;

/// Default `γ` grid of the sweep.
pub const DEFAULT_GAMMAS: [f64; 10] = [0.0, 0.2, 0.5, 1.0, 1.5, 2.0, 5.0, 10.0, 20.0, 50.0];

#[derive(Debug, Error)]
pub enum ClimateError {
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("series has {0} rows, not a whole number of years")]
    PartialYear(usize),
    #[error("series columns do not match the coordinates: {0}")]
    ColumnMismatch(String),
    #[error("bad coordinate for `{0}`: {1}")]
    BadCoordinate(String, String),
    #[error("grid point `{0}` listed twice")]
    DuplicatePoint(String),
    #[error("node `{0}` has no grid coordinates")]
    MissingPoint(String),
    #[error("threshold must be positive, got {0}")]
    BadThreshold(f64),
    #[error("gamma must be non-negative and finite, got {0}")]
    BadGamma(f64),
    #[error("unknown evidence node `{0}`")]
    UnknownEvidence(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl From<csv::Error> for ClimateError {
    fn from(e: csv::Error) -> Self {
        ClimateError::Csv(e.to_string())
    }
}

/// Subtracts from every value the mean of its calendar month over all years.
/// Row `t` is month `t mod 12`.
pub fn monthly_anomalies(column: &[f64]) -> Result<Vec<f64>, ClimateError> {
    if column.len() % 12 != 0 {
        return Err(ClimateError::PartialYear(column.len()));
    }
    let years = (column.len() / 12) as f64;
    let mut means = [0.0; 12];
    for (t, v) in column.iter().enumerate() {
        means[t % 12] += v / years;
    }
    Ok(column.iter().enumerate().map(|(t, v)| v - means[t % 12]).collect())
}

/// Reads a coordinates CSV with header `node,lat,lon`.
pub fn read_coords<R: std::io::Read>(r: R) -> Result<GridSpec, ClimateError> {
    #[derive(Deserialize)]
    struct Row {
        node: String,
        lat: f64,
        lon: f64,
    }
    let points = csv::Reader::from_reader(r)
        .deserialize::<Row>()
        .map(|row| row.map(|r| GridPoint { id: r.node, lat: r.lat, lon: r.lon }))
        .collect::<Result<Vec<_>, _>>()?;
    GridSpec::new(points)
}

/// Reads a monthly series CSV: header of node ids, one numeric row per month.
pub fn read_series<R: std::io::Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>), ClimateError> {
    let mut rdr = csv::Reader::from_reader(r);
    let names: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let mut cols = vec![Vec::new(); names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| ClimateError::Csv(format!("row {}: `{field}` is not a number", i + 2)))?;
            cols[j].push(v);
        }
    }
    Ok((names, cols))
}

/// Anomaly dataset from in-memory series; columns keep the series order and
/// must be exactly the grid's points.
pub fn anomaly_dataset(grid: &GridSpec, names: &[String], columns: &[Vec<f64>]) -> Result<Dataset, ClimateError> {
    if names.len() != grid.len() {
        return Err(ClimateError::ColumnMismatch(format!("{} series columns, {} grid points", names.len(), grid.len())));
    }
    for n in names {
        if grid.point(n).is_none() {
            return Err(ClimateError::ColumnMismatch(format!("series column `{n}` is not in the coordinates")));
        }
    }
    let anomalies = columns.iter().map(|c| monthly_anomalies(c)).collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::from_continuous(names, anomalies)?)
}

pub fn ingest_grid(coords_path: impl AsRef<Path>, series_path: impl AsRef<Path>) -> Result<(Dataset, GridSpec), ClimateError> {
    let open = |p: &Path| std::fs::File::open(p).map_err(|e| ClimateError::Io(p.display().to_string(), e.to_string()));
    let grid = read_coords(open(coords_path.as_ref())?)?;
    let (names, cols) = read_series(open(series_path.as_ref())?)?;
    Ok((anomaly_dataset(&grid, &names, &cols)?, grid))
}

fn long_range(pairs: impl Iterator<Item = (usize, usize)>, names: &[String], grid: &GridSpec, threshold_km: f64) -> Result<usize, ClimateError> {
    if !(threshold_km > 0.0) {
        return Err(ClimateError::BadThreshold(threshold_km));
    }
    let locate = |i: usize| grid.point(&names[i]).ok_or_else(|| ClimateError::MissingPoint(names[i].clone()));
    let mut count = 0;
    for (a, b) in pairs {
        if haversine_km(locate(a)?, locate(b)?) > threshold_km {
            count += 1;
        }
    }
    Ok(count)
}

/// Arcs whose endpoints are more than `threshold_km` apart on the sphere.
pub fn teleconnection_count(g: &Dag, grid: &GridSpec, threshold_km: f64) -> Result<usize, ClimateError> {
    long_range(g.arcs().into_iter(), g.nodes().names(), grid, threshold_km)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub gammas: Vec<f64>,
    pub learners: Vec<LearnerKind>,
    pub permutations: usize,
    pub seed: u64,
    pub threshold_km: f64,
    pub options: LearnOptions,
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            gammas: DEFAULT_GAMMAS.to_vec(),
            learners: vec![LearnerKind::PcStable, LearnerKind::HillClimbing, LearnerKind::Tabu],
            permutations: 5,
            seed: 0,
            threshold_km: DEFAULT_TELECONNECTION_KM,
            options: LearnOptions::default(),
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub gamma: f64,
    pub learner: String,
    pub perm: usize,
    /// In-sample log-likelihood of the refitted network; absent when the
    /// result has no DAG member or cannot be fitted.
    pub loglik: Option<f64>,
    /// Arcs plus undirected edges.
    pub arcs: usize,
    pub calls: u64,
    pub valid: bool,
    pub unshielded_ratio: Option<f64>,
    pub teleconnections: usize,
}

/// Column order of permutation `k`.
pub fn permutation(n: usize, seed: u64, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    order.shuffle(&mut rng);
    order
}

/// Learner seed of permutation `perm`.
pub(crate) fn perm_seed(seed: u64, perm: usize) -> u64 {
    seed ^ (perm as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn sweep_cell(
    data: &Arc<Dataset>,
    grid: &GridSpec,
    gamma: f64,
    learner: LearnerKind,
    perm: usize,
    cfg: &SweepConfig,
) -> Result<SweepRecord, ClimateError> {
    let criterion = Criterion::new(data.clone(), CriterionKind::BicGamma(gamma))?;
    let opts = LearnOptions { seed: perm_seed(cfg.seed, perm), ..cfg.options.clone() };
    let names = data.names();
    let mut rec = SweepRecord {
        gamma,
        learner: learner.key().to_string(),
        perm,
        loglik: None,
        arcs: 0,
        calls: 0,
        valid: false,
        unshielded_ratio: None,
        teleconnections: 0,
    };
    let outcome = match learn(learner, &criterion, &opts) {
        Ok(o) => o,
        Err(_) => {
            rec.calls = criterion.calls();
            return Ok(rec);
        }
    };
    rec.calls = outcome.calls;
    rec.valid = outcome.valid;
    rec.arcs = outcome.graph.n_edges();
    let pdag = match &outcome.graph {
        LearnedGraph::Dag(g) => g.to_pdag(),
        LearnedGraph::Pdag(p) => p.clone(),
    };
    rec.teleconnections = long_range(pdag.skeleton().into_iter(), &names, grid, cfg.threshold_km)?;
    if let Some(dag) = outcome.graph.dag() {
        rec.unshielded_ratio = unshielded_vstructure_ratio(&dag).ok();
        rec.loglik = fit_parameters(&dag, data).and_then(|net| net.log_likelihood(data)).ok();
    }
    Ok(rec)
}

/// Runs every permutation × γ × learner cell with the matched `BIC_γ`
/// criterion. Records are ordered by γ, learner and permutation; failed runs
/// are recorded with `valid = false`.
pub fn gamma_sweep(data: &Dataset, grid: &GridSpec, cfg: &SweepConfig) -> Result<Vec<SweepRecord>, ClimateError> {
    if let Some(&g) = cfg.gammas.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
        return Err(ClimateError::BadGamma(g));
    }
    if !(cfg.threshold_km > 0.0) {
        return Err(ClimateError::BadThreshold(cfg.threshold_km));
    }
    for n in data.names() {
        if grid.point(&n).is_none() {
            return Err(ClimateError::MissingPoint(n));
        }
    }
    let permuted: Vec<Arc<Dataset>> =
        (0..cfg.permutations).map(|k| Arc::new(data.permute_columns(&permutation(data.n_vars(), cfg.seed, k)))).collect();
    let mut cells = Vec::new();
    for &gamma in &cfg.gammas {
        for &learner in &cfg.learners {
            for perm in 0..cfg.permutations {
                cells.push((gamma, learner, perm));
            }
        }
    }
    let work = || -> Result<Vec<SweepRecord>, ClimateError> {
        cells.par_iter().map(|&(g, l, p)| sweep_cell(&permuted[p], grid, g, l, p, cfg)).collect()
    };
    match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| ClimateError::Io("thread pool".into(), e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// The γ values at which `learner` returned a valid result in every
/// permutation.
pub fn parameter_range(records: &[SweepRecord], learner: &str) -> Vec<f64> {
    let mut by_gamma: Vec<(f64, bool)> = Vec::new();
    for r in records.iter().filter(|r| r.learner == learner) {
        match by_gamma.iter_mut().find(|(g, _)| *g == r.gamma) {
            Some(e) => e.1 &= r.valid,
            None => by_gamma.push((r.gamma, r.valid)),
        }
    }
    by_gamma.into_iter().filter(|e| e.1).map(|e| e.0).collect()
}

pub fn write_sweep<W: Write>(records: &[SweepRecord], w: W) -> Result<(), ClimateError> {
    let mut wr = csv::Writer::from_writer(w);
    if records.is_empty() {
        wr.write_record(["gamma", "learner", "perm", "loglik", "arcs", "calls", "valid", "unshielded_ratio", "teleconnections"])?;
    }
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush().map_err(|e| ClimateError::Csv(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationRow {
    pub node: String,
    /// Coordinates, when a grid was supplied.
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    /// Posterior minus prior mean.
    pub mean_shift: f64,
    /// Posterior variance.
    pub variance: f64,
}

/// Conditions a Gaussian network on `evidence` (node name to value) and
/// reports each node's mean shift and posterior variance, located on `grid`
/// when one is given.
pub fn propagate_report(net: &BayesNet, evidence: &BTreeMap<String, f64>, grid: Option<&GridSpec>) -> Result<Vec<PropagationRow>, ClimateError> {
    let names = net.dag().nodes();
    let mut idx = BTreeMap::new();
    for (k, &v) in evidence {
        let i = names.index_of(k).map_err(|_| ClimateError::UnknownEvidence(k.clone()))?;
        idx.insert(i, v);
    }
    let prior = gaussian_condition(net, &BTreeMap::new())?;
    let post = gaussian_condition(net, &idx)?;
    names
        .names()
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let p = grid.map(|g| g.point(n).ok_or_else(|| ClimateError::MissingPoint(n.clone()))).transpose()?;
            Ok(PropagationRow {
                node: n.clone(),
                lat: p.map(|p| p.lat),
                lon: p.map(|p| p.lon),
                mean_shift: post[i].mean - prior[i].mean,
                variance: post[i].variance,
            })
        })
        .collect()
}

pub fn write_propagation<W: Write>(rows: &[PropagationRow], w: W) -> Result<(), ClimateError> {
    let mut wr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wr.write_record(["node", "lat", "lon", "mean_shift", "variance"])?;
    }
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(|e| ClimateError::Csv(e.to_string()))
}

/// Parses `node=value,node=value`.
pub fn parse_evidence(s: &str) -> Result<BTreeMap<String, f64>, ClimateError> {
    let mut out = BTreeMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| ClimateError::UnknownEvidence(part.to_string()))?;
        let v: f64 = v.trim().parse().map_err(|_| ClimateError::UnknownEvidence(part.to_string()))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}
