//! Reference networks in `bn-text` form and the benchmark harness.
//!
//! A sweep samples every network at every relative sample size `n/|Θ|` and
//! replicate, runs each learner under each criterion on a fresh call counter,
//! and scores the result by SHD against the reference equivalence class.

mod text;

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{CriteriaError, Criterion, CriterionKind};
use crate::graph::{cpdag_from_dag, shd, GraphError, Pdag};
use crate::learn::{learn, LearnError, LearnOptions, LearnerKind};
use crate::model::{BayesNet, Dataset, ModelError};

pub use text::{load_bn_text, parse_bn_text, save_bn_text, to_bn_text};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("cannot write bn-text: {0}")]
    Unwritable(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("{0} has no arcs; scaled SHD is undefined")]
    EmptyReference(String),
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Csv(e.to_string())
    }
}

/// Sweep definition, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// `bn-text` files.
    pub networks: Vec<PathBuf>,
    /// Relative sample sizes `n/|Θ|`.
    pub ratios: Vec<f64>,
    pub replicates: usize,
    pub learners: Vec<String>,
    pub criteria: Vec<String>,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Learner options by configuration key, e.g. `{"tabu.t0": 10}`.
    #[serde(default)]
    pub options: BTreeMap<String, f64>,
    /// Worker threads; all available cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Record wall time in `elapsed_ms`. Off by default so that repeated
    /// sweeps write identical files.
    #[serde(default)]
    pub timing: bool,
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(Vec<LearnerKind>, Vec<CriterionKind>), BenchError> {
        if self.ratios.is_empty() || self.ratios.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(BenchError::Config("ratios must be positive".into()));
        }
        if self.replicates == 0 {
            return Err(BenchError::Config("replicates must be at least 1".into()));
        }
        let learners = self.learners.iter().map(|k| k.parse()).collect::<Result<Vec<LearnerKind>, _>>()?;
        let criteria = self.criteria.iter().map(|k| k.parse()).collect::<Result<Vec<CriterionKind>, _>>()?;
        LearnOptions::from_map(&self.options)?;
        Ok((learners, criteria))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub network: String,
    pub learner: String,
    pub criterion: String,
    pub ratio: f64,
    pub replicate: usize,
    pub n: usize,
    pub shd_raw: usize,
    pub shd_scaled: f64,
    pub calls: u64,
    pub valid: bool,
    pub elapsed_ms: u64,
}

/// `⌈ratio·|Θ|⌉`, at least 1.
pub fn sample_size(ratio: f64, params: usize) -> usize {
    // guard against products like 0.1·230 = 23.000000000000004
    let x = ratio * params as f64;
    let r = x.round();
    let n = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) { r } else { x.ceil() };
    (n as usize).max(1)
}

fn fnv1a(h: u64, bytes: &[u8]) -> u64 {
    bytes.iter().fold(h, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Seed of one (network, ratio, replicate) cell.
pub fn cell_seed(seed: u64, network: &str, ratio: f64, replicate: usize) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325;
    h = fnv1a(h, &seed.to_le_bytes());
    h = fnv1a(h, network.as_bytes());
    h = fnv1a(h, &ratio.to_bits().to_le_bytes());
    fnv1a(h, &(replicate as u64).to_le_bytes())
}

/// Whether the criterion can be evaluated on data of this network's type and
/// drive this learner.
fn compatible(learner: LearnerKind, crit: &CriterionKind, discrete: bool) -> bool {
    let data_ok = match crit {
        CriterionKind::Bdeu(_) | CriterionKind::G2 { .. } | CriterionKind::X2 { .. } => discrete,
        CriterionKind::Bge(_) | CriterionKind::FisherZ { .. } | CriterionKind::StudentT { .. } => !discrete,
        CriterionKind::Bic | CriterionKind::BicGamma(_) => true,
    };
    data_ok && (!learner.needs_score() || crit.has_score())
}

struct Cell<'a> {
    net: &'a BayesNet,
    reference: &'a Pdag,
    ratio: f64,
    replicate: usize,
    seed: u64,
}

/// Runs one learner under one criterion and scores it; failures become
/// invalid records scored against the empty graph.
pub(crate) fn run_one(
    data: &Arc<Dataset>,
    reference: &Pdag,
    reference_arcs: usize,
    learner: LearnerKind,
    crit: &CriterionKind,
    opts: &LearnOptions,
) -> Result<(usize, f64, u64, bool, u128), BenchError> {
    let t0 = Instant::now();
    let (graph, valid, calls) = match Criterion::new(data.clone(), crit.clone()) {
        Ok(criterion) => match learn(learner, &criterion, opts) {
            Ok(o) => (o.graph.cpdag(), o.valid, criterion.calls()),
            Err(_) => (Pdag::empty(reference.nodes().clone()), false, criterion.calls()),
        },
        Err(_) => (Pdag::empty(reference.nodes().clone()), false, 0),
    };
    let elapsed = t0.elapsed().as_millis();
    let report = shd(&graph, reference, reference_arcs)?;
    Ok((report.raw, report.scaled, calls, valid, elapsed))
}

fn run_cell(
    cell: &Cell<'_>,
    learners: &[LearnerKind],
    criteria: &[CriterionKind],
    base: &LearnOptions,
    timing: bool,
) -> Result<Vec<BenchRecord>, BenchError> {
    let n = sample_size(cell.ratio, cell.net.param_count());
    let data = Arc::new(cell.net.sample(n, cell.seed));
    let discrete = data.is_discrete();
    let opts = LearnOptions { seed: cell.seed, ..base.clone() };
    let mut out = Vec::new();
    for &learner in learners {
        for crit in criteria {
            if !compatible(learner, crit, discrete) {
                continue;
            }
            let (shd_raw, shd_scaled, calls, valid, elapsed) =
                run_one(&data, cell.reference, cell.net.n_arcs(), learner, crit, &opts)?;
            out.push(BenchRecord {
                network: cell.net.name().to_string(),
                learner: learner.key().to_string(),
                criterion: crit.key(),
                ratio: cell.ratio,
                replicate: cell.replicate,
                n,
                shd_raw,
                shd_scaled,
                calls,
                valid,
                elapsed_ms: if timing { elapsed as u64 } else { 0 },
            });
        }
    }
    Ok(out)
}

/// Runs the sweep on already loaded networks. Records come out ordered by
/// network, ratio, replicate, learner and criterion as listed in the config.
pub fn run_benchmark_on(cfg: &BenchConfig, nets: &[BayesNet]) -> Result<Vec<BenchRecord>, BenchError> {
    let (learners, criteria) = cfg.validate()?;
    let base = LearnOptions::from_map(&cfg.options)?;
    let references: Vec<Pdag> = nets.iter().map(|b| cpdag_from_dag(b.dag())).collect();
    for net in nets {
        if net.n_arcs() == 0 {
            return Err(BenchError::EmptyReference(net.name().to_string()));
        }
    }
    let mut cells = Vec::new();
    for (net, reference) in nets.iter().zip(&references) {
        for &ratio in &cfg.ratios {
            for replicate in 0..cfg.replicates {
                let seed = cell_seed(cfg.seed, net.name(), ratio, replicate);
                cells.push(Cell { net, reference, ratio, replicate, seed });
            }
        }
    }
    let work = || -> Result<Vec<Vec<BenchRecord>>, BenchError> {
        cells.par_iter().map(|c| run_cell(c, &learners, &criteria, &base, cfg.timing)).collect()
    };
    let per_cell = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| BenchError::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    Ok(per_cell.into_iter().flatten().collect())
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    let nets = cfg.networks.iter().map(load_bn_text).collect::<Result<Vec<_>, _>>()?;
    run_benchmark_on(cfg, &nets)
}

pub fn write_records<W: Write>(records: &[BenchRecord], w: W) -> Result<(), BenchError> {
    let mut wr = csv::Writer::from_writer(w);
    if records.is_empty() {
        wr.write_record(["network", "learner", "criterion", "ratio", "replicate", "n", "shd_raw", "shd_scaled", "calls", "valid", "elapsed_ms"])?;
    }
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush().map_err(|e| BenchError::Csv(e.to_string()))
}

pub fn records_to_csv(records: &[BenchRecord]) -> Result<String, BenchError> {
    let mut buf = Vec::new();
    write_records(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<BenchRecord>, BenchError> {
    csv::Reader::from_reader(r).deserialize().map(|r| r.map_err(BenchError::from)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regime {
    /// `n/|Θ| < 1`.
    Small,
    Large,
}

impl Regime {
    pub fn of(ratio: f64) -> Regime {
        if ratio < 1.0 {
            Regime::Small
        } else {
            Regime::Large
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::Small => "small",
            Regime::Large => "large",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrant {
    FastAccurate,
    FastInaccurate,
    SlowAccurate,
    SlowInaccurate,
}

impl Quadrant {
    /// At or below a mean counts as fast or accurate.
    pub fn classify(log_calls: f64, shd: f64, mean_log_calls: f64, mean_shd: f64) -> Quadrant {
        match (log_calls <= mean_log_calls, shd <= mean_shd) {
            (true, true) => Quadrant::FastAccurate,
            (true, false) => Quadrant::FastInaccurate,
            (false, true) => Quadrant::SlowAccurate,
            (false, false) => Quadrant::SlowInaccurate,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Quadrant::FastAccurate => "fast, accurate",
            Quadrant::FastInaccurate => "fast, inaccurate",
            Quadrant::SlowAccurate => "slow, accurate",
            Quadrant::SlowInaccurate => "slow, inaccurate",
        }
    }
}

/// One learner's point in a (network, criterion, regime) panel.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub network: String,
    pub criterion: String,
    pub regime: Regime,
    pub learner: String,
    pub runs: usize,
    pub mean_shd_scaled: f64,
    /// Mean of `log10(max(calls, 1))`.
    pub mean_log10_calls: f64,
    pub quadrant: Quadrant,
}

/// Panel summaries. Each learner's means are placed against the mean of all
/// learner points in the same panel. Invalid runs are skipped unless
/// `include_invalid` is set; learners with no remaining runs are omitted.
pub fn summarise(records: &[BenchRecord], include_invalid: bool) -> Vec<SummaryRow> {
    type Key = (String, String, Regime);
    let mut panels: BTreeMap<Key, BTreeMap<String, (usize, f64, f64)>> = BTreeMap::new();
    let mut learner_order: Vec<&str> = Vec::new();
    for r in records {
        if !learner_order.contains(&r.learner.as_str()) {
            learner_order.push(&r.learner);
        }
        if !r.valid && !include_invalid {
            continue;
        }
        let key = (r.network.clone(), r.criterion.clone(), Regime::of(r.ratio));
        let e = panels.entry(key).or_default().entry(r.learner.clone()).or_insert((0, 0.0, 0.0));
        e.0 += 1;
        e.1 += r.shd_scaled;
        e.2 += (r.calls.max(1) as f64).log10();
    }
    let mut out = Vec::new();
    for ((network, criterion, regime), learners) in panels {
        let points: Vec<(&String, usize, f64, f64)> =
            learners.iter().map(|(l, &(k, s, c))| (l, k, s / k as f64, c / k as f64)).collect();
        let m = points.len() as f64;
        let mean_shd = points.iter().map(|p| p.2).sum::<f64>() / m;
        let mean_calls = points.iter().map(|p| p.3).sum::<f64>() / m;
        let mut rows: Vec<SummaryRow> = points
            .into_iter()
            .map(|(l, k, s, c)| SummaryRow {
                network: network.clone(),
                criterion: criterion.clone(),
                regime,
                learner: l.clone(),
                runs: k,
                mean_shd_scaled: s,
                mean_log10_calls: c,
                quadrant: Quadrant::classify(c, s, mean_calls, mean_shd),
            })
            .collect();
        rows.sort_by_key(|r| learner_order.iter().position(|l| *l == r.learner));
        out.extend(rows);
    }
    out
}

/// Fixed-width text table of a summary.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:<14} {:<14} {:<6} {:<12} {:>5} {:>10} {:>12}  {}\n",
        "network", "criterion", "n/|Θ|", "learner", "runs", "scaled_shd", "log10_calls", "quadrant"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<14} {:<14} {:<6} {:<12} {:>5} {:>10.4} {:>12.4}  {}\n",
            r.network,
            r.criterion,
            r.regime.label(),
            r.learner,
            r.runs,
            r.mean_shd_scaled,
            r.mean_log10_calls,
            r.quadrant.label()
        ));
    }
    s
}
