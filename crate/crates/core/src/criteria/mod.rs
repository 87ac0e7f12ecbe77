//! Conditional independence tests, network scores and their matched pairs.
//!
//! A [`Criterion`] binds one criterion kind to a dataset and counts every
//! test and local-score evaluation. Score kinds (`bic`, `bic-gamma`, `bdeu`,
//! `bge`) also answer independence queries through the matched test derived
//! from the score, so the same object drives score-based, constraint-based
//! and hybrid learners.

mod ci;
mod scores;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::{Dag, GraphError};
use crate::model::{Dataset, VarKind};
use crate::stats;

pub use ci::{fisher_z_statistic, g2_statistic, gaussian_g2_statistic, t_statistic, x2_statistic, Table3};
pub use scores::BgeHyper;

use scores::BgeState;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriteriaError {
    #[error("criterion requires categorical variables")]
    NeedsCategorical,
    #[error("criterion requires continuous variables")]
    NeedsContinuous,
    #[error("dataset mixes categorical and continuous variables")]
    MixedData,
    #[error("criterion `{0}` has no score; use a score key for score-based learners")]
    NoScore(String),
    #[error("singular or non-positive-definite covariance submatrix")]
    Singular,
    #[error("degenerate fit for node {0}")]
    Degenerate(String),
    #[error("need more than {needed} rows, got {n}")]
    TooFewRows { n: usize, needed: usize },
    #[error("invalid hyperparameter: {0}")]
    Hyper(String),
    #[error("unknown criterion key `{0}`")]
    BadKey(String),
    #[error("node index {0} out of range")]
    BadNode(usize),
    #[error("tested variables must be distinct and outside the conditioning set")]
    Overlap,
    #[error("too many parent configurations to index")]
    TooManyConfigs,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Null distribution or decision reference of a test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    ChiSquared { dof: f64 },
    StudentT { dof: f64 },
    StandardNormal,
    /// Matched test of a penalised-likelihood score; `delta_params` is
    /// `|Θ⁺| − |Θ⁻|` for the node being tested.
    ParameterPenalty { delta_params: f64 },
    /// Log Bayes factor against threshold 0.
    BayesFactor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub threshold: f64,
    pub independent: bool,
    pub reference: Reference,
}

impl TestResult {
    /// Distance from the decision boundary: positive when independent, larger
    /// meaning more clearly so.
    pub fn margin(&self) -> f64 {
        match self.reference {
            Reference::StudentT { .. } | Reference::StandardNormal => self.threshold - self.statistic.abs(),
            _ => self.threshold - self.statistic,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreValue {
    pub total: f64,
    /// Local terms indexed by node.
    pub per_node: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CriterionKind {
    Bic,
    BicGamma(f64),
    Bdeu(f64),
    Bge(BgeHyper),
    /// G² test; discrete or Gaussian form chosen from the data.
    G2 { alpha: f64 },
    X2 { alpha: f64 },
    FisherZ { alpha: f64 },
    StudentT { alpha: f64 },
}

impl CriterionKind {
    pub fn has_score(&self) -> bool {
        matches!(self, Self::Bic | Self::BicGamma(_) | Self::Bdeu(_) | Self::Bge(_))
    }

    pub fn key(&self) -> String {
        let with_alpha = |k: &str, a: f64| {
            if a == DEFAULT_ALPHA {
                k.to_string()
            } else {
                format!("{k}:{a}")
            }
        };
        match self {
            Self::Bic => "bic".into(),
            Self::BicGamma(g) => format!("bic-gamma:{g}"),
            Self::Bdeu(iss) => format!("bdeu:{iss}"),
            Self::Bge(_) => "bge".into(),
            Self::G2 { alpha } => with_alpha("g2", *alpha),
            Self::X2 { alpha } => with_alpha("x2", *alpha),
            Self::FisherZ { alpha } => with_alpha("zf", *alpha),
            Self::StudentT { alpha } => with_alpha("t", *alpha),
        }
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl FromStr for CriterionKind {
    type Err = CriteriaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CriteriaError::BadKey(s.to_string());
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a.parse::<f64>().map_err(|_| bad())?)),
            None => (s, None),
        };
        let alpha = || {
            let a = arg.unwrap_or(DEFAULT_ALPHA);
            if a > 0.0 && a < 1.0 {
                Ok(a)
            } else {
                Err(CriteriaError::Hyper(format!("alpha must lie in (0, 1), got {a}")))
            }
        };
        let kind = match name {
            "bic" if arg.is_none() => Self::Bic,
            "bic-gamma" => {
                let g = arg.ok_or_else(bad)?;
                if !(g >= 0.0) || !g.is_finite() {
                    return Err(CriteriaError::Hyper(format!("gamma must be non-negative, got {g}")));
                }
                Self::BicGamma(g)
            }
            "bdeu" => {
                let iss = arg.unwrap_or(1.0);
                if !(iss > 0.0) || !iss.is_finite() {
                    return Err(CriteriaError::Hyper(format!("imaginary sample size must be positive, got {iss}")));
                }
                Self::Bdeu(iss)
            }
            "bge" if arg.is_none() => Self::Bge(BgeHyper::default()),
            "g2" => Self::G2 { alpha: alpha()? },
            "x2" => Self::X2 { alpha: alpha()? },
            "zf" => Self::FisherZ { alpha: alpha()? },
            "t" => Self::StudentT { alpha: alpha()? },
            _ => return Err(bad()),
        };
        Ok(kind)
    }
}

/// Data-derived quantities reused across evaluations.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub cards: Vec<usize>,
    cov: Option<DMatrix<f64>>,
    pub bge: Option<BgeState>,
}

impl Prepared {
    pub(crate) fn new(d: &Dataset, kind: &CriterionKind) -> Result<Self, CriteriaError> {
        let n_cont = d.vars().iter().filter(|v| v.is_continuous()).count();
        if n_cont != 0 && n_cont != d.n_vars() {
            return Err(CriteriaError::MixedData);
        }
        let continuous = n_cont > 0 && d.n_vars() > 0;
        match kind {
            CriterionKind::Bdeu(_) | CriterionKind::X2 { .. } if continuous => return Err(CriteriaError::NeedsCategorical),
            CriterionKind::Bge(_) | CriterionKind::FisherZ { .. } | CriterionKind::StudentT { .. } if !continuous => {
                return Err(CriteriaError::NeedsContinuous)
            }
            _ => {}
        }
        let cards = d
            .vars()
            .iter()
            .map(|v| match &v.kind {
                VarKind::Categorical(l) => l.len(),
                VarKind::Continuous => 0,
            })
            .collect();
        let cov = continuous.then(|| {
            let cols: Vec<&[f64]> = (0..d.n_vars()).map(|i| d.continuous(i).expect("continuous")).collect();
            stats::covariance(&cols).0
        });
        let bge = match kind {
            CriterionKind::Bge(h) => Some(BgeState::new(d, h)?),
            _ => None,
        };
        Ok(Prepared { cards, cov, bge })
    }

    pub(crate) fn covariance(&self, _d: &Dataset) -> Result<&DMatrix<f64>, CriteriaError> {
        self.cov.as_ref().ok_or(CriteriaError::NeedsContinuous)
    }

    pub(crate) fn discrete_columns<'a>(&self, d: &'a Dataset, idx: &[usize]) -> Result<Vec<&'a [u32]>, CriteriaError> {
        idx.iter().map(|&i| d.categorical(i).ok_or(CriteriaError::NeedsCategorical)).collect()
    }

    /// Per-row mixed-radix configuration index over `vars` (first variable
    /// varies fastest) and the declared number of configurations.
    pub(crate) fn config_keys(&self, d: &Dataset, vars: &[usize]) -> Result<(Vec<u128>, f64), CriteriaError> {
        let cols = self.discrete_columns(d, vars)?;
        let mut keys = vec![0u128; d.n_rows()];
        let mut stride: u128 = 1;
        let mut q = 1.0;
        for (c, &v) in cols.iter().zip(vars) {
            let card = self.cards[v] as u128;
            for (k, &val) in keys.iter_mut().zip(c.iter()) {
                *k += val as u128 * stride;
            }
            stride = stride.checked_mul(card).ok_or(CriteriaError::TooManyConfigs)?;
            q *= card as f64;
        }
        Ok((keys, q))
    }
}

fn check_nodes(d: &Dataset, nodes: &[usize]) -> Result<(), CriteriaError> {
    match nodes.iter().find(|&&i| i >= d.n_vars()) {
        Some(&i) => Err(CriteriaError::BadNode(i)),
        None => Ok(()),
    }
}

fn check_query(d: &Dataset, x: usize, y: usize, z: &[usize]) -> Result<(), CriteriaError> {
    check_nodes(d, &[x, y])?;
    check_nodes(d, z)?;
    if x == y || z.contains(&x) || z.contains(&y) {
        return Err(CriteriaError::Overlap);
    }
    Ok(())
}

fn local_with(d: &Dataset, prep: &Prepared, kind: &CriterionKind, node: usize, parents: &[usize]) -> Result<f64, CriteriaError> {
    match kind {
        CriterionKind::Bic => scores::local_bic(d, prep, node, parents, 0.0),
        CriterionKind::BicGamma(g) => scores::local_bic(d, prep, node, parents, *g),
        CriterionKind::Bdeu(iss) => scores::local_bdeu(d, prep, node, parents, *iss),
        CriterionKind::Bge(_) => scores::local_bge(d, prep, node, parents),
        other => Err(CriteriaError::NoScore(other.key())),
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

fn matched_with(d: &Dataset, prep: &Prepared, kind: &CriterionKind, x: usize, y: usize, z: &[usize]) -> Result<TestResult, CriteriaError> {
    let minus = sorted(z);
    let mut plus = minus.clone();
    plus.push(y);
    plus.sort_unstable();
    let gamma = match kind {
        CriterionKind::Bic => Some(0.0),
        CriterionKind::BicGamma(g) => Some(*g),
        _ => None,
    };
    if let Some(gamma) = gamma {
        let (ll_plus, k_plus) = scores::local_loglik(d, prep, x, &plus)?;
        let (ll_minus, k_minus) = scores::local_loglik(d, prep, x, &minus)?;
        let statistic = 2.0 * (ll_plus - ll_minus);
        let delta = k_plus - k_minus;
        let threshold = delta * 2.0 * scores::penalty_per_param(d.n_rows(), d.n_vars(), gamma);
        Ok(TestResult {
            statistic,
            threshold,
            independent: statistic <= threshold,
            reference: Reference::ParameterPenalty { delta_params: delta },
        })
    } else {
        let statistic = local_with(d, prep, kind, x, &plus)? - local_with(d, prep, kind, x, &minus)?;
        Ok(TestResult { statistic, threshold: 0.0, independent: statistic <= 0.0, reference: Reference::BayesFactor })
    }
}

fn test_with(d: &Dataset, prep: &Prepared, kind: &CriterionKind, x: usize, y: usize, z: &[usize]) -> Result<TestResult, CriteriaError> {
    check_query(d, x, y, z)?;
    match kind {
        CriterionKind::G2 { alpha } if d.is_discrete() => ci::g2_discrete_with(d, prep, x, y, z, *alpha),
        CriterionKind::G2 { alpha } => ci::g2_gaussian_with(d, prep, x, y, z, *alpha),
        CriterionKind::X2 { alpha } => ci::x2_discrete_with(d, prep, x, y, z, *alpha),
        CriterionKind::FisherZ { alpha } => ci::z_fisher_with(d, prep, x, y, z, *alpha),
        CriterionKind::StudentT { alpha } => ci::t_partial_with(d, prep, x, y, z, *alpha),
        _ => matched_with(d, prep, kind, x, y, z),
    }
}

fn score_dag_with(d: &Dataset, prep: &Prepared, kind: &CriterionKind, g: &Dag) -> Result<ScoreValue, CriteriaError> {
    if g.nodes().names() != d.names().as_slice() {
        return Err(GraphError::NodeMismatch.into());
    }
    let per_node = (0..g.n_nodes())
        .map(|i| {
            let pa: Vec<usize> = g.parents(i).iter().copied().collect();
            local_with(d, prep, kind, i, &pa)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScoreValue { total: per_node.iter().sum(), per_node })
}

/// A criterion bound to one dataset, with an evaluation counter.
///
/// Every call to [`Criterion::test`] and every local-score evaluation adds 1
/// to the counter. The counter is atomic so a criterion can be shared across
/// threads; one criterion per learner run keeps counts meaningful.
#[derive(Debug)]
pub struct Criterion {
    kind: CriterionKind,
    data: Arc<Dataset>,
    prep: Prepared,
    calls: AtomicU64,
}

impl Criterion {
    pub fn new(data: Arc<Dataset>, kind: CriterionKind) -> Result<Self, CriteriaError> {
        let prep = Prepared::new(&data, &kind)?;
        Ok(Criterion { kind, data, prep, calls: AtomicU64::new(0) })
    }

    pub fn from_key(data: Arc<Dataset>, key: &str) -> Result<Self, CriteriaError> {
        Self::new(data, key.parse()?)
    }

    pub fn kind(&self) -> &CriterionKind {
        &self.kind
    }

    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn n_vars(&self) -> usize {
        self.data.n_vars()
    }

    pub fn has_score(&self) -> bool {
        self.kind.has_score()
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn bump(&self, k: u64) {
        self.calls.fetch_add(k, Ordering::Relaxed);
    }

    /// Independence test of `x` and `y` given `z`; matched test for score kinds.
    pub fn test(&self, x: usize, y: usize, z: &[usize]) -> Result<TestResult, CriteriaError> {
        self.bump(1);
        test_with(&self.data, &self.prep, &self.kind, x, y, z)
    }

    /// Local score of `node` with the given parent set.
    pub fn local_score(&self, node: usize, parents: &[usize]) -> Result<f64, CriteriaError> {
        self.bump(1);
        check_nodes(&self.data, &[node])?;
        check_nodes(&self.data, parents)?;
        if parents.contains(&node) {
            return Err(CriteriaError::Overlap);
        }
        local_with(&self.data, &self.prep, &self.kind, node, &sorted(parents))
    }

    /// Whole-network score; counts one evaluation per node.
    pub fn score_dag(&self, g: &Dag) -> Result<ScoreValue, CriteriaError> {
        self.bump(g.n_nodes() as u64);
        score_dag_with(&self.data, &self.prep, &self.kind, g)
    }
}

fn standalone_test(d: &Dataset, kind: CriterionKind, x: usize, y: usize, z: &[usize]) -> Result<TestResult, CriteriaError> {
    let prep = Prepared::new(d, &kind)?;
    test_with(d, &prep, &kind, x, y, z)
}

/// Discrete G² test. Gaussian data is rejected; use [`g2_gaussian`].
pub fn g2_discrete(d: &Dataset, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<TestResult, CriteriaError> {
    if !d.is_discrete() {
        return Err(CriteriaError::NeedsCategorical);
    }
    standalone_test(d, CriterionKind::G2 { alpha }, x, y, z)
}

pub fn x2_discrete(d: &Dataset, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<TestResult, CriteriaError> {
    standalone_test(d, CriterionKind::X2 { alpha }, x, y, z)
}

/// Gaussian G² test, `−n log(1 − ρ²)` against χ²₁.
pub fn g2_gaussian(d: &Dataset, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<TestResult, CriteriaError> {
    if !d.is_continuous() {
        return Err(CriteriaError::NeedsContinuous);
    }
    standalone_test(d, CriterionKind::G2 { alpha }, x, y, z)
}

pub fn t_partial(d: &Dataset, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<TestResult, CriteriaError> {
    standalone_test(d, CriterionKind::StudentT { alpha }, x, y, z)
}

pub fn z_fisher(d: &Dataset, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<TestResult, CriteriaError> {
    standalone_test(d, CriterionKind::FisherZ { alpha }, x, y, z)
}

fn standalone_score(g: &Dag, d: &Dataset, kind: CriterionKind) -> Result<ScoreValue, CriteriaError> {
    let prep = Prepared::new(d, &kind)?;
    score_dag_with(d, &prep, &kind, g)
}

pub fn bic(g: &Dag, d: &Dataset) -> Result<ScoreValue, CriteriaError> {
    standalone_score(g, d, CriterionKind::Bic)
}

pub fn bic_gamma(g: &Dag, d: &Dataset, gamma: f64) -> Result<ScoreValue, CriteriaError> {
    if !(gamma >= 0.0) {
        return Err(CriteriaError::Hyper(format!("gamma must be non-negative, got {gamma}")));
    }
    standalone_score(g, d, CriterionKind::BicGamma(gamma))
}

pub fn bdeu(g: &Dag, d: &Dataset, iss: f64) -> Result<ScoreValue, CriteriaError> {
    if !(iss > 0.0) {
        return Err(CriteriaError::Hyper(format!("imaginary sample size must be positive, got {iss}")));
    }
    standalone_score(g, d, CriterionKind::Bdeu(iss))
}

pub fn bge(g: &Dag, d: &Dataset, hyper: &BgeHyper) -> Result<ScoreValue, CriteriaError> {
    standalone_score(g, d, CriterionKind::Bge(hyper.clone()))
}

/// The independence test matched to a score kind, with `z` playing the role
/// of the current parent set of `x`.
pub fn matched_test_from_score(kind: &CriterionKind, d: &Dataset, x: usize, y: usize, z: &[usize]) -> Result<TestResult, CriteriaError> {
    if !kind.has_score() {
        return Err(CriteriaError::NoScore(kind.key()));
    }
    standalone_test(d, kind.clone(), x, y, z)
}
