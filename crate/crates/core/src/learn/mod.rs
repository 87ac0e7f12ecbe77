//! Structure learners.
//!
//! Every learner takes a [`Criterion`] and reports the number of criterion
//! evaluations it made. Constraint-based learners return a PDAG and may fail
//! to produce a valid equivalence class; score-based learners return a DAG.

mod anneal;
mod constraint;
mod greedy;
mod hybrid;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::criteria::{CriteriaError, Criterion};
use crate::graph::{cpdag_from_dag, extend_to_dag, Dag, GraphError, Pdag};

pub use anneal::{acceptance_probability, simulated_annealing, AnnealOptions};
pub use constraint::{grow_shrink, gs_blankets, gs_skeleton, orient_skeleton, pc_skeleton, pc_stable, Separation, Skeleton};
pub use greedy::{greedy_search, GreedyOptions};
pub use hybrid::{candidate_sets, maximise_within, restrict_maximise, Maximise, Restrict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("learner needs a score criterion, got `{0}`")]
    NeedsScore(String),
    #[error("unknown learner `{0}`")]
    UnknownLearner(String),
    #[error("bad option: {0}")]
    BadOption(String),
}

/// Local scores that cannot be evaluated on this data (singular or degenerate
/// fits) rank below every feasible parent set instead of aborting the search.
pub(crate) fn scored(r: Result<f64, CriteriaError>) -> Result<f64, LearnError> {
    match r {
        Ok(v) => Ok(v),
        Err(CriteriaError::Singular | CriteriaError::Degenerate(_)) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LearnedGraph {
    Dag(Dag),
    Pdag(Pdag),
}

impl LearnedGraph {
    /// Equivalence-class view used for SHD: the CPDAG of a DAG, or the PDAG
    /// as returned.
    pub fn cpdag(&self) -> Pdag {
        match self {
            LearnedGraph::Dag(g) => cpdag_from_dag(g),
            LearnedGraph::Pdag(p) => p.clone(),
        }
    }

    /// A DAG member of the result, when one exists.
    pub fn dag(&self) -> Option<Dag> {
        match self {
            LearnedGraph::Dag(g) => Some(g.clone()),
            LearnedGraph::Pdag(p) => extend_to_dag(p).ok(),
        }
    }

    /// Arcs plus undirected edges.
    pub fn n_edges(&self) -> usize {
        match self {
            LearnedGraph::Dag(g) => g.n_arcs(),
            LearnedGraph::Pdag(p) => p.n_edges(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    pub graph: LearnedGraph,
    /// False when constraint-based orientation failed; `graph` then holds the
    /// diagnostic PDAG.
    pub valid: bool,
    pub calls: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LearnerKind {
    PcStable,
    GrowShrink,
    HillClimbing,
    Tabu,
    Annealing,
    /// PC skeleton restriction with greedy maximisation.
    Mmhc,
    /// Grow-Shrink blanket restriction with greedy maximisation.
    Rsmax2Like,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 7] = [
        LearnerKind::PcStable,
        LearnerKind::GrowShrink,
        LearnerKind::HillClimbing,
        LearnerKind::Tabu,
        LearnerKind::Annealing,
        LearnerKind::Mmhc,
        LearnerKind::Rsmax2Like,
    ];

    pub fn key(self) -> &'static str {
        match self {
            LearnerKind::PcStable => "pc-stable",
            LearnerKind::GrowShrink => "gs",
            LearnerKind::HillClimbing => "hc",
            LearnerKind::Tabu => "tabu",
            LearnerKind::Annealing => "sann",
            LearnerKind::Mmhc => "mmhc",
            LearnerKind::Rsmax2Like => "rsmax2-like",
        }
    }

    pub fn is_constraint_based(self) -> bool {
        matches!(self, LearnerKind::PcStable | LearnerKind::GrowShrink)
    }

    pub fn needs_score(self) -> bool {
        !self.is_constraint_based()
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for LearnerKind {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LearnerKind::ALL.into_iter().find(|k| k.key() == s).ok_or_else(|| LearnError::UnknownLearner(s.to_string()))
    }
}

/// Options shared by all learners, settable by configuration key.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LearnOptions {
    /// `tabu.t0`; the tabu learner defaults to 10, hill climbing ignores it.
    pub tabu_steps: Option<usize>,
    /// `tabu.t1`; the tabu learner defaults to 10.
    pub tabu_memory: Option<usize>,
    pub restarts: usize,
    pub perturbation: Option<usize>,
    pub max_parents: Option<usize>,
    pub max_sepset: Option<usize>,
    pub anneal: AnnealOptions,
    pub seed: u64,
}

impl LearnOptions {
    /// Sets one option from its configuration key.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), LearnError> {
        let count = || {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(LearnError::BadOption(format!("{key} must be a non-negative integer, got {value}")))
            }
        };
        match key {
            "tabu.t0" => self.tabu_steps = Some(count()?),
            "tabu.t1" => self.tabu_memory = Some(count()?),
            "restarts" => self.restarts = count()?,
            "perturbation" => self.perturbation = Some(count()?),
            "max_parents" => {
                self.max_parents = Some(count()?);
                self.anneal.max_parents = count()?;
            }
            "max_sepset" => self.max_sepset = Some(count()?),
            "sann.iters" => self.anneal.iterations = count()?,
            "sann.beta0" => self.anneal.beta0 = value,
            "sann.cool" => self.anneal.cooling = value,
            _ => return Err(LearnError::BadOption(format!("unknown option `{key}`"))),
        }
        Ok(())
    }

    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self, LearnError> {
        let mut o = LearnOptions::default();
        for (k, v) in map {
            o.set(k, *v)?;
        }
        Ok(o)
    }

    pub fn greedy(&self, kind: LearnerKind) -> GreedyOptions {
        let tabu = kind == LearnerKind::Tabu;
        GreedyOptions {
            tabu_steps: if tabu { self.tabu_steps.unwrap_or(10) } else { 0 },
            tabu_memory: if tabu { self.tabu_memory.unwrap_or(10) } else { 0 },
            restarts: self.restarts,
            perturbation: self.perturbation.unwrap_or(1),
            max_parents: self.max_parents,
            seed: self.seed,
        }
    }

    pub fn annealing(&self) -> AnnealOptions {
        AnnealOptions { seed: self.seed, ..self.anneal.clone() }
    }
}

/// Runs a learner by kind with one criterion serving as both test and score.
pub fn learn(kind: LearnerKind, criterion: &Criterion, opts: &LearnOptions) -> Result<LearnOutcome, LearnError> {
    if kind.needs_score() && !criterion.has_score() {
        return Err(LearnError::NeedsScore(criterion.kind().key()));
    }
    match kind {
        LearnerKind::PcStable => pc_stable(criterion, opts.max_sepset),
        LearnerKind::GrowShrink => grow_shrink(criterion),
        LearnerKind::HillClimbing | LearnerKind::Tabu => greedy_search(criterion, &opts.greedy(kind), None),
        LearnerKind::Annealing => simulated_annealing(criterion, &opts.annealing()),
        LearnerKind::Mmhc => restrict_maximise(
            criterion,
            criterion,
            Restrict::PcSkeleton,
            &Maximise::Greedy(opts.greedy(LearnerKind::HillClimbing)),
            opts.max_sepset,
        ),
        LearnerKind::Rsmax2Like => restrict_maximise(
            criterion,
            criterion,
            Restrict::GsBlanket,
            &Maximise::Greedy(opts.greedy(LearnerKind::HillClimbing)),
            opts.max_sepset,
        ),
    }
}

#[cfg(test)]
mod tests;
