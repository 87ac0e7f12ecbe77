//! Restrict-maximise hybrids.

use std::collections::BTreeSet;
use std::time::Instant;

use super::anneal::{anneal_restricted, AnnealOptions};
use super::constraint::{gs_blankets, pc_skeleton};
use super::greedy::{greedy_restricted, GreedyOptions};
use super::{LearnError, LearnOutcome};
use crate::criteria::Criterion;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Restrict {
    /// Candidate parents are the neighbours in the PC-Stable skeleton.
    PcSkeleton,
    /// Candidate parents are the symmetrised Grow-Shrink Markov blanket.
    GsBlanket,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Maximise {
    Greedy(GreedyOptions),
    Anneal(AnnealOptions),
}

/// Candidate parent sets from the restrict phase.
pub fn candidate_sets(test: &Criterion, restrict: Restrict, max_sepset: Option<usize>) -> Result<Vec<BTreeSet<usize>>, LearnError> {
    match restrict {
        Restrict::PcSkeleton => Ok(pc_skeleton(test, max_sepset)?.adjacency),
        Restrict::GsBlanket => gs_blankets(test),
    }
}

/// Runs the maximiser with every parent set confined to its candidate set.
pub fn maximise_within(score: &Criterion, candidates: &[BTreeSet<usize>], maximise: &Maximise) -> Result<LearnOutcome, LearnError> {
    match maximise {
        Maximise::Greedy(o) => greedy_restricted(score, o, None, Some(candidates)),
        Maximise::Anneal(o) => anneal_restricted(score, o, Some(candidates)),
    }
}

pub fn restrict_maximise(
    test: &Criterion,
    score: &Criterion,
    restrict: Restrict,
    maximise: &Maximise,
    max_sepset: Option<usize>,
) -> Result<LearnOutcome, LearnError> {
    let t0 = Instant::now();
    let same = std::ptr::eq(test, score);
    let (ct, cs) = (test.calls(), score.calls());
    let candidates = candidate_sets(test, restrict, max_sepset)?;
    let mut out = maximise_within(score, &candidates, maximise)?;
    if let super::LearnedGraph::Dag(g) = &out.graph {
        debug_assert!((0..g.n_nodes()).all(|i| g.parents(i).is_subset(&candidates[i])));
    }
    out.calls = if same { score.calls() - cs } else { (test.calls() - ct) + (score.calls() - cs) };
    out.elapsed = t0.elapsed();
    Ok(out)
}
