//! Greedy search over DAGs: hill climbing, tabu phase and random restarts.

use std::collections::{BTreeSet, VecDeque};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{scored, LearnError, LearnOutcome, LearnedGraph};
use crate::criteria::Criterion;
use crate::graph::{Dag, NodeSet};

/// Improvements at or below this are treated as ties.
pub(crate) const IMPROVE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOptions {
    /// `t₀`: tabu iterations allowed without improving the best score.
    pub tabu_steps: usize,
    /// `t₁`: number of recently visited graphs that may not be revisited.
    pub tabu_memory: usize,
    pub restarts: usize,
    /// Random single-arc changes applied to the incumbent before a restart.
    pub perturbation: usize,
    pub max_parents: Option<usize>,
    pub seed: u64,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        GreedyOptions { tabu_steps: 0, tabu_memory: 0, restarts: 0, perturbation: 1, max_parents: None, seed: 0 }
    }
}

impl GreedyOptions {
    pub fn hill_climbing() -> Self {
        Self::default()
    }

    pub fn tabu() -> Self {
        GreedyOptions { tabu_steps: 10, tabu_memory: 10, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Move {
    Add(usize, usize),
    Delete(usize, usize),
    Reverse(usize, usize),
}

pub(crate) struct Search<'a> {
    crit: &'a Criterion,
    max_parents: Option<usize>,
    allowed: Option<&'a [BTreeSet<usize>]>,
    n: usize,
    pub dag: Dag,
    local: Vec<f64>,
    /// `toggled[j][i]`: local score of `j` with `i` added to or removed from
    /// its parents; NaN when the addition is not permitted.
    toggled: Vec<Vec<f64>>,
    zobrist: Vec<u64>,
    key: u64,
    /// Incumbent totals after each accepted hill-climbing move.
    pub trace: Vec<f64>,
}

impl<'a> Search<'a> {
    pub(crate) fn new(crit: &'a Criterion, max_parents: Option<usize>, allowed: Option<&'a [BTreeSet<usize>]>, start: Dag) -> Result<Self, LearnError> {
        let n = start.n_nodes();
        let mut zr = ChaCha8Rng::seed_from_u64(0x7ab0);
        let zobrist = (0..n * n).map(|_| zr.random()).collect();
        let mut s = Search {
            crit,
            max_parents,
            allowed,
            n,
            dag: start,
            local: vec![0.0; n],
            toggled: vec![vec![f64::NAN; n]; n],
            zobrist,
            key: 0,
            trace: Vec::new(),
        };
        s.key = s.dag.arcs().iter().fold(0, |k, &(a, b)| k ^ s.zobrist[a * n + b]);
        for j in 0..n {
            let pa: Vec<usize> = s.dag.parents(j).iter().copied().collect();
            s.local[j] = scored(crit.local_score(j, &pa))?;
        }
        for j in 0..n {
            s.refresh(j)?;
        }
        Ok(s)
    }

    fn can_gain(&self, i: usize, j: usize) -> bool {
        self.allowed.is_none_or(|a| a[j].contains(&i)) && self.max_parents.is_none_or(|m| self.dag.parents(j).len() < m)
    }

    fn refresh(&mut self, j: usize) -> Result<(), LearnError> {
        let pa = self.dag.parents(j).clone();
        for i in 0..self.n {
            if i == j {
                continue;
            }
            self.toggled[j][i] = if pa.contains(&i) {
                let rest: Vec<usize> = pa.iter().copied().filter(|&p| p != i).collect();
                scored(self.crit.local_score(j, &rest))?
            } else if self.can_gain(i, j) {
                let mut more: Vec<usize> = pa.iter().copied().collect();
                more.push(i);
                scored(self.crit.local_score(j, &more))?
            } else {
                f64::NAN
            };
        }
        Ok(())
    }

    pub(crate) fn total(&self) -> f64 {
        self.local.iter().sum()
    }

    fn delta(&self, m: Move) -> f64 {
        match m {
            Move::Add(i, j) | Move::Delete(i, j) => self.toggled[j][i] - self.local[j],
            Move::Reverse(i, j) => (self.toggled[j][i] - self.local[j]) + (self.toggled[i][j] - self.local[i]),
        }
    }

    fn key_after(&self, m: Move) -> u64 {
        let z = |a: usize, b: usize| self.zobrist[a * self.n + b];
        match m {
            Move::Add(i, j) | Move::Delete(i, j) => self.key ^ z(i, j),
            Move::Reverse(i, j) => self.key ^ z(i, j) ^ z(j, i),
        }
    }

    /// A path from `i` to `j` other than the arc `i → j` itself.
    fn indirect_path(&self, i: usize, j: usize) -> bool {
        self.dag.children(i).iter().any(|&c| c != j && self.dag.reaches(c, j))
    }

    fn legal(&self, m: Move) -> bool {
        match m {
            Move::Add(i, j) => !self.dag.reaches(j, i),
            Move::Delete(..) => true,
            Move::Reverse(i, j) => !self.indirect_path(i, j),
        }
    }

    fn candidates(&self) -> Vec<(f64, Move)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                let moves: &[Move] = if self.dag.has_arc(i, j) {
                    &[Move::Delete(i, j), Move::Reverse(i, j)]
                } else if self.dag.has_arc(j, i) {
                    &[]
                } else {
                    &[Move::Add(i, j)]
                };
                for &m in moves {
                    let d = self.delta(m);
                    if d.is_finite() {
                        out.push((d, m));
                    }
                }
            }
        }
        // stable: equal deltas keep enumeration order
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out
    }

    pub(crate) fn best_move(&self, improving_only: bool, tabu: Option<&VecDeque<u64>>) -> Option<Move> {
        self.candidates()
            .into_iter()
            .take_while(|(d, _)| !improving_only || *d > IMPROVE_EPS)
            .find(|&(_, m)| self.legal(m) && tabu.is_none_or(|t| !t.contains(&self.key_after(m))))
            .map(|(_, m)| m)
    }

    pub(crate) fn apply(&mut self, m: Move) -> Result<(), LearnError> {
        self.key = self.key_after(m);
        match m {
            Move::Add(i, j) => {
                self.dag.add_arc(i, j)?;
                self.local[j] = self.toggled[j][i];
                self.refresh(j)?;
            }
            Move::Delete(i, j) => {
                self.dag.remove_arc(i, j)?;
                self.local[j] = self.toggled[j][i];
                self.refresh(j)?;
            }
            Move::Reverse(i, j) => {
                self.dag.reverse_arc(i, j)?;
                self.local[j] = self.toggled[j][i];
                self.local[i] = self.toggled[i][j];
                self.refresh(j)?;
                self.refresh(i)?;
            }
        }
        Ok(())
    }

    pub(crate) fn hill_climb(&mut self) -> Result<(), LearnError> {
        while let Some(m) = self.best_move(true, None) {
            self.apply(m)?;
            self.trace.push(self.total());
        }
        Ok(())
    }

    /// Tabu phase from the current graph; returns the best graph visited and
    /// its score.
    fn tabu(&mut self, steps: usize, memory: usize) -> Result<(Dag, f64), LearnError> {
        let mut best = (self.dag.clone(), self.total());
        if steps == 0 {
            return Ok(best);
        }
        let mut recent: VecDeque<u64> = VecDeque::from([self.key]);
        let mut fails = 0;
        while let Some(m) = self.best_move(false, Some(&recent)) {
            self.apply(m)?;
            recent.push_back(self.key);
            while recent.len() > memory {
                recent.pop_front();
            }
            if self.total() > best.1 + IMPROVE_EPS {
                best = (self.dag.clone(), self.total());
                fails = 0;
            } else {
                fails += 1;
                if fails >= steps {
                    break;
                }
            }
        }
        Ok(best)
    }

    fn perturb<R: Rng>(&mut self, moves: usize, rng: &mut R) -> Result<(), LearnError> {
        let mut done = 0;
        let mut attempts = 0;
        while done < moves && attempts < 100 * (moves + 1) && self.n > 1 {
            attempts += 1;
            let i = rng.random_range(0..self.n);
            let j = rng.random_range(0..self.n);
            if i == j {
                continue;
            }
            let m = if self.dag.has_arc(i, j) {
                if rng.random_bool(0.5) {
                    Move::Delete(i, j)
                } else {
                    Move::Reverse(i, j)
                }
            } else if self.dag.has_arc(j, i) {
                continue;
            } else {
                Move::Add(i, j)
            };
            if self.delta(m).is_finite() && self.legal(m) {
                self.apply(m)?;
                done += 1;
            }
        }
        Ok(())
    }
}

/// Hill climbing, then an optional tabu phase and random restarts; returns the
/// best-scoring DAG visited.
pub(crate) fn search(crit: &Criterion, opts: &GreedyOptions, start: Option<&Dag>, allowed: Option<&[BTreeSet<usize>]>) -> Result<(Dag, f64), LearnError> {
    let names = crit.data().names();
    let start = match start {
        Some(g) => {
            if g.nodes().names() != names.as_slice() {
                return Err(crate::graph::GraphError::NodeMismatch.into());
            }
            g.clone()
        }
        None => Dag::empty(NodeSet::new(&names)?),
    };
    let mut s = Search::new(crit, opts.max_parents, allowed, start)?;
    s.hill_climb()?;
    let mut best = s.tabu(opts.tabu_steps, opts.tabu_memory)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        let mut r = Search::new(crit, opts.max_parents, allowed, best.0.clone())?;
        r.perturb(opts.perturbation, &mut rng)?;
        r.hill_climb()?;
        let cand = r.tabu(opts.tabu_steps, opts.tabu_memory)?;
        if cand.1 > best.1 + IMPROVE_EPS {
            best = cand;
        }
    }
    Ok(best)
}

pub fn greedy_search(score: &Criterion, opts: &GreedyOptions, start: Option<&Dag>) -> Result<LearnOutcome, LearnError> {
    greedy_restricted(score, opts, start, None)
}

pub(crate) fn greedy_restricted(score: &Criterion, opts: &GreedyOptions, start: Option<&Dag>, allowed: Option<&[BTreeSet<usize>]>) -> Result<LearnOutcome, LearnError> {
    if !score.has_score() {
        return Err(LearnError::NeedsScore(score.kind().key()));
    }
    let (t0, c0) = (Instant::now(), score.calls());
    let (dag, _) = search(score, opts, start, allowed)?;
    Ok(LearnOutcome { graph: LearnedGraph::Dag(dag), valid: true, calls: score.calls() - c0, elapsed: t0.elapsed() })
}
