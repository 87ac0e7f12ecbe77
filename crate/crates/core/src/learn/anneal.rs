//! Simulated annealing over topological orderings.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::constraint::for_each_subset;
use super::{scored, LearnError, LearnOutcome, LearnedGraph};
use crate::criteria::Criterion;
use crate::graph::{Dag, NodeSet};

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealOptions {
    pub iterations: usize,
    /// Initial temperature `β₀`.
    pub beta0: f64,
    /// Geometric cooling factor in `(0, 1)`.
    pub cooling: f64,
    pub max_parents: usize,
    pub seed: u64,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        AnnealOptions { iterations: 1000, beta0: 10.0, cooling: 0.995, max_parents: 3, seed: 0 }
    }
}

/// Metropolis acceptance probability for a change `delta` in ordering score.
pub fn acceptance_probability(delta: f64, beta: f64) -> f64 {
    if delta >= 0.0 {
        1.0
    } else {
        (delta / beta).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Choice {
    score: f64,
    parents: Vec<usize>,
}

struct OrderScorer<'a> {
    crit: &'a Criterion,
    max_parents: usize,
    allowed: Option<&'a [BTreeSet<usize>]>,
    cache: HashMap<(usize, Vec<usize>), f64>,
}

impl OrderScorer<'_> {
    fn local(&mut self, node: usize, parents: &[usize]) -> Result<f64, LearnError> {
        let key = (node, parents.to_vec());
        if let Some(&v) = self.cache.get(&key) {
            return Ok(v);
        }
        let v = scored(self.crit.local_score(node, parents))?;
        self.cache.insert(key, v);
        Ok(v)
    }

    fn eligible(&self, node: usize, preds: &[usize]) -> Vec<usize> {
        preds.iter().copied().filter(|&p| self.allowed.is_none_or(|a| a[node].contains(&p))).collect()
    }

    /// Best parent subset of `node` among `preds` that contains every node of
    /// `must`, with at most `max_parents` members.
    fn best(&mut self, node: usize, preds: &[usize], must: &[usize]) -> Result<Option<Choice>, LearnError> {
        let pool: Vec<usize> = self.eligible(node, preds).into_iter().filter(|p| !must.contains(p)).collect();
        let mut best: Option<Choice> = None;
        if must.len() > self.max_parents || self.eligible(node, must).len() < must.len() {
            return Ok(None);
        }
        for size in 0..=(self.max_parents - must.len()).min(pool.len()) {
            for_each_subset(&pool, size, |s| {
                let mut parents: Vec<usize> = s.iter().chain(must).copied().collect();
                parents.sort_unstable();
                let v = self.local(node, &parents)?;
                if best.as_ref().is_none_or(|b| v > b.score) {
                    best = Some(Choice { score: v, parents });
                }
                Ok::<_, LearnError>(false)
            })?;
        }
        Ok(best)
    }
}

pub fn simulated_annealing(score: &Criterion, opts: &AnnealOptions) -> Result<LearnOutcome, LearnError> {
    anneal_restricted(score, opts, None)
}

pub(crate) fn anneal_restricted(score: &Criterion, opts: &AnnealOptions, allowed: Option<&[BTreeSet<usize>]>) -> Result<LearnOutcome, LearnError> {
    if !score.has_score() {
        return Err(LearnError::NeedsScore(score.kind().key()));
    }
    if !(opts.beta0 > 0.0) || !(opts.cooling > 0.0 && opts.cooling < 1.0) {
        return Err(LearnError::BadOption("annealing needs beta0 > 0 and cooling in (0, 1)".into()));
    }
    let (t0, c0) = (Instant::now(), score.calls());
    let n = score.n_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sc = OrderScorer { crit: score, max_parents: opts.max_parents, allowed, cache: HashMap::new() };
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut choice: Vec<Choice> = vec![Choice { score: 0.0, parents: Vec::new() }; n];
    for (pos, &v) in order.iter().enumerate() {
        choice[v] = sc.best(v, &order[..pos], &[])?.expect("empty parent set always available");
    }
    let total = |c: &[Choice]| c.iter().map(|x| x.score).sum::<f64>();
    let mut current = total(&choice);
    let mut best = (current, choice.clone());
    let mut beta = opts.beta0;
    for _ in 0..opts.iterations {
        if n < 2 {
            break;
        }
        let k = rng.random_range(0..n - 1);
        let (a, b) = (order[k], order[k + 1]);
        // after the swap b precedes a: a gains b, b loses a
        let gained = match sc.best(a, &order[..k + 2].iter().copied().filter(|&v| v != a).collect::<Vec<_>>(), &[b])? {
            Some(c) if c.score > choice[a].score => c,
            _ => choice[a].clone(),
        };
        let lost = if choice[b].parents.contains(&a) {
            sc.best(b, &order[..k], &[])?.expect("empty parent set always available")
        } else {
            choice[b].clone()
        };
        let delta = (gained.score - choice[a].score) + (lost.score - choice[b].score);
        if rng.random::<f64>() < acceptance_probability(delta, beta) {
            order.swap(k, k + 1);
            choice[a] = gained;
            choice[b] = lost;
            current += delta;
            if current > best.0 + super::greedy::IMPROVE_EPS {
                current = total(&choice);
                best = (current, choice.clone());
            }
        }
        beta *= opts.cooling;
    }
    let mut dag = Dag::empty(NodeSet::new(&score.data().names())?);
    for (v, c) in best.1.iter().enumerate() {
        for &p in &c.parents {
            dag.add_arc(p, v)?;
        }
    }
    Ok(LearnOutcome { graph: LearnedGraph::Dag(dag), valid: true, calls: score.calls() - c0, elapsed: t0.elapsed() })
}
