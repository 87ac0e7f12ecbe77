//! Constraint-based learners: PC-Stable and Grow-Shrink.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use super::{LearnError, LearnOutcome, LearnedGraph};
use crate::criteria::Criterion;
use crate::graph::{apply_orientation_rules, cpdag_from_dag, extend_to_dag, NodeSet, Pdag};

/// Separating set found for a non-adjacent pair, with the decision margin of
/// the test that accepted independence.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub set: Vec<usize>,
    pub margin: f64,
}

/// Undirected skeleton as neighbour sets plus separating sets keyed by
/// `(min, max)` node pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub adjacency: Vec<BTreeSet<usize>>,
    pub separations: BTreeMap<(usize, usize), Separation>,
}

impl Skeleton {
    fn complete(n: usize) -> Self {
        Skeleton {
            adjacency: (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect(),
            separations: BTreeMap::new(),
        }
    }

    fn remove(&mut self, a: usize, b: usize, sep: Separation) {
        self.adjacency[a].remove(&b);
        self.adjacency[b].remove(&a);
        self.separations.insert((a.min(b), a.max(b)), sep);
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }
}

/// Calls `f` on every `k`-subset of `items` in lexicographic order until it
/// returns `true`.
pub(crate) fn for_each_subset<E>(items: &[usize], k: usize, mut f: impl FnMut(&[usize]) -> Result<bool, E>) -> Result<bool, E> {
    if k > items.len() {
        return Ok(false);
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = vec![0; k];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = items[i];
        }
        if f(&buf)? {
            return Ok(true);
        }
        // advance to the next combination
        let mut p = k;
        loop {
            if p == 0 {
                return Ok(false);
            }
            p -= 1;
            if idx[p] != p + items.len() - k {
                break;
            }
        }
        idx[p] += 1;
        for q in p + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Level-wise edge removal with frozen neighbour snapshots per level.
pub fn pc_skeleton(test: &Criterion, max_sepset: Option<usize>) -> Result<Skeleton, LearnError> {
    let n = test.n_vars();
    let mut sk = Skeleton::complete(n);
    let mut level = 0;
    loop {
        if max_sepset.is_some_and(|m| level > m) {
            break;
        }
        let frozen = sk.adjacency.clone();
        if frozen.iter().all(|a| a.len() <= level) {
            break;
        }
        for x in 0..n {
            for &y in &frozen[x] {
                if !sk.adjacency[x].contains(&y) {
                    continue;
                }
                let pool: Vec<usize> = frozen[x].iter().copied().filter(|&v| v != y).collect();
                let mut found = None;
                for_each_subset(&pool, level, |s| {
                    let r = test.test(x, y, s)?;
                    if r.independent {
                        found = Some(Separation { set: s.to_vec(), margin: r.margin() });
                    }
                    Ok::<_, LearnError>(r.independent)
                })?;
                if let Some(sep) = found {
                    sk.remove(x, y, sep);
                }
            }
        }
        level += 1;
    }
    Ok(sk)
}

/// Markov blanket estimates by grow and shrink phases, symmetrised with the
/// AND rule.
pub fn gs_blankets(test: &Criterion) -> Result<Vec<BTreeSet<usize>>, LearnError> {
    let n = test.n_vars();
    let mut blankets = Vec::with_capacity(n);
    for x in 0..n {
        let mut mb: Vec<usize> = Vec::new();
        let mut changed = true;
        while changed {
            changed = false;
            for y in 0..n {
                if y == x || mb.contains(&y) {
                    continue;
                }
                if !test.test(x, y, &mb)?.independent {
                    mb.push(y);
                    mb.sort_unstable();
                    changed = true;
                }
            }
        }
        let mut k = 0;
        while k < mb.len() {
            let y = mb[k];
            let rest: Vec<usize> = mb.iter().copied().filter(|&v| v != y).collect();
            if test.test(x, y, &rest)?.independent {
                mb.remove(k);
            } else {
                k += 1;
            }
        }
        blankets.push(mb.into_iter().collect::<BTreeSet<usize>>());
    }
    let sym = (0..n)
        .map(|x| blankets[x].iter().copied().filter(|&y| blankets[y].contains(&x)).collect())
        .collect();
    Ok(sym)
}

/// Neighbours from blankets: `y ∈ MB(x)` is a neighbour unless some subset of
/// the smaller of `MB(x) \ {y}` and `MB(y) \ {x}` separates them. Pairs outside
/// each other's blanket are separated by the blanket itself.
pub fn gs_skeleton(test: &Criterion) -> Result<(Skeleton, Vec<BTreeSet<usize>>), LearnError> {
    let n = test.n_vars();
    let mb = gs_blankets(test)?;
    let mut sk = Skeleton {
        adjacency: mb.clone(),
        separations: BTreeMap::new(),
    };
    for x in 0..n {
        for y in x + 1..n {
            if !mb[x].contains(&y) {
                let set: Vec<usize> = mb[x].iter().copied().collect();
                sk.separations.insert((x, y), Separation { set, margin: f64::INFINITY });
                continue;
            }
            let bx: Vec<usize> = mb[x].iter().copied().filter(|&v| v != y).collect();
            let by: Vec<usize> = mb[y].iter().copied().filter(|&v| v != x).collect();
            let pool = if by.len() < bx.len() { by } else { bx };
            let mut found = None;
            for size in 0..=pool.len() {
                let hit = for_each_subset(&pool, size, |s| {
                    let r = test.test(x, y, s)?;
                    if r.independent {
                        found = Some(Separation { set: s.to_vec(), margin: r.margin() });
                    }
                    Ok::<_, LearnError>(r.independent)
                })?;
                if hit {
                    break;
                }
            }
            if let Some(sep) = found {
                sk.remove(x, y, sep);
            }
        }
    }
    Ok((sk, mb))
}

/// Orients a skeleton: colliders by decreasing margin, orientation-rule
/// closure, then consistent extension. Returns the graph and its validity.
pub fn orient_skeleton(nodes: &NodeSet, sk: &Skeleton) -> (Pdag, bool) {
    let n = nodes.len();
    let mut p = Pdag::empty(nodes.clone());
    for a in 0..n {
        for &b in &sk.adjacency[a] {
            if a < b {
                p.add_undirected(a, b).expect("fresh skeleton edge");
            }
        }
    }
    let mut demands = Vec::new();
    for k in 0..n {
        let nb: Vec<usize> = sk.adjacency[k].iter().copied().collect();
        for (ai, &i) in nb.iter().enumerate() {
            for &j in &nb[ai + 1..] {
                if sk.adjacency[i].contains(&j) {
                    continue;
                }
                let sep = sk.separations.get(&(i, j));
                if sep.is_some_and(|s| !s.set.contains(&k)) {
                    demands.push((sep.unwrap().margin, i, k, j));
                }
            }
        }
    }
    demands.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.2, a.1, a.3).cmp(&(b.2, b.1, b.3))));
    let mut valid = true;
    let mut owner: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(margin, i, k, j) in &demands {
        for tail in [i, j] {
            if p.has_undirected(tail, k) {
                p.orient(tail, k).expect("undirected edge");
                owner.insert((tail, k), margin);
            } else if p.has_arc(k, tail) {
                let held = owner.get(&(k, tail)).copied().unwrap_or(f64::INFINITY);
                if held <= margin {
                    valid = false;
                }
            }
        }
    }
    let closed = match apply_orientation_rules(&p) {
        Ok(c) => c,
        Err(_) => return (p, false),
    };
    match extend_to_dag(&closed) {
        Ok(dag) if valid => (cpdag_from_dag(&dag), true),
        _ => (closed, false),
    }
}

fn finish(test: &Criterion, sk: &Skeleton, start_calls: u64, t0: Instant) -> LearnOutcome {
    let nodes = NodeSet::new(&test.data().names()).expect("dataset names are valid");
    let (graph, valid) = orient_skeleton(&nodes, sk);
    LearnOutcome {
        graph: LearnedGraph::Pdag(graph),
        valid,
        calls: test.calls() - start_calls,
        elapsed: t0.elapsed(),
    }
}

pub fn pc_stable(test: &Criterion, max_sepset: Option<usize>) -> Result<LearnOutcome, LearnError> {
    let (t0, c0) = (Instant::now(), test.calls());
    let sk = pc_skeleton(test, max_sepset)?;
    Ok(finish(test, &sk, c0, t0))
}

pub fn grow_shrink(test: &Criterion) -> Result<LearnOutcome, LearnError> {
    let (t0, c0) = (Instant::now(), test.calls());
    let (sk, _) = gs_skeleton(test)?;
    Ok(finish(test, &sk, c0, t0))
}
