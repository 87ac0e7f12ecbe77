//! Structural Hamming distance and v-structure statistics.

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{unshielded_colliders, Dag, GraphError, Pdag};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShdReport {
    pub raw: usize,
    /// `raw` divided by the reference arc count.
    pub scaled: f64,
}

/// One unit per unordered pair whose state differs (missing, extra, reversed,
/// or directed vs undirected).
pub fn shd(learned: &Pdag, reference: &Pdag, reference_arcs: usize) -> Result<ShdReport, GraphError> {
    if learned.nodes().names() != reference.nodes().names() {
        return Err(GraphError::NodeMismatch);
    }
    if reference_arcs == 0 {
        return Err(GraphError::ZeroReferenceArcs);
    }
    let n = learned.n_nodes();
    let mut raw = 0;
    for a in 0..n {
        for b in a + 1..n {
            if learned.pair_state(a, b) != reference.pair_state(a, b) {
                raw += 1;
            }
        }
    }
    Ok(ShdReport {
        raw,
        scaled: raw as f64 / reference_arcs as f64,
    })
}

/// Unshielded v-structures divided by the number of pairs of arcs sharing a node.
pub fn unshielded_vstructure_ratio(g: &Dag) -> Result<f64, GraphError> {
    let pairs: usize = (0..g.n_nodes())
        .map(|v| {
            let d = g.parents(v).len() + g.children(v).len();
            d * d.saturating_sub(1) / 2
        })
        .sum();
    if pairs == 0 {
        return Err(GraphError::NoAdjacentArcPairs);
    }
    let colliders = unshielded_colliders(&g.to_pdag()).len();
    Ok(colliders as f64 / pairs as f64)
}

/// Uniformly random DAG with `n_arcs` arcs consistent with a random node ordering.
pub fn random_dag<R: Rng + ?Sized>(n_nodes: usize, n_arcs: usize, rng: &mut R) -> Dag {
    let names: Vec<String> = (1..=n_nodes).map(|i| format!("X{i}")).collect();
    let mut order: Vec<usize> = (0..n_nodes).collect();
    order.shuffle(rng);
    let total = n_nodes * n_nodes.saturating_sub(1) / 2;
    let n_arcs = n_arcs.min(total);
    let mut dag = Dag::new(&names).expect("generated names are unique");
    for code in index::sample(rng, total, n_arcs) {
        let (lo, hi) = unrank_pair(code, n_nodes);
        dag.add_arc(order[lo], order[hi])
            .expect("arcs follow a fixed ordering");
    }
    dag
}

/// Approximately uniform draw from all DAGs with `n_nodes` nodes and
/// `n_arcs` arcs. Starts from [`random_dag`] and runs `steps` moves of a
/// Markov chain that either reverses a random arc or moves it to a random
/// empty pair; both proposals are symmetric and cycles are rejected, so the
/// chain is stationary on the uniform distribution. Random node orderings
/// alone over-represent colliders.
pub fn uniform_random_dag<R: Rng + ?Sized>(n_nodes: usize, n_arcs: usize, steps: usize, rng: &mut R) -> Dag {
    let mut dag = random_dag(n_nodes, n_arcs, rng);
    let mut arcs = dag.arcs();
    let total = n_nodes * n_nodes.saturating_sub(1) / 2;
    if arcs.is_empty() {
        return dag;
    }
    for _ in 0..steps {
        let k = rng.random_range(0..arcs.len());
        let (t, h) = arcs[k];
        if rng.random_bool(0.5) {
            if dag.reverse_arc(t, h).is_ok() {
                arcs[k] = (h, t);
            }
            continue;
        }
        if arcs.len() == total {
            continue;
        }
        let (a, b) = loop {
            let (a, b) = unrank_pair(rng.random_range(0..total), n_nodes);
            if !dag.adjacent(a, b) {
                break if rng.random_bool(0.5) { (a, b) } else { (b, a) };
            }
        };
        dag.remove_arc(t, h).expect("arc is present");
        if dag.add_arc(a, b).is_ok() {
            arcs[k] = (a, b);
        } else {
            dag.add_arc(t, h).expect("restoring a removed arc keeps the graph acyclic");
        }
    }
    dag
}

/// Maps `0..n(n-1)/2` onto pairs `(i, j)` with `i < j`.
fn unrank_pair(mut code: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if code < row {
            return (i, i + 1 + code);
        }
        code -= row;
        i += 1;
    }
}
