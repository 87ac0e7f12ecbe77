//! Equivalence classes: CPDAG construction, orientation rules and consistent
//! extension back to a DAG.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{Dag, Pdag};

/// Both orientations of an undirected edge were forced by the rules, or the
/// rules closed a directed cycle.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("orientation rules conflict on edge {0} - {1}")]
pub struct OrientationConflict(pub String, pub String);

/// The PDAG has no consistent extension to a DAG with the same skeleton and
/// unshielded colliders.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("PDAG cannot be extended to a DAG ({} edges left unoriented)", unoriented.len())]
pub struct InvalidCpdag {
    /// Edges that were still unoriented when the extension got stuck.
    pub unoriented: Vec<(String, String)>,
}

/// Unshielded colliders `i -> k <- j` (with `i < j`) among the directed arcs.
pub fn unshielded_colliders(p: &Pdag) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for k in 0..p.n_nodes() {
        let pa: Vec<usize> = p.parents(k).iter().copied().collect();
        for (x, &i) in pa.iter().enumerate() {
            for &j in &pa[x + 1..] {
                if !p.adjacent(i, j) {
                    out.push((i, k, j));
                }
            }
        }
    }
    out
}

/// Whether the undirected edge `a - b` must become `a -> b`.
fn forced(p: &Pdag, a: usize, b: usize) -> bool {
    // (a) a directed path a ~> b already exists
    if p.directed_path(a, b) {
        return true;
    }
    // (b) k -> a - b with k, b non-adjacent
    if p.parents(a).iter().any(|&k| !p.adjacent(k, b)) {
        return true;
    }
    // two non-adjacent k, l with a - k -> b and a - l -> b
    let mids: Vec<usize> = p
        .undirected_neighbours(a)
        .iter()
        .copied()
        .filter(|&k| k != b && p.has_arc(k, b))
        .collect();
    for (x, &k) in mids.iter().enumerate() {
        for &l in &mids[x + 1..] {
            if !p.adjacent(k, l) {
                return true;
            }
        }
    }
    false
}

/// Orients undirected edges until no rule applies. Skeleton edges are never
/// added or removed.
pub fn apply_orientation_rules(p: &Pdag) -> Result<Pdag, OrientationConflict> {
    let mut out = p.clone();
    let conflict = |g: &Pdag, a: usize, b: usize| {
        OrientationConflict(g.name(a).to_string(), g.name(b).to_string())
    };
    if let Some((a, b)) = out.arcs().first().copied() {
        if out.has_directed_cycle() {
            return Err(conflict(&out, a, b));
        }
    }
    loop {
        let mut changed = false;
        for (a, b) in out.undirected_edges() {
            let fwd = forced(&out, a, b);
            let bwd = forced(&out, b, a);
            match (fwd, bwd) {
                (true, true) => return Err(conflict(&out, a, b)),
                (true, false) => {
                    out.orient(a, b).expect("edge is undirected");
                    changed = true;
                }
                (false, true) => {
                    out.orient(b, a).expect("edge is undirected");
                    changed = true;
                }
                (false, false) => {}
            }
        }
        if !changed {
            break;
        }
    }
    if out.has_directed_cycle() {
        let (a, b) = out.arcs()[0];
        return Err(conflict(&out, a, b));
    }
    Ok(out)
}

/// The CPDAG of the equivalence class of `g`.
pub fn cpdag_from_dag(g: &Dag) -> Pdag {
    let mut p = Pdag::empty(g.nodes().clone());
    for (t, h) in g.arcs() {
        p.add_undirected(t, h).expect("dag has one edge per pair");
    }
    for k in 0..g.n_nodes() {
        let pa: Vec<usize> = g.parents(k).iter().copied().collect();
        for (x, &i) in pa.iter().enumerate() {
            for &j in &pa[x + 1..] {
                if !g.adjacent(i, j) {
                    if p.has_undirected(i, k) {
                        p.orient(i, k).expect("undirected");
                    }
                    if p.has_undirected(j, k) {
                        p.orient(j, k).expect("undirected");
                    }
                }
            }
        }
    }
    apply_orientation_rules(&p).expect("orientation rules never conflict on a DAG pattern")
}

/// Consistent extension by repeated sink elimination: a node with no outgoing
/// arcs whose undirected neighbours are adjacent to all its other neighbours is
/// made a sink and removed. Among eligible nodes the one with the greatest name
/// goes first, so free edges point from the smaller name to the larger.
pub fn extend_to_dag(p: &Pdag) -> Result<Dag, InvalidCpdag> {
    let n = p.n_nodes();
    let mut alive = vec![true; n];
    let mut arcs: Vec<(usize, usize)> = p.arcs();
    let mut remaining = n;

    let stuck = |alive: &[bool]| InvalidCpdag {
        unoriented: p
            .undirected_edges()
            .into_iter()
            .filter(|&(a, b)| alive[a] && alive[b])
            .map(|(a, b)| (p.name(a).to_string(), p.name(b).to_string()))
            .collect(),
    };

    while remaining > 0 {
        let mut pick: Option<usize> = None;
        for x in 0..n {
            if !alive[x] || p.children(x).iter().any(|&c| alive[c]) {
                continue;
            }
            let nb: Vec<usize> = p.neighbours(x).into_iter().filter(|&v| alive[v]).collect();
            let ok = p
                .undirected_neighbours(x)
                .iter()
                .filter(|&&y| alive[y])
                .all(|&y| nb.iter().all(|&z| z == y || p.adjacent(y, z)));
            if ok && pick.is_none_or(|cur| p.name(x) > p.name(cur)) {
                pick = Some(x);
            }
        }
        let Some(x) = pick else {
            return Err(stuck(&alive));
        };
        for &y in p.undirected_neighbours(x) {
            if alive[y] {
                arcs.push((y, x));
            }
        }
        alive[x] = false;
        remaining -= 1;
    }

    let mut dag = Dag::empty(p.nodes().clone());
    for (t, h) in arcs {
        if dag.add_arc(t, h).is_err() {
            return Err(stuck(&vec![true; n]));
        }
    }
    let want: BTreeSet<_> = unshielded_colliders(p).into_iter().collect();
    let got: BTreeSet<_> = unshielded_colliders(&dag.to_pdag()).into_iter().collect();
    if want != got {
        return Err(stuck(&vec![true; n]));
    }
    Ok(dag)
}
