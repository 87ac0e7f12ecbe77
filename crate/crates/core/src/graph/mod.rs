//! Directed and partially directed graphs over named variables.
//!
//! [`Dag`] enforces acyclicity on every mutation. [`Pdag`] mixes directed arcs
//! and undirected edges and is used both for CPDAGs and for the intermediate
//! skeletons produced by constraint-based learners.

mod equivalence;
mod metrics;
mod text;

pub use equivalence::{
    apply_orientation_rules, cpdag_from_dag, extend_to_dag, unshielded_colliders, InvalidCpdag,
    OrientationConflict,
};
pub use metrics::{random_dag, shd, uniform_random_dag, unshielded_vstructure_ratio, ShdReport};
pub use text::parse_graph_text;

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid node name `{0}`")]
    InvalidName(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("nodes `{0}` and `{1}` are already connected")]
    DuplicateEdge(String, String),
    #[error("no edge between `{0}` and `{1}`")]
    MissingEdge(String, String),
    #[error("arc {0} -> {1} would close a directed cycle")]
    Cycle(String, String),
    #[error("graphs are defined over different node sets")]
    NodeMismatch,
    #[error("reference arc count must be positive")]
    ZeroReferenceArcs,
    #[error("graph has no pair of arcs sharing a node")]
    NoAdjacentArcPairs,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("graph has undirected edges and is not a DAG")]
    NotADag,
}

/// Ordered node names with an index lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl NodeSet {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, GraphError> {
        let mut index = HashMap::with_capacity(names.len());
        let mut owned = Vec::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            let name = name.as_ref();
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(GraphError::InvalidName(name.to_string()));
            }
            if index.insert(name.to_string(), i).is_some() {
                return Err(GraphError::DuplicateNode(name.to_string()));
            }
            owned.push(name.to_string());
        }
        Ok(NodeSet { names: owned, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GraphError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }
}

/// A directed acyclic graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    nodes: NodeSet,
    parents: Vec<BTreeSet<usize>>,
    children: Vec<BTreeSet<usize>>,
}

impl Dag {
    /// Empty graph over the given nodes.
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, GraphError> {
        let nodes = NodeSet::new(names)?;
        Ok(Self::empty(nodes))
    }

    pub fn empty(nodes: NodeSet) -> Self {
        let n = nodes.len();
        Dag {
            nodes,
            parents: vec![BTreeSet::new(); n],
            children: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_arcs<S: AsRef<str>>(
        names: &[S],
        arcs: &[(usize, usize)],
    ) -> Result<Self, GraphError> {
        let mut dag = Self::new(names)?;
        for &(t, h) in arcs {
            dag.add_arc(t, h)?;
        }
        Ok(dag)
    }

    /// Builds a graph from `tail -> head` name pairs.
    pub fn from_named_arcs<S: AsRef<str>>(
        names: &[S],
        arcs: &[(&str, &str)],
    ) -> Result<Self, GraphError> {
        let mut dag = Self::new(names)?;
        for &(t, h) in arcs {
            let (t, h) = (dag.nodes.index_of(t)?, dag.nodes.index_of(h)?);
            dag.add_arc(t, h)?;
        }
        Ok(dag)
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_arcs(&self) -> usize {
        self.parents.iter().map(BTreeSet::len).sum()
    }

    pub fn name(&self, i: usize) -> &str {
        self.nodes.name(i)
    }

    pub fn parents(&self, i: usize) -> &BTreeSet<usize> {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &BTreeSet<usize> {
        &self.children[i]
    }

    pub fn has_arc(&self, tail: usize, head: usize) -> bool {
        self.parents[head].contains(&tail)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_arc(a, b) || self.has_arc(b, a)
    }

    /// Arcs as `(tail, head)` pairs, sorted.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_arcs());
        for (t, ch) in self.children.iter().enumerate() {
            out.extend(ch.iter().map(|&h| (t, h)));
        }
        out
    }

    /// True when a directed path leads from `from` to `to` (a node reaches itself).
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.n_nodes()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(v) = stack.pop() {
            for &c in &self.children[v] {
                if c == to {
                    return true;
                }
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    pub fn add_arc(&mut self, tail: usize, head: usize) -> Result<(), GraphError> {
        if tail == head {
            return Err(GraphError::SelfLoop(self.name(tail).to_string()));
        }
        if self.adjacent(tail, head) {
            return Err(GraphError::DuplicateEdge(
                self.name(tail).to_string(),
                self.name(head).to_string(),
            ));
        }
        if self.reaches(head, tail) {
            return Err(GraphError::Cycle(
                self.name(tail).to_string(),
                self.name(head).to_string(),
            ));
        }
        self.parents[head].insert(tail);
        self.children[tail].insert(head);
        Ok(())
    }

    pub fn remove_arc(&mut self, tail: usize, head: usize) -> Result<(), GraphError> {
        if !self.parents[head].remove(&tail) {
            return Err(GraphError::MissingEdge(
                self.name(tail).to_string(),
                self.name(head).to_string(),
            ));
        }
        self.children[tail].remove(&head);
        Ok(())
    }

    /// Reverses `tail -> head`; the graph is left unchanged on failure.
    pub fn reverse_arc(&mut self, tail: usize, head: usize) -> Result<(), GraphError> {
        self.remove_arc(tail, head)?;
        if let Err(e) = self.add_arc(head, tail) {
            self.parents[head].insert(tail);
            self.children[tail].insert(head);
            return Err(e);
        }
        Ok(())
    }

    /// Kahn ordering with ties broken by node index.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.n_nodes();
        let mut indeg: Vec<usize> = self.parents.iter().map(BTreeSet::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }

    /// The same graph viewed as a PDAG with only directed arcs.
    pub fn to_pdag(&self) -> Pdag {
        let mut p = Pdag::empty(self.nodes.clone());
        for (t, h) in self.arcs() {
            p.children[t].insert(h);
            p.parents[h].insert(t);
        }
        p
    }

    pub fn to_text(&self) -> String {
        self.to_pdag().to_text()
    }
}

/// State of the connection between an unordered pair `(a, b)` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairState {
    Absent,
    /// `a -> b`
    Forward,
    /// `b -> a`
    Backward,
    Undirected,
}

/// A partially directed graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pdag {
    nodes: NodeSet,
    parents: Vec<BTreeSet<usize>>,
    children: Vec<BTreeSet<usize>>,
    undirected: Vec<BTreeSet<usize>>,
}

impl Pdag {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, GraphError> {
        Ok(Self::empty(NodeSet::new(names)?))
    }

    pub fn empty(nodes: NodeSet) -> Self {
        let n = nodes.len();
        Pdag {
            nodes,
            parents: vec![BTreeSet::new(); n],
            children: vec![BTreeSet::new(); n],
            undirected: vec![BTreeSet::new(); n],
        }
    }

    /// Complete undirected graph over the nodes.
    pub fn complete(nodes: NodeSet) -> Self {
        let mut p = Self::empty(nodes);
        let n = p.n_nodes();
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    p.undirected[a].insert(b);
                }
            }
        }
        p
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn name(&self, i: usize) -> &str {
        self.nodes.name(i)
    }

    pub fn n_directed(&self) -> usize {
        self.parents.iter().map(BTreeSet::len).sum()
    }

    pub fn n_undirected(&self) -> usize {
        self.undirected.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn n_edges(&self) -> usize {
        self.n_directed() + self.n_undirected()
    }

    pub fn parents(&self, i: usize) -> &BTreeSet<usize> {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &BTreeSet<usize> {
        &self.children[i]
    }

    pub fn undirected_neighbours(&self, i: usize) -> &BTreeSet<usize> {
        &self.undirected[i]
    }

    /// Every node joined to `i` by an edge of any kind.
    pub fn neighbours(&self, i: usize) -> BTreeSet<usize> {
        let mut out = self.undirected[i].clone();
        out.extend(self.parents[i].iter().copied());
        out.extend(self.children[i].iter().copied());
        out
    }

    pub fn has_arc(&self, tail: usize, head: usize) -> bool {
        self.children[tail].contains(&head)
    }

    pub fn has_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected[a].contains(&b)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_undirected(a, b) || self.has_arc(a, b) || self.has_arc(b, a)
    }

    pub fn pair_state(&self, a: usize, b: usize) -> PairState {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if self.has_undirected(lo, hi) {
            PairState::Undirected
        } else if self.has_arc(lo, hi) {
            PairState::Forward
        } else if self.has_arc(hi, lo) {
            PairState::Backward
        } else {
            PairState::Absent
        }
    }

    fn check_new_edge(&self, a: usize, b: usize) -> Result<(), GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(self.name(a).to_string()));
        }
        if self.adjacent(a, b) {
            return Err(GraphError::DuplicateEdge(
                self.name(a).to_string(),
                self.name(b).to_string(),
            ));
        }
        Ok(())
    }

    pub fn add_arc(&mut self, tail: usize, head: usize) -> Result<(), GraphError> {
        self.check_new_edge(tail, head)?;
        self.children[tail].insert(head);
        self.parents[head].insert(tail);
        Ok(())
    }

    pub fn add_undirected(&mut self, a: usize, b: usize) -> Result<(), GraphError> {
        self.check_new_edge(a, b)?;
        self.undirected[a].insert(b);
        self.undirected[b].insert(a);
        Ok(())
    }

    /// Removes whatever edge joins `a` and `b`.
    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.undirected[a].remove(&b);
        self.undirected[b].remove(&a);
        self.children[a].remove(&b);
        self.parents[b].remove(&a);
        self.children[b].remove(&a);
        self.parents[a].remove(&b);
    }

    /// Turns the undirected edge `tail - head` into `tail -> head`.
    pub fn orient(&mut self, tail: usize, head: usize) -> Result<(), GraphError> {
        if !self.has_undirected(tail, head) {
            return Err(GraphError::MissingEdge(
                self.name(tail).to_string(),
                self.name(head).to_string(),
            ));
        }
        self.undirected[tail].remove(&head);
        self.undirected[head].remove(&tail);
        self.children[tail].insert(head);
        self.parents[head].insert(tail);
        Ok(())
    }

    /// Directed arcs as sorted `(tail, head)` pairs.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (t, ch) in self.children.iter().enumerate() {
            out.extend(ch.iter().map(|&h| (t, h)));
        }
        out
    }

    /// Undirected edges as sorted `(a, b)` pairs with `a < b`.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, nb) in self.undirected.iter().enumerate() {
            out.extend(nb.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    /// Skeleton as sorted unordered pairs.
    pub fn skeleton(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .arcs()
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .chain(self.undirected_edges())
            .collect();
        out.sort_unstable();
        out
    }

    /// True when a path of directed arcs leads from `from` to `to`.
    pub fn directed_path(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.n_nodes()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(v) = stack.pop() {
            for &c in &self.children[v] {
                if c == to {
                    return true;
                }
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    pub fn has_directed_cycle(&self) -> bool {
        let n = self.n_nodes();
        let mut indeg: Vec<usize> = self.parents.iter().map(BTreeSet::len).collect();
        let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut visited = 0;
        while let Some(v) = stack.pop() {
            visited += 1;
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    stack.push(c);
                }
            }
        }
        visited != n
    }

    /// Converts to a [`Dag`] when there are no undirected edges.
    pub fn to_dag(&self) -> Result<Dag, GraphError> {
        if self.n_undirected() > 0 {
            return Err(GraphError::NotADag);
        }
        let mut dag = Dag::empty(self.nodes.clone());
        for (t, h) in self.arcs() {
            dag.add_arc(t, h)?;
        }
        Ok(dag)
    }
}
