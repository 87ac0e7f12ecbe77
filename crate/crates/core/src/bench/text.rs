//! The `bn-text` network format.
//!
//! ```text
//! network asia
//! type discrete
//! node smoke no yes
//! node lung no yes
//! parents lung smoke
//! cpt smoke 0.5 0.5
//! cpt lung 0.99 0.01 0.9 0.1
//! ```
//!
//! One directive per line; `#` starts a comment. CPT values run row-major over
//! parent configurations in declared parent order (last parent fastest), with
//! the child's levels fastest of all. Gaussian nodes use
//! `coef <name> <intercept> <beta...> <sigma>` with one beta per declared parent.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::BenchError;
use crate::graph::{Dag, GraphError, NodeSet};
use crate::model::{BayesNet, DiscreteLocal, GaussianLocal, Local, NetKind, Variable};

struct NodeDecl {
    line: usize,
    levels: Vec<String>,
    parents: Option<(usize, Vec<String>)>,
    values: Option<(usize, Vec<f64>)>,
}

fn parse_err(line: usize, message: impl Into<String>) -> BenchError {
    BenchError::Parse { line, message: message.into() }
}

pub fn parse_bn_text(text: &str) -> Result<BayesNet, BenchError> {
    let mut name: Option<String> = None;
    let mut kind: Option<NetKind> = None;
    let mut order: Vec<String> = Vec::new();
    let mut decls: BTreeMap<String, NodeDecl> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut words = content.split_whitespace();
        let Some(directive) = words.next() else { continue };
        let args: Vec<&str> = words.collect();
        match directive {
            "network" => {
                if name.is_some() {
                    return Err(parse_err(line, "second `network` line"));
                }
                let [n] = args[..] else { return Err(parse_err(line, "expected `network <name>`")) };
                name = Some(n.to_string());
            }
            "type" => {
                if kind.is_some() {
                    return Err(parse_err(line, "second `type` line"));
                }
                kind = Some(match args[..] {
                    ["discrete"] => NetKind::Discrete,
                    ["gaussian"] => NetKind::Gaussian,
                    _ => return Err(parse_err(line, "expected `type discrete` or `type gaussian`")),
                });
            }
            "node" => {
                let Some(k) = kind else { return Err(parse_err(line, "`node` before `type`")) };
                let Some((&node, levels)) = args.split_first() else {
                    return Err(parse_err(line, "expected a node name"));
                };
                match (k, levels.len()) {
                    (NetKind::Discrete, 0) => return Err(parse_err(line, format!("discrete node `{node}` has no levels"))),
                    (NetKind::Gaussian, l) if l > 0 => {
                        return Err(parse_err(line, format!("gaussian node `{node}` cannot have levels")))
                    }
                    _ => {}
                }
                let mut seen = levels.to_vec();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != levels.len() {
                    return Err(parse_err(line, format!("repeated level in node `{node}`")));
                }
                if decls.contains_key(node) {
                    return Err(parse_err(line, format!("node `{node}` declared twice")));
                }
                order.push(node.to_string());
                let levels = levels.iter().map(|s| s.to_string()).collect();
                decls.insert(node.to_string(), NodeDecl { line, levels, parents: None, values: None });
            }
            "parents" => {
                let Some((&node, parents)) = args.split_first() else {
                    return Err(parse_err(line, "expected a node name"));
                };
                let d = decls.get_mut(node).ok_or_else(|| parse_err(line, format!("unknown node `{node}`")))?;
                if d.parents.is_some() {
                    return Err(parse_err(line, format!("parents of `{node}` given twice")));
                }
                d.parents = Some((line, parents.iter().map(|s| s.to_string()).collect()));
            }
            "cpt" | "coef" => {
                let expected = if directive == "cpt" { NetKind::Discrete } else { NetKind::Gaussian };
                if kind != Some(expected) {
                    return Err(parse_err(line, format!("`{directive}` does not match the network type")));
                }
                let Some((&node, nums)) = args.split_first() else {
                    return Err(parse_err(line, "expected a node name"));
                };
                let d = decls.get_mut(node).ok_or_else(|| parse_err(line, format!("unknown node `{node}`")))?;
                if d.values.is_some() {
                    return Err(parse_err(line, format!("parameters of `{node}` given twice")));
                }
                let values = nums
                    .iter()
                    .map(|s| s.parse::<f64>().map_err(|_| parse_err(line, format!("`{s}` is not a number"))))
                    .collect::<Result<Vec<f64>, _>>()?;
                d.values = Some((line, values));
            }
            other => return Err(parse_err(line, format!("unknown directive `{other}`"))),
        }
    }

    let last = text.lines().count().max(1);
    let name = name.ok_or_else(|| parse_err(last, "missing `network` line"))?;
    let kind = kind.ok_or_else(|| parse_err(last, "missing `type` line"))?;
    let nodes = NodeSet::new(&order).map_err(|e| parse_err(1, e.to_string()))?;
    let mut dag = Dag::empty(nodes);
    let mut parent_ids: Vec<Vec<usize>> = Vec::with_capacity(order.len());
    for (i, node) in order.iter().enumerate() {
        let d = &decls[node];
        let mut ids = Vec::new();
        if let Some((line, parents)) = &d.parents {
            for p in parents {
                let j = dag.nodes().index_of(p).map_err(|_| parse_err(*line, format!("unknown parent `{p}`")))?;
                match dag.add_arc(j, i) {
                    Ok(()) => ids.push(j),
                    Err(GraphError::DuplicateEdge(..)) if dag.has_arc(i, j) => {
                        return Err(parse_err(*line, format!("arc {p} -> {node} closes a directed cycle")))
                    }
                    Err(GraphError::Cycle(a, b)) => {
                        return Err(parse_err(*line, format!("arc {a} -> {b} closes a directed cycle")))
                    }
                    Err(e) => return Err(parse_err(*line, e.to_string())),
                }
            }
        }
        parent_ids.push(ids);
    }

    let cards: Vec<usize> = order.iter().map(|n| decls[n].levels.len()).collect();
    let mut vars = Vec::with_capacity(order.len());
    let mut locals = Vec::with_capacity(order.len());
    for (i, node) in order.iter().enumerate() {
        let d = &decls[node];
        let (line, values) = d.values.as_ref().ok_or_else(|| parse_err(d.line, format!("no parameters for `{node}`")))?;
        let parents = parent_ids[i].clone();
        match kind {
            NetKind::Discrete => {
                let r = cards[i];
                let q: usize = parents.iter().map(|&p| cards[p]).product();
                if values.len() != q * r {
                    return Err(parse_err(*line, format!("{} values for `{node}`, expected {}", values.len(), q * r)));
                }
                let pc: Vec<usize> = parents.iter().map(|&p| cards[p]).collect();
                let mut probs = vec![Vec::new(); q];
                for (k, row) in values.chunks(r).enumerate() {
                    let s: f64 = row.iter().sum();
                    if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (s - 1.0).abs() > 1e-9 {
                        return Err(parse_err(*line, format!("row {k} of `{node}` is not a distribution (sums to {s})")));
                    }
                    probs[file_to_config(k, &pc)] = row.to_vec();
                }
                vars.push(Variable::categorical(node, &d.levels));
                locals.push(Local::Discrete(DiscreteLocal { parents, probs }));
            }
            NetKind::Gaussian => {
                if values.len() != parents.len() + 2 {
                    return Err(parse_err(
                        *line,
                        format!("`{node}` needs an intercept, {} coefficients and a sigma", parents.len()),
                    ));
                }
                let sd = values[values.len() - 1];
                if !(sd > 0.0) {
                    return Err(parse_err(*line, format!("sigma of `{node}` must be positive")));
                }
                vars.push(Variable::continuous(node));
                locals.push(Local::Gaussian(GaussianLocal {
                    parents,
                    intercept: values[0],
                    betas: values[1..values.len() - 1].to_vec(),
                    sd,
                }));
            }
        }
    }
    Ok(BayesNet::new(&name, dag, vars, locals)?)
}

/// Position in the row-major file order to the model's configuration index,
/// which runs first parent fastest.
fn file_to_config(mut k: usize, cards: &[usize]) -> usize {
    let mut digits = vec![0; cards.len()];
    for (d, &c) in digits.iter_mut().zip(cards).rev() {
        *d = k % c;
        k /= c;
    }
    let mut idx = 0;
    let mut stride = 1;
    for (d, c) in digits.iter().zip(cards) {
        idx += d * stride;
        stride *= c;
    }
    idx
}

pub fn to_bn_text(net: &BayesNet) -> Result<String, BenchError> {
    let bad = |s: &str| s.is_empty() || s.contains(char::is_whitespace) || s.contains('#');
    if bad(net.name()) {
        return Err(BenchError::Unwritable(format!("network name `{}`", net.name())));
    }
    let mut out = String::new();
    let kind = match net.kind() {
        NetKind::Discrete => "discrete",
        NetKind::Gaussian => "gaussian",
    };
    writeln!(out, "network {}\ntype {kind}", net.name()).expect("write to string");
    for v in net.vars() {
        out.push_str("node ");
        out.push_str(&v.name);
        for l in v.levels().unwrap_or(&[]) {
            if bad(l) {
                return Err(BenchError::Unwritable(format!("level `{l}` of `{}`", v.name)));
            }
            out.push(' ');
            out.push_str(l);
        }
        out.push('\n');
    }
    let names: Vec<&str> = net.vars().iter().map(|v| v.name.as_str()).collect();
    for (v, local) in net.vars().iter().zip(net.locals()) {
        if !local.parents().is_empty() {
            out.push_str("parents ");
            out.push_str(&v.name);
            for &p in local.parents() {
                out.push(' ');
                out.push_str(names[p]);
            }
            out.push('\n');
        }
    }
    let cards: Vec<usize> = net.vars().iter().map(|v| v.n_levels().unwrap_or(0)).collect();
    for (v, local) in net.vars().iter().zip(net.locals()) {
        match local {
            Local::Discrete(d) => {
                out.push_str("cpt ");
                out.push_str(&v.name);
                let pc: Vec<usize> = d.parents.iter().map(|&p| cards[p]).collect();
                for k in 0..d.probs.len() {
                    for p in &d.probs[file_to_config(k, &pc)] {
                        write!(out, " {p}").expect("write to string");
                    }
                }
            }
            Local::Gaussian(g) => {
                write!(out, "coef {} {}", v.name, g.intercept).expect("write to string");
                for b in &g.betas {
                    write!(out, " {b}").expect("write to string");
                }
                write!(out, " {}", g.sd).expect("write to string");
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn load_bn_text(path: impl AsRef<Path>) -> Result<BayesNet, BenchError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(path.display().to_string(), e.to_string()))?;
    parse_bn_text(&text)
}

pub fn save_bn_text(net: &BayesNet, path: impl AsRef<Path>) -> Result<(), BenchError> {
    let path = path.as_ref();
    std::fs::write(path, to_bn_text(net)?).map_err(|e| BenchError::Io(path.display().to_string(), e.to_string()))
}
