//! Line-based graph serialisation:
//!
//! ```text
//! nodes A B C
//! arc A B
//! edge B C
//! ```

use std::fmt::Write as _;

use super::{GraphError, NodeSet, Pdag};

impl Pdag {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("nodes");
        for name in self.nodes().names() {
            out.push(' ');
            out.push_str(name);
        }
        out.push('\n');
        for (t, h) in self.arcs() {
            let _ = writeln!(out, "arc {} {}", self.name(t), self.name(h));
        }
        for (a, b) in self.undirected_edges() {
            let _ = writeln!(out, "edge {} {}", self.name(a), self.name(b));
        }
        out
    }
}

/// Parses the text format into a [`Pdag`]; use [`Pdag::to_dag`] when only arcs
/// are expected.
pub fn parse_graph_text(text: &str) -> Result<Pdag, GraphError> {
    let mut graph: Option<Pdag> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let parse_err = |message: String| GraphError::Parse {
            line: line_no,
            message,
        };
        match keyword {
            "nodes" => {
                if graph.is_some() {
                    return Err(parse_err("repeated `nodes` line".into()));
                }
                let nodes = NodeSet::new(&rest).map_err(|e| parse_err(e.to_string()))?;
                graph = Some(Pdag::empty(nodes));
            }
            "arc" | "edge" => {
                let g = graph
                    .as_mut()
                    .ok_or_else(|| parse_err("edge before `nodes` line".into()))?;
                if rest.len() != 2 {
                    return Err(parse_err(format!("`{keyword}` takes two node names")));
                }
                let a = g.nodes().index_of(rest[0]).map_err(|e| parse_err(e.to_string()))?;
                let b = g.nodes().index_of(rest[1]).map_err(|e| parse_err(e.to_string()))?;
                let res = if keyword == "arc" {
                    g.add_arc(a, b)
                } else {
                    g.add_undirected(a, b)
                };
                res.map_err(|e| parse_err(e.to_string()))?;
            }
            other => return Err(parse_err(format!("unknown keyword `{other}`"))),
        }
    }
    graph.ok_or(GraphError::Parse {
        line: 0,
        message: "missing `nodes` line".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Dag;

    #[test]
    fn round_trip() {
        let text = "nodes A B C D\narc A B\narc C B\nedge C D\n";
        let g = parse_graph_text(text).unwrap();
        assert_eq!(g.n_directed(), 2);
        assert_eq!(g.n_undirected(), 1);
        assert_eq!(g.to_text(), text);
    }

    #[test]
    fn dag_text_parses_back_to_dag() {
        let g = Dag::from_named_arcs(&["x", "y"], &[("y", "x")]).unwrap();
        let back = parse_graph_text(&g.to_text()).unwrap().to_dag().unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_graph_text("nodes A B\n\narc A C\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 3, .. }));
        let err = parse_graph_text("arc A B\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }));
        assert!(parse_graph_text("nodes A B\nfoo A B\n").is_err());
    }
}
