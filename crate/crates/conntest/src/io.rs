//! Graph files and policy-tree files.
//!
//! A graph file starts with `directed` or `undirected`; every other line is
//! `<edge id> <tail> <head>`. Blank lines and `#` comments are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use conntest_core::graph::natural_cmp;
use conntest_core::{Graph, GraphBuilder, GraphError, GraphInstance, PolicyTree, TreeError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

fn parse_error(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses graph-file text. Node ids follow the first appearance of each
/// node when edges are listed in id order, so the result does not depend on
/// the order of the edge lines.
pub fn parse_graph(text: &str) -> Result<Graph, IoError> {
    let mut directed = None;
    let mut edges: Vec<(&str, &str, &str, usize)> = Vec::new();
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut ends: HashMap<(&str, &str), (&str, usize)> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some(directed) = directed else {
            directed = Some(match content {
                "directed" => true,
                "undirected" => false,
                other => return Err(parse_error(line, format!("expected `directed` or `undirected`, found `{other}`"))),
            });
            continue;
        };
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [id, tail, head] = fields[..] else {
            return Err(parse_error(line, format!("expected `<edge id> <tail> <head>`, found {} fields", fields.len())));
        };
        if let Some(first) = ids.insert(id, line) {
            return Err(parse_error(line, format!("duplicate edge id `{id}` (first on line {first})")));
        }
        let key = if directed || tail <= head { (tail, head) } else { (head, tail) };
        if let Some((other, first)) = ends.insert(key, (id, line)) {
            return Err(parse_error(
                line,
                format!("edge `{id}` is parallel to `{other}` (line {first})"),
            ));
        }
        edges.push((id, tail, head, line));
    }
    let Some(directed) = directed else {
        return Err(parse_error(1, "missing `directed` or `undirected` header"));
    };
    edges.sort_by(|a, b| natural_cmp(a.0, b.0));
    let mut gb = GraphBuilder::new(directed);
    for (id, tail, head, _) in &edges {
        gb.edge(id, tail, head);
    }
    Ok(gb.build()?)
}

/// Writes `g` in graph-file format, edges in id order.
pub fn serialize_graph(g: &Graph) -> String {
    let mut out = String::from(if g.is_directed() { "directed\n" } else { "undirected\n" });
    for e in g.edges() {
        writeln!(out, "{} {} {}", e.label, g.node_label(e.tail), g.node_label(e.head)).unwrap();
    }
    out
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_graph(path: &Path) -> Result<Graph, IoError> {
    parse_graph(&read(path)?)
}

/// Loads a graph file and binds endpoints (node labels), `p` and `B`.
pub fn load_graph(path: &Path, source: &str, sink: &str, p: f64, budget: usize) -> Result<GraphInstance, IoError> {
    Ok(GraphInstance::from_labels(read_graph(path)?, source, sink, p, budget)?)
}

/// Reads a tree in the `Q:<edge>(left,right)` / `DONE` / `LIMIT` text form.
pub fn read_tree(path: &Path, g: &Arc<Graph>, p: f64) -> Result<PolicyTree, IoError> {
    Ok(PolicyTree::from_text(&read(path)?, g, p)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "undirected\n# three edges\na s t\nb s x\nc x t\n";

    #[test]
    fn triangle_file() {
        let g = parse_graph(TRIANGLE).unwrap();
        assert!(!g.is_directed());
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.node_count(), 3);
        assert_eq!(serialize_graph(&g), "undirected\na s t\nb s x\nc x t\n");
    }

    #[test]
    fn duplicate_id_names_the_id() {
        let err = parse_graph("directed\na s t\na t u\n").unwrap_err();
        assert_eq!(err.to_string(), "line 3: duplicate edge id `a` (first on line 2)");
    }

    #[test]
    fn parallel_edges() {
        let err = parse_graph("undirected\na s t\nb t s # reversed\n").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 3, .. }), "{err}");
        // Opposite arcs are not parallel in a directed graph.
        assert_eq!(parse_graph("directed\na s t\nb t s\n").unwrap().edge_count(), 2);
    }

    #[test]
    fn malformed_lines() {
        for (text, line) in [("graph\n", 1), ("directed\na s\n", 2), ("", 1), ("# c\n\nundirected\n\na b c d\n", 5)] {
            match parse_graph(text) {
                Err(IoError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn line_order_does_not_matter() {
        let a = parse_graph("undirected\nc x t\na s t\nb s x\n").unwrap();
        assert_eq!(a, parse_graph(TRIANGLE).unwrap());
    }

    #[test]
    fn directed_reverse_only() {
        let g = parse_graph("directed\na t s\n").unwrap();
        let inst = GraphInstance::from_labels(g, "s", "t", 0.5, 1).unwrap();
        let b = inst.fresh_belief();
        assert!(conntest_core::graph::has_off_cut(&inst, &b));
    }
}
