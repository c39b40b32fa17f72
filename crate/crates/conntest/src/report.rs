//! JSON fragments shared by the CLI documents and the service.

use conntest_core::{CertKind, Certificate, Graph, GraphInstance};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// A certificate with edges named by label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub kind: CertKind,
    pub edges: Vec<String>,
}

impl CertificateDoc {
    pub fn new(g: &Graph, c: &Certificate) -> Self {
        Self {
            kind: c.kind,
            edges: c.edges.iter().map(|&e| g.edge_label(e).to_string()).collect(),
        }
    }
}

/// `{"kind": "path" | "cut", "edges": [labels]}`
pub fn certificate_json(g: &Graph, c: &Certificate) -> Value {
    serde_json::to_value(CertificateDoc::new(g, c)).expect("certificates serialize")
}

pub fn instance_json(g: &GraphInstance) -> Value {
    json!({
        "directed": g.graph.is_directed(),
        "nodes": g.graph.node_count(),
        "edges": g.edge_count(),
        "source": g.graph.node_label(g.source),
        "target": g.graph.node_label(g.sink),
        "budget": g.budget,
        "prob": g.p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use conntest_core::fixtures::triangle;

    #[test]
    fn triangle_fragments() {
        let g = triangle();
        let id = |n| g.graph.edge_id(n).unwrap();
        let cut = Certificate::cut(vec![id("b"), id("a")]);
        assert_eq!(certificate_json(&g.graph, &cut), json!({ "kind": "cut", "edges": ["a", "b"] }));
        let doc = instance_json(&g);
        assert_eq!(doc["budget"], 3);
        assert_eq!(doc["edges"], 3);
    }
}
