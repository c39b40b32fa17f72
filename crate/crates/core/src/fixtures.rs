//! Small reference instances and seeded random ones.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, GraphBuilder, GraphInstance};

/// Three undirected edges: `a: s-t`, `b: s-x`, `c: x-t`; `p = 0.5`, `B = 3`.
pub fn triangle() -> GraphInstance {
    let mut gb = GraphBuilder::new(false);
    gb.edge("a", "s", "t").edge("b", "s", "x").edge("c", "x", "t");
    GraphInstance::from_labels(gb.build().expect("valid graph"), "s", "t", 0.5, 3)
        .expect("valid instance")
}

/// Two serial undirected edges `e1: s-x`, `e2: x-t`; `p = 0.5`, `B = 2`.
pub fn serial2() -> GraphInstance {
    let mut gb = GraphBuilder::new(false);
    gb.edge("e1", "s", "x").edge("e2", "x", "t");
    GraphInstance::from_labels(gb.build().expect("valid graph"), "s", "t", 0.5, 2)
        .expect("valid instance")
}

/// A single undirected edge `e: s-t`; `p = 0.5`, `B = 1`.
pub fn single_edge() -> GraphInstance {
    let mut gb = GraphBuilder::new(false);
    gb.edge("e", "s", "t");
    GraphInstance::from_labels(gb.build().expect("valid graph"), "s", "t", 0.5, 1)
        .expect("valid instance")
}

pub const PROBS: [f64; 3] = [0.3, 0.5, 0.7];

/// A graph on 3 to 6 nodes `v0..` with up to `max_edges` edges `e0..` and
/// no parallel edges, directed or not by coin flip, redrawn until the last
/// node (returned alongside) is reachable from `v0`.
pub fn random_graph(seed: u64, max_edges: usize) -> (Graph, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let (g, t) = draw(&mut rng, max_edges);
        let (s, tid) = (g.node_id("v0").expect("v0"), g.node_id(&t).expect("last node"));
        if g.reachable_from(s, |_| true)[tid.index()] {
            return (g, t);
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, max_edges: usize) -> (Graph, String) {
    let directed = rng.random_bool(0.5);
    let n = rng.random_range(3..=6usize);
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && (directed || u < v) {
                pairs.push((u, v));
            }
        }
    }
    let hi = max_edges.min(pairs.len());
    let m = rng.random_range(hi.min(4)..=hi);
    let mut gb = GraphBuilder::new(directed);
    for v in 0..n {
        gb.node(&format!("v{v}"));
    }
    for i in 0..m {
        let (u, v) = pairs.swap_remove(rng.random_range(0..pairs.len()));
        gb.edge(&format!("e{i}"), &format!("v{u}"), &format!("v{v}"));
    }
    (gb.build().expect("no parallel edges"), format!("v{}", n - 1))
}

/// [`random_graph`] from `v0` to its last node, with budget
/// `min(budget(m), m)`.
pub fn random_instance(seed: u64, max_edges: usize, p: f64, budget: impl Fn(usize) -> usize) -> GraphInstance {
    let (g, t) = random_graph(seed, max_edges);
    let b = budget(g.edge_count()).min(g.edge_count());
    GraphInstance::from_labels(g, "v0", &t, p, b).expect("valid instance")
}

/// 60 graphs with at most 10 edges, cycling through [`PROBS`] and the
/// budgets `2`, `3` and `m`.
pub fn oracle_suite() -> Vec<GraphInstance> {
    (0..60u64)
        .map(|i| {
            let p = PROBS[(i % 3) as usize];
            random_instance(1000 + i, 10, p, |m| match (i / 3) % 3 {
                0 => 2,
                1 => 3,
                _ => m,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_suite_shape() {
        let suite = oracle_suite();
        assert_eq!(suite.len(), 60);
        assert!(suite.iter().all(|g| g.edge_count() <= 10 && g.budget <= g.edge_count()));
        assert!(suite.iter().any(|g| g.graph.is_directed()) && suite.iter().any(|g| !g.graph.is_directed()));
        for p in PROBS {
            assert!(suite.iter().any(|g| g.p == p));
        }
        assert_eq!(random_graph(7, 10), random_graph(7, 10));
    }
}
