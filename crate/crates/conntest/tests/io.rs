use conntest::io::{parse_graph, serialize_graph};
use conntest_core::GraphInstance;
use proptest::prelude::*;

/// Edge lists without parallel edges over nodes `n0..n{nodes}`.
fn edge_lists() -> impl Strategy<Value = (bool, Vec<(usize, usize)>)> {
    (any::<bool>(), 2usize..7).prop_flat_map(|(directed, nodes)| {
        let pairs = proptest::collection::vec((0..nodes, 0..nodes), 1..12);
        (Just(directed), pairs).prop_map(|(directed, pairs)| {
            let mut seen = std::collections::HashSet::new();
            let kept = pairs
                .into_iter()
                .filter(|&(a, b)| a != b && seen.insert(if directed || a < b { (a, b) } else { (b, a) }))
                .collect();
            (directed, kept)
        })
    })
}

proptest! {
    #[test]
    fn load_serialize_load((directed, edges) in edge_lists(), shuffle in any::<u64>()) {
        prop_assume!(!edges.is_empty());
        let mut lines: Vec<String> = edges.iter().enumerate().map(|(i, (a, b))| format!("e{i} n{a} n{b}")).collect();
        // Line order must not matter.
        let k = (shuffle as usize) % lines.len();
        lines.rotate_left(k);
        let text = format!("{}\n# generated\n{}\n", if directed { "directed" } else { "undirected" }, lines.join("\n"));
        let g = parse_graph(&text).unwrap();
        let again = parse_graph(&serialize_graph(&g)).unwrap();
        prop_assert_eq!(&g, &again);
        prop_assert_eq!(serialize_graph(&g), serialize_graph(&again));
        let (s, t) = (g.edges()[0].tail, g.edges()[0].head);
        let (s, t) = (g.node_label(s).to_string(), g.node_label(t).to_string());
        let a = GraphInstance::from_labels(g, &s, &t, 0.5, 1).unwrap();
        let b = GraphInstance::from_labels(again, &s, &t, 0.5, 1).unwrap();
        prop_assert_eq!(a, b);
    }
}
