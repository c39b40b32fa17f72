use conntest_core::exact::{solve, ExactConfig, ExactSolver, SolveStatus};
use conntest_core::fixtures::triangle;
use conntest_core::ip::{build_ip, solve_optimal_tree, FlatBackend, StructuredBackend};
use conntest_core::{Certificate, GraphInstance, PolicyTree, TreeStructure};

fn cert(g: &GraphInstance, path: bool, names: &[&str]) -> Certificate {
    let edges = names.iter().map(|n| g.graph.edge_id(n).unwrap()).collect();
    if path {
        Certificate::path(edges)
    } else {
        Certificate::cut(edges)
    }
}

fn shown(g: &GraphInstance, cs: &[Certificate]) -> Vec<String> {
    cs.iter().map(|c| c.display(&g.graph).to_string()).collect()
}

#[test]
fn triangle_optimal_tree() {
    let g = triangle();
    let r = solve(&g, &ExactConfig::default(), &StructuredBackend, &conntest_core::NoClock, &mut |_| {}).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert_eq!(r.cost, 1.75);
    assert_eq!(r.tree.to_text(&g.graph), "Q:a(DONE,Q:b(Q:c(DONE,DONE),DONE))");
}

#[test]
fn growth_walkthrough() {
    let g = triangle();
    let config = ExactConfig {
        initial_layers: 2,
        initial_paths: Some(vec![cert(&g, true, &["a"])]),
        initial_cuts: Some(vec![cert(&g, false, &["a", "b"])]),
        ..ExactConfig::default()
    };
    let mut solver = ExactSolver::new(&g, &g.fresh_belief(), &config, &StructuredBackend).unwrap();
    let panels = [
        ("Q:a(DONE,DONE)", 1.0, (1, 0), 0),
        ("Q:a(DONE,Q:b)", 1.5, (0, 0), 1),
        ("Q:a(DONE,Q:b(DONE,DONE))", 1.5, (0, 1), 0),
        ("Q:a(DONE,Q:b(Q:c,DONE))", 1.75, (0, 0), 1),
        ("Q:a(DONE,Q:b(Q:c(DONE,DONE),DONE))", 1.75, (0, 0), 0),
    ];
    for (i, (text, cost, added, expanded)) in panels.into_iter().enumerate() {
        let report = solver.step(&|| false).unwrap();
        let (tree, c) = solver.best().unwrap();
        assert_eq!(tree.pruned().to_text(&g.graph), text, "panel {}", i + 1);
        assert_eq!((*c, report.cost), (cost, cost), "panel {}", i + 1);
        assert_eq!((report.added_paths, report.added_cuts), added, "panel {}", i + 1);
        assert_eq!(report.expanded, expanded, "panel {}", i + 1);
    }
    assert!(solver.is_converged());
    assert_eq!(shown(&g, solver.paths()), ["(a)", "(b,c)"]);
    assert_eq!(shown(&g, solver.cuts()), ["{a,b}", "{a,c}"]);
}

#[test]
fn done_claims_on_triangle() {
    let g = triangle();
    let paths = vec![cert(&g, true, &["a"]), cert(&g, true, &["b", "c"])];
    let cuts = vec![cert(&g, false, &["a", "b"]), cert(&g, false, &["a", "c"])];
    let correct = PolicyTree::from_text("Q:a(DONE,Q:b(Q:c(DONE,DONE),DONE))", &g.graph, g.p).unwrap();
    assert!(correct.validate_done_claims(&paths, &cuts).is_empty());
    let wrong = PolicyTree::from_text("Q:a(DONE,Q:b(DONE,DONE))", &g.graph, g.p).unwrap();
    assert_eq!(wrong.validate_done_claims(&paths, &cuts).len(), 1);
}

#[test]
fn first_growth_program_matches_golden_lp() {
    let g = triangle();
    let ip = build_ip(
        &TreeStructure::complete(2),
        &[cert(&g, true, &["a"])],
        &[cert(&g, false, &["a", "b"])],
        &g.graph,
        g.p,
        g.budget,
    );
    assert_eq!(ip.to_lp(), include_str!("data/growth_step1.lp"));
    for backend in [&StructuredBackend as &dyn conntest_core::ip::SolverBackend, &FlatBackend::default()] {
        let (tree, cost) = solve_optimal_tree(&ip, backend, &|| false).unwrap();
        assert_eq!(cost, 1.0, "{}", backend.name());
        assert_eq!(tree.pruned().to_text(&g.graph), "Q:a(DONE,DONE)");
    }
}
