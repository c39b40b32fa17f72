use conntest_core::fixtures;

use conntest_core::eval::{dp_oracle, evaluate_exhaustive};
use conntest_core::exact::{solve, ExactConfig, SolveStatus};
use conntest_core::ip::StructuredBackend;
use conntest_core::NoClock;

#[test]
fn exact_matches_oracle_on_suite() {
    for (i, g) in fixtures::oracle_suite().iter().enumerate() {
        let r = solve(g, &ExactConfig::default(), &StructuredBackend, &NoClock, &mut |_| {}).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        let want = dp_oracle(g).unwrap();
        assert!((r.cost - want).abs() <= 1e-9, "instance {i}: {} vs {want}", r.cost);
        let played = evaluate_exhaustive(&r.tree, g).unwrap().expected_queries;
        assert!((played - r.cost).abs() <= 1e-9, "instance {i}: played {played}");
    }
}
