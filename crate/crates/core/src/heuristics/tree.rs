//! The Tree heuristic: solve the exact problem on the residual instance with
//! a shortened budget and play the root query.

use alloc::sync::Arc;

use super::h1_next;
use crate::error::{PolicyError, SolveError};
use crate::exact::{solve_from, ExactConfig, SolveStatus};
use crate::graph::{Belief, GraphInstance};
use crate::ip::StructuredBackend;
use crate::policy::Proposal;
use crate::{Clock, NoClock};

#[derive(Clone)]
pub struct TreeOptions {
    pub config: ExactConfig,
    /// Per-step time guard; on breach the step falls back to H1.
    pub step_budget_ms: Option<u64>,
    pub clock: Arc<dyn Clock + Send + Sync>,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self {
            config: ExactConfig::default(),
            step_budget_ms: None,
            clock: Arc::new(NoClock),
        }
    }
}

/// Root query of the optimal policy for `min(horizon, remaining)` more
/// queries from `b`.
pub fn tree_heuristic_next(
    g: &GraphInstance,
    b: &Belief,
    remaining: usize,
    horizon: usize,
    opts: &TreeOptions,
) -> Result<Proposal, PolicyError> {
    let h = horizon.min(remaining);
    if h == 0 {
        return Err(PolicyError::NotOpen);
    }
    let residual = g.with_budget(h);
    let mut config = opts.config.clone();
    if let Some(ms) = opts.step_budget_ms {
        config.time_budget_ms = config.time_budget_ms.min(ms);
    }
    let result = solve_from(&residual, b, &config, &StructuredBackend, &*opts.clock, &|| false, &mut |_| {});
    match result {
        Ok(r) if r.status == SolveStatus::Optimal => match r.tree.root_query() {
            Some(e) => Ok(Proposal::new(e)),
            None => Err(PolicyError::NotOpen),
        },
        Ok(_) | Err(SolveError::Interrupted) if opts.step_budget_ms.is_some() => Ok(Proposal::fallback(h1_next(g, b)?)),
        Ok(_) => Err(PolicyError::Solve(SolveError::Interrupted)),
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::triangle;
    use crate::graph::EdgeState;

    #[test]
    fn triangle_root_is_a() {
        let g = triangle();
        let a = g.graph.edge_id("a").unwrap();
        let b = g.fresh_belief();
        for horizon in [1, 3] {
            let p = tree_heuristic_next(&g, &b, 3, horizon, &TreeOptions::default()).unwrap();
            assert_eq!(p, Proposal::new(a));
        }
        let b = b.with(a, EdgeState::Off);
        let p = tree_heuristic_next(&g, &b, 2, 3, &TreeOptions::default()).unwrap();
        assert_eq!(p, Proposal::new(g.graph.edge_id("b").unwrap()));
    }
}
