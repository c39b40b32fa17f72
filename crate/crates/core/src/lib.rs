//! Adaptive edge-query policies for s–t connectivity testing under a query
//! budget.
//!
//! Edges of a graph are independently On with probability `p` and start
//! hidden. A policy queries edges one at a time until the On edges form an
//! s–t path, the Off edges form an s–t cut, or the budget runs out. This
//! crate computes optimal policies exactly ([`exact`]), provides a catalogue
//! of heuristics ([`heuristics`]) and measures expected query counts
//! ([`eval`]).
//!
//! The crate is `no_std` and only needs `alloc`; time keeping is injected
//! through [`Clock`].
#![no_std]

extern crate alloc;

pub mod endpoints;
pub mod error;
pub mod eval;
pub mod exact;
pub mod fixtures;
mod flow;
pub mod graph;
pub mod heuristics;
pub mod ip;
pub mod policy;
pub mod tree;

pub use error::{EvalError, GraphError, PolicyError, SolveError, TreeError};
pub use graph::{
    certificate_status, min_hidden_cut, min_hidden_path, Belief, CertKind, Certificate, EdgeId,
    EdgeState, Graph, GraphBuilder, GraphInstance, NodeId, Status,
};
pub use policy::{run_policy, Episode, Outcome, Policy, Proposal};
pub use tree::{NodeLabel, PolicyTree, ResponseVector, TreeStructure};

/// Millisecond clock used for time budgets and iteration reports.
pub trait Clock {
    fn now_ms(&self) -> u64;
}

/// A clock that never advances; time budgets never expire under it.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ms(&self) -> u64 {
        0
    }
}

/// Absolute tolerance for comparing expected costs.
pub const COST_TOL: f64 = 1e-12;
