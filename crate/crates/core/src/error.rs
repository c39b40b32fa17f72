use alloc::string::String;

use thiserror::Error;

use crate::graph::{EdgeId, NodeId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate edge id `{0}`")]
    DuplicateEdge(String),
    #[error("parallel edges `{first}` and `{second}`")]
    ParallelEdge { first: String, second: String },
    #[error("unknown edge {0:?}")]
    UnknownEdge(EdgeId),
    #[error("unknown node {0:?}")]
    UnknownNode(NodeId),
    #[error("unknown node `{0}`")]
    UnknownNodeLabel(String),
    #[error("probability {0} outside (0, 1)")]
    Probability(f64),
    #[error("budget {budget} exceeds edge count {edges}")]
    Budget { budget: usize, edges: usize },
    #[error("belief covers {got} edges, graph has {expected}")]
    BeliefSize { expected: usize, got: usize },
    #[error("edge {0:?} is already revealed")]
    AlreadyRevealed(EdgeId),
    #[error("no node can reach another node")]
    NoReachablePair,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("unknown tree node {0}")]
    UnknownNode(usize),
    #[error("edge {edge:?} repeats on the route to node {node}")]
    RepeatedEdge { node: usize, edge: EdgeId },
    #[error("node {0} is a child of a Done node but is not Done")]
    DoneChild(usize),
    #[error("limit leaf at node {node} has depth {depth}, budget is {budget}")]
    LimitDepth { node: usize, depth: usize, budget: usize },
    #[error("label count {labels} does not match node count {nodes}")]
    LabelCount { labels: usize, nodes: usize },
    #[error("tree text: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("policy proposed edge {0:?}, which is already revealed")]
    RevealedEdge(EdgeId),
    #[error("heuristic called on a decided or exhausted state")]
    NotOpen,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid heuristic spec `{0}`")]
    Spec(String),
    #[error("no answer for query {0}, which is not the last one allowed")]
    MissingAnswer(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("solver stopped before completing an iteration")]
    Interrupted,
    #[error("integer program is infeasible")]
    Infeasible,
    #[error("backend `{backend}` cannot handle {variables} variables")]
    TooLarge { backend: String, variables: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("{what} guard exceeded: {value} > {limit}")]
    Guard {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
