//! Wizard sessions: state snapshots and the answer loop.
//!
//! Answers are raw edge states. Read as access-removal requests, `off`
//! means the removal was approved and `on` that it was rejected.

use std::sync::Arc;

use conntest_core::heuristics::{HeuristicKind, HeuristicPolicy, TreeOptions};
use conntest_core::{certificate_status, Belief, EdgeState, GraphInstance, Policy, Status};
use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::io::{parse_graph, serialize_graph};
use crate::report::CertificateDoc;
use crate::SystemClock;

/// Version of the snapshot layout; snapshots of other versions are refused.
pub const SNAPSHOT_FORMAT: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Open,
    PathFound,
    CutFound,
    BudgetExhausted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    On,
    Off,
}

impl Answer {
    pub fn state(self) -> EdgeState {
        match self {
            Answer::On => EdgeState::On,
            Answer::Off => EdgeState::Off,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pending {
    pub edge: String,
    /// The heuristic deferred to H1 for this proposal.
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub edge: String,
    pub answer: Answer,
    /// Unix time in milliseconds.
    pub at_ms: u64,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub format: u32,
    pub id: String,
    /// Bumped by every accepted answer.
    pub version: u64,
    /// Graph-file text.
    pub graph: String,
    pub source: String,
    pub target: String,
    pub budget: usize,
    pub prob: f64,
    pub heuristic: String,
    pub remaining: usize,
    pub status: SessionStatus,
    pub certificate: Option<CertificateDoc>,
    pub pending: Option<Pending>,
    pub transcript: Vec<TranscriptEntry>,
    pub created_ms: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    /// Graph-file text; exactly one of `graph` and `graph_path` is required.
    pub graph: Option<String>,
    pub graph_path: Option<String>,
    pub source: String,
    pub target: String,
    pub budget: usize,
    #[serde(default = "default_prob")]
    pub prob: f64,
    #[serde(default = "default_heuristic")]
    pub heuristic: String,
}

fn default_prob() -> f64 {
    0.5
}

fn default_heuristic() -> String {
    "h1".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRequest {
    pub edge: String,
    pub answer: Answer,
    pub expected_version: Option<u64>,
}

/// The instance and heuristic behind a session.
pub struct Engine {
    pub instance: GraphInstance,
    pub policy: HeuristicPolicy,
}

impl Engine {
    /// Tree heuristics get a per-step time limit of `step_ms`.
    pub fn new(instance: GraphInstance, kind: HeuristicKind, step_ms: u64) -> Self {
        let policy = HeuristicPolicy::new(kind, &instance).with_tree_options(TreeOptions {
            step_budget_ms: Some(step_ms),
            clock: Arc::new(SystemClock::new()),
            ..TreeOptions::default()
        });
        Self { instance, policy }
    }

    pub fn for_state(state: &SessionState, step_ms: u64) -> Result<Self, ServiceError> {
        let graph = parse_graph(&state.graph).map_err(|e| ServiceError::Internal(e.to_string()))?;
        let instance = GraphInstance::from_labels(graph, &state.source, &state.target, state.prob, state.budget)
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        let kind = state.heuristic.parse().map_err(|e: conntest_core::PolicyError| ServiceError::Internal(e.to_string()))?;
        Ok(Self::new(instance, kind, step_ms))
    }

    fn belief(&self, state: &SessionState) -> Result<Belief, ServiceError> {
        let mut b = self.instance.fresh_belief();
        for t in &state.transcript {
            let e = self.edge(&t.edge).ok_or_else(|| ServiceError::Internal(format!("unknown edge `{}`", t.edge)))?;
            b.reveal(e, t.answer.state()).map_err(|e| ServiceError::Internal(e.to_string()))?;
        }
        Ok(b)
    }

    fn edge(&self, label: &str) -> Option<conntest_core::EdgeId> {
        self.instance.graph.edge_id(label)
    }

    /// Recomputes status, certificate and the next proposal.
    fn refresh(&self, state: &mut SessionState) -> Result<(), ServiceError> {
        let g = &self.instance;
        let b = self.belief(state)?;
        state.remaining = g.budget - state.transcript.len();
        let status = certificate_status(g, &b).map_err(|e| ServiceError::Internal(e.to_string()))?;
        state.certificate = status.certificate().map(|c| CertificateDoc::new(&g.graph, c));
        state.pending = None;
        state.status = match status {
            Status::PathFound(_) => SessionStatus::PathFound,
            Status::CutFound(_) => SessionStatus::CutFound,
            Status::Open if state.remaining == 0 => SessionStatus::BudgetExhausted,
            Status::Open => SessionStatus::Open,
        };
        if state.status == SessionStatus::Open {
            let prop = self
                .policy
                .propose(g, &b, state.remaining)
                .map_err(|e| ServiceError::Internal(e.to_string()))?
                .ok_or_else(|| ServiceError::Internal("heuristic stopped on an open state".into()))?;
            state.pending = Some(Pending {
                edge: g.graph.edge_label(prop.edge).to_string(),
                fallback: prop.fallback,
            });
        }
        Ok(())
    }
}

/// Validates a create request and builds the session with its first
/// proposal.
pub fn create(req: &CreateRequest, id: String, now_ms: u64, step_ms: u64) -> Result<(SessionState, Engine), ServiceError> {
    let text = match (&req.graph, &req.graph_path) {
        (Some(text), None) => text.clone(),
        (None, Some(path)) => std::fs::read_to_string(path).map_err(|e| ServiceError::InvalidGraph(format!("{path}: {e}")))?,
        _ => return Err(ServiceError::InvalidRequest("give exactly one of `graph` and `graph_path`".into())),
    };
    let graph = parse_graph(&text).map_err(|e| ServiceError::InvalidGraph(e.to_string()))?;
    let canonical = serialize_graph(&graph);
    let instance = GraphInstance::from_labels(graph, &req.source, &req.target, req.prob, req.budget)
        .map_err(|e| ServiceError::InvalidGraph(e.to_string()))?;
    let kind: HeuristicKind = req.heuristic.parse().map_err(|e: conntest_core::PolicyError| ServiceError::InvalidHeuristic(e.to_string()))?;
    let engine = Engine::new(instance, kind, step_ms);
    let mut state = SessionState {
        format: SNAPSHOT_FORMAT,
        id,
        version: 0,
        graph: canonical,
        source: req.source.clone(),
        target: req.target.clone(),
        budget: req.budget,
        prob: req.prob,
        heuristic: kind.to_string(),
        remaining: req.budget,
        status: SessionStatus::Open,
        certificate: None,
        pending: None,
        transcript: Vec::new(),
        created_ms: now_ms,
    };
    engine.refresh(&mut state)?;
    Ok((state, engine))
}

/// Applies an answer to the pending proposal and returns the next state.
pub fn answer(state: &SessionState, engine: &Engine, req: &AnswerRequest, now_ms: u64) -> Result<SessionState, ServiceError> {
    if let Some(v) = req.expected_version {
        if v != state.version {
            return Err(ServiceError::VersionConflict {
                expected: v,
                current: state.version,
            });
        }
    }
    let Some(pending) = &state.pending else {
        return Err(ServiceError::Closed(state.status));
    };
    if pending.edge != req.edge {
        return Err(ServiceError::NotPending {
            pending: pending.edge.clone(),
            got: req.edge.clone(),
        });
    }
    let mut next = state.clone();
    next.version += 1;
    next.transcript.push(TranscriptEntry {
        edge: req.edge.clone(),
        answer: req.answer,
        at_ms: now_ms,
        fallback: pending.fallback,
    });
    engine.refresh(&mut next)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "undirected\na s t\nb s x\nc x t\n";

    fn request(budget: usize) -> CreateRequest {
        CreateRequest {
            graph: Some(TRIANGLE.into()),
            graph_path: None,
            source: "s".into(),
            target: "t".into(),
            budget,
            prob: 0.5,
            heuristic: "h1".into(),
        }
    }

    fn reply(edge: &str, answer: Answer) -> AnswerRequest {
        AnswerRequest {
            edge: edge.into(),
            answer,
            expected_version: None,
        }
    }

    #[test]
    fn triangle_cut_in_two_answers() {
        let (s0, engine) = create(&request(3), "x".into(), 0, 1000).unwrap();
        assert_eq!(s0.pending.as_ref().unwrap().edge, "a");
        assert!(s0.transcript.is_empty());
        let s1 = answer(&s0, &engine, &reply("a", Answer::Off), 1).unwrap();
        assert_eq!(s1.pending.as_ref().unwrap().edge, "b");
        let s2 = answer(&s1, &engine, &reply("b", Answer::Off), 2).unwrap();
        assert_eq!(s2.status, SessionStatus::CutFound);
        assert_eq!(s2.certificate.as_ref().unwrap().edges, ["a", "b"]);
        assert_eq!((s2.pending.as_ref(), s2.transcript.len(), s2.version), (None, 2, 2));
        assert!(matches!(answer(&s2, &engine, &reply("c", Answer::On), 3), Err(ServiceError::Closed(_))));
    }

    #[test]
    fn path_after_one_answer() {
        let (s0, engine) = create(&request(3), "x".into(), 0, 1000).unwrap();
        let s1 = answer(&s0, &engine, &reply("a", Answer::On), 1).unwrap();
        assert_eq!(s1.status, SessionStatus::PathFound);
        assert_eq!(s1.certificate.unwrap().edges, ["a"]);
    }

    #[test]
    fn degenerate_instances() {
        let mut req = request(0);
        let (s, _) = create(&req, "x".into(), 0, 1000).unwrap();
        assert_eq!((s.status, s.pending), (SessionStatus::BudgetExhausted, None));
        req.budget = 2;
        req.target = "s".into();
        let (s, _) = create(&req, "x".into(), 0, 1000).unwrap();
        assert_eq!(s.status, SessionStatus::PathFound);
        assert!(s.certificate.unwrap().edges.is_empty());
    }

    #[test]
    fn rejects_wrong_edge_and_stale_version() {
        let (s0, engine) = create(&request(3), "x".into(), 0, 1000).unwrap();
        assert!(matches!(answer(&s0, &engine, &reply("b", Answer::On), 1), Err(ServiceError::NotPending { .. })));
        let stale = AnswerRequest {
            expected_version: Some(4),
            ..reply("a", Answer::On)
        };
        assert!(matches!(answer(&s0, &engine, &stale, 1), Err(ServiceError::VersionConflict { .. })));
    }

    #[test]
    fn bad_requests() {
        let mut req = request(3);
        req.heuristic = "h9".into();
        assert!(matches!(create(&req, "x".into(), 0, 0), Err(ServiceError::InvalidHeuristic(_))));
        let mut req = request(3);
        req.target = "nowhere".into();
        assert!(matches!(create(&req, "x".into(), 0, 0), Err(ServiceError::InvalidGraph(_))));
        let mut req = request(3);
        req.graph_path = Some("/x".into());
        assert!(matches!(create(&req, "x".into(), 0, 0), Err(ServiceError::InvalidRequest(_))));
    }

    #[test]
    fn snapshot_rebuilds_engine() {
        let (s0, engine) = create(&request(3), "x".into(), 0, 1000).unwrap();
        let s1 = answer(&s0, &engine, &reply("a", Answer::Off), 1).unwrap();
        let text = serde_json::to_string(&s1).unwrap();
        let back: SessionState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s1);
        let again = Engine::for_state(&back, 1000).unwrap();
        let s2 = answer(&back, &again, &reply("b", Answer::On), 2).unwrap();
        assert_eq!(s2.pending.unwrap().edge, "c");
    }
}
