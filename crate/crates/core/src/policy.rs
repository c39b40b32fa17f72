//! Episode playback for trees and stepwise heuristics.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::PolicyError;
use crate::graph::{certificate_status, Belief, Certificate, EdgeId, EdgeState, GraphInstance, Status};
use crate::tree::{NodeLabel, PolicyTree, ResponseVector};

/// One proposed query. `fallback` marks steps where a heuristic deferred to
/// H1 because its own rule had nothing to offer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Proposal {
    pub edge: EdgeId,
    pub fallback: bool,
}

impl Proposal {
    pub fn new(edge: EdgeId) -> Self {
        Self {
            edge,
            fallback: false,
        }
    }

    pub fn fallback(edge: EdgeId) -> Self {
        Self {
            edge,
            fallback: true,
        }
    }
}

/// An adaptive policy: given the revealed states and the queries left,
/// propose the next hidden edge or stop (`None`).
pub trait Policy {
    fn propose(
        &self,
        g: &GraphInstance,
        belief: &Belief,
        remaining: usize,
    ) -> Result<Option<Proposal>, PolicyError>;
}

impl<P: Policy + ?Sized> Policy for &P {
    fn propose(&self, g: &GraphInstance, b: &Belief, remaining: usize) -> Result<Option<Proposal>, PolicyError> {
        (**self).propose(g, b, remaining)
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn propose(&self, g: &GraphInstance, b: &Belief, remaining: usize) -> Result<Option<Proposal>, PolicyError> {
        (**self).propose(g, b, remaining)
    }
}

impl Policy for PolicyTree {
    /// Walks from the root through already-answered queries.
    fn propose(&self, _g: &GraphInstance, b: &Belief, _remaining: usize) -> Result<Option<Proposal>, PolicyError> {
        let mut node = 0;
        loop {
            match self.label(node) {
                NodeLabel::Done | NodeLabel::Limit => return Ok(None),
                NodeLabel::Query(e) => {
                    let state = b.states().get(e.index()).copied().unwrap_or(EdgeState::Hidden);
                    let next = match (state, self.structure.children(node)) {
                        (EdgeState::Hidden, _) => return Ok(Some(Proposal::new(e))),
                        (_, None) => return Ok(None),
                        (EdgeState::On, Some((l, _))) => l,
                        (EdgeState::Off, Some((_, r))) => r,
                    };
                    node = next;
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Outcome {
    Path,
    Cut,
    /// The budget ran out before a certificate appeared.
    Limit,
    /// The policy declined to query while the state was still open.
    Stopped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub edge: EdgeId,
    /// `None` for a final query whose answer was not observed.
    pub answer: Option<bool>,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub queries: usize,
    pub outcome: Outcome,
    pub certificate: Option<Certificate>,
    pub transcript: Vec<Step>,
}

/// Plays `policy` against an answer source. `answer(k, e)` gives the answer
/// to the `k`-th query (zero based) or `None` when it is not observed, which
/// is only allowed for the last query of the budget.
pub fn run_episode(
    policy: &dyn Policy,
    g: &GraphInstance,
    mut answer: impl FnMut(usize, EdgeId) -> Option<bool>,
) -> Result<Episode, PolicyError> {
    let mut belief = g.fresh_belief();
    let mut transcript = Vec::new();
    loop {
        let status = certificate_status(g, &belief)?;
        let (outcome, certificate) = match status {
            Status::PathFound(c) => (Some(Outcome::Path), Some(c)),
            Status::CutFound(c) => (Some(Outcome::Cut), Some(c)),
            Status::Open if transcript.len() >= g.budget => (Some(Outcome::Limit), None),
            Status::Open => (None, None),
        };
        if let Some(outcome) = outcome {
            return Ok(Episode {
                queries: transcript.len(),
                outcome,
                certificate,
                transcript,
            });
        }
        let remaining = g.budget - transcript.len();
        let Some(prop) = policy.propose(g, &belief, remaining)? else {
            return Ok(Episode {
                queries: transcript.len(),
                outcome: Outcome::Stopped,
                certificate: None,
                transcript,
            });
        };
        if !belief.states().get(prop.edge.index()).is_some_and(|s| *s == EdgeState::Hidden) {
            return Err(PolicyError::RevealedEdge(prop.edge));
        }
        let k = transcript.len();
        let bit = answer(k, prop.edge);
        transcript.push(Step {
            edge: prop.edge,
            answer: bit,
            fallback: prop.fallback,
        });
        match bit {
            Some(on) => belief.reveal(prop.edge, EdgeState::from_answer(on))?,
            None if k + 1 == g.budget => {
                return Ok(Episode {
                    queries: transcript.len(),
                    outcome: Outcome::Limit,
                    certificate: None,
                    transcript,
                })
            }
            None => return Err(PolicyError::MissingAnswer(k)),
        }
    }
}

/// Plays `policy` with answers taken from `r`; the `B`-th query, if issued,
/// consumes a bit only when `r` has one.
pub fn run_policy(policy: &dyn Policy, g: &GraphInstance, r: &ResponseVector) -> Result<Episode, PolicyError> {
    run_episode(policy, g, |k, _| r.bits.get(k).copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::triangle;
    use alloc::string::ToString;

    fn triangle_opt(g: &GraphInstance) -> PolicyTree {
        PolicyTree::from_text("Q:a(DONE,Q:b(Q:c(DONE,DONE),DONE))", &g.graph, g.p).unwrap()
    }

    fn rv(bits: &[bool]) -> ResponseVector {
        ResponseVector { bits: bits.to_vec() }
    }

    #[test]
    fn triangle_opt_episodes() {
        let g = triangle();
        let t = triangle_opt(&g);
        let e = run_policy(&t, &g, &rv(&[true, true])).unwrap();
        assert_eq!((e.queries, e.outcome), (1, Outcome::Path));
        let e = run_policy(&t, &g, &rv(&[false, false])).unwrap();
        assert_eq!((e.queries, e.outcome), (2, Outcome::Cut));
        assert_eq!(e.certificate.unwrap().display(&g.graph).to_string(), "{a,b}");
        let e = run_policy(&t, &g, &rv(&[false, true])).unwrap();
        assert_eq!(e.queries, 3);
        assert_eq!(e.transcript[2].answer, None);
    }

    #[test]
    fn expected_cost_matches_playback() {
        let g = triangle();
        let t = triangle_opt(&g);
        let avg: f64 = ResponseVector::all(g.budget)
            .map(|r| r.probability(g.p) * run_policy(&t, &g, &r).unwrap().queries as f64)
            .sum();
        assert_eq!(avg, t.expected_cost());
    }

    struct Stubborn;

    impl Policy for Stubborn {
        fn propose(&self, g: &GraphInstance, _: &Belief, _: usize) -> Result<Option<Proposal>, PolicyError> {
            Ok(g.graph.edge_id("a").map(Proposal::new))
        }
    }

    #[test]
    fn revealed_proposal_is_an_error() {
        let g = triangle();
        let err = run_policy(&Stubborn, &g, &rv(&[false, false])).unwrap_err();
        assert_eq!(err, PolicyError::RevealedEdge(g.graph.edge_id("a").unwrap()));
    }

    #[test]
    fn done_root_stops() {
        let g = triangle();
        let e = run_policy(&PolicyTree::done(), &g, &rv(&[true, true])).unwrap();
        assert_eq!((e.queries, e.outcome), (0, Outcome::Stopped));
    }
}
