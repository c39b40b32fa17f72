//! The heuristic catalogue.
//!
//! Every heuristic picks the next edge from the current belief alone (plus a
//! per-episode sample set for the sample-based rules), so each one is a
//! deterministic function of graph, belief and seed.

mod mcts;
mod rules;
mod samples;
mod tree;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use core::fmt;
use core::str::FromStr;

pub use mcts::{action_space, mcts_next, MctsParams};
pub use rules::{adaptive_submodular_next, greedy_count_next, minsc_next, CountVariant, MinScVariant};
pub use samples::{generate_samples, SampleSets, Source, DEFAULT_HORIZON, DEFAULT_TARGET};
pub use tree::{tree_heuristic_next, TreeOptions};

use crate::error::PolicyError;
use crate::graph::{is_decided, min_hidden_cut, min_hidden_path, Belief, EdgeId, GraphInstance};
use crate::policy::{Policy, Proposal};

/// The hidden edge shared by the minimum-hidden path and the minimum-hidden
/// cut, smallest id first.
pub fn h1_next(g: &GraphInstance, b: &Belief) -> Result<EdgeId, PolicyError> {
    let (path, _) = min_hidden_path(g, b).ok_or(PolicyError::NotOpen)?;
    let (cut, _) = min_hidden_cut(g, b).ok_or(PolicyError::NotOpen)?;
    cut.edges
        .iter()
        .copied()
        .filter(|&e| b.is_hidden(e) && path.contains(e))
        .min()
        .ok_or(PolicyError::NotOpen)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HeuristicKind {
    H1,
    H2Both,
    H2Path,
    H2Cut,
    MinSc,
    MinScPath,
    MinScCut,
    AdaptiveSubmodular,
    Tree { horizon: usize },
    Mcts(MctsParams),
}

impl HeuristicKind {
    /// The non-parametric members plus `tree:<horizon>` and `mcts` with the
    /// given parameters.
    pub fn catalogue(horizon: usize, mcts: MctsParams) -> [HeuristicKind; 10] {
        use HeuristicKind::*;
        [H1, H2Both, H2Path, H2Cut, MinSc, MinScPath, MinScCut, AdaptiveSubmodular, Tree { horizon }, Mcts(mcts)]
    }

    pub fn uses_samples(&self) -> bool {
        use HeuristicKind::*;
        matches!(self, H2Both | H2Path | H2Cut | MinSc | MinScPath | MinScCut | AdaptiveSubmodular)
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeuristicKind::H1 => f.write_str("h1"),
            HeuristicKind::H2Both => f.write_str("h2-both"),
            HeuristicKind::H2Path => f.write_str("h2-path"),
            HeuristicKind::H2Cut => f.write_str("h2-cut"),
            HeuristicKind::MinSc => f.write_str("minsc"),
            HeuristicKind::MinScPath => f.write_str("minsc-path"),
            HeuristicKind::MinScCut => f.write_str("minsc-cut"),
            HeuristicKind::AdaptiveSubmodular => f.write_str("adasub"),
            HeuristicKind::Tree { horizon } => write!(f, "tree:{horizon}"),
            HeuristicKind::Mcts(m) => write!(f, "mcts:{},{},{},{}", m.horizon, m.sims, m.epsilon, m.seed),
        }
    }
}

impl FromStr for HeuristicKind {
    type Err = PolicyError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let bad = || PolicyError::Spec(spec.to_string());
        let kind = match spec.trim() {
            "h1" => HeuristicKind::H1,
            "h2-both" => HeuristicKind::H2Both,
            "h2-path" => HeuristicKind::H2Path,
            "h2-cut" => HeuristicKind::H2Cut,
            "minsc" => HeuristicKind::MinSc,
            "minsc-path" => HeuristicKind::MinScPath,
            "minsc-cut" => HeuristicKind::MinScCut,
            "adasub" => HeuristicKind::AdaptiveSubmodular,
            other => {
                let (name, args) = other.split_once(':').ok_or_else(bad)?;
                match name {
                    "tree" => {
                        let horizon: usize = args.parse().map_err(|_| bad())?;
                        if horizon == 0 {
                            return Err(bad());
                        }
                        HeuristicKind::Tree { horizon }
                    }
                    "mcts" => {
                        let parts: alloc::vec::Vec<&str> = args.split(',').collect();
                        let [h, sims, eps, seed] = parts.as_slice() else {
                            return Err(bad());
                        };
                        let params = MctsParams {
                            horizon: h.parse().map_err(|_| bad())?,
                            sims: sims.parse().map_err(|_| bad())?,
                            epsilon: eps.parse().map_err(|_| bad())?,
                            seed: seed.parse().map_err(|_| bad())?,
                        };
                        if params.horizon == 0 || !(0.0..=1.0).contains(&params.epsilon) {
                            return Err(bad());
                        }
                        HeuristicKind::Mcts(params)
                    }
                    _ => return Err(bad()),
                }
            }
        };
        Ok(kind)
    }
}

/// A heuristic bound to one episode: sample sets are drawn once from the
/// belief the policy is created with and filtered as edges are revealed.
#[derive(Clone)]
pub struct HeuristicPolicy {
    pub kind: HeuristicKind,
    samples: Option<Arc<SampleSets>>,
    pub tree: TreeOptions,
    /// Redraw samples from the current belief at every step.
    pub regenerate_samples: bool,
}

impl fmt::Debug for HeuristicPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HeuristicPolicy")
            .field("kind", &self.kind)
            .field("samples", &self.samples.as_ref().map(|s| (s.paths.len(), s.cuts.len())))
            .finish()
    }
}

impl HeuristicPolicy {
    pub fn new(kind: HeuristicKind, g: &GraphInstance) -> Self {
        Self::from_belief(kind, g, &g.fresh_belief())
    }

    pub fn from_belief(kind: HeuristicKind, g: &GraphInstance, b: &Belief) -> Self {
        let samples = kind
            .uses_samples()
            .then(|| Arc::new(generate_samples(g, b, DEFAULT_HORIZON, DEFAULT_TARGET)));
        Self {
            kind,
            samples,
            tree: TreeOptions::default(),
            regenerate_samples: false,
        }
    }

    pub fn with_samples(kind: HeuristicKind, samples: SampleSets) -> Self {
        Self {
            kind,
            samples: Some(Arc::new(samples)),
            tree: TreeOptions::default(),
            regenerate_samples: false,
        }
    }

    pub fn with_tree_options(mut self, tree: TreeOptions) -> Self {
        self.tree = tree;
        self
    }

    pub fn samples(&self) -> Option<&SampleSets> {
        self.samples.as_deref()
    }

    pub fn parse(spec: &str, g: &GraphInstance) -> Result<Self, PolicyError> {
        Ok(Self::new(spec.parse()?, g))
    }

    pub fn name(&self) -> String {
        format!("{}", self.kind)
    }
}

impl Policy for HeuristicPolicy {
    fn propose(&self, g: &GraphInstance, b: &Belief, remaining: usize) -> Result<Option<Proposal>, PolicyError> {
        if remaining == 0 || is_decided(g, b) {
            return Ok(None);
        }
        let fresh;
        let samples = if self.regenerate_samples && self.kind.uses_samples() {
            fresh = generate_samples(g, b, DEFAULT_HORIZON, DEFAULT_TARGET);
            Some(&fresh)
        } else {
            self.samples.as_deref()
        };
        let need = || samples.ok_or_else(|| PolicyError::Spec(format!("{} needs samples", self.kind)));
        let proposal = match self.kind {
            HeuristicKind::H1 => Proposal::new(h1_next(g, b)?),
            HeuristicKind::H2Both => greedy_count_next(CountVariant::Both, need()?, g, b)?,
            HeuristicKind::H2Path => greedy_count_next(CountVariant::Path, need()?, g, b)?,
            HeuristicKind::H2Cut => greedy_count_next(CountVariant::Cut, need()?, g, b)?,
            HeuristicKind::MinSc => minsc_next(MinScVariant::Both, need()?, g, b)?,
            HeuristicKind::MinScPath => minsc_next(MinScVariant::Path, need()?, g, b)?,
            HeuristicKind::MinScCut => minsc_next(MinScVariant::Cut, need()?, g, b)?,
            HeuristicKind::AdaptiveSubmodular => adaptive_submodular_next(need()?, g, b)?,
            HeuristicKind::Tree { horizon } => tree_heuristic_next(g, b, remaining, horizon, &self.tree)?,
            HeuristicKind::Mcts(params) => Proposal::new(mcts_next(g, b, remaining, &params)?),
        };
        Ok(Some(proposal))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{triangle, serial2};
    use crate::graph::EdgeState;

    #[test]
    fn h1_examples() {
        let g = triangle();
        let id = |n| g.graph.edge_id(n).unwrap();
        let b = g.fresh_belief();
        assert_eq!(h1_next(&g, &b).unwrap(), id("a"));
        let b = b.with(id("a"), EdgeState::Off);
        assert_eq!(h1_next(&g, &b).unwrap(), id("b"));
        let b = b.with(id("b"), EdgeState::Off);
        assert_eq!(h1_next(&g, &b), Err(PolicyError::NotOpen));
        let s = serial2();
        assert_eq!(h1_next(&s, &s.fresh_belief()).unwrap(), s.graph.edge_id("e1").unwrap());
    }

    #[test]
    fn spec_round_trip() {
        for spec in [
            "h1", "h2-both", "h2-path", "h2-cut", "minsc", "minsc-path", "minsc-cut", "adasub", "tree:5",
            "mcts:3,1000,0.2,0",
        ] {
            let kind: HeuristicKind = spec.parse().unwrap();
            assert_eq!(kind.to_string(), spec);
        }
        for bad in ["h3", "tree:0", "tree:x", "mcts:3,10,1.5,0", "mcts:3,10"] {
            assert!(bad.parse::<HeuristicKind>().is_err(), "{bad}");
        }
    }
}
