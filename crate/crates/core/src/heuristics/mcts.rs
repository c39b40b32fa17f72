//! Epsilon-greedy Monte Carlo tree search over (belief, budget) states.
//!
//! Actions at a state are the edges H1 would query within `horizon` steps;
//! rollouts follow H1 until a certificate appears or the true budget runs
//! out, and the return is minus the number of queries spent.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::h1_next;
use crate::error::PolicyError;
use crate::graph::{is_decided, Belief, EdgeId, EdgeState, GraphInstance};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MctsParams {
    /// Depth of the H1 simulation that defines the action space.
    pub horizon: usize,
    pub sims: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for MctsParams {
    fn default() -> Self {
        Self {
            horizon: 3,
            sims: 1000,
            epsilon: 0.2,
            seed: 0,
        }
    }
}

/// Edges H1 queries within `horizon` steps of `b` under either answer,
/// sorted by id. At most `2^horizon - 1` edges.
pub fn action_space(g: &GraphInstance, b: &Belief, horizon: usize) -> Vec<EdgeId> {
    fn walk(g: &GraphInstance, b: &Belief, depth: usize, out: &mut Vec<EdgeId>) {
        if depth == 0 {
            return;
        }
        let Ok(e) = h1_next(g, b) else {
            return;
        };
        out.push(e);
        walk(g, &b.with(e, EdgeState::On), depth - 1, out);
        walk(g, &b.with(e, EdgeState::Off), depth - 1, out);
    }
    let mut out = Vec::new();
    walk(g, b, horizon, &mut out);
    out.sort_unstable();
    out.dedup();
    out
}

struct Node {
    belief: Belief,
    remaining: usize,
    actions: Vec<EdgeId>,
    visits: Vec<u32>,
    totals: Vec<f64>,
    /// Child per action and answer (`[Off, On]`).
    children: Vec<[Option<usize>; 2]>,
}

impl Node {
    fn new(g: &GraphInstance, belief: Belief, remaining: usize, horizon: usize) -> Self {
        let actions = if remaining == 0 || is_decided(g, &belief) {
            Vec::new()
        } else {
            action_space(g, &belief, horizon)
        };
        let n = actions.len();
        Self {
            belief,
            remaining,
            actions,
            visits: vec![0; n],
            totals: vec![0.0; n],
            children: vec![[None; 2]; n],
        }
    }

    fn mean(&self, a: usize) -> f64 {
        self.totals[a] / f64::from(self.visits[a])
    }

    /// Visited action with the best mean, smallest id on ties.
    fn greedy(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for a in 0..self.actions.len() {
            if self.visits[a] == 0 {
                continue;
            }
            if best.is_none_or(|b| self.mean(a) > self.mean(b)) {
                best = Some(a);
            }
        }
        best
    }
}

/// Queries H1 spends from `b` with `remaining` left, answers drawn with
/// probability `p`.
fn rollout(g: &GraphInstance, mut b: Belief, mut remaining: usize, rng: &mut ChaCha8Rng) -> Result<usize, PolicyError> {
    let mut spent = 0;
    while remaining > 0 && !is_decided(g, &b) {
        let e = h1_next(g, &b)?;
        b = b.with(e, EdgeState::from_answer(rng.random_bool(g.p)));
        remaining -= 1;
        spent += 1;
    }
    Ok(spent)
}

pub fn mcts_next(g: &GraphInstance, b: &Belief, remaining: usize, params: &MctsParams) -> Result<EdgeId, PolicyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut nodes = vec![Node::new(g, b.clone(), remaining, params.horizon)];
    if nodes[0].actions.is_empty() {
        return Err(PolicyError::NotOpen);
    }
    if nodes[0].actions.len() == 1 {
        return Ok(nodes[0].actions[0]);
    }
    let mut trail: Vec<(usize, usize, usize)> = Vec::new();
    for _ in 0..params.sims.max(1) {
        trail.clear();
        let mut cur = 0;
        let mut depth = 0;
        // Queries spent below the last tree node, by the rollout.
        let tail = loop {
            let node = &nodes[cur];
            if node.actions.is_empty() {
                break 0;
            }
            let untried = node.visits.iter().position(|&v| v == 0);
            let a = match untried {
                Some(a) => a,
                None if rng.random_bool(params.epsilon) => rng.random_range(0..node.actions.len()),
                None => node.greedy().expect("all actions visited"),
            };
            let on = rng.random_bool(g.p);
            trail.push((cur, a, depth));
            depth += 1;
            match nodes[cur].children[a][usize::from(on)] {
                Some(child) => cur = child,
                None => {
                    let parent = &nodes[cur];
                    let e = parent.actions[a];
                    let belief = parent.belief.with(e, EdgeState::from_answer(on));
                    let child = Node::new(g, belief, parent.remaining - 1, params.horizon);
                    let spent = rollout(g, child.belief.clone(), child.remaining, &mut rng)?;
                    nodes.push(child);
                    let id = nodes.len() - 1;
                    nodes[cur].children[a][usize::from(on)] = Some(id);
                    break spent;
                }
            }
        };
        let total = depth + tail;
        for &(node, a, d) in &trail {
            nodes[node].visits[a] += 1;
            nodes[node].totals[a] -= (total - d) as f64;
        }
    }
    let root = &nodes[0];
    Ok(root.actions[root.greedy().expect("root visited")])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{triangle, single_edge};

    #[test]
    fn action_space_examples() {
        let g = triangle();
        let id = |n| g.graph.edge_id(n).unwrap();
        let b = g.fresh_belief();
        assert_eq!(action_space(&g, &b, 2), [id("a"), id("b")]);
        assert_eq!(action_space(&g, &b, 1), [id("a")]);
        let done = b.with(id("a"), EdgeState::On);
        assert!(action_space(&g, &done, 3).is_empty());
    }

    #[test]
    fn triangle_root_action() {
        let g = triangle();
        let b = g.fresh_belief();
        let e = mcts_next(&g, &b, 3, &MctsParams::default()).unwrap();
        assert_eq!(e, g.graph.edge_id("a").unwrap());
        let again = mcts_next(&g, &b, 3, &MctsParams::default()).unwrap();
        assert_eq!(e, again);
        let one = MctsParams {
            sims: 1,
            ..MctsParams::default()
        };
        assert!(action_space(&g, &b, 3).contains(&mcts_next(&g, &b, 3, &one).unwrap()));
    }

    #[test]
    fn single_edge_is_forced() {
        let g = single_edge();
        let e = mcts_next(&g, &g.fresh_belief(), 1, &MctsParams::default()).unwrap();
        assert_eq!(e, g.graph.edge_id("e").unwrap());
    }
}
