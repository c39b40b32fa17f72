//! Expected query counts of policies.
//!
//! Both evaluators walk the answer tree of a policy once per distinct
//! answer prefix, weighting branches by `p` and `1 - p`. That is the same
//! sum as running the policy on every response vector and weighting each by
//! its probability, with shared prefixes computed once. The answer to the
//! last query of the budget is never observed; such episodes end as
//! [`Outcome::Limit`] with `B` queries.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use hashbrown::{HashMap, HashSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{EvalError, PolicyError};
use crate::graph::{certificate_status, Belief, EdgeState, GraphInstance, Status};
use crate::policy::{Outcome, Policy};

/// Largest budget [`evaluate_exhaustive`] accepts.
pub const EXHAUSTIVE_GUARD: usize = 25;
/// Largest edge count [`dp_oracle`] accepts.
pub const ORACLE_GUARD: usize = 14;
/// Distinct prefixes drawn by [`evaluate_sampled`].
pub const SAMPLE_PREFIXES: usize = 1000;
/// Trailing bits enumerated under every sampled prefix. Tied to running the
/// Tree heuristic with a horizon of 5.
pub const SUFFIX_BITS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Method {
    Exhaustive { vectors: u64 },
    Sampled { vectors: u64, seed: u64 },
}

/// Probability mass of each way an episode ends.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutcomeFrequencies {
    pub path: f64,
    pub cut: f64,
    pub limit: f64,
    pub stopped: f64,
}

impl OutcomeFrequencies {
    fn slot(&mut self, o: Outcome) -> &mut f64 {
        match o {
            Outcome::Path => &mut self.path,
            Outcome::Cut => &mut self.cut,
            Outcome::Limit => &mut self.limit,
            Outcome::Stopped => &mut self.stopped,
        }
    }

    pub fn total(&self) -> f64 {
        self.path + self.cut + self.limit + self.stopped
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationResult {
    pub expected_queries: f64,
    pub budget: usize,
    pub method: Method,
    pub outcomes: OutcomeFrequencies,
    /// `histogram[k]` is the probability of spending exactly `k` queries.
    pub histogram: Vec<f64>,
}

impl EvaluationResult {
    /// `count,frequency` rows, one per query count from 0 to `B`.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("count,frequency\n");
        for (k, f) in self.histogram.iter().enumerate() {
            let _ = writeln!(out, "{k},{f}");
        }
        out
    }
}

struct Walker<'a> {
    policy: &'a dyn Policy,
    g: &'a GraphInstance,
    forced: &'a [bool],
    weight: f64,
    sum: f64,
    outcomes: OutcomeFrequencies,
    histogram: Vec<f64>,
}

impl<'a> Walker<'a> {
    fn new(policy: &'a dyn Policy, g: &'a GraphInstance) -> Self {
        Self {
            policy,
            g,
            forced: &[],
            weight: 0.0,
            sum: 0.0,
            outcomes: OutcomeFrequencies::default(),
            histogram: vec![0.0; g.budget + 1],
        }
    }

    fn record(&mut self, queries: usize, outcome: Outcome, w: f64) {
        self.weight += w;
        self.sum += w * queries as f64;
        *self.outcomes.slot(outcome) += w;
        self.histogram[queries] += w;
    }

    /// Answers `k` onwards follow `forced` while it lasts and branch after.
    fn walk(&mut self, b: Belief, k: usize, w: f64) -> Result<(), EvalError> {
        let budget = self.g.budget;
        let end = match certificate_status(self.g, &b)? {
            Status::PathFound(_) => Some(Outcome::Path),
            Status::CutFound(_) => Some(Outcome::Cut),
            Status::Open if k >= budget => Some(Outcome::Limit),
            Status::Open => None,
        };
        if let Some(outcome) = end {
            self.record(k, outcome, w);
            return Ok(());
        }
        let Some(prop) = self.policy.propose(self.g, &b, budget - k)? else {
            self.record(k, Outcome::Stopped, w);
            return Ok(());
        };
        let e = prop.edge;
        if b.states().get(e.index()) != Some(&EdgeState::Hidden) {
            return Err(PolicyError::RevealedEdge(e).into());
        }
        if k + 1 == budget {
            self.record(budget, Outcome::Limit, w);
            return Ok(());
        }
        if let Some(&on) = self.forced.get(k) {
            return self.walk(b.with(e, EdgeState::from_answer(on)), k + 1, w);
        }
        let p = self.g.p;
        self.walk(b.with(e, EdgeState::On), k + 1, w * p)?;
        self.walk(b.with(e, EdgeState::Off), k + 1, w * (1.0 - p))
    }

    fn finish(mut self, method: Method) -> EvaluationResult {
        let total = self.weight;
        for h in &mut self.histogram {
            *h /= total;
        }
        let o = &mut self.outcomes;
        for f in [&mut o.path, &mut o.cut, &mut o.limit, &mut o.stopped] {
            *f /= total;
        }
        EvaluationResult {
            expected_queries: self.sum / total,
            budget: self.g.budget,
            method,
            outcomes: self.outcomes,
            histogram: self.histogram,
        }
    }
}

/// Exact expected query count of `policy` on `g` over all `2^(B-1)`
/// response vectors.
pub fn evaluate_exhaustive(policy: &dyn Policy, g: &GraphInstance) -> Result<EvaluationResult, EvalError> {
    if g.budget > EXHAUSTIVE_GUARD {
        return Err(EvalError::Guard {
            what: "budget",
            value: g.budget,
            limit: EXHAUSTIVE_GUARD,
        });
    }
    let mut w = Walker::new(policy, g);
    w.walk(g.fresh_belief(), 0, 1.0)?;
    let vectors = 1u64 << g.budget.saturating_sub(1);
    Ok(w.finish(Method::Exhaustive { vectors }))
}

/// The answer prefixes [`evaluate_sampled`] uses for budget `budget`: every
/// `(B-5)`-bit vector in counting order when there are fewer than 1000 of
/// them, otherwise 1000 distinct uniform draws from a ChaCha8 stream seeded
/// with `seed`, in draw order.
pub fn sample_prefixes(budget: usize, seed: u64) -> Vec<Vec<bool>> {
    let len = budget.saturating_sub(SUFFIX_BITS + 1);
    if len < usize::BITS as usize && (1usize << len) < SAMPLE_PREFIXES {
        return (0..1u64 << len)
            .map(|x| (0..len).map(|k| (x >> (len - 1 - k)) & 1 == 1).collect())
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(SAMPLE_PREFIXES);
    while out.len() < SAMPLE_PREFIXES {
        let v: Vec<bool> = (0..len).map(|_| rng.random()).collect();
        if seen.insert(v.clone()) {
            out.push(v);
        }
    }
    out
}

/// Expected query count over sampled response vectors: each prefix from
/// [`sample_prefixes`] is completed with all 16 four-bit suffixes and every
/// vector is weighted by its probability. Falls back to
/// [`evaluate_exhaustive`] for `B <= 5`.
pub fn evaluate_sampled(policy: &dyn Policy, g: &GraphInstance, seed: u64) -> Result<EvaluationResult, EvalError> {
    if g.budget <= SUFFIX_BITS + 1 {
        return evaluate_exhaustive(policy, g);
    }
    let prefixes = sample_prefixes(g.budget, seed);
    let p = g.p;
    let mut w = Walker::new(policy, g);
    for prefix in &prefixes {
        let weight = prefix.iter().map(|&on| if on { p } else { 1.0 - p }).product();
        w.forced = prefix;
        w.walk(g.fresh_belief(), 0, weight)?;
    }
    let vectors = (prefixes.len() as u64) << SUFFIX_BITS;
    Ok(w.finish(Method::Sampled { vectors, seed }))
}

/// [`evaluate_exhaustive`] when the budget is within the guard, otherwise
/// [`evaluate_sampled`] with `seed`.
pub fn evaluate(policy: &dyn Policy, g: &GraphInstance, seed: u64) -> Result<EvaluationResult, EvalError> {
    if g.budget <= EXHAUSTIVE_GUARD {
        evaluate_exhaustive(policy, g)
    } else {
        evaluate_sampled(policy, g, seed)
    }
}

/// Optimal expected query count by value recursion over all belief states.
pub fn dp_oracle(g: &GraphInstance) -> Result<f64, EvalError> {
    let m = g.edge_count();
    if m > ORACLE_GUARD {
        return Err(EvalError::Guard {
            what: "edge count",
            value: m,
            limit: ORACLE_GUARD,
        });
    }
    let mut memo = HashMap::new();
    oracle_value(g, &g.fresh_belief(), g.budget, &mut memo)
}

fn oracle_value(
    g: &GraphInstance,
    b: &Belief,
    budget: usize,
    memo: &mut HashMap<(u32, usize), f64>,
) -> Result<f64, EvalError> {
    let hidden: Vec<_> = b.hidden_edges().collect();
    // Budget beyond the hidden count never binds.
    let budget = budget.min(hidden.len());
    if budget == 0 || !certificate_status(g, b)?.is_open() {
        return Ok(0.0);
    }
    let key = (encode(b), budget);
    if let Some(&v) = memo.get(&key) {
        return Ok(v);
    }
    let mut best = f64::INFINITY;
    for e in hidden {
        let on = oracle_value(g, &b.with(e, EdgeState::On), budget - 1, memo)?;
        let off = oracle_value(g, &b.with(e, EdgeState::Off), budget - 1, memo)?;
        best = best.min(1.0 + g.p * on + (1.0 - g.p) * off);
    }
    memo.insert(key, best);
    Ok(best)
}

fn encode(b: &Belief) -> u32 {
    b.states().iter().fold(0, |acc, s| {
        acc * 3
            + match s {
                EdgeState::Hidden => 0,
                EdgeState::On => 1,
                EdgeState::Off => 2,
            }
    })
}

/// Index of the median of `costs` (ties broken by position), the middle one
/// after sorting.
pub fn median_index(costs: &[f64]) -> Option<usize> {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    order.get(costs.len().checked_sub(1)? / 2).copied()
}

/// One CSV row per result: `name,method,vectors,expected_queries,path,cut,limit,stopped`.
pub fn results_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a EvaluationResult)>) -> String {
    let mut out = String::from("name,method,vectors,expected_queries,path,cut,limit,stopped\n");
    for (name, r) in rows {
        let (method, vectors) = match r.method {
            Method::Exhaustive { vectors } => (String::from("exhaustive"), vectors),
            Method::Sampled { vectors, seed } => (format!("sampled:{seed}"), vectors),
        };
        let o = &r.outcomes;
        let _ = writeln!(
            out,
            "{name},{method},{vectors},{},{},{},{},{}",
            r.expected_queries, o.path, o.cut, o.limit, o.stopped
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{triangle, serial2, single_edge};
    use crate::heuristics::{HeuristicKind, HeuristicPolicy};
    use crate::policy::{run_policy, Proposal};
    use crate::tree::{PolicyTree, ResponseVector};

    fn triangle_opt(g: &GraphInstance) -> PolicyTree {
        PolicyTree::from_text("Q:a(DONE,Q:b(Q:c(DONE,DONE),DONE))", &g.graph, g.p).unwrap()
    }

    /// Sum over explicit response vectors through `run_policy`.
    fn by_vectors(policy: &dyn Policy, g: &GraphInstance) -> f64 {
        ResponseVector::all(g.budget)
            .map(|r| r.probability(g.p) * run_policy(policy, g, &r).unwrap().queries as f64)
            .sum()
    }

    #[test]
    fn triangle_examples() {
        let g = triangle();
        let r = evaluate_exhaustive(&triangle_opt(&g), &g).unwrap();
        assert_eq!(r.expected_queries, 1.75);
        assert_eq!(r.method, Method::Exhaustive { vectors: 4 });
        assert_eq!(r.histogram, [0.0, 0.5, 0.25, 0.25]);
        assert_eq!((r.outcomes.path, r.outcomes.cut, r.outcomes.limit), (0.5, 0.25, 0.25));
        let h1 = HeuristicPolicy::new(HeuristicKind::H1, &g);
        assert_eq!(evaluate_exhaustive(&h1, &g).unwrap().expected_queries, 1.75);
        let one = g.with_budget(1);
        let r = evaluate_exhaustive(&h1, &one).unwrap();
        assert_eq!(r.expected_queries, 1.0);
        assert_eq!(r.outcomes.limit, 1.0);
    }

    #[test]
    fn matches_vector_playback() {
        for g in [triangle(), serial2(), single_edge(), triangle().with_budget(2)] {
            for kind in [HeuristicKind::H1, HeuristicKind::AdaptiveSubmodular, HeuristicKind::MinSc] {
                let h = HeuristicPolicy::new(kind, &g);
                let r = evaluate_exhaustive(&h, &g).unwrap();
                assert!((r.expected_queries - by_vectors(&h, &g)).abs() < 1e-12);
                let mass: f64 = r.histogram.iter().sum();
                assert!((mass - 1.0).abs() < 1e-12);
                let mean: f64 = r.histogram.iter().enumerate().map(|(k, f)| k as f64 * f).sum();
                assert!((mean - r.expected_queries).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_examples() {
        let g = triangle();
        assert_eq!(dp_oracle(&g).unwrap(), 1.75);
        assert_eq!(dp_oracle(&g.with_budget(2)).unwrap(), 1.5);
        assert_eq!(dp_oracle(&g.with_budget(1)).unwrap(), 1.0);
        assert_eq!(dp_oracle(&serial2()).unwrap(), 1.5);
        assert_eq!(dp_oracle(&g.with_budget(0)).unwrap(), 0.0);
    }

    #[test]
    fn guards() {
        let mut gb = crate::graph::GraphBuilder::new(true);
        for i in 0..30 {
            gb.edge(&format!("e{i}"), &format!("v{i}"), &format!("v{}", i + 1));
        }
        let g = GraphInstance::from_labels(gb.build().unwrap(), "v0", "v30", 0.5, 26).unwrap();
        let h1 = HeuristicPolicy::new(HeuristicKind::H1, &g);
        assert!(matches!(evaluate_exhaustive(&h1, &g), Err(EvalError::Guard { limit: 25, .. })));
        assert!(matches!(dp_oracle(&g), Err(EvalError::Guard { limit: 14, .. })));
    }

    #[test]
    fn prefixes() {
        assert_eq!(sample_prefixes(7, 0).len(), 4);
        assert_eq!(sample_prefixes(14, 0).len(), 512);
        let a = sample_prefixes(20, 0);
        assert_eq!(a.len(), 1000);
        assert!(a.iter().all(|v| v.len() == 15));
        assert_eq!(a, sample_prefixes(20, 0));
        assert_ne!(a, sample_prefixes(20, 1));
        let distinct: HashSet<_> = a.iter().collect();
        assert_eq!(distinct.len(), 1000);
    }

    /// Queries `e0, e1, ...` in order regardless of answers.
    struct Serial(usize);

    impl Policy for Serial {
        fn propose(&self, g: &GraphInstance, b: &Belief, _: usize) -> Result<Option<Proposal>, PolicyError> {
            let next = b.hidden_edges().next().filter(|e| e.index() < self.0);
            let _ = g;
            Ok(next.map(Proposal::new))
        }
    }

    fn chain(n: usize, budget: usize) -> GraphInstance {
        let mut gb = crate::graph::GraphBuilder::new(true);
        for i in 0..n {
            gb.edge(&format!("e{i}"), &format!("v{i}"), &format!("v{}", i + 1));
        }
        GraphInstance::from_labels(gb.build().unwrap(), "v0", &format!("v{n}"), 0.5, budget).unwrap()
    }

    #[test]
    fn sampled_vector_count_and_determinism() {
        let g = chain(22, 20);
        let h1 = HeuristicPolicy::new(HeuristicKind::H1, &g);
        let a = evaluate_sampled(&h1, &g, 0).unwrap();
        assert_eq!(a.method, Method::Sampled { vectors: 16000, seed: 0 });
        let b = evaluate_sampled(&h1, &g, 0).unwrap();
        assert_eq!(a.expected_queries.to_bits(), b.expected_queries.to_bits());
        assert!(a.expected_queries <= 20.0);
    }

    #[test]
    fn sampled_equals_exhaustive_when_prefixes_are_complete() {
        for budget in 6..=14 {
            let g = chain(14, budget);
            let early = Serial(4);
            let e = evaluate_exhaustive(&early, &g).unwrap();
            let s = evaluate_sampled(&early, &g, 0).unwrap();
            assert_eq!(e.expected_queries, s.expected_queries, "B={budget}");
            let h1 = HeuristicPolicy::new(HeuristicKind::H1, &g);
            let e = evaluate_exhaustive(&h1, &g).unwrap();
            let s = evaluate_sampled(&h1, &g, 0).unwrap();
            assert!((e.expected_queries - s.expected_queries).abs() < 1e-12, "B={budget}");
        }
        let g = chain(3, 3);
        let s = evaluate_sampled(&Serial(4), &g, 0).unwrap();
        assert_eq!(s.method, Method::Exhaustive { vectors: 4 });
    }

    #[test]
    fn median() {
        assert_eq!(median_index(&[3.0, 1.0, 2.0]), Some(2));
        assert_eq!(median_index(&[1.0, 1.0, 1.0, 0.0]), Some(0));
        assert_eq!(median_index(&[]), None);
    }

    #[test]
    fn csv_shapes() {
        let g = triangle();
        let r = evaluate_exhaustive(&triangle_opt(&g), &g).unwrap();
        assert_eq!(r.histogram_csv(), "count,frequency\n0,0\n1,0.5\n2,0.25\n3,0.25\n");
        let rows = results_csv([("opt", &r)]);
        assert_eq!(rows.lines().nth(1).unwrap(), "opt,exhaustive,4,1.75,0.5,0.25,0.25,0");
    }
}
