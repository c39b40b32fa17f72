//! Depth-first branch and bound over node labels.
//!
//! Once a node's label is fixed, its two subtrees interact only through the
//! edges already queried on the route and the certificates still alive, so
//! each subtree is solved independently and memoized on
//! `(node, used edges, live paths, live cuts)`. Done and Limit come before
//! any query; queries are explored in order of a lower bound on their cost
//! and among equal costs the smallest edge id wins, which yields the
//! lexicographically smallest optimum in breadth-first node order.

use alloc::vec;
use alloc::vec::Vec;

use core::hash::{BuildHasher, Hasher};

use fixedbitset::FixedBitSet;
use hashbrown::{DefaultHashBuilder, HashMap};

use super::{Capabilities, IpInstance, IpSolution, SolverBackend};
use crate::error::SolveError;
use crate::tree::{reach_probs, NodeLabel, PolicyTree};

/// Slack added to child cost limits so that rounding in the subtraction never
/// discards a tie.
const SLACK: f64 = 1e-13;
const TIE: f64 = crate::COST_TOL;

#[derive(Clone, Copy, Debug, Default)]
pub struct StructuredBackend;

impl SolverBackend for StructuredBackend {
    fn name(&self) -> &str {
        "bnb"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            max_variables: None,
            lex_tie_break: true,
        }
    }

    fn solve(&self, ip: &IpInstance, stop: &dyn Fn() -> bool) -> Result<IpSolution, SolveError> {
        let mut search = Search::new(ip, stop);
        let root = search.root_state();
        let objective = search.solve(0, &root, f64::INFINITY)?.ok_or(SolveError::Infeasible)?;
        let mut labels = vec![NodeLabel::Done; ip.structure.len()];
        search.reconstruct(0, &root, &mut labels);
        let tree = PolicyTree::new(ip.structure.clone(), labels, ip.p).map_err(|_| SolveError::Infeasible)?;
        Ok(IpSolution {
            values: ip.encode(&tree),
            objective,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Choice {
    Done,
    Limit,
    Query(usize),
}

#[derive(Clone, Copy, Debug)]
enum Entry {
    Exact(f64, Choice),
    /// The optimum exceeds this value (or the subtree is infeasible).
    Above(f64),
}

/// Used edges, live paths and live cuts, packed into one set as the bit
/// ranges `[0, m)`, `[m, m + paths)` and `[m + paths, ..)`.
type State = FixedBitSet;

struct Search<'a> {
    ip: &'a IpInstance,
    stop: &'a dyn Fn() -> bool,
    probs: Vec<f64>,
    /// Per edge, the state bits of the paths / cuts / certificates it meets.
    edge_paths: Vec<FixedBitSet>,
    edge_cuts: Vec<FixedBitSet>,
    edge_certs: Vec<FixedBitSet>,
    /// Per certificate, the state bits of its edges.
    path_edges: Vec<FixedBitSet>,
    cut_edges: Vec<FixedBitSet>,
    paths_at: usize,
    cuts_at: usize,
    bits: usize,
    /// Scratch for `hits_needed`.
    parts: Vec<(usize, usize)>,
    taken: Vec<usize>,
    hasher: DefaultHashBuilder,
    memo: HashMap<(usize, State), Entry>,
    tails: HashMap<(usize, usize, usize), f64>,
    calls: u64,
}

impl<'a> Search<'a> {
    fn new(ip: &'a IpInstance, stop: &'a dyn Fn() -> bool) -> Self {
        let m = ip.edges.len();
        let paths_at = m;
        let cuts_at = m + ip.paths.len();
        let bits = cuts_at + ip.cuts.len();
        let membership = |certs: &[Vec<usize>], at: usize| {
            let mut sets = vec![FixedBitSet::with_capacity(bits); m];
            for (c, cert) in certs.iter().enumerate() {
                for &k in cert {
                    sets[k].insert(at + c);
                }
            }
            sets
        };
        let edge_sets = |certs: &[Vec<usize>]| {
            certs
                .iter()
                .map(|cert| {
                    let mut set = FixedBitSet::with_capacity(bits);
                    set.extend(cert.iter().copied());
                    set
                })
                .collect()
        };
        let edge_paths = membership(&ip.paths, paths_at);
        let edge_cuts = membership(&ip.cuts, cuts_at);
        let edge_certs = edge_paths.iter().zip(&edge_cuts).map(|(p, c)| p | c).collect();
        Self {
            ip,
            stop,
            probs: reach_probs(&ip.structure, ip.p),
            edge_paths,
            edge_cuts,
            edge_certs,
            path_edges: edge_sets(&ip.paths),
            cut_edges: edge_sets(&ip.cuts),
            paths_at,
            cuts_at,
            bits,
            parts: Vec::new(),
            taken: vec![0; m.div_ceil(usize::BITS as usize)],
            hasher: DefaultHashBuilder::default(),
            memo: HashMap::new(),
            tails: HashMap::new(),
            calls: 0,
        }
    }

    fn root_state(&self) -> State {
        let mut st = FixedBitSet::with_capacity(self.bits);
        st.insert_range(self.paths_at..);
        st
    }

    fn after(&self, st: &State, k: usize, on: bool) -> State {
        let mut next = st.clone();
        next.insert(k);
        if on {
            next.difference_with(&self.edge_cuts[k]);
        } else {
            next.difference_with(&self.edge_paths[k]);
        }
        next
    }

    /// Whether a first-time Done at `node` is correct.
    fn done_ok(&self, node: usize, st: &State) -> bool {
        let s = &self.ip.structure;
        if s.is_left(node) {
            !st.contains_any_in_range(self.cuts_at..)
        } else if s.is_right(node) {
            !st.contains_any_in_range(self.paths_at..self.cuts_at)
        } else {
            self.ip.paths.is_empty() || self.ip.cuts.is_empty()
        }
    }

    /// Lower bound on the queries needed to hit every live certificate:
    /// the size of a greedy packing of their unused parts, or more than the
    /// budget if one of them has no unused edge left.
    fn hits_needed(&mut self, st: &State, live: core::ops::Range<usize>, cuts: bool) -> usize {
        let cap = self.ip.budget + 1;
        let used = st.as_slice();
        let edges = if cuts { &self.cut_edges } else { &self.path_edges };
        self.parts.clear();
        for c in live.clone().filter(|&bit| st.contains(bit)) {
            let c = c - live.start;
            let size: u32 = unused_words(&edges[c], used).map(usize::count_ones).sum();
            if size == 0 {
                return cap;
            }
            self.parts.push((size as usize, c));
        }
        self.parts.sort_unstable();
        self.taken.fill(0);
        let mut n = 0;
        for &(_, c) in &self.parts {
            if unused_words(&edges[c], used).zip(&self.taken).all(|(w, t)| w & t == 0) {
                for (t, w) in self.taken.iter_mut().zip(unused_words(&edges[c], used)) {
                    *t |= w;
                }
                n += 1;
                if n == cap {
                    break;
                }
            }
        }
        n
    }

    /// Probability mass of the nodes under `node` that are reached before
    /// `on` On answers or `off` Off answers have been seen. Every route to a
    /// Done leaf collects enough answers of one kind to hit all live cuts
    /// (On) or all live paths (Off), so each such node must hold a query.
    fn tail(&mut self, node: usize, on: usize, off: usize) -> f64 {
        if on == 0 || off == 0 || self.ip.structure.depth(node) >= self.ip.budget {
            return 0.0;
        }
        if let Some(&v) = self.tails.get(&(node, on, off)) {
            return v;
        }
        let below = match self.ip.structure.children(node) {
            None => 0.0,
            Some((l, r)) => self.tail(l, on - 1, off) + self.tail(r, on, off - 1),
        };
        let v = self.probs[node] + below;
        self.tails.insert((node, on, off), v);
        v
    }

    /// Lower bound on the optimal cost of the subtree at `node`.
    fn lower_bound(&mut self, node: usize, st: &State) -> f64 {
        if self.ip.structure.depth(node) >= self.ip.budget || self.done_ok(node, st) {
            return 0.0;
        }
        let on = self.hits_needed(st, self.cuts_at..self.bits, true);
        let off = self.hits_needed(st, self.paths_at..self.cuts_at, false);
        // The node itself is open, so it queries even if one answer suffices.
        let below = match self.ip.structure.children(node) {
            None => 0.0,
            Some((l, r)) => {
                self.tail(l, on.saturating_sub(1), off) + self.tail(r, on, off.saturating_sub(1))
            }
        };
        self.probs[node] + below
    }

    /// Label and cost of nodes whose label does not depend on the search:
    /// Done and Limit nodes, and open nodes whose children (if any) can only
    /// be Done or Limit, which query their smallest unused edge.
    fn settled(&self, node: usize, st: &State) -> Option<Option<(f64, Choice)>> {
        let s = &self.ip.structure;
        let depth = s.depth(node);
        if self.done_ok(node, st) {
            return Some(Some((0.0, Choice::Done)));
        }
        if depth >= self.ip.budget {
            return Some(Some((0.0, Choice::Limit)));
        }
        if s.children(node).is_some() && depth + 1 < self.ip.budget {
            return None;
        }
        let first = (0..self.ip.edges.len()).find(|&k| !st.contains(k));
        Some(first.map(|k| (self.probs[node], Choice::Query(k))))
    }

    /// Optimal cost of the subtree at `node` if it is at most `limit`.
    fn solve(&mut self, node: usize, st: &State, limit: f64) -> Result<Option<f64>, SolveError> {
        if let Some(settled) = self.settled(node, st) {
            return Ok(settled.map(|(c, _)| c).filter(|&c| c <= limit));
        }
        let key = (node, st.clone());
        match self.memo.get(&key) {
            Some(Entry::Exact(c, _)) => return Ok((*c <= limit).then_some(*c)),
            Some(Entry::Above(lb)) if limit <= *lb => return Ok(None),
            _ => {}
        }
        self.calls += 1;
        if self.calls % 1024 == 0 && (self.stop)() {
            return Err(SolveError::Interrupted);
        }
        let prob = self.probs[node];
        let (l, r) = self.ip.structure.children(node).expect("settled covers leaves");
        let best = if self.lower_bound(node, st) > limit + SLACK {
            None
        } else {
            let unused = (0..self.ip.edges.len()).filter(|k| !st.contains(*k));
            let mut candidates = Vec::new();
            for k in self.representatives(st, unused) {
                let on = self.after(st, k, true);
                let off = self.after(st, k, false);
                let need_r = self.must_pay(r, &off);
                candidates.push((prob + self.must_pay(l, &on) + need_r, need_r, k, on, off));
            }
            // Promising queries first; ties keep the smallest id.
            candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
            let mut best: Option<(f64, usize)> = None;
            for (lo, need_r, k, on, off) in candidates {
                // An equal cost displaces the incumbent only with a smaller id.
                let bound = match best {
                    None => limit,
                    Some((b, bk)) if k < bk => b + TIE,
                    Some((b, _)) => b - TIE,
                }
                .min(limit);
                if lo > bound + SLACK {
                    continue;
                }
                let Some(left) = self.solve(l, &on, bound - prob - need_r + SLACK)? else {
                    continue;
                };
                let Some(right) = self.solve(r, &off, bound - prob - left + SLACK)? else {
                    continue;
                };
                let total = prob + left + right;
                if total <= bound + SLACK {
                    best = Some((total, k));
                }
            }
            best
        };
        let entry = match best {
            Some((c, k)) => Entry::Exact(c, Choice::Query(k)),
            None => Entry::Above(limit),
        };
        self.memo.insert(key, entry);
        Ok(best.map(|(c, _)| c))
    }

    /// Cost every labeling of `node` must pay on the node itself.
    fn must_pay(&self, node: usize, st: &State) -> f64 {
        if self.ip.structure.depth(node) >= self.ip.budget || self.done_ok(node, st) {
            0.0
        } else {
            self.probs[node]
        }
    }

    /// Smallest edge of each class of unused edges that meet the same live
    /// certificates; members of a class give mirror-image subproblems.
    fn representatives(&self, st: &State, unused: impl Iterator<Item = usize>) -> Vec<usize> {
        let live = |k: usize| self.edge_certs[k].as_slice().iter().zip(st.as_slice()).map(|(e, s)| e & s);
        // Keyed by a hash of the signature; on a collision with a different
        // signature the edge is simply kept as well.
        let mut seen: HashMap<u64, usize> = HashMap::new();
        unused
            .filter(|&k| {
                let mut h = self.hasher.build_hasher();
                live(k).for_each(|w| h.write_usize(w));
                match seen.entry(h.finish()) {
                    hashbrown::hash_map::Entry::Vacant(v) => {
                        v.insert(k);
                        true
                    }
                    hashbrown::hash_map::Entry::Occupied(o) => !live(k).eq(live(*o.get())),
                }
            })
            .collect()
    }

    fn reconstruct(&self, node: usize, st: &State, labels: &mut [NodeLabel]) {
        let s = &self.ip.structure;
        let choice = match self.settled(node, st) {
            Some(settled) => settled.expect("optimal route is feasible").1,
            None => match self.memo.get(&(node, st.clone())) {
                Some(Entry::Exact(_, c)) => *c,
                _ => unreachable!("optimal route is memoized"),
            },
        };
        match choice {
            Choice::Done => {
                let mut stack = vec![node];
                while let Some(j) = stack.pop() {
                    labels[j] = NodeLabel::Done;
                    if let Some((l, r)) = s.children(j) {
                        stack.extend([l, r]);
                    }
                }
            }
            Choice::Limit => labels[node] = NodeLabel::Limit,
            Choice::Query(k) => {
                labels[node] = NodeLabel::Query(self.ip.edges[k]);
                if let Some((l, r)) = s.children(node) {
                    self.reconstruct(l, &self.after(st, k, true), labels);
                    self.reconstruct(r, &self.after(st, k, false), labels);
                }
            }
        }
    }
}

/// Words of `set` minus `used`, over the edge range (the only bits `set` has).
fn unused_words<'s>(set: &'s FixedBitSet, used: &'s [usize]) -> impl Iterator<Item = usize> + 's {
    set.as_slice().iter().zip(used).map(|(w, u)| w & !u)
}
