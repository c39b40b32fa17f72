//! Path and cut samples for the sample-based heuristics.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use hashbrown::HashSet;

use crate::graph::{
    min_hidden_cut, min_hidden_cut_avoiding, min_hidden_path, min_hidden_path_avoiding, Belief, CertKind,
    Certificate, EdgeId, EdgeState, GraphInstance,
};

pub const DEFAULT_HORIZON: usize = 10;
pub const DEFAULT_TARGET: usize = 100;

/// Exclusion sets examined per requested certificate before giving up on
/// reaching the target.
const EXPLORE_FACTOR: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Source {
    H1Tree,
    Exclusion,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleSets {
    pub paths: Vec<Certificate>,
    pub cuts: Vec<Certificate>,
    pub path_sources: Vec<Source>,
    pub cut_sources: Vec<Source>,
}

impl SampleSets {
    fn add(&mut self, c: Certificate, source: Source) -> bool {
        let (list, sources) = match c.kind {
            CertKind::Path => (&mut self.paths, &mut self.path_sources),
            CertKind::Cut => (&mut self.cuts, &mut self.cut_sources),
        };
        if list.contains(&c) {
            return false;
        }
        list.push(c);
        sources.push(source);
        true
    }

    pub fn live_paths<'a>(&'a self, b: &'a Belief) -> impl Iterator<Item = &'a Certificate> + 'a {
        self.paths.iter().filter(move |c| !c.is_dead(b))
    }

    pub fn live_cuts<'a>(&'a self, b: &'a Belief) -> impl Iterator<Item = &'a Certificate> + 'a {
        self.cuts.iter().filter(move |c| !c.is_dead(b))
    }
}

/// Paths and cuts seen by H1 within `horizon` queries of `b`, then more
/// minimum-hidden paths (and cuts) found by excluding 1, 2, ... edges of
/// those already found until `target` of each kind exist.
pub fn generate_samples(g: &GraphInstance, b: &Belief, horizon: usize, target: usize) -> SampleSets {
    let mut sets = SampleSets::default();
    h1_tree(g, b, horizon, &mut sets);
    exclusion(g, b, target, CertKind::Path, &mut sets);
    exclusion(g, b, target, CertKind::Cut, &mut sets);
    sets
}

fn h1_tree(g: &GraphInstance, b: &Belief, depth: usize, sets: &mut SampleSets) {
    if depth == 0 {
        return;
    }
    let (Some((path, _)), Some((cut, _))) = (min_hidden_path(g, b), min_hidden_cut(g, b)) else {
        return;
    };
    let e = cut.edges.iter().copied().filter(|&e| b.is_hidden(e) && path.contains(e)).min();
    sets.add(path, Source::H1Tree);
    sets.add(cut, Source::H1Tree);
    if let Some(e) = e {
        h1_tree(g, &b.with(e, EdgeState::On), depth - 1, sets);
        h1_tree(g, &b.with(e, EdgeState::Off), depth - 1, sets);
    }
}

fn exclusion(g: &GraphInstance, b: &Belief, target: usize, kind: CertKind, sets: &mut SampleSets) {
    let find = |x: &[EdgeId]| match kind {
        CertKind::Path => min_hidden_path_avoiding(g, b, x),
        CertKind::Cut => min_hidden_cut_avoiding(g, b, x),
    };
    let count = |s: &SampleSets| match kind {
        CertKind::Path => s.paths.len(),
        CertKind::Cut => s.cuts.len(),
    };
    let mut seen: HashSet<Vec<EdgeId>> = HashSet::new();
    let mut queue = VecDeque::from([Vec::new()]);
    seen.insert(Vec::new());
    let mut explored = 0;
    while let Some(x) = queue.pop_front() {
        if count(sets) >= target || explored >= target * EXPLORE_FACTOR {
            break;
        }
        explored += 1;
        let Some((c, _)) = find(&x) else {
            continue;
        };
        for &e in &c.edges {
            // Revealed edges are fixed; excluding them finds nothing new.
            if !b.is_hidden(e) {
                continue;
            }
            let mut next = x.clone();
            next.push(e);
            next.sort_unstable();
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
        sets.add(c, Source::Exclusion);
    }
}
