//! Sample-based selection rules: greedy counting, minimum set cover and
//! adaptive submodular ranking. Each falls back to H1, flagged, when the
//! live samples give it nothing to choose from.

use alloc::vec;
use alloc::vec::Vec;

use super::{h1_next, SampleSets};
use crate::error::PolicyError;
use crate::graph::{min_hidden_cut, min_hidden_path, Belief, Certificate, EdgeId, GraphInstance};
use crate::ip::min_hitting_set;
use crate::policy::Proposal;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountVariant {
    Both,
    Path,
    Cut,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinScVariant {
    Both,
    Path,
    Cut,
}

fn fallback(g: &GraphInstance, b: &Belief) -> Result<Proposal, PolicyError> {
    Ok(Proposal::fallback(h1_next(g, b)?))
}

/// Smallest id among the maximizers of `score`, if any is positive.
fn argmax(scores: &[usize]) -> Option<EdgeId> {
    let (best, &score) = scores.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
    (score > 0).then_some(EdgeId(best as u32))
}

fn count_into<'a>(scores: &mut [usize], certs: impl Iterator<Item = &'a Certificate>, b: &Belief) {
    for c in certs {
        for &e in &c.edges {
            if b.is_hidden(e) {
                scores[e.index()] += 1;
            }
        }
    }
}

/// The hidden edge in the most live sampled certificates of the variant's
/// kinds.
pub fn greedy_count_next(
    variant: CountVariant,
    samples: &SampleSets,
    g: &GraphInstance,
    b: &Belief,
) -> Result<Proposal, PolicyError> {
    let mut scores = vec![0usize; g.edge_count()];
    if variant != CountVariant::Cut {
        count_into(&mut scores, samples.live_paths(b), b);
    }
    if variant != CountVariant::Path {
        count_into(&mut scores, samples.live_cuts(b), b);
    }
    match argmax(&scores) {
        Some(e) => Ok(Proposal::new(e)),
        None => fallback(g, b),
    }
}

fn hidden_sets<'a>(certs: impl Iterator<Item = &'a Certificate>, b: &Belief) -> Vec<Vec<usize>> {
    certs.map(|c| c.hidden_edges(b).into_iter().map(EdgeId::index).collect()).collect()
}

fn cover(certs: Vec<Vec<usize>>) -> Vec<usize> {
    if certs.is_empty() {
        return Vec::new();
    }
    min_hitting_set(&certs).unwrap_or_default()
}

/// Minimum hitting sets `E_P` of the live paths and `E_C` of the live cuts;
/// picks the smallest hidden edge of `E_P ∩ E_C` (MinSC), of `E_P` on the
/// current minimum-hidden cut (MinSC-Path), or of `E_C` on the current
/// minimum-hidden path (MinSC-Cut).
pub fn minsc_next(
    variant: MinScVariant,
    samples: &SampleSets,
    g: &GraphInstance,
    b: &Belief,
) -> Result<Proposal, PolicyError> {
    let on_path_cover = || cover(hidden_sets(samples.live_paths(b), b));
    let on_cut_cover = || cover(hidden_sets(samples.live_cuts(b), b));
    let as_ids = |c: Certificate| c.hidden_edges(b).into_iter().map(EdgeId::index).collect::<Vec<_>>();
    let (left, right) = match variant {
        MinScVariant::Both => (on_path_cover(), on_cut_cover()),
        MinScVariant::Path => (on_path_cover(), min_hidden_cut(g, b).map(|(c, _)| as_ids(c)).unwrap_or_default()),
        MinScVariant::Cut => (on_cut_cover(), min_hidden_path(g, b).map(|(c, _)| as_ids(c)).unwrap_or_default()),
    };
    let pick = left.iter().copied().filter(|e| right.contains(e)).min();
    match pick {
        Some(e) => Ok(Proposal::new(EdgeId(e as u32))),
        None => fallback(g, b),
    }
}

/// The hidden edge minimizing (live paths without it) × (live cuts without
/// it): the certificates left standing after an Off and an On answer.
pub fn adaptive_submodular_next(samples: &SampleSets, g: &GraphInstance, b: &Belief) -> Result<Proposal, PolicyError> {
    let paths: Vec<&Certificate> = samples.live_paths(b).collect();
    let cuts: Vec<&Certificate> = samples.live_cuts(b).collect();
    let mut in_paths = vec![0usize; g.edge_count()];
    let mut in_cuts = vec![0usize; g.edge_count()];
    count_into(&mut in_paths, paths.iter().copied(), b);
    count_into(&mut in_cuts, cuts.iter().copied(), b);
    let best = (0..g.edge_count())
        .filter(|&i| in_paths[i] + in_cuts[i] > 0)
        .map(|i| ((paths.len() - in_paths[i]) * (cuts.len() - in_cuts[i]), i))
        .min();
    match best {
        Some((_, i)) => Ok(Proposal::new(EdgeId(i as u32))),
        None => fallback(g, b),
    }
}
