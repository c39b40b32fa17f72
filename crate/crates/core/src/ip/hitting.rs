//! Exact minimum hitting set by branch and bound.

use alloc::vec::Vec;

use fixedbitset::FixedBitSet;

/// A smallest set of elements meeting every member of `sets`. Elements of
/// the first unmet set are tried in ascending order and only strictly
/// smaller solutions replace the incumbent, so the answer is deterministic.
/// Returns `None` if some set is empty.
pub fn min_hitting_set(sets: &[Vec<usize>]) -> Option<Vec<usize>> {
    let universe = sets.iter().flatten().max().map_or(0, |m| m + 1);
    let mut reduced: Vec<FixedBitSet> = Vec::new();
    let mut sorted: Vec<&Vec<usize>> = sets.iter().collect();
    sorted.sort_by_key(|s| s.len());
    for set in sorted {
        if set.is_empty() {
            return None;
        }
        let mut bits = FixedBitSet::with_capacity(universe);
        bits.extend(set.iter().copied());
        // A superset of a kept set is hit whenever the kept set is.
        if !reduced.iter().any(|r| r.is_subset(&bits)) {
            reduced.push(bits);
        }
    }
    let mut search = Search {
        sets: reduced,
        best: None,
        chosen: Vec::new(),
    };
    let chosen = FixedBitSet::with_capacity(universe);
    let banned = FixedBitSet::with_capacity(universe);
    search.run(&chosen, &banned);
    search.best.map(|mut b| {
        b.sort_unstable();
        b
    })
}

struct Search {
    sets: Vec<FixedBitSet>,
    best: Option<Vec<usize>>,
    chosen: Vec<usize>,
}

impl Search {
    /// Greedy packing of pairwise disjoint unmet sets; each needs its own
    /// element.
    fn packing_bound(&self, chosen: &FixedBitSet) -> usize {
        let mut covered = FixedBitSet::with_capacity(chosen.len());
        let mut count = 0;
        for s in &self.sets {
            if s.is_disjoint(chosen) && s.is_disjoint(&covered) {
                covered.union_with(s);
                count += 1;
            }
        }
        count
    }

    fn run(&mut self, chosen: &FixedBitSet, banned: &FixedBitSet) {
        let Some(unmet) = self.sets.iter().position(|s| s.is_disjoint(chosen)) else {
            if self.best.as_ref().is_none_or(|b| self.chosen.len() < b.len()) {
                self.best = Some(self.chosen.clone());
            }
            return;
        };
        let bound = self.chosen.len() + self.packing_bound(chosen);
        if self.best.as_ref().is_some_and(|b| bound >= b.len()) {
            return;
        }
        // An unmet set whose every element is banned cannot be hit.
        if self.sets.iter().any(|s| s.is_disjoint(chosen) && s.is_subset(banned)) {
            return;
        }
        let options: Vec<usize> = self.sets[unmet].ones().filter(|e| !banned.contains(*e)).collect();
        let mut banned = banned.clone();
        for e in options {
            let mut next = chosen.clone();
            next.insert(e);
            self.chosen.push(e);
            self.run(&next, &banned);
            self.chosen.pop();
            // Solutions containing `e` have all been seen.
            banned.insert(e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn triangle_hitting_sets() {
        // paths (a), (b,c) and cuts {a,b}, {a,c} with a=0, b=1, c=2
        assert_eq!(min_hitting_set(&[vec![0], vec![1, 2]]), Some(vec![0, 1]));
        assert_eq!(min_hitting_set(&[vec![0, 1], vec![0, 2]]), Some(vec![0]));
    }

    #[test]
    fn edge_cases() {
        assert_eq!(min_hitting_set(&[]), Some(vec![]));
        assert_eq!(min_hitting_set(&[vec![3], vec![]]), None);
    }

    #[test]
    fn matches_brute_force() {
        let sets = vec![vec![0, 1, 2], vec![2, 3], vec![3, 4], vec![4, 5, 0], vec![1, 5], vec![6, 2]];
        let got = min_hitting_set(&sets).unwrap();
        assert!(sets.iter().all(|s| s.iter().any(|e| got.contains(e))));
        let best = (0u32..1 << 7)
            .filter(|m| sets.iter().all(|s| s.iter().any(|e| m >> e & 1 == 1)))
            .map(|m| m.count_ones())
            .min()
            .unwrap();
        assert_eq!(got.len() as u32, best);
    }
}
