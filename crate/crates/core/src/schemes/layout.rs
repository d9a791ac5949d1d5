//! Field-free description of which response patterns a scheme can decode.
//!
//! The simulator and the brute-force threshold sweeps only need this, so it
//! is kept apart from the encoders.

use super::product::peel;
use crate::exec::Exec;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Any `needed` distinct responses decode.
    Poly { workers: usize, needed: usize },
    /// `groups` groups of `per_group` workers; each group needs `m` responses.
    Mds1d { groups: usize, per_group: usize, m: usize },
    /// `side x side` grid decoded by row/column peeling.
    Product { side: usize, m: usize },
    /// The first `participants` workers must all respond.
    Uncoded { workers: usize, participants: usize },
}

impl Layout {
    pub fn workers(&self) -> usize {
        match *self {
            Layout::Poly { workers, .. } | Layout::Uncoded { workers, .. } => workers,
            Layout::Mds1d { groups, per_group, .. } => groups * per_group,
            Layout::Product { side, .. } => side * side,
        }
    }

    /// Workers that are sent a share.
    pub fn active_workers(&self) -> usize {
        match *self {
            Layout::Uncoded { participants, .. } => participants,
            _ => self.workers(),
        }
    }

    /// Decodability of a response mask indexed by worker id.
    pub fn decodable_mask(&self, responded: &[bool]) -> bool {
        debug_assert_eq!(responded.len(), self.workers());
        match *self {
            Layout::Poly { needed, .. } => responded.iter().filter(|&&r| r).count() >= needed,
            Layout::Mds1d { per_group, m, .. } => responded
                .chunks(per_group)
                .all(|group| group.iter().filter(|&&r| r).count() >= m),
            Layout::Product { side, m } => {
                let mut known = responded.to_vec();
                peel(side, m, &mut known).complete
            }
            Layout::Uncoded { participants, .. } => responded[..participants].iter().all(|&r| r),
        }
    }

    /// Decodability of a set of worker ids; duplicates and ids outside the
    /// layout are ignored.
    pub fn decodable_ids(&self, responded: &[usize]) -> bool {
        let mut mask = vec![false; self.workers()];
        for &id in responded {
            if let Some(slot) = mask.get_mut(id) {
                *slot = true;
            }
        }
        self.decodable_mask(&mask)
    }

    /// Worst-case recovery threshold by exhaustive search over all `2^N`
    /// response patterns: one more than the largest undecodable pattern.
    pub fn brute_force_threshold_with(&self, exec: Exec) -> usize {
        let workers = self.workers();
        assert!(workers <= 24, "exhaustive sweep over {workers} workers is too large");
        let total = 1usize << workers;
        let chunk = 1usize << workers.saturating_sub(6).min(12);
        let largest_bad = exec.map_range(total.div_ceil(chunk), |c| {
            let mut mask = vec![false; workers];
            let mut worst = None;
            for bits in c * chunk..((c + 1) * chunk).min(total) {
                for (i, slot) in mask.iter_mut().enumerate() {
                    *slot = bits >> i & 1 == 1;
                }
                if !self.decodable_mask(&mask) {
                    let size = bits.count_ones() as usize;
                    worst = Some(worst.map_or(size, |w: usize| w.max(size)));
                }
            }
            worst
        });
        largest_bad.into_iter().flatten().max().map_or(0, |w| w + 1)
    }

    pub fn brute_force_threshold(&self) -> usize {
        self.brute_force_threshold_with(Exec::default())
    }

    /// Size of the smallest decodable pattern, by exhaustive search.
    pub fn min_decodable_size(&self) -> Option<usize> {
        let workers = self.workers();
        assert!(workers <= 24);
        let mut mask = vec![false; workers];
        (0..1usize << workers)
            .filter(|&bits| {
                for (i, slot) in mask.iter_mut().enumerate() {
                    *slot = bits >> i & 1 == 1;
                }
                self.decodable_mask(&mask)
            })
            .map(|bits| bits.count_ones() as usize)
            .min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_predicate() {
        let l = Layout::Poly { workers: 5, needed: 4 };
        assert!(l.decodable_ids(&[1, 2, 3, 4]));
        assert!(!l.decodable_ids(&[1, 2, 3]));
        assert!(!l.decodable_ids(&[1, 1, 2, 3]));
        assert!(Layout::Poly { workers: 1, needed: 1 }.decodable_ids(&[0]));
        assert_eq!(l.brute_force_threshold(), 4);
    }

    #[test]
    fn uncoded_needs_every_participant() {
        let l = Layout::Uncoded { workers: 5, participants: 4 };
        assert!(l.decodable_ids(&[0, 1, 2, 3]));
        assert!(!l.decodable_ids(&[0, 1, 2, 4]));
    }

    #[test]
    fn sequential_and_parallel_sweeps_agree() {
        let l = Layout::Product { side: 4, m: 2 };
        assert_eq!(
            l.brute_force_threshold_with(Exec::Sequential),
            l.brute_force_threshold_with(Exec::Parallel)
        );
    }

    #[test]
    fn decodability_is_monotone() {
        for l in [
            Layout::Poly { workers: 8, needed: 4 },
            Layout::Mds1d { groups: 2, per_group: 4, m: 2 },
            Layout::Product { side: 3, m: 2 },
            Layout::Uncoded { workers: 9, participants: 4 },
        ] {
            let n = l.workers();
            let mut mask = vec![false; n];
            for bits in 0..1usize << n {
                for (i, s) in mask.iter_mut().enumerate() {
                    *s = bits >> i & 1 == 1;
                }
                if !l.decodable_mask(&mask) {
                    continue;
                }
                for extra in 0..n {
                    let mut sup = mask.clone();
                    sup[extra] = true;
                    assert!(l.decodable_mask(&sup), "{l:?} {bits:b} + {extra}");
                }
            }
        }
    }
}
