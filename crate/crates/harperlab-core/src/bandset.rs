//! Finite unions of disjoint closed intervals.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

/// Gaps at most this wide are closed by [`BandSet::normalize`].
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum BandError {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("operation needs a nonempty band set")]
    Empty,
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("box count at scale {0} exceeds 64 bits")]
    CountOverflow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, BandError> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(BandError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn meets(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Distance from `x` to the interval.
    pub fn dist(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BandSet {
    intervals: Vec<Interval>,
}

/// Appends `iv` to sorted output, merging when it overlaps or lies within `tol`.
fn push_merge(out: &mut Vec<Interval>, iv: Interval, tol: f64) {
    if let Some(last) = out.last_mut() {
        if iv.lo <= last.hi + tol {
            if iv.hi > last.hi {
                last.hi = iv.hi;
            }
            return;
        }
    }
    out.push(iv);
}

impl BandSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_interval(iv: Interval) -> Self {
        Self { intervals: alloc::vec![iv] }
    }

    /// Sort and merge with the global tolerance [`MERGE_TOL`].
    pub fn normalize(raw: &[Interval]) -> Result<Self, BandError> {
        Self::normalize_with_tolerance(raw, MERGE_TOL)
    }

    /// Sort and merge; gaps of width `<= tol` are closed. `tol = 0` merges only
    /// overlapping or touching intervals.
    pub fn normalize_with_tolerance(raw: &[Interval], tol: f64) -> Result<Self, BandError> {
        for iv in raw {
            Interval::new(iv.lo, iv.hi)?;
        }
        let mut v = raw.to_vec();
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        let mut out = Vec::with_capacity(v.len());
        for iv in v {
            push_merge(&mut out, iv, tol);
        }
        Ok(Self { intervals: out })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, BandError> {
        let raw: Vec<Interval> = pairs.iter().map(|&(lo, hi)| Interval { lo, hi }).collect();
        Self::normalize(&raw)
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Interval> {
        self.intervals.iter()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(Interval::len).sum()
    }

    pub fn hull(&self) -> Option<Interval> {
        Some(Interval { lo: self.intervals.first()?.lo, hi: self.intervals.last()?.hi })
    }

    pub fn diameter(&self) -> f64 {
        self.hull().map_or(0.0, |h| h.len())
    }

    pub fn max_interval_len(&self) -> f64 {
        self.intervals.iter().map(Interval::len).fold(0.0, f64::max)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.dist(x) == 0.0
    }

    /// Distance from `x` to the set; infinite for the empty set.
    pub fn dist(&self, x: f64) -> f64 {
        let v = &self.intervals;
        if v.is_empty() {
            return f64::INFINITY;
        }
        let i = v.partition_point(|iv| iv.hi < x);
        let mut d = f64::INFINITY;
        if i < v.len() {
            d = v[i].dist(x);
        }
        if i > 0 {
            d = d.min(v[i - 1].dist(x));
        }
        d
    }

    /// `self` is contained in `other` as sets.
    pub fn is_subset_of(&self, other: &BandSet) -> bool {
        self.is_subset_within(other, 0.0)
    }

    /// Containment after widening every interval of `other` by `tol`.
    pub fn is_subset_within(&self, other: &BandSet, tol: f64) -> bool {
        self.intervals.iter().all(|iv| {
            let i = other.intervals.partition_point(|o| o.hi + tol < iv.hi);
            i < other.intervals.len() && other.intervals[i].lo - tol <= iv.lo && iv.hi <= other.intervals[i].hi + tol
        })
    }

    /// Image under `x -> c x + t` with `c > 0`.
    pub fn affine(&self, c: f64, t: f64) -> BandSet {
        let v = self.intervals.iter().map(|iv| Interval { lo: c * iv.lo + t, hi: c * iv.hi + t }).collect();
        BandSet { intervals: v }
    }

    pub fn reflect(&self) -> BandSet {
        let v = self.intervals.iter().rev().map(|iv| Interval { lo: -iv.hi, hi: -iv.lo }).collect();
        BandSet { intervals: v }
    }

    /// Closes every gap of width below `width`. The result lies within
    /// Hausdorff distance `width / 2` of `self`.
    pub fn coarsen(&self, width: f64) -> BandSet {
        let mut out = Vec::with_capacity(self.intervals.len());
        for &iv in &self.intervals {
            if let Some(last) = out.last_mut() {
                let last: &mut Interval = last;
                if iv.lo - last.hi < width {
                    last.hi = iv.hi;
                    continue;
                }
            }
            out.push(iv);
        }
        BandSet { intervals: out }
    }

    /// Bounded complementary intervals between consecutive bands, clipped to
    /// `within`.
    pub fn gaps(&self, within: Interval) -> BandSet {
        let mut out = Vec::new();
        for w in self.intervals.windows(2) {
            let lo = w[0].hi.max(within.lo);
            let hi = w[1].lo.min(within.hi);
            if lo < hi {
                out.push(Interval { lo, hi });
            }
        }
        BandSet { intervals: out }
    }

    /// Minimal number of closed length-`r` intervals covering the set, by the
    /// greedy left-to-right sweep.
    pub fn box_count(&self, r: f64) -> Result<u64, BandError> {
        if !(r > 0.0) {
            return Err(BandError::NonPositiveScale(r));
        }
        let slack = 1e-9 * r;
        let mut count = 0u64;
        let mut start = f64::NEG_INFINITY;
        let mut run = 0u64;
        let mut end = f64::NEG_INFINITY;
        for iv in &self.intervals {
            if iv.hi <= end + slack {
                continue;
            }
            if iv.lo > end + slack {
                start = iv.lo;
                run = 1;
                count += 1;
                end = start + r;
            }
            if iv.hi > end + slack {
                let extra = ((iv.hi - end - slack) / r).ceil().max(1.0);
                if extra >= u64::MAX as f64 {
                    return Err(BandError::CountOverflow(r));
                }
                let extra = extra as u64;
                run = run.checked_add(extra).ok_or(BandError::CountOverflow(r))?;
                count = count.checked_add(extra).ok_or(BandError::CountOverflow(r))?;
                end = start + run as f64 * r;
            }
        }
        Ok(count)
    }

    /// Two-sided Hausdorff distance.
    pub fn hausdorff_distance(&self, other: &BandSet) -> Result<f64, BandError> {
        if self.is_empty() || other.is_empty() {
            return Err(BandError::Empty);
        }
        Ok(one_sided(self, other).max(one_sided(other, self)))
    }

    /// `A + B` as the sorted merge of all pairwise interval sums.
    ///
    /// The pairs are streamed through a heap keyed by left endpoint, so memory
    /// stays linear in the operands and the output while time is
    /// `O(|A| |B| log |A|)`.
    pub fn minkowski_sum(&self, other: &BandSet) -> Result<BandSet, BandError> {
        self.minkowski_sum_with_tolerance(other, MERGE_TOL)
    }

    pub fn minkowski_sum_with_tolerance(&self, other: &BandSet, tol: f64) -> Result<BandSet, BandError> {
        if self.is_empty() || other.is_empty() {
            return Err(BandError::Empty);
        }
        let (a, b) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let a = &a.intervals;
        let b = &b.intervals;
        let mut heap: BinaryHeap<Head> = a
            .iter()
            .enumerate()
            .map(|(i, ai)| Head { lo: ai.lo + b[0].lo, i, j: 0 })
            .collect();
        let mut out: Vec<Interval> = Vec::new();
        while let Some(Head { lo, i, j }) = heap.pop() {
            push_merge(&mut out, Interval { lo, hi: a[i].hi + b[j].hi }, tol);
            // skip the pairs of this row that are already swallowed
            let mut j = j + 1;
            let cur = out[out.len() - 1].hi;
            while j < b.len() && a[i].hi + b[j].hi <= cur {
                j += 1;
            }
            if j < b.len() {
                heap.push(Head { lo: a[i].lo + b[j].lo, i, j });
            }
        }
        Ok(BandSet { intervals: out })
    }
}

/// `sup_{a in A} dist(a, B)`; attained at an endpoint of A or at the midpoint
/// of a gap of B lying inside A.
fn one_sided(a: &BandSet, b: &BandSet) -> f64 {
    let mut d = 0.0f64;
    for iv in &a.intervals {
        d = d.max(b.dist(iv.lo)).max(b.dist(iv.hi));
    }
    let bv = &b.intervals;
    for w in bv.windows(2) {
        let m = 0.5 * (w[0].hi + w[1].lo);
        if a.contains(m) {
            d = d.max(b.dist(m));
        }
    }
    d
}

#[derive(Debug, Clone, Copy)]
struct Head {
    lo: f64,
    i: usize,
    j: usize,
}

impl PartialEq for Head {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Head {}

impl PartialOrd for Head {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Head {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, o: &Self) -> Ordering {
        o.lo.total_cmp(&self.lo).then(o.i.cmp(&self.i))
    }
}

/// Level-`n` middle-thirds Cantor prefractal on `[0, 1]`.
pub fn cantor_prefractal(n: u32) -> BandSet {
    let mut v = alloc::vec![Interval { lo: 0.0, hi: 1.0 }];
    for _ in 0..n {
        let mut next = Vec::with_capacity(2 * v.len());
        for iv in &v {
            let t = iv.len() / 3.0;
            next.push(Interval { lo: iv.lo, hi: iv.lo + t });
            next.push(Interval { lo: iv.hi - t, hi: iv.hi });
        }
        v = next;
    }
    BandSet { intervals: v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn bs(p: &[(f64, f64)]) -> BandSet {
        BandSet::from_pairs(p).unwrap()
    }

    fn pairs(s: &BandSet) -> Vec<(f64, f64)> {
        s.iter().map(|iv| (iv.lo, iv.hi)).collect()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(pairs(&bs(&[(0.0, 1.0), (1.0, 2.0)])), vec![(0.0, 2.0)]);
        assert_eq!(pairs(&bs(&[(3.0, 4.0), (0.0, 1.0)])), vec![(0.0, 1.0), (3.0, 4.0)]);
        assert_eq!(pairs(&bs(&[(0.0, 2.0), (1.0, 3.0)])), vec![(0.0, 3.0)]);
        assert_eq!(
            BandSet::from_pairs(&[(1.0, 0.0)]),
            Err(BandError::InvalidInterval { lo: 1.0, hi: 0.0 })
        );
        let s = BandSet::normalize_with_tolerance(&[Interval::point(0.0), Interval::point(1e-13)], 0.0).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn measure_examples() {
        assert_eq!(bs(&[(0.0, 1.0), (2.0, 2.5)]).measure(), 1.5);
        assert_eq!(BandSet::empty().measure(), 0.0);
        let s = bs(&[(0.0, 1.0), (2.0, 2.5)]);
        let z = bs(&[(0.0, 0.0)]);
        assert_eq!(s.minkowski_sum(&z).unwrap().measure(), 1.5);
    }

    #[test]
    fn minkowski_examples() {
        let u = bs(&[(0.0, 1.0)]);
        assert_eq!(pairs(&u.minkowski_sum(&u).unwrap()), vec![(0.0, 2.0)]);
        let e = 0.25;
        let a = bs(&[(0.0, e), (1.0, 1.0 + e)]);
        assert_eq!(
            pairs(&a.minkowski_sum(&a).unwrap()),
            vec![(0.0, 2.0 * e), (1.0, 1.0 + 2.0 * e), (2.0, 2.0 + 2.0 * e)]
        );
        assert_eq!(a.minkowski_sum(&BandSet::empty()), Err(BandError::Empty));
    }

    #[test]
    fn minkowski_matches_pairwise_oracle() {
        let a = bs(&[(0.0, 0.1), (0.3, 0.35), (0.9, 1.0), (2.0, 2.01)]);
        let b = bs(&[(-1.0, -0.95), (0.0, 0.02), (0.5, 0.7)]);
        let mut raw = Vec::new();
        for x in a.iter() {
            for y in b.iter() {
                raw.push(Interval { lo: x.lo + y.lo, hi: x.hi + y.hi });
            }
        }
        assert_eq!(a.minkowski_sum(&b).unwrap(), BandSet::normalize(&raw).unwrap());
        assert_eq!(a.minkowski_sum(&b).unwrap(), b.minkowski_sum(&a).unwrap());
    }

    #[test]
    fn cantor_sum_is_interval() {
        for n in 0..=10 {
            let c = cantor_prefractal(n);
            let s = c.minkowski_sum(&c).unwrap();
            assert_eq!(s.len(), 1, "n = {n}");
            assert!((s.intervals()[0].lo).abs() < 1e-12 && (s.intervals()[0].hi - 2.0).abs() < 1e-12);
        }
    }

    /// Smallest cover found by trying every placement anchored at a point of
    /// the set; exhaustive over anchors at band left ends and cover ends.
    /// Largest number of set points pairwise more than `r` apart. On the
    /// line this equals the minimal number of length-`r` covers.
    fn packing_number(s: &BandSet, r: f64) -> u64 {
        let mut count = 0u64;
        let mut p = f64::NEG_INFINITY;
        loop {
            let bound = p + r * (1.0 + 1e-9);
            let next = s.iter().find(|iv| iv.hi > bound).map(|iv| iv.lo.max(bound));
            match next {
                Some(x) => {
                    // x is in the set unless bound fell into a gap
                    p = x.max(bound);
                    count += 1;
                    if !p.is_finite() {
                        return count;
                    }
                }
                None => return count,
            }
        }
    }

    #[test]
    fn box_count_examples() {
        assert_eq!(bs(&[(0.0, 1.0)]).box_count(0.125).unwrap(), 8);
        assert_eq!(bs(&[(0.7, 0.7)]).box_count(1e-3).unwrap(), 1);
        assert_eq!(bs(&[(0.7, 0.7)]).box_count(10.0).unwrap(), 1);
        assert!(bs(&[(0.0, 1.0)]).box_count(0.0).is_err());
        for n in 0..=6 {
            let c = cantor_prefractal(n);
            let r = 3f64.powi(-(n as i32));
            assert_eq!(c.box_count(r).unwrap(), 1 << n);
            assert_eq!(packing_number(&c, r), 1 << n);
        }
        for n in 7..=12 {
            let c = cantor_prefractal(n);
            assert_eq!(c.box_count(3f64.powi(-(n as i32))).unwrap(), 1 << n);
        }
    }

    #[test]
    fn greedy_matches_brute_force() {
        let s = bs(&[(0.0, 0.3), (0.45, 0.5), (0.62, 0.63), (1.0, 1.7), (1.75, 1.8)]);
        for r in [0.05, 0.1, 0.17, 0.25, 0.4, 0.7, 1.1, 2.0] {
            assert_eq!(s.box_count(r).unwrap(), packing_number(&s, r), "r = {r}");
        }
    }

    #[test]
    fn hausdorff_examples() {
        let a = bs(&[(0.0, 1.0)]);
        assert_eq!(a.hausdorff_distance(&a).unwrap(), 0.0);
        assert_eq!(a.hausdorff_distance(&bs(&[(2.0, 3.0)])).unwrap(), 2.0);
        let b = bs(&[(0.0, 1.0), (1.5, 1.5)]);
        assert_eq!(a.hausdorff_distance(&b).unwrap(), 0.5);
        assert_eq!(b.hausdorff_distance(&a).unwrap(), 0.5);
        // gap midpoint of B inside A
        let c = bs(&[(0.0, 0.1), (0.9, 1.0)]);
        assert!((a.hausdorff_distance(&c).unwrap() - 0.4).abs() < 1e-15);
        assert!(a.hausdorff_distance(&BandSet::empty()).is_err());
    }

    #[test]
    fn gaps_examples() {
        let s = bs(&[(0.0, 1.0), (2.0, 3.0)]);
        assert_eq!(pairs(&s.gaps(Interval { lo: 0.0, hi: 3.0 })), vec![(1.0, 2.0)]);
        assert!(bs(&[(0.0, 3.0)]).gaps(Interval { lo: 0.0, hi: 3.0 }).is_empty());
        assert_eq!(pairs(&s.gaps(Interval { lo: 1.5, hi: 3.0 })), vec![(1.5, 2.0)]);
    }

    #[test]
    fn coarsen_and_subset() {
        let s = bs(&[(0.0, 1.0), (1.05, 2.0), (3.0, 4.0)]);
        let c = s.coarsen(0.1);
        assert_eq!(pairs(&c), vec![(0.0, 2.0), (3.0, 4.0)]);
        assert!(s.is_subset_of(&c));
        assert!(!c.is_subset_of(&s));
        assert!(c.hausdorff_distance(&s).unwrap() <= 0.05 + 1e-15);
    }
}
