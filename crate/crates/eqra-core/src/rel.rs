//! Binary relations on a finite base set, stored as packed bit matrices.
//!
//! A [`BinRel`] on base size `n` is an `n × n` boolean matrix with rows
//! packed into `u64` words. All operations are pure: they take references
//! and return fresh values, so relations can be shared freely across
//! threads. Composition is bitwise row-OR accumulation, which is the fast
//! path for every closure computation in this crate.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest admissible base size; guards the dense `n × n` representation.
pub const MAX_BASE_SIZE: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelError {
    #[error("base size {0} out of range (must be 1..={MAX_BASE_SIZE})")]
    BadBaseSize(usize),
    #[error("base size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("element {element} out of range for base size {n}")]
    ElementOutOfRange { element: usize, n: usize },
}

/// Number of elements of the base set; elements are the indices `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BaseSize(usize);

impl BaseSize {
    pub fn new(n: usize) -> Result<Self, RelError> {
        if n == 0 || n > MAX_BASE_SIZE {
            return Err(RelError::BadBaseSize(n));
        }
        Ok(BaseSize(n))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for BaseSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A binary relation on `{0, …, n−1}`, as a row-major packed bit matrix.
///
/// `bits[a * words_per_row + b/64]` bit `b%64` is set iff `(a, b)` is in
/// the relation. Words are padded per row; padding bits are always zero,
/// so equality and hashing are plain word comparisons.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinRel {
    n: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BinRel {
    /// The empty relation.
    pub fn empty(n: BaseSize) -> Self {
        let n = n.get();
        let words_per_row = n.div_ceil(64);
        BinRel {
            n,
            words_per_row,
            bits: vec![0; n * words_per_row],
        }
    }

    /// The diagonal relation `1'`.
    pub fn identity(n: BaseSize) -> Self {
        let mut r = Self::empty(n);
        for a in 0..r.n {
            r.set(a, a);
        }
        r
    }

    /// The universal relation `1`: all `n²` pairs.
    pub fn universal(n: BaseSize) -> Self {
        let mut r = Self::empty(n);
        let full_rows = r.n / 64;
        for a in 0..r.n {
            let row = a * r.words_per_row;
            for w in 0..full_rows {
                r.bits[row + w] = !0;
            }
            let rem = r.n % 64;
            if rem > 0 {
                r.bits[row + full_rows] = (1u64 << rem) - 1;
            }
        }
        r
    }

    pub fn from_pairs<I>(n: BaseSize, pairs: I) -> Result<Self, RelError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut r = Self::empty(n);
        for (a, b) in pairs {
            if a >= r.n || b >= r.n {
                return Err(RelError::ElementOutOfRange {
                    element: a.max(b),
                    n: r.n,
                });
            }
            r.set(a, b);
        }
        Ok(r)
    }

    /// Builds the kernel of a map `f : {0,…,n−1} → X`: pairs with equal image.
    pub fn kernel_of<T: PartialEq>(n: BaseSize, f: impl Fn(usize) -> T) -> Self {
        let mut r = Self::empty(n);
        let images: Vec<T> = (0..n.get()).map(&f).collect();
        for a in 0..r.n {
            for b in 0..r.n {
                if images[a] == images[b] {
                    r.set(a, b);
                }
            }
        }
        r
    }

    pub fn base_size(&self) -> usize {
        self.n
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        debug_assert!(a < self.n && b < self.n);
        self.bits[a * self.words_per_row + b / 64] >> (b % 64) & 1 == 1
    }

    pub fn set(&mut self, a: usize, b: usize) {
        debug_assert!(a < self.n && b < self.n);
        self.bits[a * self.words_per_row + b / 64] |= 1 << (b % 64);
    }

    fn check_size(&self, other: &BinRel) -> Result<(), RelError> {
        if self.n != other.n {
            return Err(RelError::SizeMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn union(&self, other: &BinRel) -> Result<BinRel, RelError> {
        self.check_size(other)?;
        let mut r = self.clone();
        for (w, o) in r.bits.iter_mut().zip(&other.bits) {
            *w |= o;
        }
        Ok(r)
    }

    pub fn intersect(&self, other: &BinRel) -> Result<BinRel, RelError> {
        self.check_size(other)?;
        let mut r = self.clone();
        for (w, o) in r.bits.iter_mut().zip(&other.bits) {
            *w &= o;
        }
        Ok(r)
    }

    pub fn complement(&self) -> BinRel {
        let mut r = self.clone();
        let full_rows = self.n / 64;
        let rem = self.n % 64;
        for a in 0..self.n {
            let row = a * self.words_per_row;
            for w in 0..full_rows {
                r.bits[row + w] = !r.bits[row + w];
            }
            if rem > 0 {
                r.bits[row + full_rows] = !r.bits[row + full_rows] & ((1u64 << rem) - 1);
            }
        }
        r
    }

    /// Set difference `self ∖ other`.
    pub fn minus(&self, other: &BinRel) -> Result<BinRel, RelError> {
        self.check_size(other)?;
        let mut r = self.clone();
        for (w, o) in r.bits.iter_mut().zip(&other.bits) {
            *w &= !o;
        }
        Ok(r)
    }

    /// Relational composition: `(a, b)` iff some `c` has `(a, c) ∈ self`
    /// and `(c, b) ∈ other`. Row-OR accumulation over set bits.
    pub fn compose(&self, other: &BinRel) -> Result<BinRel, RelError> {
        self.check_size(other)?;
        let wpr = self.words_per_row;
        let mut r = BinRel::empty(BaseSize(self.n));
        for a in 0..self.n {
            let out = a * wpr;
            for w in 0..wpr {
                let mut word = self.bits[a * wpr + w];
                while word != 0 {
                    let c = w * 64 + word.trailing_zeros() as usize;
                    word &= word - 1;
                    let src = c * wpr;
                    for k in 0..wpr {
                        r.bits[out + k] |= other.bits[src + k];
                    }
                }
            }
        }
        Ok(r)
    }

    /// Converse: `(a, b)` iff `(b, a) ∈ self`.
    pub fn converse(&self) -> BinRel {
        let mut r = BinRel::empty(BaseSize(self.n));
        for (a, b) in self.pairs() {
            r.set(b, a);
        }
        r
    }

    /// Smallest transitive relation containing `self` (reachability fixpoint).
    pub fn transitive_closure(&self) -> BinRel {
        let mut r = self.clone();
        let wpr = r.words_per_row;
        for k in 0..r.n {
            for i in 0..r.n {
                if r.contains(i, k) {
                    for w in 0..wpr {
                        let v = r.bits[k * wpr + w];
                        r.bits[i * wpr + w] |= v;
                    }
                }
            }
        }
        r
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n).all(|a| self.contains(a, a))
    }

    pub fn is_symmetric(&self) -> bool {
        self.pairs().all(|(a, b)| self.contains(b, a))
    }

    pub fn is_transitive(&self) -> bool {
        let sq = self.compose(self).expect("same base size");
        sq.is_subset_of(self)
    }

    pub fn is_equivalence(&self) -> bool {
        self.is_reflexive() && self.is_symmetric() && self.is_transitive()
    }

    /// Containment test; requires equal base sizes.
    pub fn is_subset_of(&self, other: &BinRel) -> bool {
        assert_eq!(self.n, other.n, "is_subset_of on mismatched base sizes");
        self.bits
            .iter()
            .zip(&other.bits)
            .all(|(w, o)| w & !o == 0)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn pair_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Iterates pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let wpr = self.words_per_row;
        (0..self.n).flat_map(move |a| {
            (0..wpr).flat_map(move |w| {
                let mut word = self.bits[a * wpr + w];
                std::iter::from_fn(move || {
                    if word == 0 {
                        return None;
                    }
                    let b = w * 64 + word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some((a, b))
                })
            })
        })
    }

    /// The packed words of row `a`; padding bits are zero.
    pub(crate) fn row_words(&self, a: usize) -> &[u64] {
        &self.bits[a * self.words_per_row..(a + 1) * self.words_per_row]
    }

    /// Classes of an equivalence relation, each sorted, ordered by least element.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        debug_assert!(self.is_equivalence());
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for a in 0..self.n {
            if seen[a] {
                continue;
            }
            let class: Vec<usize> = (a..self.n).filter(|&b| self.contains(a, b)).collect();
            for &b in &class {
                seen[b] = true;
            }
            out.push(class);
        }
        out
    }
}

/// Canonical total order: by base size, then by pair count, then
/// lexicographically on the sorted pair lists. Keeping smaller
/// relations first lists every equivalence family from its finest
/// member upward; used to keep certificate output byte-stable.
impl Ord for BinRel {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.n.cmp(&other.n) {
            Ordering::Equal => {}
            ord => return ord,
        }
        match self.pair_count().cmp(&other.pair_count()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        self.pairs().cmp(other.pairs())
    }
}

impl PartialOrd for BinRel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for BinRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinRel(n={}, pairs={:?})", self.n, self.pairs().collect::<Vec<_>>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(n: usize) -> BaseSize {
        BaseSize::new(n).unwrap()
    }

    /// Naive triple-loop composition, independent of the bitset path.
    fn naive_compose(r: &BinRel, s: &BinRel) -> BinRel {
        let n = r.base_size();
        let mut out = BinRel::empty(bs(n));
        for a in 0..n {
            for b in 0..n {
                if (0..n).any(|c| r.contains(a, c) && s.contains(c, b)) {
                    out.set(a, b);
                }
            }
        }
        out
    }

    /// Naive fixpoint transitive closure: add compositions until stable.
    fn naive_transitive_closure(r: &BinRel) -> BinRel {
        let mut cur = r.clone();
        loop {
            let next = cur.union(&naive_compose(&cur, &cur)).unwrap();
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    #[test]
    fn identity_examples() {
        assert_eq!(
            BinRel::identity(bs(1)).pairs().collect::<Vec<_>>(),
            vec![(0, 0)]
        );
        assert_eq!(
            BinRel::identity(bs(4)).pairs().collect::<Vec<_>>(),
            vec![(0, 0), (1, 1), (2, 2), (3, 3)]
        );
        let id25 = BinRel::identity(bs(25));
        assert_eq!(id25.pair_count(), 25);
        assert!(id25.pairs().all(|(a, b)| a == b));
    }

    #[test]
    fn universal_examples() {
        assert_eq!(BinRel::universal(bs(1)).pair_count(), 1);
        assert_eq!(BinRel::universal(bs(2)).pair_count(), 4);
        assert_eq!(BinRel::universal(bs(25)).pair_count(), 625);
    }

    #[test]
    fn base_size_bounds() {
        assert!(BaseSize::new(0).is_err());
        assert!(BaseSize::new(MAX_BASE_SIZE + 1).is_err());
        assert!(BaseSize::new(1).is_ok());
        assert!(BaseSize::new(MAX_BASE_SIZE).is_ok());
    }

    #[test]
    fn excluded_middle() {
        let r = BinRel::from_pairs(bs(5), [(0, 1), (2, 3), (4, 4)]).unwrap();
        assert_eq!(r.union(&r.complement()).unwrap(), BinRel::universal(bs(5)));
        assert!(r.intersect(&r.complement()).unwrap().is_empty());
    }

    #[test]
    fn complement_of_universal_is_empty() {
        assert!(BinRel::universal(bs(4)).complement().is_empty());
    }

    #[test]
    fn size_mismatch_is_reported() {
        let r = BinRel::identity(bs(3));
        let s = BinRel::identity(bs(4));
        assert_eq!(
            r.union(&s).unwrap_err(),
            RelError::SizeMismatch { left: 3, right: 4 }
        );
        assert!(r.compose(&s).is_err());
    }

    #[test]
    fn compose_identity_is_unit() {
        let r = BinRel::from_pairs(bs(6), [(0, 3), (3, 5), (2, 2), (5, 1)]).unwrap();
        let id = BinRel::identity(bs(6));
        assert_eq!(r.compose(&id).unwrap(), r);
        assert_eq!(id.compose(&r).unwrap(), r);
    }

    #[test]
    fn compose_matches_naive_on_word_boundary_sizes() {
        // n = 65 exercises the multi-word row path.
        let n = 65;
        let mut r = BinRel::empty(bs(n));
        let mut s = BinRel::empty(bs(n));
        for k in 0..n {
            r.set(k, (k * 7 + 3) % n);
            r.set(k, (k * 13 + 1) % n);
            s.set((k * 5) % n, (k * 11 + 2) % n);
        }
        assert_eq!(r.compose(&s).unwrap(), naive_compose(&r, &s));
    }

    #[test]
    fn converse_involution_and_identity() {
        let r = BinRel::from_pairs(bs(5), [(0, 1), (1, 4), (2, 2)]).unwrap();
        assert_eq!(r.converse().converse(), r);
        let id = BinRel::identity(bs(5));
        assert_eq!(id.converse(), id);
    }

    #[test]
    fn transitive_closure_examples() {
        let id = BinRel::identity(bs(7));
        assert_eq!(id.transitive_closure(), id);

        let chain = BinRel::from_pairs(bs(3), [(0, 1), (1, 2)]).unwrap();
        let tc = chain.transitive_closure();
        assert_eq!(tc, BinRel::from_pairs(bs(3), [(0, 1), (1, 2), (0, 2)]).unwrap());
        assert_eq!(tc, naive_transitive_closure(&chain));
    }

    #[test]
    fn equivalence_predicates() {
        assert!(BinRel::identity(bs(4)).is_equivalence());
        assert!(BinRel::universal(bs(4)).is_equivalence());
        let partial = BinRel::from_pairs(bs(3), [(0, 0), (1, 1), (2, 2), (0, 1)]).unwrap();
        assert!(partial.is_reflexive());
        assert!(!partial.is_symmetric());
        assert!(!partial.is_equivalence());
    }

    #[test]
    fn classes_of_equivalence() {
        let e = BinRel::kernel_of(bs(6), |x| x % 2);
        assert_eq!(e.classes(), vec![vec![0, 2, 4], vec![1, 3, 5]]);
    }

    #[test]
    fn canonical_order_is_total_and_stable() {
        let a = BinRel::from_pairs(bs(3), [(0, 0)]).unwrap();
        let b = BinRel::from_pairs(bs(3), [(0, 1)]).unwrap();
        // Pair lists compare lexicographically: [(0,0)] < [(0,1)], and a
        // prefix sorts first, so the empty relation precedes both.
        assert!(b > a);
        assert!(BinRel::empty(bs(3)) < a);
        let mut v = vec![b.clone(), a.clone()];
        v.sort();
        assert_eq!(v, vec![a, b]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_rel(max_n: usize) -> impl Strategy<Value = BinRel> {
            (1..=max_n).prop_flat_map(|n| {
                proptest::collection::vec(proptest::bool::ANY, n * n).prop_map(move |cells| {
                    let mut r = BinRel::empty(BaseSize::new(n).unwrap());
                    for (i, &on) in cells.iter().enumerate() {
                        if on {
                            r.set(i / n, i % n);
                        }
                    }
                    r
                })
            })
        }

        fn arb_rel_triple(max_n: usize) -> impl Strategy<Value = (BinRel, BinRel, BinRel)> {
            (1..=max_n).prop_flat_map(|n| {
                let one = move || {
                    proptest::collection::vec(proptest::bool::ANY, n * n).prop_map(move |cells| {
                        let mut r = BinRel::empty(BaseSize::new(n).unwrap());
                        for (i, &on) in cells.iter().enumerate() {
                            if on {
                                r.set(i / n, i % n);
                            }
                        }
                        r
                    })
                };
                (one(), one(), one())
            })
        }

        proptest! {
            #[test]
            fn composition_associative((r, s, t) in arb_rel_triple(8)) {
                let left = r.compose(&s).unwrap().compose(&t).unwrap();
                let right = r.compose(&s.compose(&t).unwrap()).unwrap();
                prop_assert_eq!(left, right);
            }

            #[test]
            fn converse_antidistributes_over_composition((r, s, _) in arb_rel_triple(8)) {
                let lhs = r.compose(&s).unwrap().converse();
                let rhs = s.converse().compose(&r.converse()).unwrap();
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn identity_is_two_sided_unit(r in arb_rel(8)) {
                let id = BinRel::identity(BaseSize::new(r.base_size()).unwrap());
                prop_assert_eq!(&r.compose(&id).unwrap(), &r);
                prop_assert_eq!(&id.compose(&r).unwrap(), &r);
            }

            #[test]
            fn transitive_closure_idempotent_and_monotone((r, s, _) in arb_rel_triple(8)) {
                let tc = r.transitive_closure();
                prop_assert_eq!(tc.transitive_closure(), tc.clone());
                prop_assert!(r.is_subset_of(&tc));
                let bigger = r.union(&s).unwrap();
                prop_assert!(tc.is_subset_of(&bigger.transitive_closure()));
            }

            #[test]
            fn compose_agrees_with_naive((r, s, _) in arb_rel_triple(8)) {
                prop_assert_eq!(r.compose(&s).unwrap(), naive_compose(&r, &s));
            }

            #[test]
            fn equivalence_laws(r in arb_rel(6)) {
                // Symmetrize-reflexivize-close yields an equivalence; check
                // the fixed-point laws the closure engine relies on.
                let id = BinRel::identity(BaseSize::new(r.base_size()).unwrap());
                let e = r.union(&r.converse()).unwrap().union(&id).unwrap().transitive_closure();
                prop_assert!(e.is_equivalence());
                prop_assert_eq!(e.compose(&e).unwrap(), e.clone());
                prop_assert_eq!(e.converse(), e.clone());
                prop_assert!(id.is_subset_of(&e));
            }
        }
    }
}
