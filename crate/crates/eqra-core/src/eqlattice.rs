//! Equivalence-relation extraction and M_n lattice recognition.
//!
//! [`extract_equivalences`] lists every equivalence relation inside a
//! closed family; [`build_lattice`] arranges a set of equivalences into a
//! lattice under containment, verifying meet/join closure; [`mn_shape`]
//! recognizes the height-two lattices M_m (bottom, top, and m pairwise
//! incomparable middle elements).

use std::collections::BTreeSet;

use thiserror::Error;

use crate::closure::{AtomSet, AtomStructure};
use crate::rel::{BinRel, RelError};

/// Guard on the subset enumeration in [`extract_equivalences`]: the search
/// space is 2^(diversity orbit count).
pub const MAX_DIVERSITY_ORBITS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EqError {
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error("no equivalence relations given")]
    EmptyInput,
    #[error("element {index} is not an equivalence relation")]
    NotAnEquivalence { index: usize },
    #[error("not meet-closed: intersection of elements {left} and {right} is missing")]
    NotMeetClosed { left: usize, right: usize },
    #[error("not join-closed: join of elements {left} and {right} is missing")]
    NotJoinClosed { left: usize, right: usize },
    #[error("too many diversity-atom orbits for enumeration: {orbits} (max {MAX_DIVERSITY_ORBITS})")]
    TooManyOrbits { orbits: usize },
}

/// A finite lattice of equivalence relations ordered by containment, with
/// meets as intersections and joins as transitive closures of unions.
/// Elements are kept in canonical (bit-lexicographic) order so output
/// derived from a lattice is byte-stable.
#[derive(Debug, Clone)]
pub struct EqLattice {
    n: usize,
    elements: Vec<BinRel>,
    leq: Vec<bool>,
    meet_table: Vec<usize>,
    join_table: Vec<usize>,
    bottom: usize,
    top: usize,
}

/// Shape verdict for a lattice: `Mn` when it is bottom + top + `m`
/// pairwise-incomparable middles with all pairwise meets at bottom and
/// joins at top. By convention M_1 is the three-element chain; a
/// two-element chain (no middle) is not any M_m.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MnShape {
    Mn { m: usize, middle: Vec<usize> },
    NotMn,
}

impl MnShape {
    pub fn is_mn(&self, m: usize) -> bool {
        matches!(self, MnShape::Mn { m: got, .. } if *got == m)
    }

    pub fn label(&self) -> String {
        match self {
            MnShape::Mn { m, .. } => format!("M_{m}"),
            MnShape::NotMn => "not an M_n".to_string(),
        }
    }
}

/// Lists every equivalence relation that is a union of atoms of `s`, in
/// canonical order.
///
/// A union of atoms is an equivalence iff it (i) includes every identity
/// atom, (ii) is converse-closed, and (iii) is composition-closed
/// (`comp_table[x][y] ⊆ subset` for all members x, y): (i) is
/// reflexivity, (ii) symmetry, and (iii) transitivity, with (i) making
/// the union idempotent under composition. The search therefore
/// enumerates subsets of converse-orbits of diversity atoms on top of the
/// identity part, and re-checks each hit against the bit-level
/// equivalence predicate as a defense against table corruption.
pub fn extract_equivalences(s: &AtomStructure) -> Result<Vec<BinRel>, EqError> {
    let count = s.atom_count();
    let identity_mask = s.identity_atoms();

    // Converse-orbits of diversity atoms: {i} when self-converse, else
    // {i, converse(i)}.
    let mut orbit_masks: Vec<AtomSet> = Vec::new();
    let mut seen = AtomSet::empty();
    for i in 0..count {
        if identity_mask.contains(i) || seen.contains(i) {
            continue;
        }
        let mut orbit = AtomSet::singleton(i);
        orbit.insert(s.converse_map()[i]);
        seen = seen.union(orbit);
        orbit_masks.push(orbit);
    }
    if orbit_masks.len() > MAX_DIVERSITY_ORBITS {
        return Err(EqError::TooManyOrbits {
            orbits: orbit_masks.len(),
        });
    }

    let comp = s.comp_table();
    let mut found: Vec<BinRel> = Vec::new();
    for choice in 0u64..(1u64 << orbit_masks.len()) {
        let mut mask = identity_mask;
        for (k, orbit) in orbit_masks.iter().enumerate() {
            if choice >> k & 1 == 1 {
                mask = mask.union(*orbit);
            }
        }
        let closed = mask
            .iter()
            .all(|x| mask.iter().all(|y| comp[x][y].is_subset_of(mask)));
        if !closed {
            continue;
        }
        let rel = s.union_of(mask);
        // Defensive re-check: the subset characterization above must agree
        // with the direct bit-level predicate.
        assert!(
            rel.is_equivalence(),
            "composition-closed atom subset {mask} is not an equivalence"
        );
        found.push(rel);
    }
    found.sort();
    Ok(found)
}

/// True iff the two relation sets are equal as sets, bit-exactly.
pub fn lattices_equal(a: &[BinRel], b: &[BinRel]) -> Result<bool, EqError> {
    let mut sizes = a.iter().chain(b.iter()).map(|r| r.base_size());
    if let Some(first) = sizes.next() {
        for other in sizes {
            if other != first {
                return Err(RelError::SizeMismatch {
                    left: first,
                    right: other,
                }
                .into());
            }
        }
    }
    let sa: BTreeSet<&BinRel> = a.iter().collect();
    let sb: BTreeSet<&BinRel> = b.iter().collect();
    Ok(sa == sb)
}

/// Builds the containment lattice of a set of equivalence relations,
/// verifying that the set is closed under meet (intersection) and join
/// (transitive closure of union).
pub fn build_lattice(eqs: &[BinRel]) -> Result<EqLattice, EqError> {
    let first = eqs.first().ok_or(EqError::EmptyInput)?;
    let n = first.base_size();
    for (index, e) in eqs.iter().enumerate() {
        if e.base_size() != n {
            return Err(RelError::SizeMismatch {
                left: n,
                right: e.base_size(),
            }
            .into());
        }
        if !e.is_equivalence() {
            return Err(EqError::NotAnEquivalence { index });
        }
    }

    let mut elements: Vec<BinRel> = eqs.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    elements.sort();
    let m = elements.len();

    let index_of = |r: &BinRel| -> Option<usize> { elements.binary_search(r).ok() };

    let mut leq = vec![false; m * m];
    for i in 0..m {
        for j in 0..m {
            leq[i * m + j] = elements[i].is_subset_of(&elements[j]);
        }
    }

    let mut meet_table = vec![0usize; m * m];
    let mut join_table = vec![0usize; m * m];
    for i in 0..m {
        for j in 0..m {
            let meet = elements[i].intersect(&elements[j]).expect("same base size");
            meet_table[i * m + j] = index_of(&meet).ok_or(EqError::NotMeetClosed {
                left: i,
                right: j,
            })?;
            let join = elements[i]
                .union(&elements[j])
                .expect("same base size")
                .transitive_closure();
            join_table[i * m + j] = index_of(&join).ok_or(EqError::NotJoinClosed {
                left: i,
                right: j,
            })?;
        }
    }

    // Fold-meet/fold-join stay inside the set by pairwise closure, so the
    // global extremes exist.
    let mut bottom = 0usize;
    let mut top = 0usize;
    for i in 1..m {
        bottom = meet_table[bottom * m + i];
        top = join_table[top * m + i];
    }

    Ok(EqLattice {
        n,
        elements,
        leq,
        meet_table,
        join_table,
        bottom,
        top,
    })
}

impl EqLattice {
    pub fn base_size(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[BinRel] {
        &self.elements
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i * self.elements.len() + j]
    }

    pub fn meet(&self, i: usize, j: usize) -> usize {
        self.meet_table[i * self.elements.len() + j]
    }

    pub fn join(&self, i: usize, j: usize) -> usize {
        self.join_table[i * self.elements.len() + j]
    }

    /// Covering pairs `(lower, upper)` of the containment order.
    pub fn hasse(&self) -> Vec<(usize, usize)> {
        let m = self.elements.len();
        let mut edges = Vec::new();
        for i in 0..m {
            for j in 0..m {
                if i == j || !self.leq(i, j) {
                    continue;
                }
                let covered = !(0..m)
                    .any(|k| k != i && k != j && self.leq(i, k) && self.leq(k, j));
                if covered {
                    edges.push((i, j));
                }
            }
        }
        edges
    }
}

/// Recognizes the M_m shape of a lattice: distinct bottom and top, every
/// other element strictly between them, middles pairwise incomparable
/// with meet = bottom and join = top. M_1 is the three-element chain; a
/// chain of two (or one) elements is NotMn.
pub fn mn_shape(l: &EqLattice) -> MnShape {
    let count = l.len();
    if count < 3 || l.bottom() == l.top() {
        return MnShape::NotMn;
    }
    let middle: Vec<usize> = (0..count)
        .filter(|&i| i != l.bottom() && i != l.top())
        .collect();
    for (pos, &i) in middle.iter().enumerate() {
        if !(l.leq(l.bottom(), i) && l.leq(i, l.top())) {
            return MnShape::NotMn;
        }
        for &j in &middle[pos + 1..] {
            if l.leq(i, j) || l.leq(j, i) {
                return MnShape::NotMn;
            }
            if l.meet(i, j) != l.bottom() || l.join(i, j) != l.top() {
                return MnShape::NotMn;
            }
        }
    }
    MnShape::Mn {
        m: middle.len(),
        middle,
    }
}
