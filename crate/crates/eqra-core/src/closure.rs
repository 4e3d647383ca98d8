//! Relation-algebra closure of a generator set, as an atom structure.
//!
//! [`ra_closure`] computes the coarsest partition of the pair space such
//! that every generator (plus the identity) is a union of blocks, converse
//! maps blocks onto blocks, and the composition of any two blocks is a
//! union of blocks. The set of unions of the final blocks is exactly the
//! closure of the generators under union, complement, composition,
//! converse, and identity: it is Boolean-closed by construction, the two
//! refinement passes force converse and composition closure, and every
//! refinement stage only splits by relations already in the closure, so
//! no block is ever finer than the closure's own atoms.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::rel::{BaseSize, BinRel, RelError};

/// Default cap on the number of atoms a closure may discover.
pub const DEFAULT_ATOM_BUDGET: usize = 24;

/// Atom-set masks are `u64`, so budgets beyond 64 are not representable.
pub const MAX_ATOM_BUDGET: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClosureError {
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error("no generators given")]
    NoGenerators,
    #[error("atom budget exceeded: reached {reached} atoms with budget {budget}")]
    AtomBudgetExceeded { reached: usize, budget: usize },
    #[error("atom budget {0} out of range (must be 1..={MAX_ATOM_BUDGET})")]
    BadBudget(usize),
    #[error("atom index {index} out of range ({count} atoms)")]
    IndexOutOfRange { index: usize, count: usize },
}

/// A set of atom indices, as a bitmask. Budgets are capped at 64 atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct AtomSet(pub u64);

impl AtomSet {
    pub fn empty() -> Self {
        AtomSet(0)
    }

    pub fn singleton(i: usize) -> Self {
        AtomSet(1 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn union(self, other: AtomSet) -> AtomSet {
        AtomSet(self.0 | other.0)
    }

    pub fn is_subset_of(self, other: AtomSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Display for AtomSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// The atoms of a relation-algebra closure, with composition and converse
/// data. A relation belongs to the closure iff it is a union of atoms.
#[derive(Debug, Clone)]
pub struct AtomStructure {
    n: usize,
    atom_budget: usize,
    atom_of: Vec<u32>,
    atoms: Vec<BinRel>,
    comp_table: Vec<Vec<AtomSet>>,
    converse_map: Vec<usize>,
    identity_atoms: AtomSet,
    generators: Vec<BinRel>,
}

/// Result of decomposing a relation against an atom structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decomposition {
    Member(AtomSet),
    NotMember,
}

impl Decomposition {
    pub fn is_member(&self) -> bool {
        matches!(self, Decomposition::Member(_))
    }
}

/// The Boolean (union/complement only) atoms of a generator set: the
/// membership-vector partition with the identity split off. No converse
/// or composition closure is performed.
#[derive(Debug, Clone)]
pub struct BooleanAtoms {
    pub atoms: Vec<BinRel>,
    pub identity_atoms: AtomSet,
}

/// Partition state during refinement: a color per pair index, with colors
/// numbered by first occurrence in row-major order, so block `k` is the
/// block whose smallest contained pair is the `k`-th smallest among block
/// minima.
struct Coloring {
    n: usize,
    color_of: Vec<u32>,
    count: usize,
}

impl Coloring {
    fn from_keys<K: std::hash::Hash + Eq>(n: usize, keys: Vec<K>) -> Coloring {
        let mut interned: HashMap<K, u32> = HashMap::new();
        let mut color_of = Vec::with_capacity(keys.len());
        for key in keys {
            let next = interned.len() as u32;
            let c = *interned.entry(key).or_insert(next);
            color_of.push(c);
        }
        Coloring {
            n,
            count: interned.len(),
            color_of,
        }
    }

    /// Refines by a new key per pair; block count can only grow.
    fn refine_by<K: std::hash::Hash + Eq>(&self, keys: impl Fn(usize) -> K) -> Coloring {
        let combined: Vec<(u32, K)> = (0..self.color_of.len())
            .map(|p| (self.color_of[p], keys(p)))
            .collect();
        Coloring::from_keys(self.n, combined)
    }

    fn blocks_as_relations(&self) -> Vec<BinRel> {
        let size = BaseSize::new(self.n).expect("validated base size");
        let mut atoms = vec![BinRel::empty(size); self.count];
        for p in 0..self.color_of.len() {
            atoms[self.color_of[p] as usize].set(p / self.n, p % self.n);
        }
        atoms
    }
}

fn validate_generators(generators: &[BinRel]) -> Result<usize, ClosureError> {
    let first = generators.first().ok_or(ClosureError::NoGenerators)?;
    let n = first.base_size();
    for g in generators {
        if g.base_size() != n {
            return Err(RelError::SizeMismatch {
                left: n,
                right: g.base_size(),
            }
            .into());
        }
    }
    Ok(n)
}

fn check_budget(count: usize, budget: usize) -> Result<(), ClosureError> {
    if count > budget {
        return Err(ClosureError::AtomBudgetExceeded {
            reached: count,
            budget,
        });
    }
    Ok(())
}

/// Initial coloring: membership vector across the generators plus an
/// is-diagonal flag. This is the Boolean-atom partition of the generated
/// field of sets with the identity adjoined.
fn initial_coloring(generators: &[BinRel], n: usize) -> Coloring {
    let keys: Vec<(bool, u64)> = (0..n * n)
        .map(|p| {
            let (a, b) = (p / n, p % n);
            let mut vector = 0u64;
            for (i, g) in generators.iter().enumerate() {
                if g.contains(a, b) {
                    vector |= 1 << i;
                }
            }
            (a == b, vector)
        })
        .collect();
    Coloring::from_keys(n, keys)
}

/// Computes the relation-algebra closure of `generators` with the default
/// atom budget.
pub fn ra_closure(generators: &[BinRel]) -> Result<AtomStructure, ClosureError> {
    ra_closure_with_budget(generators, DEFAULT_ATOM_BUDGET)
}

pub fn ra_closure_with_budget(
    generators: &[BinRel],
    atom_budget: usize,
) -> Result<AtomStructure, ClosureError> {
    if atom_budget == 0 || atom_budget > MAX_ATOM_BUDGET {
        return Err(ClosureError::BadBudget(atom_budget));
    }
    let n = validate_generators(generators)?;
    // Generator membership vectors are packed into a u64 alongside the
    // diagonal flag; more than 63 generators would need a wider key.
    assert!(generators.len() < 64, "generator vector exceeds key width");

    let mut coloring = initial_coloring(generators, n);
    check_budget(coloring.count, atom_budget)?;

    loop {
        // Converse splits first, to a fixpoint: color each pair by the
        // block of its converse pair.
        loop {
            let before = coloring.count;
            let next = coloring.refine_by(|p| {
                let (a, b) = (p / n, p % n);
                coloring.color_of[b * n + a]
            });
            check_budget(next.count, atom_budget)?;
            coloring = next;
            if coloring.count == before {
                break;
            }
        }

        // Composition splits: for each ordered block pair, every block
        // must be contained in or disjoint from the composed relation.
        let before_round = coloring.count;
        let blocks = coloring.blocks_as_relations();
        'comp: for i in 0..blocks.len() {
            for j in 0..blocks.len() {
                let composed = blocks[i].compose(&blocks[j]).expect("same base size");
                let next = coloring.refine_by(|p| composed.contains(p / n, p % n));
                if next.count != coloring.count {
                    check_budget(next.count, atom_budget)?;
                    coloring = next;
                    // Block relations are stale after a split; restart the
                    // composition pass on the refined partition.
                    break 'comp;
                }
            }
        }
        if coloring.count == before_round {
            break;
        }
    }

    let atoms = coloring.blocks_as_relations();
    let count = atoms.len();

    let identity = BinRel::identity(BaseSize::new(n).expect("validated base size"));
    let mut identity_atoms = AtomSet::empty();
    for (i, atom) in atoms.iter().enumerate() {
        if atom.is_subset_of(&identity) {
            identity_atoms.insert(i);
        }
    }

    let mut converse_map = vec![0usize; count];
    for (i, atom) in atoms.iter().enumerate() {
        let conv = atom.converse();
        let (a, b) = conv.pairs().next().expect("atoms are nonempty");
        let j = coloring.color_of[a * n + b] as usize;
        assert_eq!(conv, atoms[j], "converse of an atom must be an atom");
        converse_map[i] = j;
    }

    let mut comp_table = vec![vec![AtomSet::empty(); count]; count];
    for i in 0..count {
        for j in 0..count {
            let composed = atoms[i].compose(&atoms[j]).expect("same base size");
            let mut covering = AtomSet::empty();
            let mut union = BinRel::empty(BaseSize::new(n).expect("validated base size"));
            for (k, atom) in atoms.iter().enumerate() {
                if atom.is_subset_of(&composed) {
                    covering.insert(k);
                    union = union.union(atom).expect("same base size");
                }
            }
            assert_eq!(
                union, composed,
                "composition of atoms must be a union of atoms at the fixpoint"
            );
            comp_table[i][j] = covering;
        }
    }

    Ok(AtomStructure {
        n,
        atom_budget,
        atom_of: coloring.color_of,
        atoms,
        comp_table,
        converse_map,
        identity_atoms,
        generators: generators.to_vec(),
    })
}

/// Computes only the Boolean-algebra atoms of the generator set: the
/// initial membership-vector partition, identity split off, with no
/// converse or composition refinement.
pub fn ba_closure(generators: &[BinRel]) -> Result<BooleanAtoms, ClosureError> {
    ba_closure_with_budget(generators, DEFAULT_ATOM_BUDGET)
}

pub fn ba_closure_with_budget(
    generators: &[BinRel],
    atom_budget: usize,
) -> Result<BooleanAtoms, ClosureError> {
    if atom_budget == 0 || atom_budget > MAX_ATOM_BUDGET {
        return Err(ClosureError::BadBudget(atom_budget));
    }
    let n = validate_generators(generators)?;
    assert!(generators.len() < 64, "generator vector exceeds key width");
    let coloring = initial_coloring(generators, n);
    check_budget(coloring.count, atom_budget)?;
    let atoms = coloring.blocks_as_relations();
    let identity = BinRel::identity(BaseSize::new(n).expect("validated base size"));
    let mut identity_atoms = AtomSet::empty();
    for (i, atom) in atoms.iter().enumerate() {
        if atom.is_subset_of(&identity) {
            identity_atoms.insert(i);
        }
    }
    Ok(BooleanAtoms {
        atoms,
        identity_atoms,
    })
}

impl AtomStructure {
    pub fn base_size(&self) -> usize {
        self.n
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_budget(&self) -> usize {
        self.atom_budget
    }

    pub fn atoms(&self) -> &[BinRel] {
        &self.atoms
    }

    pub fn generators(&self) -> &[BinRel] {
        &self.generators
    }

    pub fn identity_atoms(&self) -> AtomSet {
        self.identity_atoms
    }

    pub fn converse_map(&self) -> &[usize] {
        &self.converse_map
    }

    pub fn comp_table(&self) -> &[Vec<AtomSet>] {
        &self.comp_table
    }

    /// The atom containing pair `(a, b)`.
    pub fn atom_of_pair(&self, a: usize, b: usize) -> usize {
        self.atom_of[a * self.n + b] as usize
    }

    /// Union of the atoms in `set`.
    pub fn union_of(&self, set: AtomSet) -> BinRel {
        let mut out = BinRel::empty(BaseSize::new(self.n).expect("validated base size"));
        for i in set.iter() {
            out = out.union(&self.atoms[i]).expect("same base size");
        }
        out
    }

    /// Decomposes `r` into atoms, or reports that `r` is not a member of
    /// the closure.
    pub fn decompose(&self, r: &BinRel) -> Result<Decomposition, ClosureError> {
        if r.base_size() != self.n {
            return Err(RelError::SizeMismatch {
                left: self.n,
                right: r.base_size(),
            }
            .into());
        }
        let mut set = AtomSet::empty();
        let mut seen = vec![false; self.atoms.len()];
        for (a, b) in r.pairs() {
            let i = self.atom_of_pair(a, b);
            if !seen[i] {
                seen[i] = true;
                if !self.atoms[i].is_subset_of(r) {
                    return Ok(Decomposition::NotMember);
                }
                set.insert(i);
            }
        }
        Ok(Decomposition::Member(set))
    }

    /// Row `i` of the composition table: for each `j`, the atoms covering
    /// `atoms[i] ∘ atoms[j]`.
    pub fn atom_composition_row(&self, i: usize) -> Result<&[AtomSet], ClosureError> {
        self.comp_table
            .get(i)
            .map(|row| row.as_slice())
            .ok_or(ClosureError::IndexOutOfRange {
                index: i,
                count: self.atoms.len(),
            })
    }

    /// Re-checks every structural invariant from the stored data. Used by
    /// certificates and by tests that tamper with partitions.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.n;
        let size = BaseSize::new(n).map_err(|e| e.to_string())?;
        // Atoms partition the pair space.
        let mut union = BinRel::empty(size);
        let mut total = 0usize;
        for atom in &self.atoms {
            if atom.is_empty() {
                return Err("empty atom".into());
            }
            total += atom.pair_count();
            union = union.union(atom).map_err(|e| e.to_string())?;
        }
        if union != BinRel::universal(size) || total != n * n {
            return Err("atoms do not partition the pair space".into());
        }
        // atom_of is consistent with the atom list.
        for (a, b) in BinRel::universal(size).pairs() {
            let i = self.atom_of[a * n + b] as usize;
            if i >= self.atoms.len() || !self.atoms[i].contains(a, b) {
                return Err(format!("atom_of inconsistent at pair ({a},{b})"));
            }
        }
        // Every generator is a union of atoms.
        for (gi, g) in self.generators.iter().enumerate() {
            let mut covered = BinRel::empty(size);
            for atom in &self.atoms {
                if atom.is_subset_of(g) {
                    covered = covered.union(atom).map_err(|e| e.to_string())?;
                }
            }
            if &covered != g {
                return Err(format!("generator {gi} is not a union of atoms"));
            }
        }
        // Identity is the union of exactly identity_atoms.
        if self.union_of(self.identity_atoms) != BinRel::identity(size) {
            return Err("identity_atoms do not union to the identity".into());
        }
        // Converse maps atoms to atoms, involutively.
        for (i, atom) in self.atoms.iter().enumerate() {
            let j = self.converse_map[i];
            if atom.converse() != self.atoms[j] {
                return Err(format!("converse of atom {i} is not atom {j}"));
            }
            if self.converse_map[j] != i {
                return Err(format!("converse_map is not an involution at {i}"));
            }
        }
        // Composition closure: each table entry unions to the composition.
        for i in 0..self.atoms.len() {
            for j in 0..self.atoms.len() {
                let composed = self.atoms[i]
                    .compose(&self.atoms[j])
                    .map_err(|e| e.to_string())?;
                if self.union_of(self.comp_table[i][j]) != composed {
                    return Err(format!("comp_table[{i}][{j}] does not cover the composition"));
                }
            }
        }
        Ok(())
    }

    /// Test-only constructor used to exercise invariant violations.
    #[doc(hidden)]
    pub fn from_raw_parts(
        n: usize,
        atom_budget: usize,
        atom_of: Vec<u32>,
        atoms: Vec<BinRel>,
        comp_table: Vec<Vec<AtomSet>>,
        converse_map: Vec<usize>,
        identity_atoms: AtomSet,
        generators: Vec<BinRel>,
    ) -> AtomStructure {
        AtomStructure {
            n,
            atom_budget,
            atom_of,
            atoms,
            comp_table,
            converse_map,
            identity_atoms,
            generators,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rel::BaseSize;
    use std::collections::BTreeSet;

    fn bs(n: usize) -> BaseSize {
        BaseSize::new(n).unwrap()
    }

    /// Brute-force closure oracle: saturate a set of relations under the
    /// five operations. Only feasible for tiny bases; used to certify the
    /// partition-refinement engine on the 4-element examples.
    fn saturate(generators: &[BinRel]) -> BTreeSet<BinRel> {
        let n = bs(generators[0].base_size());
        let mut family: BTreeSet<BinRel> = generators.iter().cloned().collect();
        family.insert(BinRel::identity(n));
        loop {
            let snapshot: Vec<BinRel> = family.iter().cloned().collect();
            let before = family.len();
            for r in &snapshot {
                family.insert(r.complement());
                family.insert(r.converse());
                for s in &snapshot {
                    family.insert(r.union(s).unwrap());
                    family.insert(r.compose(s).unwrap());
                }
            }
            if family.len() == before {
                return family;
            }
        }
    }

    fn minimal_nonzero(family: &BTreeSet<BinRel>) -> Vec<BinRel> {
        family
            .iter()
            .filter(|r| !r.is_empty())
            .filter(|r| {
                !family
                    .iter()
                    .any(|s| !s.is_empty() && s != *r && s.is_subset_of(r))
            })
            .cloned()
            .collect()
    }

    fn grid_eta(n: usize, p: usize, coord: usize) -> BinRel {
        BinRel::kernel_of(bs(n), |x| if coord == 0 { x / p } else { x % p })
    }

    #[test]
    fn closure_of_identity_alone_has_two_atoms() {
        let s = ra_closure(&[BinRel::identity(bs(4))]).unwrap();
        assert_eq!(s.atom_count(), 2);
        let id = BinRel::identity(bs(4));
        assert_eq!(s.atoms()[0], id);
        assert_eq!(s.atoms()[1], id.complement());
        s.validate().unwrap();
    }

    #[test]
    fn two_by_two_lattice_generators_give_four_atoms() {
        // Base 4 = the 2×2 grid; generators 1', η0, η1, 1.
        let n = bs(4);
        let eta0 = grid_eta(4, 2, 0);
        let eta1 = grid_eta(4, 2, 1);
        let gens = [
            BinRel::identity(n),
            eta0.clone(),
            eta1.clone(),
            BinRel::universal(n),
        ];
        let s = ra_closure(&gens).unwrap();
        assert_eq!(s.atom_count(), 4);
        s.validate().unwrap();

        // Cross-check against the brute-force saturation oracle: the atoms
        // of the saturated family must coincide with the computed atoms.
        let family = saturate(&gens);
        let oracle_atoms: BTreeSet<BinRel> = minimal_nonzero(&family).into_iter().collect();
        let ours: BTreeSet<BinRel> = s.atoms().iter().cloned().collect();
        assert_eq!(ours, oracle_atoms);

        // And every member of the saturated family decomposes.
        for r in &family {
            assert!(s.decompose(r).unwrap().is_member());
        }
    }

    #[test]
    fn zp2_generators_p5_n1_give_five_atoms_with_beta_of_300_pairs() {
        let p = 5usize;
        let n = bs(p * p);
        let eta0 = grid_eta(25, 5, 0);
        let eta1 = grid_eta(25, 5, 1);
        let alpha1 = BinRel::kernel_of(n, |x| (x / p + p - x % p) % p);
        let gens = [
            BinRel::universal(n),
            BinRel::identity(n),
            eta0,
            eta1,
            alpha1,
        ];
        let s = ra_closure(&gens).unwrap();
        assert_eq!(s.atom_count(), 5);
        s.validate().unwrap();
        // The atom not below any generator equivalence is the leftover
        // block; with p=5, n=1 it has 625 − 25 − 3·100 = 300 pairs.
        let sizes: Vec<usize> = s.atoms().iter().map(|a| a.pair_count()).collect();
        assert!(sizes.contains(&300));
        assert_eq!(sizes.iter().sum::<usize>(), 625);
    }

    #[test]
    fn ba_closure_matches_ra_closure_when_already_composition_closed() {
        let n = bs(4);
        let eta0 = grid_eta(4, 2, 0);
        let eta1 = grid_eta(4, 2, 1);
        let gens = [
            BinRel::identity(n),
            eta0,
            eta1,
            BinRel::universal(n),
        ];
        let ra = ra_closure(&gens).unwrap();
        let ba = ba_closure(&gens).unwrap();
        let ra_set: BTreeSet<BinRel> = ra.atoms().iter().cloned().collect();
        let ba_set: BTreeSet<BinRel> = ba.atoms.iter().cloned().collect();
        assert_eq!(ra_set, ba_set);
    }

    #[test]
    fn ba_closure_of_single_alpha_has_three_atoms() {
        let p = 5usize;
        let n = bs(p * p);
        let alpha1 = BinRel::kernel_of(n, |x| (x / p + p - x % p) % p);
        let ba = ba_closure(&[alpha1]).unwrap();
        assert_eq!(ba.atoms.len(), 3);
    }

    #[test]
    fn decompose_identity_and_universal() {
        let s = ra_closure(&[BinRel::identity(bs(5)), BinRel::universal(bs(5))]).unwrap();
        match s.decompose(&BinRel::identity(bs(5))).unwrap() {
            Decomposition::Member(set) => assert_eq!(set, s.identity_atoms()),
            Decomposition::NotMember => panic!("identity must be a member"),
        }
        match s.decompose(&BinRel::universal(bs(5))).unwrap() {
            Decomposition::Member(set) => assert_eq!(set.len(), s.atom_count()),
            Decomposition::NotMember => panic!("universal must be a member"),
        }
    }

    #[test]
    fn decompose_rejects_non_members() {
        let s = ra_closure(&[BinRel::identity(bs(4))]).unwrap();
        let r = BinRel::from_pairs(bs(4), [(0, 1)]).unwrap();
        assert_eq!(s.decompose(&r).unwrap(), Decomposition::NotMember);
    }

    #[test]
    fn identity_atom_row_reproduces_each_atom() {
        let n = bs(4);
        let gens = [
            BinRel::identity(n),
            grid_eta(4, 2, 0),
            grid_eta(4, 2, 1),
            BinRel::universal(n),
        ];
        let s = ra_closure(&gens).unwrap();
        // With 1' among the generators the identity part is one atom.
        let id_atoms = s.identity_atoms().to_vec();
        assert_eq!(id_atoms.len(), 1);
        let row = s.atom_composition_row(id_atoms[0]).unwrap();
        for (j, entry) in row.iter().enumerate() {
            assert_eq!(entry.to_vec(), vec![j]);
        }
        assert!(s.atom_composition_row(99).is_err());
    }

    #[test]
    fn atom_budget_is_enforced() {
        let r = BinRel::from_pairs(bs(4), [(0, 1), (1, 2)]).unwrap();
        let err = ra_closure_with_budget(&[r], 2).unwrap_err();
        match err {
            ClosureError::AtomBudgetExceeded { reached, budget } => {
                assert!(reached > 2);
                assert_eq!(budget, 2);
            }
            other => panic!("expected AtomBudgetExceeded, got {other:?}"),
        }
    }

    #[test]
    fn merging_two_atoms_breaks_validation() {
        // Coarsening the final partition must violate an invariant: the
        // refinement never over-splits on these examples.
        let n = bs(4);
        let gens = [
            BinRel::identity(n),
            grid_eta(4, 2, 0),
            grid_eta(4, 2, 1),
            BinRel::universal(n),
        ];
        let s = ra_closure(&gens).unwrap();
        let count = s.atom_count();
        for i in 0..count {
            for j in (i + 1)..count {
                let mut atoms: Vec<BinRel> = s.atoms().to_vec();
                let merged = atoms[i].union(&atoms[j]).unwrap();
                atoms[i] = merged;
                atoms.remove(j);
                let renumber = |k: usize| -> usize {
                    if k == j {
                        i
                    } else if k > j {
                        k - 1
                    } else {
                        k
                    }
                };
                let atom_of: Vec<u32> = (0..16)
                    .map(|p| renumber(s.atom_of_pair(p / 4, p % 4)) as u32)
                    .collect();
                let converse_map: Vec<usize> = (0..count)
                    .filter(|&k| k != j)
                    .map(|k| renumber(s.converse_map()[k]))
                    .collect();
                let remap_set = |set: AtomSet| -> AtomSet {
                    let mut out = AtomSet::empty();
                    for k in set.iter() {
                        out.insert(renumber(k));
                    }
                    out
                };
                let comp_table: Vec<Vec<AtomSet>> = (0..count)
                    .filter(|&a| a != j)
                    .map(|a| {
                        (0..count)
                            .filter(|&b| b != j)
                            .map(|b| remap_set(s.comp_table()[a][b]))
                            .collect()
                    })
                    .collect();
                let identity_atoms = remap_set(s.identity_atoms());
                let coarse = AtomStructure::from_raw_parts(
                    4,
                    s.atom_budget(),
                    atom_of,
                    atoms,
                    comp_table,
                    converse_map,
                    identity_atoms,
                    s.generators().to_vec(),
                );
                assert!(
                    coarse.validate().is_err(),
                    "merging atoms {i} and {j} should violate an invariant"
                );
            }
        }
    }

    #[test]
    fn random_ra_terms_stay_inside_the_closure() {
        // Closure soundness on small random generator sets: applying the
        // algebra operations never escapes the computed atom partition.
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(0x5eed);
        for _ in 0..30 {
            let n = rng.random_range(2..=6);
            let size = bs(n);
            let gen_count = rng.random_range(1..=3);
            let gens: Vec<BinRel> = (0..gen_count)
                .map(|_| {
                    let mut r = BinRel::empty(size);
                    for a in 0..n {
                        for b in 0..n {
                            if rng.random_bool(0.3) {
                                r.set(a, b);
                            }
                        }
                    }
                    r
                })
                .collect();
            let s = match ra_closure_with_budget(&gens, MAX_ATOM_BUDGET) {
                Ok(s) => s,
                Err(ClosureError::AtomBudgetExceeded { .. }) => continue,
                Err(e) => panic!("unexpected closure error: {e}"),
            };
            s.validate().unwrap();
            let mut pool: Vec<BinRel> = gens.clone();
            pool.push(BinRel::identity(size));
            for _ in 0..4 {
                let pick = rng.random_range(0..pool.len());
                let r = pool[pick].clone();
                let next = match rng.random_range(0..4) {
                    0 => r.complement(),
                    1 => r.converse(),
                    2 => {
                        let other = &pool[rng.random_range(0..pool.len())];
                        r.union(other).unwrap()
                    }
                    _ => {
                        let other = &pool[rng.random_range(0..pool.len())];
                        r.compose(other).unwrap()
                    }
                };
                assert!(
                    s.decompose(&next).unwrap().is_member(),
                    "operation result escaped the closure"
                );
                pool.push(next);
            }
        }
    }
}
