//! Finite algebras with operation tables, compatibility of relations,
//! and congruence-lattice computation.
//!
//! A congruence is an equivalence relation compatible with every
//! operation of the algebra. [`congruences`] enumerates all partitions of
//! the base set and filters by [`is_compatible`] — an
//! enumerate-and-filter strategy that is deliberately independent of the
//! closure machinery, so it can serve as an oracle for it.
//! [`ppf_eq_certificate`] packages the soundness argument that no
//! equivalence outside a congruence lattice is definable from it by
//! primitive positive formulas.

use thiserror::Error;

use crate::cert::{Certificate, Check};
use crate::rel::{BaseSize, BinRel, RelError};

/// Largest base size accepted by [`congruences`]: partition enumeration
/// is Bell(n), and Bell(10) = 115975 is the last comfortable value.
pub const MAX_CONGRUENCE_BASE: usize = 10;

/// Operations of arity 0 through 3 are supported.
pub const MAX_ARITY: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error("operation {name}: arity {arity} out of range (must be 0..={MAX_ARITY})")]
    BadArity { name: String, arity: usize },
    #[error("operation {name}: {reason}")]
    BadTable { name: String, reason: String },
    #[error("base size {n} too large for congruence enumeration (max {MAX_CONGRUENCE_BASE})")]
    BaseTooLarge { n: usize },
    #[error("generator {index} is not an equivalence relation")]
    NotAnEquivalence { index: usize },
    #[error("generator {index} is not compatible with the algebra")]
    GeneratorNotCompatible { index: usize },
}

/// One finitary operation, stored as a flat table in row-major order:
/// `table[(..(a_0·n + a_1)·n..) + a_{k−1}]` is the value at `(a_0..a_{k−1})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operation {
    pub name: String,
    pub arity: usize,
    pub table: Vec<usize>,
}

impl Operation {
    pub fn new(name: impl Into<String>, arity: usize, table: Vec<usize>) -> Operation {
        Operation {
            name: name.into(),
            arity,
            table,
        }
    }

    /// Builds the table of a unary operation from a function.
    pub fn unary(name: impl Into<String>, n: usize, f: impl Fn(usize) -> usize) -> Operation {
        Operation::new(name.into(), 1, (0..n).map(f).collect())
    }

    /// Builds the table of a binary operation from a function.
    pub fn binary(name: impl Into<String>, n: usize, f: impl Fn(usize, usize) -> usize) -> Operation {
        let mut table = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                table.push(f(a, b));
            }
        }
        Operation::new(name.into(), 2, table)
    }

    fn validate(&self, n: usize) -> Result<(), AlgebraError> {
        if self.arity > MAX_ARITY {
            return Err(AlgebraError::BadArity {
                name: self.name.clone(),
                arity: self.arity,
            });
        }
        let expected = n.pow(self.arity as u32);
        if self.table.len() != expected {
            return Err(AlgebraError::BadTable {
                name: self.name.clone(),
                reason: format!(
                    "table has {} entries, expected n^arity = {expected}",
                    self.table.len()
                ),
            });
        }
        if let Some(&bad) = self.table.iter().find(|&&v| v >= n) {
            return Err(AlgebraError::BadTable {
                name: self.name.clone(),
                reason: format!("table value {bad} out of range for base size {n}"),
            });
        }
        Ok(())
    }

    /// Applies the operation to `args` (length must equal the arity).
    pub fn apply(&self, n: usize, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        let mut index = 0usize;
        for &a in args {
            index = index * n + a;
        }
        self.table[index]
    }
}

/// A finite algebra: a base set `{0, .., n−1}` with operation tables.
#[derive(Debug, Clone)]
pub struct FinAlgebra {
    n: BaseSize,
    operations: Vec<Operation>,
}

impl FinAlgebra {
    pub fn new(n: BaseSize, operations: Vec<Operation>) -> Result<FinAlgebra, AlgebraError> {
        for op in &operations {
            op.validate(n.get())?;
        }
        Ok(FinAlgebra { n, operations })
    }

    pub fn base_size(&self) -> usize {
        self.n.get()
    }

    pub fn operations(&self) -> &[Operation] {
        &self.operations
    }
}

/// The congruences of an algebra, canonically ordered.
#[derive(Debug, Clone)]
pub struct CongruenceSet {
    elements: Vec<BinRel>,
}

impl CongruenceSet {
    pub fn elements(&self) -> &[BinRel] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, r: &BinRel) -> bool {
        self.elements.binary_search(r).is_ok()
    }
}

/// A concrete failure of compatibility: applying `op` coordinatewise to
/// the related pairs produced a pair outside the relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibilityWitness {
    pub op: String,
    pub argument_pairs: Vec<(usize, usize)>,
    pub image_pair: (usize, usize),
}

/// Looks for a compatibility violation of `r` against `a`; `None` means
/// `r` is a subuniverse of `a²` (compatible with every operation).
pub fn compatibility_witness(
    r: &BinRel,
    a: &FinAlgebra,
) -> Result<Option<CompatibilityWitness>, AlgebraError> {
    let n = a.base_size();
    if r.base_size() != n {
        return Err(RelError::SizeMismatch {
            left: n,
            right: r.base_size(),
        }
        .into());
    }
    let pairs: Vec<(usize, usize)> = r.pairs().collect();
    for op in a.operations() {
        let k = op.arity;
        if k > 0 && pairs.is_empty() {
            continue; // no argument tuples: vacuously compatible
        }
        // Iterate all k-tuples of related pairs by odometer.
        let mut choice = vec![0usize; k];
        loop {
            let mut u = Vec::with_capacity(k);
            let mut v = Vec::with_capacity(k);
            for &c in &choice {
                let (x, y) = pairs[c];
                u.push(x);
                v.push(y);
            }
            let image = (op.apply(n, &u), op.apply(n, &v));
            if !r.contains(image.0, image.1) {
                return Ok(Some(CompatibilityWitness {
                    op: op.name.clone(),
                    argument_pairs: choice.iter().map(|&c| pairs[c]).collect(),
                    image_pair: image,
                }));
            }
            // Advance the odometer; arity 0 has the single empty tuple.
            let mut pos = k;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                choice[pos] += 1;
                if choice[pos] < pairs.len() {
                    break;
                }
                choice[pos] = 0;
            }
            if pos == 0 && (k == 0 || choice[0] == 0) {
                break;
            }
        }
    }
    Ok(None)
}

/// True iff `r` is compatible with every operation of `a` (a subuniverse
/// of `a²`).
pub fn is_compatible(r: &BinRel, a: &FinAlgebra) -> Result<bool, AlgebraError> {
    Ok(compatibility_witness(r, a)?.is_none())
}

/// Enumerates all partitions of an `n`-element set as equivalence
/// relations (restricted-growth-string enumeration, Bell(n) results).
pub fn enumerate_partitions(n: BaseSize) -> Vec<BinRel> {
    let n = n.get();
    assert!(n <= 12, "partition enumeration explodes beyond n = 12");
    let size = BaseSize::new(n).expect("validated base size");
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    fn rec(i: usize, max: usize, rgs: &mut Vec<usize>, size: BaseSize, out: &mut Vec<BinRel>) {
        if i == rgs.len() {
            let snapshot = rgs.clone();
            out.push(BinRel::kernel_of(size, |x| snapshot[x]));
            return;
        }
        for c in 0..=max + 1 {
            rgs[i] = c;
            rec(i + 1, max.max(c), rgs, size, out);
        }
    }
    if n == 0 {
        return out;
    }
    rec(1, 0, &mut rgs, size, &mut out);
    out
}

/// Computes all congruences of `a` by enumerating partitions and
/// filtering by compatibility. The result is verified to be meet- and
/// join-closed before being returned.
pub fn congruences(a: &FinAlgebra) -> Result<CongruenceSet, AlgebraError> {
    let n = a.base_size();
    if n > MAX_CONGRUENCE_BASE {
        return Err(AlgebraError::BaseTooLarge { n });
    }
    let size = BaseSize::new(n).expect("validated base size");
    let mut elements: Vec<BinRel> = Vec::new();
    for e in enumerate_partitions(size) {
        if is_compatible(&e, a)? {
            elements.push(e);
        }
    }
    elements.sort();
    // Congruence sets are always meet- and join-closed; a violation here
    // would mean the enumeration or compatibility test is broken.
    for x in &elements {
        for y in &elements {
            let meet = x.intersect(y).expect("same base size");
            assert!(
                elements.binary_search(&meet).is_ok(),
                "congruence set not meet-closed"
            );
            let join = x.union(y).expect("same base size").transitive_closure();
            assert!(
                elements.binary_search(&join).is_ok(),
                "congruence set not join-closed"
            );
        }
    }
    Ok(CongruenceSet { elements })
}

fn describe_relation(r: &BinRel) -> String {
    let classes: Vec<String> = r
        .classes()
        .into_iter()
        .map(|c| {
            let inner: Vec<String> = c.iter().map(|x| x.to_string()).collect();
            format!("{{{}}}", inner.join(","))
        })
        .collect();
    format!("partition {}", classes.join(" "))
}

/// Certifies that the equivalences definable from `generators` by
/// primitive positive formulas are exactly the generators themselves,
/// given that the generators are the full congruence set of `a`.
///
/// The argument: pp definitions preserve compatibility (a pp-definable
/// relation over subuniverses of `a²` is itself a subuniverse), so every
/// pp-definable equivalence is a congruence of `a`; if the congruences of
/// `a` are exactly the generator set, nothing new is definable. The
/// certificate records the compatibility of each generator, the
/// congruence-set comparison, and the preservation principle it leans on.
pub fn ppf_eq_certificate(
    generators: &[BinRel],
    a: &FinAlgebra,
) -> Result<Certificate, AlgebraError> {
    for (index, g) in generators.iter().enumerate() {
        if g.base_size() != a.base_size() {
            return Err(RelError::SizeMismatch {
                left: a.base_size(),
                right: g.base_size(),
            }
            .into());
        }
        if !g.is_equivalence() {
            return Err(AlgebraError::NotAnEquivalence { index });
        }
    }

    let mut cert = Certificate::new("ppf-equivalence");
    for (index, g) in generators.iter().enumerate() {
        match compatibility_witness(g, a)? {
            None => cert.push(Check::pass(
                format!("generator-compatible/{index}"),
                format!(
                    "generator {index} ({}) is compatible with all {} operations",
                    describe_relation(g),
                    a.operations().len()
                ),
            )),
            Some(_) => {
                return Err(AlgebraError::GeneratorNotCompatible { index });
            }
        }
    }

    let con = congruences(a)?;
    let mut gens_sorted: Vec<BinRel> = generators.to_vec();
    gens_sorted.sort();
    gens_sorted.dedup();
    let equal = con.elements() == gens_sorted.as_slice();
    let mut comparison = Check::verdict(
        "congruences-equal-generators",
        format!(
            "congruence set ({} elements) {} the generator set ({} elements)",
            con.len(),
            if equal { "equals" } else { "differs from" },
            gens_sorted.len()
        ),
        equal,
    );
    if !equal {
        for c in con.elements() {
            if gens_sorted.binary_search(c).is_err() {
                comparison = comparison
                    .with_witness(format!("congruence not generated: {}", describe_relation(c)));
            }
        }
        for g in &gens_sorted {
            if !con.contains(g) {
                comparison = comparison
                    .with_witness(format!("generator not a congruence: {}", describe_relation(g)));
            }
        }
    }
    cert.push(comparison);

    cert.push(Check::verdict(
        "no-new-pp-definable-equivalence",
        "pp definitions preserve compatibility, so every pp-definable \
         equivalence is a congruence; with the congruence set equal to the \
         generators, no equivalence outside the generator set is pp-definable",
        equal,
    ));
    cert.push(Check::info(
        "preservation-principle",
        "relies on the standard preservation theorem that relations \
         pp-definable from subuniverses of a² are subuniverses of a²; the \
         inclusion is certified computationally for the generators, the \
         principle itself is assumed, not re-proved",
    ));
    Ok(cert)
}
