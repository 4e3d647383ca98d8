//! Formula evaluation over finite structures, relation-algebra term
//! evaluation, the three-variable translation of terms, and constructive
//! reconstruction of closure members as terms.
//!
//! Formulas are evaluated bottom-up as *assignment sets*: for each
//! subformula we keep its set of live (free) variables, sorted, together
//! with a truth table over all `n^k` assignments to them. Connectives
//! align the operand tables on the merged variable list; quantifiers
//! project one variable out with an or (`exists`) or and (`forall`) fold.
//! Each distinct subformula is computed once (the evaluator memoizes on
//! the subformula itself), and the table size is capped by
//! [`MAX_ASSIGN_ENTRIES`](super::MAX_ASSIGN_ENTRIES).

use std::collections::{BTreeSet, HashMap};

use super::ast::{Formula, RaTerm};
use super::{FormulaError, Structure, MAX_ASSIGN_ENTRIES};
use crate::closure::{AtomStructure, Decomposition};
use crate::rel::BinRel;

/// Truth table over all assignments to a sorted list of live variables.
#[derive(Debug, Clone)]
struct AssignSet {
    vars: Vec<String>,
    /// `n^vars.len()` entries, row-major with the *last* variable fastest.
    table: Vec<bool>,
}

fn checked_table_len(n: usize, k: usize) -> Result<usize, FormulaError> {
    let entries = (n as u128)
        .checked_pow(k as u32)
        .ok_or(FormulaError::AssignSpaceTooLarge {
            entries: u128::MAX,
            cap: MAX_ASSIGN_ENTRIES,
        })?;
    if entries > MAX_ASSIGN_ENTRIES {
        return Err(FormulaError::AssignSpaceTooLarge {
            entries,
            cap: MAX_ASSIGN_ENTRIES,
        });
    }
    Ok(entries as usize)
}

fn merge_vars(a: &[String], b: &[String]) -> Vec<String> {
    let set: BTreeSet<&String> = a.iter().chain(b.iter()).collect();
    set.into_iter().cloned().collect()
}

/// Re-expresses `a` over a superset `target` of its variables.
fn expand(a: &AssignSet, target: &[String], n: usize) -> Result<AssignSet, FormulaError> {
    if a.vars == target {
        return Ok(a.clone());
    }
    let len = checked_table_len(n, target.len())?;
    let positions: Vec<usize> = a
        .vars
        .iter()
        .map(|v| {
            target
                .iter()
                .position(|t| t == v)
                .expect("expansion target must contain every live variable")
        })
        .collect();
    let mut table = vec![false; len];
    let mut coords = vec![0usize; target.len()];
    for slot in table.iter_mut() {
        let mut src = 0usize;
        for &p in &positions {
            src = src * n + coords[p];
        }
        *slot = a.table[src];
        for d in (0..coords.len()).rev() {
            coords[d] += 1;
            if coords[d] < n {
                break;
            }
            coords[d] = 0;
        }
    }
    Ok(AssignSet {
        vars: target.to_vec(),
        table,
    })
}

/// Projects `var` out of `a`, or-folding (`universal = false`) or
/// and-folding (`universal = true`) over its values.
fn project(a: &AssignSet, var: &str, universal: bool, n: usize) -> AssignSet {
    let p = a
        .vars
        .iter()
        .position(|v| v == var)
        .expect("projection variable must be live");
    let out_vars: Vec<String> = a
        .vars
        .iter()
        .filter(|v| v.as_str() != var)
        .cloned()
        .collect();
    let mut out = vec![universal; a.table.len() / n];
    let mut coords = vec![0usize; a.vars.len()];
    for &value in a.table.iter() {
        let mut dst = 0usize;
        for (d, &c) in coords.iter().enumerate() {
            if d != p {
                dst = dst * n + c;
            }
        }
        if universal {
            out[dst] &= value;
        } else {
            out[dst] |= value;
        }
        for d in (0..coords.len()).rev() {
            coords[d] += 1;
            if coords[d] < n {
                break;
            }
            coords[d] = 0;
        }
    }
    AssignSet {
        vars: out_vars,
        table: out,
    }
}

struct Evaluator<'a> {
    s: &'a Structure,
    cache: HashMap<Formula, AssignSet>,
}

impl<'a> Evaluator<'a> {
    fn new(s: &'a Structure) -> Self {
        Evaluator {
            s,
            cache: HashMap::new(),
        }
    }

    fn atom_like(
        &self,
        left: &str,
        right: &str,
        pred: impl Fn(usize, usize) -> bool,
    ) -> Result<AssignSet, FormulaError> {
        let n = self.s.base_size();
        if left == right {
            checked_table_len(n, 1)?;
            let table = (0..n).map(|v| pred(v, v)).collect();
            return Ok(AssignSet {
                vars: vec![left.to_string()],
                table,
            });
        }
        checked_table_len(n, 2)?;
        let (first, second) = if left < right {
            (left, right)
        } else {
            (right, left)
        };
        let mut table = vec![false; n * n];
        for a in 0..n {
            for b in 0..n {
                // `a` is the value of `first`, `b` of `second`.
                let (lv, rv) = if left == first { (a, b) } else { (b, a) };
                table[a * n + b] = pred(lv, rv);
            }
        }
        Ok(AssignSet {
            vars: vec![first.to_string(), second.to_string()],
            table,
        })
    }

    fn eval(&mut self, f: &Formula) -> Result<AssignSet, FormulaError> {
        if let Some(hit) = self.cache.get(f) {
            return Ok(hit.clone());
        }
        let n = self.s.base_size();
        let result = match f {
            Formula::Atom {
                symbol,
                left,
                right,
            } => {
                let rel = self.s.resolve(symbol)?;
                self.atom_like(left, right, |a, b| rel.contains(a, b))?
            }
            Formula::Equals { left, right } => self.atom_like(left, right, |a, b| a == b)?,
            Formula::And(l, r) | Formula::Or(l, r) => {
                let conj = matches!(f, Formula::And(_, _));
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                let merged = merge_vars(&a.vars, &b.vars);
                let ea = expand(&a, &merged, n)?;
                let eb = expand(&b, &merged, n)?;
                let table = ea
                    .table
                    .iter()
                    .zip(eb.table.iter())
                    .map(|(&x, &y)| if conj { x && y } else { x || y })
                    .collect();
                AssignSet {
                    vars: merged,
                    table,
                }
            }
            Formula::Not(inner) => {
                let mut a = self.eval(inner)?;
                for slot in a.table.iter_mut() {
                    *slot = !*slot;
                }
                a
            }
            Formula::Exists { var, body } | Formula::ForAll { var, body } => {
                let universal = matches!(f, Formula::ForAll { .. });
                let a = self.eval(body)?;
                if a.vars.iter().any(|v| v == var) {
                    project(&a, var, universal, n)
                } else {
                    // The variable is not live in the body, and the base
                    // set is nonempty, so the quantifier is vacuous.
                    a
                }
            }
        };
        self.cache.insert(f.clone(), result.clone());
        Ok(result)
    }
}

/// Evaluates a formula whose free variables are among `{x, y}` to the
/// binary relation `{(a, b) : structure ⊨ f[x:=a, y:=b]}`.
pub fn evaluate_binary(
    f: &Formula,
    s: &Structure,
    x: &str,
    y: &str,
) -> Result<BinRel, FormulaError> {
    if x == y {
        return Err(FormulaError::DuplicateFreeVariables { var: x.to_string() });
    }
    for v in f.free_vars() {
        if v != x && v != y {
            return Err(FormulaError::FreeVariableOutsideXY { var: v });
        }
    }
    let aset = Evaluator::new(s).eval(f)?;
    let n = s.base_size();
    let mut rel = BinRel::empty(s.size());
    for a in 0..n {
        for b in 0..n {
            let mut idx = 0usize;
            for v in &aset.vars {
                idx = idx * n + if v == x { a } else { b };
            }
            if aset.table[idx] {
                rel.set(a, b);
            }
        }
    }
    Ok(rel)
}

/// Evaluates a relation-algebra term over a structure.
pub fn evaluate_ra_term(t: &RaTerm, s: &Structure) -> Result<BinRel, FormulaError> {
    Ok(match t {
        RaTerm::Name(name) => s.resolve(name)?.clone(),
        RaTerm::Identity => BinRel::identity(s.size()),
        RaTerm::Union(l, r) => {
            let a = evaluate_ra_term(l, s)?;
            let b = evaluate_ra_term(r, s)?;
            a.union(&b)?
        }
        RaTerm::Complement(inner) => evaluate_ra_term(inner, s)?.complement(),
        RaTerm::Compose(l, r) => {
            let a = evaluate_ra_term(l, s)?;
            let b = evaluate_ra_term(r, s)?;
            a.compose(&b)?
        }
        RaTerm::Converse(inner) => evaluate_ra_term(inner, s)?.converse(),
    })
}

const V0: &str = "v0";
const V1: &str = "v1";
const V2: &str = "v2";

/// Translates a relation-algebra term to a first-order formula with free
/// variables `v0, v1` that uses only the three variables `v0, v1, v2`:
/// composition reuses the variable that is not one of the two endpoints
/// as the middle point, so the variable supply never grows.
pub fn ra_term_to_fo3(t: &RaTerm) -> Formula {
    fn tr(t: &RaTerm, a: &str, b: &str, c: &str) -> Formula {
        match t {
            RaTerm::Name(name) => Formula::atom(name.clone(), a, b),
            RaTerm::Identity => Formula::equals(a, b),
            RaTerm::Union(l, r) => Formula::or(tr(l, a, b, c), tr(r, a, b, c)),
            RaTerm::Complement(inner) => Formula::not(tr(inner, a, b, c)),
            RaTerm::Converse(inner) => tr(inner, b, a, c),
            RaTerm::Compose(l, r) => Formula::exists(
                c,
                Formula::and(tr(l, a, c, b), tr(r, c, b, a)),
            ),
        }
    }
    tr(t, V0, V1, V2)
}

fn closure_err(e: crate::closure::ClosureError) -> FormulaError {
    match e {
        crate::closure::ClosureError::Rel(inner) => FormulaError::Rel(inner),
        other => panic!("unexpected closure error during decomposition: {other}"),
    }
}

/// A block of the refinement together with a term that evaluates to it.
#[derive(Clone)]
struct TrackedBlock {
    rel: BinRel,
    term: RaTerm,
}

/// Constructively reproduces each atom of a closed atom structure as a
/// relation-algebra term over the given generator names.
///
/// The terms are built by re-running the refinement that produced the
/// atoms, this time recording for every block an explicit term: Boolean
/// blocks are intersections of generator literals (and the identity or
/// its complement), and every later split intersects with a composition
/// or converse of already-tracked blocks. Each returned term is verified
/// by evaluation before being handed back, so `terms[i]` provably
/// evaluates to `atoms()[i]`.
pub fn atom_terms(s: &AtomStructure, names: &[&str]) -> Result<Vec<RaTerm>, FormulaError> {
    let generators = s.generators();
    if names.len() != generators.len() {
        return Err(FormulaError::GeneratorNamesMismatch {
            names: names.len(),
            generators: generators.len(),
        });
    }
    let mut seen = BTreeSet::new();
    for name in names {
        if !seen.insert(*name) {
            return Err(FormulaError::BadSymbolName(format!(
                "duplicate generator name {name:?}"
            )));
        }
    }
    let mut structure = Structure::new(crate::rel::BaseSize::new(s.base_size())?);
    for (name, rel) in names.iter().zip(generators.iter()) {
        structure.insert(*name, rel.clone())?;
    }

    let n = s.base_size();

    // Boolean blocks: group pairs by (on-diagonal, generator membership)
    // and intersect the corresponding literals.
    let mut keyed: Vec<(Vec<bool>, TrackedBlock)> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let mut key = Vec::with_capacity(generators.len() + 1);
            key.push(a == b);
            for g in generators {
                key.push(g.contains(a, b));
            }
            match keyed.iter_mut().find(|(k, _)| *k == key) {
                Some((_, block)) => block.rel.set(a, b),
                None => {
                    let mut term = if a == b {
                        RaTerm::Identity
                    } else {
                        RaTerm::complement(RaTerm::Identity)
                    };
                    for (name, &inside) in names.iter().zip(&key[1..]) {
                        let literal = if inside {
                            RaTerm::name(*name)
                        } else {
                            RaTerm::complement(RaTerm::name(*name))
                        };
                        term = RaTerm::intersection(term, literal);
                    }
                    let mut rel = BinRel::empty(structure.size());
                    rel.set(a, b);
                    keyed.push((key, TrackedBlock { rel, term }));
                }
            }
        }
    }
    let mut blocks: Vec<TrackedBlock> = keyed.into_iter().map(|(_, b)| b).collect();

    // Refine: whenever a converse or a composition of current blocks cuts
    // a block properly, split it and restart with the finer partition.
    // This terminates because each split increases the block count, which
    // is bounded by the atom count of the (already computed) closure.
    'refine: loop {
        let snapshot = blocks.clone();
        let mut candidates: Vec<TrackedBlock> = Vec::new();
        for x in &snapshot {
            candidates.push(TrackedBlock {
                rel: x.rel.converse(),
                term: RaTerm::converse(x.term.clone()),
            });
            for y in &snapshot {
                candidates.push(TrackedBlock {
                    rel: x.rel.compose(&y.rel)?,
                    term: RaTerm::compose(x.term.clone(), y.term.clone()),
                });
            }
        }
        for cand in &candidates {
            for idx in 0..blocks.len() {
                let inter = blocks[idx].rel.intersect(&cand.rel)?;
                if !inter.is_empty() && inter != blocks[idx].rel {
                    let outside = TrackedBlock {
                        rel: blocks[idx].rel.minus(&cand.rel)?,
                        term: RaTerm::intersection(
                            blocks[idx].term.clone(),
                            RaTerm::complement(cand.term.clone()),
                        ),
                    };
                    let inside_term =
                        RaTerm::intersection(blocks[idx].term.clone(), cand.term.clone());
                    blocks[idx] = TrackedBlock {
                        rel: inter,
                        term: inside_term,
                    };
                    blocks.push(outside);
                    continue 'refine;
                }
            }
        }
        break;
    }

    assert_eq!(
        blocks.len(),
        s.atom_count(),
        "refinement must terminate on exactly the atoms"
    );

    // Order the terms by atom index and verify each one by evaluation.
    let mut terms: Vec<Option<RaTerm>> = vec![None; s.atom_count()];
    for block in blocks {
        let (a, b) = block
            .rel
            .pairs()
            .next()
            .expect("refinement blocks are nonempty");
        let atom = s.atom_of_pair(a, b);
        assert_eq!(
            block.rel,
            s.atoms()[atom],
            "refinement block must coincide with its atom"
        );
        let evaluated = evaluate_ra_term(&block.term, &structure)?;
        assert_eq!(
            evaluated, block.rel,
            "recorded term must evaluate to its block"
        );
        terms[atom] = Some(block.term);
    }
    Ok(terms
        .into_iter()
        .map(|t| t.expect("every atom is reached by exactly one block"))
        .collect())
}

/// If `r` is a member of the closure, returns a relation-algebra term
/// over the generator names that evaluates to `r`; returns `None` when
/// `r` is not a member. The empty relation gets the term `id ∩ ~id`.
pub fn member_term(
    s: &AtomStructure,
    names: &[&str],
    r: &BinRel,
) -> Result<Option<RaTerm>, FormulaError> {
    let set = match s.decompose(r).map_err(closure_err)? {
        Decomposition::Member(set) => set,
        Decomposition::NotMember => return Ok(None),
    };
    let terms = atom_terms(s, names)?;
    let mut acc: Option<RaTerm> = None;
    for atom in set.iter() {
        let t = terms[atom].clone();
        acc = Some(match acc {
            Some(prev) => RaTerm::union(prev, t),
            None => t,
        });
    }
    Ok(Some(acc.unwrap_or_else(|| {
        RaTerm::intersection(RaTerm::Identity, RaTerm::complement(RaTerm::Identity))
    })))
}
