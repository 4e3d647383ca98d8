//! Conjunctive (primitive-positive) queries with two output variables:
//! evaluation over a structure, and exhaustive bounded search for a query
//! defining a given target relation.
//!
//! Evaluation treats each pair `(a, b)` of output values as a small
//! constraint-satisfaction problem over bitset domains, solved with
//! arc consistency plus smallest-domain-first backtracking. The search
//! enumerates constraint sets in a canonical order (constraint count,
//! then variable count, then lexicographic), skips candidates that are
//! not lexicographically minimal under permutations of the quantified
//! variables, and evaluates each candidate against the target with
//! early abort on the first differing pair. Work is spread over a
//! thread pool in enumeration-order chunks, so the returned query is
//! the first canonical match regardless of parallelism.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use super::ast::Formula;
use super::{FormulaError, Structure, PP_SEARCH_HARD_CAP};
use crate::rel::BinRel;

/// The reserved symbol for equality constraints in queries.
pub const EQUALITY_SYMBOL: &str = "=";

/// One constraint of a conjunctive query: `symbol(left, right)`, or an
/// equality when `symbol` is [`EQUALITY_SYMBOL`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PpAtom {
    pub left: String,
    pub right: String,
    pub symbol: String,
}

/// A conjunctive query with output variables `x` and `y`; every other
/// variable occurring in the constraints is existentially quantified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PpQuery {
    pub x: String,
    pub y: String,
    pub atoms: Vec<PpAtom>,
}

impl PpQuery {
    /// The query as a first-order formula: the constraint conjunction
    /// under one existential quantifier per non-output variable. An
    /// empty constraint list becomes the always-true `x = x & y = y`.
    pub fn to_formula(&self) -> Formula {
        let mut extras: Vec<&str> = Vec::new();
        for atom in &self.atoms {
            for v in [atom.left.as_str(), atom.right.as_str()] {
                if v != self.x && v != self.y && !extras.contains(&v) {
                    extras.push(v);
                }
            }
        }
        extras.sort_unstable();
        let mut body: Option<Formula> = None;
        for atom in &self.atoms {
            let lit = if atom.symbol == EQUALITY_SYMBOL {
                Formula::equals(&atom.left, &atom.right)
            } else {
                Formula::atom(&atom.symbol, &atom.left, &atom.right)
            };
            body = Some(match body {
                Some(prev) => Formula::and(prev, lit),
                None => lit,
            });
        }
        let mut f = body.unwrap_or_else(|| {
            Formula::and(
                Formula::equals(&self.x, &self.x),
                Formula::equals(&self.y, &self.y),
            )
        });
        for v in extras.into_iter().rev() {
            f = Formula::exists(v, f);
        }
        f
    }
}

impl fmt::Display for PpQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

/// Outcome of [`pp_search`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PpSearchResult {
    Found { query: PpQuery },
    NotFoundWithinBudget { examined: u64 },
}

// ---------------------------------------------------------------------
// Bitset helpers. Domains are subsets of the base set as u64 words.

fn full_mask(n: usize) -> Vec<u64> {
    let words = n.div_ceil(64);
    let mut mask = vec![!0u64; words];
    let rem = n % 64;
    if rem != 0 {
        mask[words - 1] = (1u64 << rem) - 1;
    }
    mask
}

fn mask_is_empty(mask: &[u64]) -> bool {
    mask.iter().all(|&w| w == 0)
}

fn mask_count(mask: &[u64]) -> usize {
    mask.iter().map(|w| w.count_ones() as usize).sum()
}

fn masks_intersect(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b.iter()).any(|(&x, &y)| x & y != 0)
}

fn mask_contains(mask: &[u64], value: usize) -> bool {
    mask[value / 64] & (1u64 << (value % 64)) != 0
}

fn mask_clear(mask: &mut [u64], value: usize) {
    mask[value / 64] &= !(1u64 << (value % 64));
}

/// Shrinks `mask` to `{value}`; false when `value` was not in it.
fn mask_restrict(mask: &mut [u64], value: usize) -> bool {
    if !mask_contains(mask, value) {
        return false;
    }
    mask.fill(0);
    mask[value / 64] = 1u64 << (value % 64);
    true
}

fn first_bit(mask: &[u64]) -> Option<usize> {
    mask.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, &w)| i * 64 + w.trailing_zeros() as usize)
}

// ---------------------------------------------------------------------
// The per-pair constraint solver.

/// Resolved tables for one relation symbol.
struct SymbolTables {
    rel: BinRel,
    conv: BinRel,
    /// `{p : rel(p, p)}`, used for loop constraints.
    diag: Vec<u64>,
}

impl SymbolTables {
    fn new(rel: BinRel) -> SymbolTables {
        let n = rel.base_size();
        let mut diag = vec![0u64; n.div_ceil(64)];
        for p in 0..n {
            if rel.contains(p, p) {
                diag[p / 64] |= 1u64 << (p % 64);
            }
        }
        SymbolTables {
            conv: rel.converse(),
            rel,
            diag,
        }
    }
}

/// CSP view of a query: variable 0 is `x`, variable 1 is `y`.
struct Solver<'a> {
    n: usize,
    var_count: usize,
    /// Per-variable admissible values (the base set, cut down by loops).
    unary: Vec<Vec<u64>>,
    /// Directed arcs `(from, to, rel)` with `rel(from_value, to_value)`.
    arcs: Vec<(usize, usize, &'a BinRel)>,
    /// Arc indices whose `to` is the given variable.
    arcs_into: Vec<Vec<usize>>,
}

impl<'a> Solver<'a> {
    fn new(
        n: usize,
        var_count: usize,
        triples: &[(usize, usize, usize)],
        tables: &'a [SymbolTables],
    ) -> Solver<'a> {
        let mut unary = vec![full_mask(n); var_count];
        let mut arcs: Vec<(usize, usize, &BinRel)> = Vec::new();
        for &(u, v, s) in triples {
            let t = &tables[s];
            if u == v {
                for (slot, &d) in unary[u].iter_mut().zip(t.diag.iter()) {
                    *slot &= d;
                }
            } else {
                arcs.push((u, v, &t.rel));
                arcs.push((v, u, &t.conv));
            }
        }
        let mut arcs_into = vec![Vec::new(); var_count];
        for (i, &(_, to, _)) in arcs.iter().enumerate() {
            arcs_into[to].push(i);
        }
        Solver {
            n,
            var_count,
            unary,
            arcs,
            arcs_into,
        }
    }

    /// Removes values of `from` with no support in `to`; true if any went.
    fn revise(&self, doms: &mut [Vec<u64>], from: usize, to: usize, rel: &BinRel) -> bool {
        let mut changed = false;
        let words = doms[from].len();
        for w in 0..words {
            let mut bits = doms[from][w];
            while bits != 0 {
                let p = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                if !masks_intersect(rel.row_words(p), &doms[to]) {
                    mask_clear(&mut doms[from], p);
                    changed = true;
                }
            }
        }
        changed
    }

    /// Arc consistency to fixpoint; false on a domain wipe-out.
    fn ac3(&self, doms: &mut [Vec<u64>]) -> bool {
        let mut queue: VecDeque<usize> = (0..self.arcs.len()).collect();
        while let Some(i) = queue.pop_front() {
            let (from, to, rel) = self.arcs[i];
            if self.revise(doms, from, to, rel) {
                if mask_is_empty(&doms[from]) {
                    return false;
                }
                for &j in &self.arcs_into[from] {
                    if j != i {
                        queue.push_back(j);
                    }
                }
            }
        }
        true
    }

    fn backtrack(&self, doms: &[Vec<u64>]) -> bool {
        let mut pick: Option<(usize, usize)> = None;
        for v in 0..self.var_count {
            let c = mask_count(&doms[v]);
            if c == 0 {
                return false;
            }
            if c > 1 && pick.map_or(true, |(_, best)| c < best) {
                pick = Some((v, c));
            }
        }
        let Some((var, _)) = pick else {
            // Every domain is a consistent singleton: a solution.
            return true;
        };
        let mut candidates = doms[var].clone();
        while let Some(value) = first_bit(&candidates) {
            mask_clear(&mut candidates, value);
            let mut next = doms.to_vec();
            mask_restrict(&mut next[var], value);
            if self.ac3(&mut next) && self.backtrack(&next) {
                return true;
            }
        }
        false
    }

    /// Is the query satisfiable with `x = a`, `y = b`?
    fn solve(&self, a: usize, b: usize) -> bool {
        debug_assert!(a < self.n && b < self.n);
        let mut doms = self.unary.clone();
        if !mask_restrict(&mut doms[0], a) || !mask_restrict(&mut doms[1], b) {
            return false;
        }
        // A domain can start out empty (an unsatisfiable loop
        // constraint); AC-3 only notices wipe-outs along arcs.
        if doms.iter().any(|d| mask_is_empty(d)) {
            return false;
        }
        self.ac3(&mut doms) && self.backtrack(&doms)
    }
}

/// Evaluates a conjunctive query to the binary relation
/// `{(a, b) : structure ⊨ query[x:=a, y:=b]}`.
pub fn pp_evaluate(q: &PpQuery, s: &Structure) -> Result<BinRel, FormulaError> {
    if q.x == q.y {
        return Err(FormulaError::DuplicateFreeVariables { var: q.x.clone() });
    }
    fn intern<'a>(pool: &mut Vec<&'a str>, name: &'a str) -> usize {
        match pool.iter().position(|v| *v == name) {
            Some(i) => i,
            None => {
                pool.push(name);
                pool.len() - 1
            }
        }
    }
    let mut vars: Vec<&str> = vec![&q.x, &q.y];
    let mut symbol_names: Vec<&str> = Vec::new();
    let mut triples: Vec<(usize, usize, usize)> = Vec::with_capacity(q.atoms.len());
    for atom in &q.atoms {
        let u = intern(&mut vars, &atom.left);
        let v = intern(&mut vars, &atom.right);
        let sym = intern(&mut symbol_names, &atom.symbol);
        triples.push((u, v, sym));
    }
    let tables: Vec<SymbolTables> = symbol_names
        .iter()
        .map(|name| {
            Ok(SymbolTables::new(if *name == EQUALITY_SYMBOL {
                BinRel::identity(s.size())
            } else {
                s.resolve(name)?.clone()
            }))
        })
        .collect::<Result<_, FormulaError>>()?;
    let solver = Solver::new(s.base_size(), vars.len(), &triples, &tables);
    let n = s.base_size();
    let mut rel = BinRel::empty(s.size());
    for a in 0..n {
        for b in 0..n {
            if solver.solve(a, b) {
                rel.set(a, b);
            }
        }
    }
    Ok(rel)
}

// ---------------------------------------------------------------------
// Bounded search.

fn binom(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of raw candidate constraint sets [`pp_search`] would enumerate
/// for a structure with `symbol_count` relation symbols: the sum of
/// `C(m²·symbol_count, c)` over `c ≤ max_constraints` constraint counts
/// and admissible variable counts `2 ≤ m ≤ min(max_vars, 2 + 2c)`.
pub fn pp_search_estimate(symbol_count: usize, max_vars: usize, max_constraints: usize) -> u128 {
    let k = symbol_count as u128;
    let mut total: u128 = 0;
    for c in 1..=max_constraints {
        let m_cap = max_vars.min(2 + 2 * c);
        for m in 2..=m_cap {
            let universe = (m * m) as u128 * k;
            total = total.saturating_add(binom(universe, c as u128));
        }
    }
    total
}

fn decode_triple(t: usize, m: usize, k: usize) -> (usize, usize, usize) {
    (t / (m * k), (t / k) % m, t % k)
}

fn encode_triple(u: usize, v: usize, sym: usize, m: usize, k: usize) -> usize {
    (u * m + v) * k + sym
}

fn next_combination(combo: &mut [usize], universe: usize) -> bool {
    let c = combo.len();
    let mut i = c;
    loop {
        if i == 0 {
            return false;
        }
        i -= 1;
        if combo[i] != universe - c + i {
            break;
        }
    }
    combo[i] += 1;
    for j in i + 1..c {
        combo[j] = combo[j - 1] + 1;
    }
    true
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &head) in items.iter().enumerate() {
        let mut rest: Vec<usize> = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// A candidate is canonical when every quantified variable `2..m` occurs
/// in some constraint and the sorted triple list is lexicographically
/// minimal among its images under permutations of the quantified
/// variables (output variables 0 and 1 stay fixed).
fn is_canonical(combo: &[usize], m: usize, k: usize, perms: &[Vec<usize>]) -> bool {
    let mut used = vec![false; m];
    for &t in combo {
        let (u, v, _) = decode_triple(t, m, k);
        used[u] = true;
        used[v] = true;
    }
    if !used[2..].iter().all(|&b| b) {
        return false;
    }
    for perm in perms {
        let apply = |w: usize| if w < 2 { w } else { perm[w - 2] };
        let mut mapped: Vec<usize> = combo
            .iter()
            .map(|&t| {
                let (u, v, s) = decode_triple(t, m, k);
                encode_triple(apply(u), apply(v), s, m, k)
            })
            .collect();
        mapped.sort_unstable();
        if mapped.as_slice() < combo {
            return false;
        }
    }
    true
}

fn combo_matches_target(
    combo: &[usize],
    m: usize,
    k: usize,
    tables: &[SymbolTables],
    n: usize,
    target: &BinRel,
) -> bool {
    let triples: Vec<(usize, usize, usize)> = combo
        .iter()
        .map(|&t| decode_triple(t, m, k))
        .collect();
    let solver = Solver::new(n, m, &triples, tables);
    for a in 0..n {
        for b in 0..n {
            if solver.solve(a, b) != target.contains(a, b) {
                return false;
            }
        }
    }
    true
}

fn combo_to_query(combo: &[usize], m: usize, k: usize, symbols: &[String]) -> PpQuery {
    let var_name = |w: usize| match w {
        0 => "x".to_string(),
        1 => "y".to_string(),
        _ => format!("z{}", w - 2),
    };
    let atoms = combo
        .iter()
        .map(|&t| {
            let (u, v, s) = decode_triple(t, m, k);
            PpAtom {
                left: var_name(u),
                right: var_name(v),
                symbol: symbols[s].clone(),
            }
        })
        .collect();
    PpQuery {
        x: "x".to_string(),
        y: "y".to_string(),
        atoms,
    }
}

const SEARCH_CHUNK: usize = 4096;

/// Exhaustively searches for a conjunctive query over the structure's
/// symbols (equality is not added) that evaluates exactly to `target`,
/// among queries with at most `max_vars` variables (including the two
/// outputs) and 1..=`max_constraints` constraints. Candidates are tried
/// by constraint count, then variable count, then lexicographically, and
/// the first canonical match is returned; the enumeration order — and
/// therefore the result — does not depend on thread scheduling. When no
/// query matches, the number of canonical candidates examined is
/// reported.
pub fn pp_search(
    s: &Structure,
    target: &BinRel,
    max_vars: usize,
    max_constraints: usize,
) -> Result<PpSearchResult, FormulaError> {
    let n = s.base_size();
    if target.base_size() != n {
        return Err(crate::rel::RelError::SizeMismatch {
            left: n,
            right: target.base_size(),
        }
        .into());
    }
    if max_vars < 2 || max_constraints < 1 {
        return Err(FormulaError::BadBudget);
    }
    let estimate = pp_search_estimate(s.symbol_count(), max_vars, max_constraints);
    if estimate > PP_SEARCH_HARD_CAP {
        return Err(FormulaError::BudgetTooLarge {
            estimate,
            cap: PP_SEARCH_HARD_CAP,
        });
    }
    let symbols: Vec<String> = s.symbols().map(|(name, _)| name.to_string()).collect();
    let tables: Vec<SymbolTables> = s
        .symbols()
        .map(|(_, rel)| SymbolTables::new(rel.clone()))
        .collect();
    let k = symbols.len();
    let mut examined: u64 = 0;
    if k == 0 {
        return Ok(PpSearchResult::NotFoundWithinBudget { examined });
    }

    let mut chunk: Vec<Vec<usize>> = Vec::with_capacity(SEARCH_CHUNK);
    for c in 1..=max_constraints {
        for m in 2..=max_vars.min(2 + 2 * c) {
            let universe = m * m * k;
            if c > universe {
                continue;
            }
            let extras: Vec<usize> = (2..m).collect();
            let perms: Vec<Vec<usize>> = permutations(&extras)
                .into_iter()
                .filter(|p| *p != extras)
                .collect();
            let mut combo: Vec<usize> = (0..c).collect();
            let mut done = false;
            while !done {
                chunk.clear();
                loop {
                    chunk.push(combo.clone());
                    if !next_combination(&mut combo, universe) {
                        done = true;
                        break;
                    }
                    if chunk.len() == SEARCH_CHUNK {
                        break;
                    }
                }
                let found = chunk.par_iter().find_map_first(|cand| {
                    if !is_canonical(cand, m, k, &perms) {
                        return None;
                    }
                    combo_matches_target(cand, m, k, &tables, n, target).then(|| cand.clone())
                });
                if let Some(cand) = found {
                    return Ok(PpSearchResult::Found {
                        query: combo_to_query(&cand, m, k, &symbols),
                    });
                }
                examined += chunk
                    .par_iter()
                    .filter(|cand| is_canonical(cand, m, k, &perms))
                    .count() as u64;
            }
        }
    }
    Ok(PpSearchResult::NotFoundWithinBudget { examined })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::super::eval::evaluate_binary;
    use super::super::testgen;
    use super::*;
    use crate::rel::BaseSize;

    fn size(n: usize) -> BaseSize {
        BaseSize::new(n).unwrap()
    }

    fn atom(left: &str, right: &str, symbol: &str) -> PpAtom {
        PpAtom {
            left: left.to_string(),
            right: right.to_string(),
            symbol: symbol.to_string(),
        }
    }

    fn query(atoms: Vec<PpAtom>) -> PpQuery {
        PpQuery {
            x: "x".to_string(),
            y: "y".to_string(),
            atoms,
        }
    }

    fn two_by_two() -> Structure {
        let mut s = Structure::new(size(4));
        s.insert("E0", BinRel::kernel_of(size(4), |v| v / 2)).unwrap();
        s.insert("E1", BinRel::kernel_of(size(4), |v| v % 2)).unwrap();
        s
    }

    fn z5_structure() -> Structure {
        let mut s = Structure::new(size(25));
        s.insert("E0", BinRel::kernel_of(size(25), |v| v / 5)).unwrap();
        s.insert("E1", BinRel::kernel_of(size(25), |v| v % 5)).unwrap();
        s.insert("A1", BinRel::kernel_of(size(25), |v| (v / 5 + 5 - v % 5) % 5))
            .unwrap();
        s
    }

    fn alpha4_on_z5() -> BinRel {
        BinRel::kernel_of(size(25), |v| (4 * (v / 5) + 5 - v % 5) % 5)
    }

    fn gamma_on_2x2() -> BinRel {
        BinRel::kernel_of(size(4), |v| usize::from(v == 1 || v == 2))
    }

    #[test]
    fn empty_query_is_universal() {
        let s = two_by_two();
        let q = query(vec![]);
        assert_eq!(pp_evaluate(&q, &s).unwrap(), BinRel::universal(size(4)));
        assert_eq!(q.to_string(), "x = x & y = y");
    }

    #[test]
    fn single_constraint_evaluates_to_its_relation() {
        let s = two_by_two();
        let q = query(vec![atom("x", "y", "E0")]);
        assert_eq!(pp_evaluate(&q, &s).unwrap(), *s.get("E0").unwrap());
    }

    #[test]
    fn equality_constraints_chain_through_middle_variables() {
        let s = two_by_two();
        let q = query(vec![atom("x", "z", EQUALITY_SYMBOL), atom("z", "y", "E1")]);
        assert_eq!(pp_evaluate(&q, &s).unwrap(), *s.get("E1").unwrap());
    }

    #[test]
    fn loop_constraint_restricts_one_variable() {
        let mut s = Structure::new(size(3));
        let mut r = BinRel::empty(size(3));
        r.set(0, 0);
        r.set(1, 2);
        s.insert("R", r).unwrap();
        // R(x, x) holds only for x = 0, and y stays free.
        let q = query(vec![atom("x", "x", "R")]);
        let got = pp_evaluate(&q, &s).unwrap();
        let mut want = BinRel::empty(size(3));
        for b in 0..3 {
            want.set(0, b);
        }
        assert_eq!(got, want);
    }

    #[test]
    fn unsatisfiable_loop_on_an_extra_variable_empties_the_result() {
        // exists z. R(z, z) with an irreflexive R is false everywhere,
        // even though z has no arcs for propagation to notice.
        let mut s = Structure::new(size(2));
        s.insert("R", BinRel::empty(size(2))).unwrap();
        let q = query(vec![atom("z", "z", "R")]);
        let got = pp_evaluate(&q, &s).unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn diamond_network_defines_alpha4() {
        let s = z5_structure();
        let q = query(vec![
            atom("x", "c", "E0"),
            atom("c", "y", "E1"),
            atom("x", "d", "E1"),
            atom("d", "y", "E0"),
            atom("c", "d", "A1"),
        ]);
        assert_eq!(pp_evaluate(&q, &s).unwrap(), alpha4_on_z5());
        // The same network through the generic formula evaluator.
        assert_eq!(
            evaluate_binary(&q.to_formula(), &s, "x", "y").unwrap(),
            alpha4_on_z5()
        );
    }

    #[test]
    fn duplicate_output_variables_are_rejected() {
        let s = two_by_two();
        let q = PpQuery {
            x: "x".to_string(),
            y: "x".to_string(),
            atoms: vec![],
        };
        assert_eq!(
            pp_evaluate(&q, &s),
            Err(FormulaError::DuplicateFreeVariables { var: "x".into() })
        );
    }

    #[test]
    fn unknown_symbol_is_reported() {
        let s = two_by_two();
        let q = query(vec![atom("x", "y", "Q")]);
        assert_eq!(
            pp_evaluate(&q, &s),
            Err(FormulaError::UnknownSymbol("Q".into()))
        );
    }

    #[test]
    fn query_formula_round_trips_through_parser() {
        let q = query(vec![
            atom("x", "z0", "E0"),
            atom("z0", "y", "E1"),
            atom("z0", "z0", "E0"),
        ]);
        let f = q.to_formula();
        assert_eq!(super::super::parse::parse_formula(&q.to_string()).unwrap(), f);
        let report = super::super::ast::fragment_report(&f);
        assert!(report.is_pp);
    }

    #[test]
    fn search_finds_single_constraint_definition_first() {
        let s = two_by_two();
        let target = s.get("E0").unwrap().clone();
        match pp_search(&s, &target, 2, 1).unwrap() {
            PpSearchResult::Found { query } => {
                assert_eq!(query.atoms, vec![atom("x", "y", "E0")]);
            }
            other => panic!("expected a hit, got {other:?}"),
        }
    }

    #[test]
    fn search_result_is_deterministic_on_miss() {
        let s = two_by_two();
        let target = gamma_on_2x2();
        let first = pp_search(&s, &target, 3, 3).unwrap();
        let second = pp_search(&s, &target, 3, 3).unwrap();
        assert_eq!(first, second);
        match first {
            PpSearchResult::NotFoundWithinBudget { examined } => assert!(examined > 0),
            other => panic!("γ is not conjunctive-definable here, got {other:?}"),
        }
    }

    #[test]
    fn search_finds_a_definition_of_alpha4() {
        let s = z5_structure();
        let target = alpha4_on_z5();
        match pp_search(&s, &target, 4, 5).unwrap() {
            PpSearchResult::Found { query } => {
                assert_eq!(pp_evaluate(&query, &s).unwrap(), target);
            }
            other => panic!("expected a defining query, got {other:?}"),
        }
    }

    #[test]
    fn budgets_are_validated() {
        let s = two_by_two();
        let target = gamma_on_2x2();
        assert_eq!(pp_search(&s, &target, 1, 3), Err(FormulaError::BadBudget));
        assert_eq!(pp_search(&s, &target, 2, 0), Err(FormulaError::BadBudget));
        match pp_search(&s, &target, 8, 30) {
            Err(FormulaError::BudgetTooLarge { estimate, cap }) => {
                assert!(estimate > cap);
                assert_eq!(cap, PP_SEARCH_HARD_CAP);
            }
            other => panic!("expected a budget error, got {other:?}"),
        }
    }

    #[test]
    fn estimate_matches_frozen_value() {
        // Two symbols, up to 4 variables and 6 constraints:
        //   Σ_c Σ_m C(m²·2, c) = 246 + 31_179 + 1_149_016.
        assert_eq!(pp_search_estimate(2, 4, 6), 1_180_441);
        assert_eq!(pp_search_estimate(0, 4, 6), 0);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let s = two_by_two();
        let target = BinRel::identity(size(5));
        assert!(matches!(
            pp_search(&s, &target, 2, 1),
            Err(FormulaError::Rel(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn evaluation_agrees_with_formula_semantics(
            s in testgen::arb_structure(),
            atoms in testgen::arb_pp_atoms(),
        ) {
            let q = query(atoms);
            let direct = pp_evaluate(&q, &s).unwrap();
            let via_formula = evaluate_binary(&q.to_formula(), &s, "x", "y").unwrap();
            prop_assert_eq!(direct, via_formula);
        }

        #[test]
        fn evaluation_is_monotone_in_the_relations(
            s in testgen::arb_structure(),
            atoms in testgen::arb_pp_atoms(),
            extra_pairs in prop::collection::vec((0usize..6, 0usize..6), 0..6),
        ) {
            let q = query(atoms);
            let before = pp_evaluate(&q, &s).unwrap();
            let n = s.base_size();
            let mut bigger = s.clone();
            let mut r = s.get("R").unwrap().clone();
            for (a, b) in extra_pairs {
                if a < n && b < n {
                    r.set(a, b);
                }
            }
            bigger.insert("R", r).unwrap();
            let after = pp_evaluate(&q, &bigger).unwrap();
            prop_assert!(before.is_subset_of(&after));
        }
    }
}
