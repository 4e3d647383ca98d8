//! Concrete families of equivalence relations and the machine-checked
//! certificates built on them.
//!
//! The central family lives on the base set Z_p × Z_p for a prime `p`,
//! encoded as `(x0, x1) ↦ x0·p + x1`: the two coordinate kernels η0, η1
//! and the "slope" kernels α_k of `(x0, x1) ↦ k·x0 − x1` for
//! `k = 1..p−1`. Together with the identity and the universal relation
//! these are exactly the congruences of the module Z_p², and their
//! lattice is the height-two lattice M_{p+1}.
//!
//! On top of the family this module provides:
//! - explicit witness functions showing that any two distinct members
//!   compose to the universal relation, plus a certificate that checks
//!   the same fact by brute-force composition;
//! - the generator sets `{1, 1', η0, η1, α_1..α_n}` whose relational
//!   closure recovers exactly the generators as equivalences (the
//!   M_{n+2} representation), with a certificate for the whole pipeline;
//! - the four-element two-kernel example where the closure *adds* an
//!   equivalence γ that no conjunctive query defines, with its own
//!   certificate;
//! - the reference formulas: the two-variable definition of γ and the
//!   five-constraint conjunctive query defining the top slope kernel.

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{congruences, AlgebraError, FinAlgebra, Operation, MAX_CONGRUENCE_BASE};
use crate::cert::{Certificate, Check};
use crate::closure::{
    ba_closure_with_budget, ra_closure_with_budget, AtomStructure, ClosureError,
    Decomposition, DEFAULT_ATOM_BUDGET,
};
use crate::eqlattice::{
    build_lattice, extract_equivalences, lattices_equal, mn_shape, EqError, MnShape,
};
use crate::formulas::{
    evaluate_binary, evaluate_ra_term, fragment_report, member_term, parse_formula, pp_search,
    FormulaError, PpAtom, PpQuery, PpSearchResult, Structure,
};
use crate::rel::{BaseSize, BinRel, RelError};

/// Largest supported modulus (keeps every base at 121 elements or less).
pub const MAX_ZP2_PRIME: usize = 11;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error(transparent)]
    Closure(#[from] ClosureError),
    #[error(transparent)]
    Eq(#[from] EqError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("{0} is not prime")]
    NotPrime(usize),
    #[error("prime {0} exceeds the supported maximum {MAX_ZP2_PRIME}")]
    TooLarge(usize),
    #[error("n = {n} is out of range for p = {p}: allowed {allowed}")]
    NOutOfRange { p: usize, n: usize, allowed: String },
    #[error("m = {0} is out of range (supported: 1..=9)")]
    MOutOfRange(usize),
    #[error("prime override {p} is invalid for m = {m}: {reason}")]
    BadPrimeOverride { m: usize, p: usize, reason: String },
}

pub fn is_prime(p: usize) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Encodes the pair `(x0, x1)` over Z_p as a base-set element.
pub fn encode_pair(p: usize, x0: usize, x1: usize) -> usize {
    debug_assert!(x0 < p && x1 < p);
    x0 * p + x1
}

/// Inverse of [`encode_pair`].
pub fn decode_pair(p: usize, v: usize) -> (usize, usize) {
    (v / p, v % p)
}

fn md(a: i64, p: usize) -> usize {
    a.rem_euclid(p as i64) as usize
}

fn mod_inverse(a: usize, p: usize) -> usize {
    (1..p)
        .find(|&b| a * b % p == 1)
        .expect("nonzero residues mod a prime are invertible")
}

/// Does `k·a0 − a1 ≡ k·b0 − b1 (mod p)` hold?
fn alpha_related(p: usize, k: usize, a: (usize, usize), b: (usize, usize)) -> bool {
    md(k as i64 * a.0 as i64 - a.1 as i64, p) == md(k as i64 * b.0 as i64 - b.1 as i64, p)
}

/// The coordinate-kernel and slope-kernel equivalences on Z_p × Z_p.
#[derive(Debug, Clone)]
pub struct Zp2Family {
    p: usize,
    n_base: BaseSize,
    eta0: BinRel,
    eta1: BinRel,
    alpha: Vec<BinRel>,
}

impl Zp2Family {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn base(&self) -> BaseSize {
        self.n_base
    }

    pub fn base_size(&self) -> usize {
        self.n_base.get()
    }

    /// Kernel of the first coordinate: `x0 = y0`.
    pub fn eta0(&self) -> &BinRel {
        &self.eta0
    }

    /// Kernel of the second coordinate: `x1 = y1`.
    pub fn eta1(&self) -> &BinRel {
        &self.eta1
    }

    /// Slope kernels `α_1..α_{p−1}`, where `α_k` relates `x` and `y`
    /// exactly when `k·x0 − x1 ≡ k·y0 − y1 (mod p)`.
    pub fn alpha(&self) -> &[BinRel] {
        &self.alpha
    }

    /// `α_k` for `1 ≤ k ≤ p−1`.
    pub fn alpha_k(&self, k: usize) -> &BinRel {
        assert!(
            (1..self.p).contains(&k),
            "alpha index {k} out of range 1..={}",
            self.p - 1
        );
        &self.alpha[k - 1]
    }

    /// All `p + 3` members in a fixed order: universal, identity, η0,
    /// η1, α_1..α_{p−1}.
    pub fn all_relations(&self) -> Vec<BinRel> {
        let mut rels = vec![
            BinRel::universal(self.n_base),
            BinRel::identity(self.n_base),
            self.eta0.clone(),
            self.eta1.clone(),
        ];
        rels.extend(self.alpha.iter().cloned());
        rels
    }
}

/// Builds the family for a prime `2 ≤ p ≤ 11`.
pub fn zp2_family(p: usize) -> Result<Zp2Family, ConstructionError> {
    if !is_prime(p) {
        return Err(ConstructionError::NotPrime(p));
    }
    if p > MAX_ZP2_PRIME {
        return Err(ConstructionError::TooLarge(p));
    }
    let n_base = BaseSize::new(p * p)?;
    let eta0 = BinRel::kernel_of(n_base, |v| v / p);
    let eta1 = BinRel::kernel_of(n_base, |v| v % p);
    let alpha = (1..p)
        .map(|k| BinRel::kernel_of(n_base, move |v| (k * (v / p) + p - v % p) % p))
        .collect();
    Ok(Zp2Family {
        p,
        n_base,
        eta0,
        eta1,
        alpha,
    })
}

/// The generator set `{1, 1', η0, η1, α_1..α_n}` under the standing
/// hypothesis `p ≥ 5` prime and `1 ≤ n < p − 2`.
pub fn make_m(p: usize, n: usize) -> Result<Vec<BinRel>, ConstructionError> {
    if !is_prime(p) {
        return Err(ConstructionError::NotPrime(p));
    }
    if p > MAX_ZP2_PRIME {
        return Err(ConstructionError::TooLarge(p));
    }
    if p < 5 || n < 1 || n + 2 >= p {
        return Err(ConstructionError::NOutOfRange {
            p,
            n,
            allowed: format!("1 <= n < p - 2 = {} with p >= 5", p.saturating_sub(2)),
        });
    }
    make_m_any(p, n)
}

/// The same generator set without the range hypothesis: any prime
/// `5 ≤ p ≤ 11` and any `0 ≤ n ≤ p − 1`, for exploration of how the
/// recovery degrades outside the hypothesis.
pub fn make_m_any(p: usize, n: usize) -> Result<Vec<BinRel>, ConstructionError> {
    if !is_prime(p) {
        return Err(ConstructionError::NotPrime(p));
    }
    if p > MAX_ZP2_PRIME {
        return Err(ConstructionError::TooLarge(p));
    }
    if n >= p {
        return Err(ConstructionError::NOutOfRange {
            p,
            n,
            allowed: format!("0 <= n <= p - 1 = {}", p - 1),
        });
    }
    let family = zp2_family(p)?;
    let mut rels = vec![
        BinRel::universal(family.n_base),
        BinRel::identity(family.n_base),
        family.eta0.clone(),
        family.eta1.clone(),
    ];
    rels.extend(family.alpha[..n].iter().cloned());
    Ok(rels)
}

/// Names matching the order of [`make_m`]'s output.
pub fn m_names(n: usize) -> Vec<String> {
    let mut names = vec![
        "univ".to_string(),
        "id".to_string(),
        "eta0".to_string(),
        "eta1".to_string(),
    ];
    names.extend((1..=n).map(|k| format!("alpha{k}")));
    names
}

/// The four-element example: the two projection kernels on the square
/// of a two-element base, the four-element lattice algebra on the same
/// base, and the extra equivalence γ = 1' ∪ ~(η0 ∪ η1) that the
/// relational closure adds.
pub fn two_by_two_example() -> (Vec<BinRel>, FinAlgebra, BinRel) {
    let size = BaseSize::new(4).unwrap();
    let eta0 = BinRel::kernel_of(size, |v| v / 2);
    let eta1 = BinRel::kernel_of(size, |v| v % 2);
    let identity = BinRel::identity(size);
    let universal = BinRel::universal(size);
    let gamma = identity
        .union(&eta0.union(&eta1).unwrap().complement())
        .unwrap();
    let l = vec![identity, eta0, eta1, universal];
    let algebra = FinAlgebra::new(
        size,
        vec![
            Operation::binary("meet", 4, |a, b| a & b),
            Operation::binary("join", 4, |a, b| a | b),
        ],
    )
    .unwrap();
    (l, algebra, gamma)
}

/// The example's relations as a named structure (symbols E0, E1).
pub fn two_by_two_structure() -> Structure {
    let size = BaseSize::new(4).unwrap();
    let mut s = Structure::new(size);
    s.insert("E0", BinRel::kernel_of(size, |v| v / 2)).unwrap();
    s.insert("E1", BinRel::kernel_of(size, |v| v % 2)).unwrap();
    s
}

/// The family as a named structure: E0, E1 for the coordinate kernels
/// and A1..A{p−1} for the slope kernels.
pub fn zp2_structure(family: &Zp2Family) -> Structure {
    let mut s = Structure::new(family.n_base);
    s.insert("E0", family.eta0.clone()).unwrap();
    s.insert("E1", family.eta1.clone()).unwrap();
    for (i, a) in family.alpha.iter().enumerate() {
        s.insert(format!("A{}", i + 1), a.clone()).unwrap();
    }
    s
}

fn case1_raw(p: usize, k: usize, u: (usize, usize), v: (usize, usize)) -> (usize, usize) {
    let y1 = md(k as i64 * u.0 as i64 + v.1 as i64 - k as i64 * v.0 as i64, p);
    (u.0, y1)
}

/// Witness for η0 ∘ α_k being universal: a point `y` with `u η0 y` and
/// `y α_k v`, namely `y = (u0, k·u0 + v1 − k·v0)`. Both memberships are
/// asserted before returning.
pub fn case1_witness(p: usize, k: usize, u: (usize, usize), v: (usize, usize)) -> (usize, usize) {
    assert!(is_prime(p) && p <= MAX_ZP2_PRIME, "invalid modulus {p}");
    assert!((1..p).contains(&k), "slope {k} out of range 1..={}", p - 1);
    assert!(u.0 < p && u.1 < p && v.0 < p && v.1 < p, "pair out of range");
    let y = case1_raw(p, k, u, v);
    assert_eq!(u.0, y.0, "witness must share its first coordinate with u");
    assert!(
        alpha_related(p, k, y, v),
        "witness must be alpha_{k}-related to v"
    );
    y
}

fn case2_raw(p: usize, i: usize, j: usize, u: (usize, usize), v: (usize, usize)) -> (usize, usize) {
    let inv = mod_inverse(md(j as i64 - i as i64, p), p);
    let y0 = md(
        inv as i64 * (u.1 as i64 - i as i64 * u.0 as i64 + j as i64 * v.0 as i64 - v.1 as i64),
        p,
    );
    let y1 = md(j as i64 * (y0 as i64 - v.0 as i64) + v.1 as i64, p);
    (y0, y1)
}

/// Witness for α_i ∘ α_j (i ≠ j) being universal: the point `y` with
/// `u α_i y` and `y α_j v`, determined by
/// `y0 = (j−i)⁻¹·(u1 − i·u0 + j·v0 − v1)` and `y1 = j·(y0 − v0) + v1`.
/// Both memberships are asserted before returning. (The `y1` line ends
/// in `v1`: the variant ending in `v0` fails the α_j membership.)
pub fn case2_witness(
    p: usize,
    i: usize,
    j: usize,
    u: (usize, usize),
    v: (usize, usize),
) -> (usize, usize) {
    assert!(is_prime(p) && p <= MAX_ZP2_PRIME, "invalid modulus {p}");
    assert!((1..p).contains(&i) && (1..p).contains(&j), "slopes out of range");
    assert_ne!(i, j, "the two slopes must be distinct");
    assert!(u.0 < p && u.1 < p && v.0 < p && v.1 < p, "pair out of range");
    let y = case2_raw(p, i, j, u, v);
    assert!(
        alpha_related(p, i, u, y),
        "witness must be alpha_{i}-related to u"
    );
    assert!(
        alpha_related(p, j, y, v),
        "witness must be alpha_{j}-related to v"
    );
    y
}

/// The two-variable formula defining γ from the two kernels:
/// `x = y | !(E0(x,y) | E1(x,y))`.
pub fn gamma_formula() -> crate::formulas::Formula {
    parse_formula("x = y | !(E0(x,y) | E1(x,y))").expect("fixed formula text parses")
}

/// The five-constraint conjunctive query defining the top slope kernel
/// α_{p−1} from E0, E1, A1:
/// `∃c,d. E0(a,c) & E1(c,b) & E1(a,d) & E0(d,b) & A1(c,d)`.
pub fn diamond_query() -> PpQuery {
    let atom = |l: &str, r: &str, s: &str| PpAtom {
        left: l.to_string(),
        right: r.to_string(),
        symbol: s.to_string(),
    };
    PpQuery {
        x: "a".to_string(),
        y: "b".to_string(),
        atoms: vec![
            atom("a", "c", "E0"),
            atom("c", "b", "E1"),
            atom("a", "d", "E1"),
            atom("d", "b", "E0"),
            atom("c", "d", "A1"),
        ],
    }
}

fn class_summary(rel: &BinRel) -> String {
    let classes = rel.classes();
    let mut sizes: Vec<usize> = classes.iter().map(Vec::len).collect();
    sizes.sort_unstable();
    format!("{} classes of sizes {:?}", classes.len(), sizes)
}

/// Family sanity certificate: each member is an equivalence with `p`
/// classes of size `p`, and their diversity (off-diagonal) parts
/// partition the off-diagonal pairs.
pub fn zp2_certificate(p: usize) -> Result<Certificate, ConstructionError> {
    let family = zp2_family(p)?;
    let mut cert = Certificate::new(format!("slope-kernel family on Z_{p} x Z_{p}"));
    let identity = BinRel::identity(family.n_base);
    let named = family_named(&family);
    let mut all_shapes_ok = true;
    let mut bad = Vec::new();
    for (name, rel) in &named {
        let classes = rel.classes();
        let ok = rel.is_equivalence()
            && classes.len() == p
            && classes.iter().all(|c| c.len() == p);
        if !ok {
            all_shapes_ok = false;
            bad.push(format!("{name}: {}", class_summary(rel)));
        }
    }
    cert.push(
        Check::verdict(
            "members-are-uniform-equivalences",
            format!(
                "{} relations, each expected to be an equivalence with {p} classes of size {p}",
                named.len()
            ),
            all_shapes_ok,
        )
        .with_witnesses(bad),
    );

    let mut union = BinRel::empty(family.n_base);
    let mut diversity_total = 0usize;
    for (_, rel) in &named {
        let diversity = rel.minus(&identity)?;
        diversity_total += diversity.pair_count();
        union = union.union(&diversity)?;
    }
    let off_diagonal = identity.complement();
    let expected = off_diagonal.pair_count();
    cert.push(Check::verdict(
        "diversity-parts-partition-off-diagonal",
        format!(
            "union covers {} of {expected} off-diagonal pairs; sizes add to {diversity_total}",
            union.pair_count()
        ),
        union == off_diagonal && diversity_total == expected,
    ));
    Ok(cert)
}

fn family_named(family: &Zp2Family) -> Vec<(String, BinRel)> {
    let mut named = vec![
        ("eta0".to_string(), family.eta0.clone()),
        ("eta1".to_string(), family.eta1.clone()),
    ];
    for (i, a) in family.alpha.iter().enumerate() {
        named.push((format!("alpha{}", i + 1), a.clone()));
    }
    named
}

/// Certificate that any two distinct members of the family (excluding
/// the identity and universal relations) compose to the universal
/// relation — once by brute-force composition for every ordered pair,
/// and once through the two explicit witness functions, evaluated on
/// every input.
pub fn lemma_composition_certificate(p: usize) -> Result<Certificate, ConstructionError> {
    let family = zp2_family(p)?;
    let named = family_named(&family);
    let universal = BinRel::universal(family.n_base);
    let mut cert = Certificate::new(format!(
        "pairwise composition universality on Z_{p} x Z_{p}"
    ));
    for (i, (name_a, a)) in named.iter().enumerate() {
        for (j, (name_b, b)) in named.iter().enumerate() {
            if i == j {
                continue;
            }
            let comp = a.compose(b)?;
            let mut check = Check::verdict(
                format!("compose-universal:{name_a},{name_b}"),
                format!("{name_a} composed with {name_b} relates every pair"),
                comp == universal,
            );
            if comp != universal {
                if let Some((x, y)) = comp.complement().pairs().next() {
                    check = check.with_witness(format!(
                        "missing pair: {:?} -> {:?}",
                        decode_pair(p, x),
                        decode_pair(p, y)
                    ));
                }
            }
            cert.push(check);
        }
    }

    // Witness route 1: u η0 y and y α_k v for every u, v and slope k.
    let mut case1_failures = Vec::new();
    let mut case1_total = 0usize;
    for k in 1..p {
        for ue in 0..p * p {
            for ve in 0..p * p {
                let u = decode_pair(p, ue);
                let v = decode_pair(p, ve);
                let y = case1_raw(p, k, u, v);
                case1_total += 1;
                if u.0 != y.0 || !alpha_related(p, k, y, v) {
                    if case1_failures.len() < 3 {
                        case1_failures.push(format!("k={k}, u={u:?}, v={v:?}, y={y:?}"));
                    }
                }
            }
        }
    }
    cert.push(
        Check::verdict(
            "witness-eta0-alpha-exhaustive",
            format!(
                "y = (u0, k*u0 + v1 - k*v0) links every u to every v through eta0 then alpha_k \
                 ({case1_total} inputs)"
            ),
            case1_failures.is_empty(),
        )
        .with_witnesses(case1_failures),
    );

    // Witness route 2: u α_i y and y α_j v for every u, v and i ≠ j.
    let mut case2_failures = Vec::new();
    let mut case2_total = 0usize;
    for i in 1..p {
        for j in 1..p {
            if i == j {
                continue;
            }
            for ue in 0..p * p {
                for ve in 0..p * p {
                    let u = decode_pair(p, ue);
                    let v = decode_pair(p, ve);
                    let y = case2_raw(p, i, j, u, v);
                    case2_total += 1;
                    if !alpha_related(p, i, u, y) || !alpha_related(p, j, y, v) {
                        if case2_failures.len() < 3 {
                            case2_failures
                                .push(format!("i={i}, j={j}, u={u:?}, v={v:?}, y={y:?}"));
                        }
                    }
                }
            }
        }
    }
    cert.push(
        Check::verdict(
            "witness-alpha-alpha-exhaustive",
            format!(
                "y0 = (j-i)^-1*(u1 - i*u0 + j*v0 - v1), y1 = j*(y0 - v0) + v1 links every u to \
                 every v through alpha_i then alpha_j ({case2_total} inputs)"
            ),
            case2_failures.is_empty(),
        )
        .with_witnesses(case2_failures),
    );
    cert.push(Check::info(
        "witness-y1-interpretation",
        "y1 ends in v1: the variant ending in v0 fails the alpha_j membership and is rejected",
    ));
    Ok(cert)
}

/// Names for the atoms of the closure of a [`make_m_any`] generator
/// set, in closure atom order; unnamed leftovers become beta atoms.
fn atom_names(
    closed: &AtomStructure,
    family: &Zp2Family,
    n: usize,
) -> Result<Vec<String>, ConstructionError> {
    let identity = BinRel::identity(family.n_base);
    let mut names = vec![String::new(); closed.atom_count()];
    let mut generator_named = vec![
        ("eta0".to_string(), family.eta0.clone()),
        ("eta1".to_string(), family.eta1.clone()),
    ];
    for k in 1..=n {
        generator_named.push((format!("alpha{k}"), family.alpha_k(k).clone()));
    }
    for (name, rel) in &generator_named {
        let diversity = rel.minus(&identity)?;
        if let Decomposition::Member(set) = closed.decompose(&diversity)? {
            if set.len() == 1 {
                let idx = set.iter().next().unwrap();
                names[idx] = format!("{name}'");
            }
        }
    }
    for idx in closed.identity_atoms().iter() {
        names[idx] = "id".to_string();
    }
    let mut beta = 0usize;
    for name in names.iter_mut() {
        if name.is_empty() {
            *name = if beta == 0 {
                "beta".to_string()
            } else {
                format!("beta{}", beta + 1)
            };
            beta += 1;
        }
    }
    Ok(names)
}

/// Full pipeline certificate for the generator set `{1, 1', η0, η1,
/// α_1..α_n}`: closure atom structure, the atom-level composition
/// identities, the beta complement identity, and the recovery of
/// exactly the generators as the closure's equivalences, with the
/// M_{n+2} shape.
///
/// When `allow_out_of_range_n` is set, values of `n` outside
/// `1 ≤ n < p − 2` are admitted for exploration: the hypothesis check
/// and the recovery comparisons are then reported as informational
/// findings rather than pass/fail verdicts.
pub fn lemma1_certificate(
    p: usize,
    n: usize,
    atom_budget: usize,
    allow_out_of_range_n: bool,
) -> Result<Certificate, ConstructionError> {
    if !is_prime(p) {
        return Err(ConstructionError::NotPrime(p));
    }
    if p > MAX_ZP2_PRIME {
        return Err(ConstructionError::TooLarge(p));
    }
    let in_range = p >= 5 && n >= 1 && n + 2 < p;
    if !in_range && !allow_out_of_range_n {
        return Err(ConstructionError::NOutOfRange {
            p,
            n,
            allowed: format!("1 <= n < p - 2 = {} with p >= 5", p.saturating_sub(2)),
        });
    }
    let mut cert = Certificate::new(format!(
        "closure recovers the generator equivalences (p = {p}, n = {n})"
    ));
    cert.push(if in_range {
        Check::pass(
            "hypothesis-range",
            format!("1 <= n < p - 2 holds: n = {n}, p - 2 = {}", p - 2),
        )
    } else {
        Check::info(
            "hypothesis-range",
            format!(
                "n = {n} violates 1 <= n < p - 2 = {}; recovery comparisons below are \
                 informational",
                p.saturating_sub(2)
            ),
        )
    });

    let generators = make_m_any(p, n)?;
    let family = zp2_family(p)?;
    let downstream = [
        "atom-count",
        "boolean-closure-matches",
        "atom-self-composition",
        "atom-cross-composition",
        "alpha-composition-avoids-its-arguments",
        "beta-complement-identity",
        "equivalences-match-generators",
        "lattice-shape",
    ];
    let closed = match ra_closure_with_budget(&generators, atom_budget) {
        Ok(c) => c,
        Err(ClosureError::AtomBudgetExceeded { reached, budget }) => {
            cert.push(Check::fail(
                "closure-computed",
                format!("atom budget exceeded: {reached} blocks reached at budget {budget}"),
            ));
            for name in downstream {
                cert.push(Check::skipped(name, "closure unavailable"));
            }
            return Ok(cert);
        }
        Err(e) => return Err(e.into()),
    };
    cert.push(Check::pass(
        "closure-computed",
        format!(
            "{} atoms on a base of {} elements",
            closed.atom_count(),
            closed.base_size()
        ),
    ));

    let expected_atoms = n + 4;
    let count_ok = closed.atom_count() == expected_atoms;
    cert.push(if in_range {
        Check::verdict(
            "atom-count",
            format!("expected n + 4 = {expected_atoms}, found {}", closed.atom_count()),
            count_ok,
        )
    } else {
        Check::info(
            "atom-count",
            format!(
                "found {} atoms (n + 4 would be {expected_atoms})",
                closed.atom_count()
            ),
        )
    });

    let boolean = ba_closure_with_budget(&generators, atom_budget)?;
    let mut ra_atoms = closed.atoms().to_vec();
    let mut ba_atoms = boolean.atoms.clone();
    ra_atoms.sort();
    ba_atoms.sort();
    cert.push(Check::verdict(
        "boolean-closure-matches",
        format!(
            "boolean refinement alone yields {} atoms; composition adds no further splits",
            boolean.atoms.len()
        ),
        ra_atoms == ba_atoms,
    ));

    // Atom-level composition identities for the generator-derived atoms.
    let identity = BinRel::identity(family.n_base);
    let names = atom_names(&closed, &family, n)?;
    let generator_atoms: Vec<usize> = names
        .iter()
        .enumerate()
        .filter(|(_, name)| name.starts_with("eta") || name.starts_with("alpha"))
        .map(|(i, _)| i)
        .collect();
    let mut self_ok = true;
    let mut self_bad = Vec::new();
    for &i in &generator_atoms {
        let a = &closed.atoms()[i];
        let got = a.compose(a)?;
        let want = identity.union(a)?;
        if got != want {
            self_ok = false;
            self_bad.push(format!("{}: composition with itself is not id + self", names[i]));
        }
    }
    cert.push(
        Check::verdict(
            "atom-self-composition",
            format!(
                "a . a = id + a for each of the {} generator-derived atoms",
                generator_atoms.len()
            ),
            self_ok,
        )
        .with_witnesses(self_bad),
    );

    let mut cross_ok = true;
    let mut cross_bad = Vec::new();
    for &i in &generator_atoms {
        for &j in &generator_atoms {
            if i == j {
                continue;
            }
            let a = &closed.atoms()[i];
            let b = &closed.atoms()[j];
            let got = a.compose(b)?;
            let want = identity.union(a)?.union(b)?.complement();
            if got != want {
                cross_ok = false;
                if cross_bad.len() < 3 {
                    cross_bad.push(format!("{} . {}", names[i], names[j]));
                }
            }
        }
    }
    cert.push(
        Check::verdict(
            "atom-cross-composition",
            format!(
                "a . b = ~(id + a + b) for all {} ordered pairs of distinct generator-derived \
                 atoms",
                generator_atoms.len() * generator_atoms.len().saturating_sub(1)
            ),
            cross_ok,
        )
        .with_witnesses(cross_bad),
    );

    // The slope-pair compositions stay clear of their own arguments.
    let alpha_atoms: Vec<usize> = names
        .iter()
        .enumerate()
        .filter(|(_, name)| name.starts_with("alpha"))
        .map(|(i, _)| i)
        .collect();
    let mut disjoint_ok = true;
    for &i in &alpha_atoms {
        for &j in &alpha_atoms {
            if i == j {
                continue;
            }
            let comp = closed.atoms()[i].compose(&closed.atoms()[j])?;
            if !comp.intersect(&closed.atoms()[i])?.is_empty() {
                disjoint_ok = false;
            }
        }
    }
    cert.push(Check::verdict(
        "alpha-composition-avoids-its-arguments",
        "composing two distinct slope atoms never lands back in the first one",
        disjoint_ok,
    ));

    // Beta: the atoms not derived from any generator.
    let beta_atoms: Vec<usize> = names
        .iter()
        .enumerate()
        .filter(|(_, name)| name.starts_with("beta"))
        .map(|(i, _)| i)
        .collect();
    if beta_atoms.len() == 1 {
        let beta = &closed.atoms()[beta_atoms[0]];
        let mut covered = identity.union(&family.eta0)?.union(&family.eta1)?;
        for k in 1..=n {
            covered = covered.union(family.alpha_k(k))?;
        }
        cert.push(Check::verdict(
            "beta-complement-identity",
            format!(
                "the one extra atom ({} pairs) equals ~(id + eta0 + eta1 + alphas) bit for bit",
                beta.pair_count()
            ),
            *beta == covered.complement(),
        ));
    } else {
        cert.push(Check::info(
            "beta-complement-identity",
            format!(
                "{} atoms are not generator-derived; the complement identity applies only \
                 when there is exactly one",
                beta_atoms.len()
            ),
        ));
    }
    for &b in &beta_atoms {
        let row = closed.atom_composition_row(b)?;
        let summary: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, set)| {
                let parts: Vec<&str> = set.iter().map(|a| names[a].as_str()).collect();
                format!("{} . {} = {}", names[b], names[j], parts.join(" + "))
            })
            .collect();
        cert.push(
            Check::info(
                format!("composition-row:{}", names[b]),
                "compositions of the extra atom with every atom, as unions of atoms",
            )
            .with_witnesses(summary),
        );
    }

    // Equivalence recovery and lattice shape.
    let extracted = extract_equivalences(&closed)?;
    let recovered = lattices_equal(&extracted, &generators)?;
    let detail = format!(
        "closure contains {} equivalences; the generator set has {}",
        extracted.len(),
        generators.len()
    );
    cert.push(if in_range {
        Check::verdict("equivalences-match-generators", detail, recovered)
    } else {
        Check::info(
            "equivalences-match-generators",
            format!("{detail}; sets {}", if recovered { "match" } else { "differ" }),
        )
    });

    let lattice = build_lattice(&extracted)?;
    let shape = mn_shape(&lattice);
    let expected_m = n + 2;
    let shape_detail = format!("lattice shape {} (expected M_{expected_m})", shape.label());
    cert.push(if in_range {
        Check::verdict("lattice-shape", shape_detail, shape.is_mn(expected_m))
    } else {
        Check::info("lattice-shape", shape_detail)
    });
    Ok(cert)
}

/// Certificate that the `p + 3` family members form the height-two
/// lattice M_{p+1}: every member is an equivalence, pairwise meets of
/// distinct middles are the identity and pairwise joins are universal
/// (checked relationally), the lattice recognizer agrees, and — when
/// the base is small enough for congruence enumeration — the members
/// are exactly the congruences of the module (Z_p², +, scalars).
pub fn con_zp2_certificate(p: usize) -> Result<Certificate, ConstructionError> {
    let family = zp2_family(p)?;
    let rels = family.all_relations();
    let mut cert = Certificate::new(format!("congruence lattice of the module on Z_{p} x Z_{p}"));
    cert.push(Check::verdict(
        "member-count",
        format!("{} relations (p + 3 = {})", rels.len(), p + 3),
        rels.len() == p + 3,
    ));
    cert.push(Check::verdict(
        "all-equivalences",
        "every member is reflexive, symmetric, and transitive",
        rels.iter().all(BinRel::is_equivalence),
    ));

    let identity = BinRel::identity(family.n_base);
    let universal = BinRel::universal(family.n_base);
    let named = family_named(&family);
    let mut meets_ok = true;
    let mut joins_ok = true;
    let mut bad = Vec::new();
    for (i, (name_a, a)) in named.iter().enumerate() {
        for (name_b, b) in named.iter().skip(i + 1) {
            if a.intersect(b)? != identity {
                meets_ok = false;
                bad.push(format!("meet {name_a} & {name_b} is not the identity"));
            }
            if a.union(b)?.transitive_closure() != universal {
                joins_ok = false;
                bad.push(format!("join {name_a} | {name_b} is not universal"));
            }
        }
    }
    cert.push(Check::verdict(
        "pairwise-meets-are-identity",
        "distinct middles intersect in the diagonal",
        meets_ok,
    ));
    cert.push(
        Check::verdict(
            "pairwise-joins-are-universal",
            "distinct middles generate the universal relation",
            joins_ok,
        )
        .with_witnesses(bad),
    );

    let lattice = build_lattice(&rels)?;
    let shape = mn_shape(&lattice);
    cert.push(Check::verdict(
        "lattice-shape",
        format!("recognized {} (expected M_{})", shape.label(), p + 1),
        shape.is_mn(p + 1),
    ));

    if family.base_size() <= MAX_CONGRUENCE_BASE {
        let mut ops = vec![Operation::binary("add", family.base_size(), |a, b| {
            let (a0, a1) = (a / p, a % p);
            let (b0, b1) = (b / p, b % p);
            (a0 + b0) % p * p + (a1 + b1) % p
        })];
        for c in 0..p {
            ops.push(Operation::unary(
                format!("scale{c}"),
                family.base_size(),
                |v| {
                    let (x0, x1) = (v / p, v % p);
                    (c * x0) % p * p + (c * x1) % p
                },
            ));
        }
        let algebra = FinAlgebra::new(family.n_base, ops)?;
        let congs = congruences(&algebra)?;
        let mut expected = rels.clone();
        expected.sort();
        expected.dedup();
        let got: Vec<BinRel> = congs.elements().to_vec();
        cert.push(Check::verdict(
            "congruence-cross-check",
            format!(
                "independent congruence enumeration found {} congruences; family has {}",
                got.len(),
                expected.len()
            ),
            got == expected,
        ));
    } else {
        cert.push(Check::skipped(
            "congruence-cross-check",
            format!(
                "base {} exceeds the congruence-enumeration guard of {MAX_CONGRUENCE_BASE}; \
                 the lattice facts above are verified relationally instead",
                family.base_size()
            ),
        ));
    }
    Ok(cert)
}

/// Complete certificate for the four-element example: the closure of
/// the four generator equivalences gains exactly the extra equivalence
/// γ (giving the M_3 lattice), γ is definable by a two-variable
/// formula and reconstructible as a closure term, the generators are
/// exactly the congruences of the lattice algebra on the same base,
/// and no conjunctive query within the (4 variables, 6 constraints)
/// budget defines γ.
pub fn example_2x2_certificate(atom_budget: usize) -> Result<Certificate, ConstructionError> {
    let (l, algebra, gamma) = two_by_two_example();
    let structure = two_by_two_structure();
    let size = BaseSize::new(4).unwrap();
    let mut cert = Certificate::new("two-kernel example on a four-element base");

    let expected_gamma = BinRel::kernel_of(size, |v| usize::from(v == 1 || v == 2));
    cert.push(Check::verdict(
        "gamma-classes",
        "gamma glues each pair to its opposite corner: classes {(0,0),(1,1)} and {(0,1),(1,0)}",
        gamma == expected_gamma,
    ));
    cert.push(Check::verdict(
        "gamma-not-a-generator",
        "gamma is distinct from all four generator equivalences",
        !l.contains(&gamma),
    ));

    let closed = match ra_closure_with_budget(&l, atom_budget) {
        Ok(c) => c,
        Err(ClosureError::AtomBudgetExceeded { reached, budget }) => {
            cert.push(Check::fail(
                "closure-computed",
                format!("atom budget exceeded: {reached} blocks reached at budget {budget}"),
            ));
            return Ok(cert);
        }
        Err(e) => return Err(e.into()),
    };
    cert.push(Check::verdict(
        "closure-atom-count",
        format!("{} atoms (expected 4)", closed.atom_count()),
        closed.atom_count() == 4,
    ));

    let extracted = extract_equivalences(&closed)?;
    let mut expected_eqs = l.clone();
    expected_eqs.push(gamma.clone());
    cert.push(Check::verdict(
        "closure-equivalences",
        format!(
            "closure holds {} equivalences: the four generators plus gamma",
            extracted.len()
        ),
        lattices_equal(&extracted, &expected_eqs)?,
    ));
    cert.push(Check::verdict(
        "closure-differs-from-generators",
        "the closure's equivalence set is strictly larger than the generator set",
        !lattices_equal(&extracted, &l)?,
    ));
    let shape = mn_shape(&build_lattice(&extracted)?);
    cert.push(Check::verdict(
        "closure-lattice-shape",
        format!("recognized {} (expected M_3)", shape.label()),
        shape.is_mn(3),
    ));

    let formula = gamma_formula();
    let report = fragment_report(&formula);
    let evaluated = evaluate_binary(&formula, &structure, "x", "y")?;
    cert.push(Check::verdict(
        "gamma-two-variable-formula",
        format!(
            "'{formula}' evaluates to gamma; {} variables, three-variable fragment: {}, \
             conjunctive shape: {}",
            report.variable_count, report.is_fo3, report.is_pp
        ),
        evaluated == gamma && report.variable_count == 2 && report.is_fo3 && !report.is_pp,
    ));

    let kernels = vec![
        structure.get("E0").unwrap().clone(),
        structure.get("E1").unwrap().clone(),
    ];
    let kernel_closure = ra_closure_with_budget(&kernels, atom_budget)?;
    match member_term(&kernel_closure, &["E0", "E1"], &gamma)? {
        Some(term) => {
            let back = evaluate_ra_term(&term, &structure)?;
            cert.push(
                Check::verdict(
                    "gamma-term-reconstruction",
                    "gamma rebuilt as an explicit term over E0, E1 and re-evaluated",
                    back == gamma,
                )
                .with_witness(format!("gamma = {term}")),
            );
        }
        None => cert.push(Check::fail(
            "gamma-term-reconstruction",
            "gamma is not a member of the closure of its own kernels",
        )),
    }

    cert.absorb("compatibility", crate::algebra::ppf_eq_certificate(&l, &algebra)?);

    match pp_search(&structure, &gamma, 4, 6)? {
        PpSearchResult::NotFoundWithinBudget { examined } => cert.push(Check::pass(
            "gamma-has-no-conjunctive-definition-within-budget",
            format!(
                "no conjunctive query with <= 4 variables and <= 6 constraints over E0, E1 \
                 defines gamma ({examined} canonical candidates examined)"
            ),
        )),
        PpSearchResult::Found { query } => cert.push(
            Check::fail(
                "gamma-has-no-conjunctive-definition-within-budget",
                "a conjunctive query unexpectedly defines gamma",
            )
            .with_witness(query.to_string()),
        ),
    }
    Ok(cert)
}

/// Certificate separating conjunctive-query definability from closure
/// membership on the `{1, 1', η0, η1, α_1}` generator set: the
/// five-constraint query over E0, E1, A1 evaluates exactly to the top
/// slope kernel α_{p−1}, yet α_{p−1} is not a member of the
/// relation-algebra closure of those generators. The closure's
/// equivalences therefore undercount the conjunctively definable ones.
pub fn pp_closure_gap_certificate(
    p: usize,
    atom_budget: usize,
) -> Result<Certificate, ConstructionError> {
    let family = zp2_family(p)?;
    let structure = zp2_structure(&family);
    let mut cert = Certificate::new(format!(
        "conjunctive definability beyond the closure (p = {p})"
    ));

    let query = diamond_query();
    let formula = query.to_formula();
    let report = fragment_report(&formula);
    cert.push(Check::verdict(
        "query-is-conjunctive",
        format!("'{query}' uses {} variables and only exists/and", report.variable_count),
        report.is_pp,
    ));

    let top = family.alpha_k(p - 1);
    let evaluated = crate::formulas::pp_evaluate(&query, &structure)?;
    cert.push(Check::verdict(
        "query-defines-top-slope-kernel",
        format!("the query evaluates to alpha{} over E0, E1, A1", p - 1),
        evaluated == *top,
    ));

    let generators = make_m(p, 1)?;
    let closed = match ra_closure_with_budget(&generators, atom_budget) {
        Ok(c) => c,
        Err(ClosureError::AtomBudgetExceeded { reached, budget }) => {
            cert.push(Check::fail(
                "closure-computed",
                format!("atom budget exceeded: {reached} blocks reached at budget {budget}"),
            ));
            cert.push(Check::skipped(
                "top-slope-kernel-outside-closure",
                "closure unavailable",
            ));
            return Ok(cert);
        }
        Err(e) => return Err(e.into()),
    };
    let decomposition = closed.decompose(top)?;
    cert.push(Check::verdict(
        "top-slope-kernel-outside-closure",
        format!(
            "alpha{} is not a union of the {} closure atoms of the n = 1 generator set",
            p - 1,
            closed.atom_count()
        ),
        decomposition == Decomposition::NotMember,
    ));
    Ok(cert)
}

/// How the base set of a representation was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationBase {
    /// The four-element two-kernel base (the m = 1 small case).
    Grid { base: usize },
    /// Z_p × Z_p with the first `n` slope kernels among the generators.
    PrimeSquare { p: usize, n: usize },
}

/// Result of [`represent_mn`]: the chosen base and generators, the
/// closure statistics, the recognized lattice shape, and the underlying
/// per-check certificate.
#[derive(Debug, Clone, Serialize)]
pub struct Representation {
    pub m: usize,
    pub base: RepresentationBase,
    pub base_size: usize,
    pub generator_names: Vec<String>,
    pub atom_count: usize,
    pub equivalence_count: usize,
    pub shape: MnShape,
    pub certificate: Certificate,
}

impl Representation {
    pub fn passed(&self) -> bool {
        self.certificate.all_passed()
    }
}

/// Smallest prime `p ≥ 5` with `n < p − 2`.
fn default_prime(n: usize) -> usize {
    let mut p = 5;
    loop {
        if is_prime(p) && n + 2 < p {
            return p;
        }
        p += 1;
    }
}

/// Builds a set of equivalence relations whose relational closure has
/// exactly the height-two lattice M_m as its equivalences, and verifies
/// the construction end to end. Supported range: `1 ≤ m ≤ 9`.
pub fn represent_mn(m: usize) -> Result<Representation, ConstructionError> {
    represent_mn_config(m, None, DEFAULT_ATOM_BUDGET)
}

/// [`represent_mn`] with an explicit prime (validity re-checked) and
/// atom budget.
pub fn represent_mn_config(
    m: usize,
    prime_override: Option<usize>,
    atom_budget: usize,
) -> Result<Representation, ConstructionError> {
    if m == 0 || m > 9 {
        return Err(ConstructionError::MOutOfRange(m));
    }

    let (base, generators, generator_names) = match m {
        1 => {
            if let Some(p) = prime_override {
                return Err(ConstructionError::BadPrimeOverride {
                    m,
                    p,
                    reason: "the three-element chain uses the fixed four-element base".into(),
                });
            }
            let size = BaseSize::new(4).unwrap();
            let gens = vec![
                BinRel::universal(size),
                BinRel::identity(size),
                BinRel::kernel_of(size, |v| v / 2),
            ];
            (
                RepresentationBase::Grid { base: 4 },
                gens,
                vec!["univ".to_string(), "id".to_string(), "eta0".to_string()],
            )
        }
        2 => {
            let p = prime_override.unwrap_or(3);
            if !is_prime(p) || p < 3 || p > MAX_ZP2_PRIME {
                return Err(ConstructionError::BadPrimeOverride {
                    m,
                    p,
                    reason: format!(
                        "need an odd prime 3 <= p <= {MAX_ZP2_PRIME} (on the 2x2 grid the \
                         closure defines a third middle equivalence)"
                    ),
                });
            }
            let family = zp2_family(p)?;
            let gens = vec![
                BinRel::universal(family.n_base),
                BinRel::identity(family.n_base),
                family.eta0.clone(),
                family.eta1.clone(),
            ];
            (
                RepresentationBase::PrimeSquare { p, n: 0 },
                gens,
                m_names(0),
            )
        }
        _ => {
            let n = m - 2;
            let p = prime_override.unwrap_or_else(|| default_prime(n));
            if !is_prime(p) || p < 5 || p > MAX_ZP2_PRIME || n + 2 >= p {
                return Err(ConstructionError::BadPrimeOverride {
                    m,
                    p,
                    reason: format!(
                        "need a prime 5 <= p <= {MAX_ZP2_PRIME} with n = m - 2 = {n} < p - 2"
                    ),
                });
            }
            (
                RepresentationBase::PrimeSquare { p, n },
                make_m(p, n)?,
                m_names(n),
            )
        }
    };

    let base_size = generators[0].base_size();
    let mut cert = Certificate::new(format!("representation of M_{m}"));
    cert.push(Check::pass(
        "construction",
        format!(
            "{} generators on a base of {base_size} elements ({})",
            generators.len(),
            match base {
                RepresentationBase::Grid { base } => format!("small case, base {base}"),
                RepresentationBase::PrimeSquare { p, n } =>
                    format!("Z_{p} x Z_{p} with {n} slope kernels"),
            }
        ),
    ));

    let closed = match ra_closure_with_budget(&generators, atom_budget) {
        Ok(c) => c,
        Err(ClosureError::AtomBudgetExceeded { reached, budget }) => {
            cert.push(Check::fail(
                "closure-computed",
                format!("atom budget exceeded: {reached} blocks reached at budget {budget}"),
            ));
            return Ok(Representation {
                m,
                base,
                base_size,
                generator_names,
                atom_count: 0,
                equivalence_count: 0,
                shape: MnShape::NotMn,
                certificate: cert,
            });
        }
        Err(e) => return Err(e.into()),
    };
    cert.push(Check::pass(
        "closure-computed",
        format!("{} atoms", closed.atom_count()),
    ));

    let extracted = extract_equivalences(&closed)?;
    cert.push(Check::verdict(
        "equivalences-match-generators",
        format!(
            "closure holds {} equivalences; generator equivalences: {}",
            extracted.len(),
            generators.len()
        ),
        lattices_equal(&extracted, &generators)?,
    ));

    let lattice = build_lattice(&extracted)?;
    let shape = mn_shape(&lattice);
    cert.push(Check::verdict(
        "lattice-shape",
        format!("recognized {} (expected M_{m})", shape.label()),
        shape.is_mn(m),
    ));

    Ok(Representation {
        m,
        base,
        base_size,
        generator_names,
        atom_count: closed.atom_count(),
        equivalence_count: extracted.len(),
        shape,
        certificate: cert,
    })
}
