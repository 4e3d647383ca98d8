//! Syntax trees for first-order formulas and relation-algebra terms.

use std::collections::BTreeSet;

/// A first-order formula over binary relation symbols. Variables are
/// plain identifiers; names may be reused across quantifier scopes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    /// `symbol(left, right)`
    Atom {
        symbol: String,
        left: String,
        right: String,
    },
    /// `left = right`
    Equals { left: String, right: String },
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Exists { var: String, body: Box<Formula> },
    ForAll { var: String, body: Box<Formula> },
}

impl Formula {
    pub fn atom(symbol: impl Into<String>, left: impl Into<String>, right: impl Into<String>) -> Formula {
        Formula::Atom {
            symbol: symbol.into(),
            left: left.into(),
            right: right.into(),
        }
    }

    pub fn equals(left: impl Into<String>, right: impl Into<String>) -> Formula {
        Formula::Equals {
            left: left.into(),
            right: right.into(),
        }
    }

    pub fn and(left: Formula, right: Formula) -> Formula {
        Formula::And(Box::new(left), Box::new(right))
    }

    pub fn or(left: Formula, right: Formula) -> Formula {
        Formula::Or(Box::new(left), Box::new(right))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Formula) -> Formula {
        Formula::Not(Box::new(inner))
    }

    pub fn exists(var: impl Into<String>, body: Formula) -> Formula {
        Formula::Exists {
            var: var.into(),
            body: Box::new(body),
        }
    }

    pub fn forall(var: impl Into<String>, body: Formula) -> Formula {
        Formula::ForAll {
            var: var.into(),
            body: Box::new(body),
        }
    }

    /// The free variables of the formula.
    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            Formula::Atom { left, right, .. } | Formula::Equals { left, right } => {
                [left.clone(), right.clone()].into_iter().collect()
            }
            Formula::And(l, r) | Formula::Or(l, r) => {
                let mut set = l.free_vars();
                set.extend(r.free_vars());
                set
            }
            Formula::Not(f) => f.free_vars(),
            Formula::Exists { var, body } | Formula::ForAll { var, body } => {
                let mut set = body.free_vars();
                set.remove(var);
                set
            }
        }
    }

    /// Every distinct variable name occurring anywhere (free or bound).
    pub fn var_names(&self) -> BTreeSet<String> {
        match self {
            Formula::Atom { left, right, .. } | Formula::Equals { left, right } => {
                [left.clone(), right.clone()].into_iter().collect()
            }
            Formula::And(l, r) | Formula::Or(l, r) => {
                let mut set = l.var_names();
                set.extend(r.var_names());
                set
            }
            Formula::Not(f) => f.var_names(),
            Formula::Exists { var, body } | Formula::ForAll { var, body } => {
                let mut set = body.var_names();
                set.insert(var.clone());
                set
            }
        }
    }

    /// Relation symbols mentioned by atoms.
    pub fn symbols(&self) -> BTreeSet<String> {
        match self {
            Formula::Atom { symbol, .. } => [symbol.clone()].into_iter().collect(),
            Formula::Equals { .. } => BTreeSet::new(),
            Formula::And(l, r) | Formula::Or(l, r) => {
                let mut set = l.symbols();
                set.extend(r.symbols());
                set
            }
            Formula::Not(f) => f.symbols(),
            Formula::Exists { body, .. } | Formula::ForAll { body, .. } => body.symbols(),
        }
    }

    fn is_pp_shaped(&self) -> bool {
        match self {
            Formula::Atom { .. } | Formula::Equals { .. } => true,
            Formula::And(l, r) => l.is_pp_shaped() && r.is_pp_shaped(),
            Formula::Exists { body, .. } => body.is_pp_shaped(),
            Formula::Or(..) | Formula::Not(..) | Formula::ForAll { .. } => false,
        }
    }
}

/// Classification of a formula against the bounded fragments: total
/// distinct variable-name count, primitive-positive shape (only ∃, ∧,
/// and atomic subformulas), and the three-variable fragment (name count
/// ≤ 3, names may be reused).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct FragmentReport {
    pub variable_count: usize,
    pub is_pp: bool,
    pub is_fo3: bool,
}

pub fn fragment_report(f: &Formula) -> FragmentReport {
    let variable_count = f.var_names().len();
    FragmentReport {
        variable_count,
        is_pp: f.is_pp_shaped(),
        is_fo3: variable_count <= 3,
    }
}

/// A relation-algebra term: named relations combined by union,
/// complement, composition, converse, and the identity constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RaTerm {
    Name(String),
    Identity,
    Union(Box<RaTerm>, Box<RaTerm>),
    Complement(Box<RaTerm>),
    Compose(Box<RaTerm>, Box<RaTerm>),
    Converse(Box<RaTerm>),
}

impl RaTerm {
    pub fn name(s: impl Into<String>) -> RaTerm {
        RaTerm::Name(s.into())
    }

    pub fn union(left: RaTerm, right: RaTerm) -> RaTerm {
        RaTerm::Union(Box::new(left), Box::new(right))
    }

    pub fn complement(inner: RaTerm) -> RaTerm {
        RaTerm::Complement(Box::new(inner))
    }

    pub fn compose(left: RaTerm, right: RaTerm) -> RaTerm {
        RaTerm::Compose(Box::new(left), Box::new(right))
    }

    pub fn converse(inner: RaTerm) -> RaTerm {
        RaTerm::Converse(Box::new(inner))
    }

    /// Intersection is derived: `a ∩ b = ~(~a + ~b)`.
    pub fn intersection(left: RaTerm, right: RaTerm) -> RaTerm {
        RaTerm::complement(RaTerm::union(
            RaTerm::complement(left),
            RaTerm::complement(right),
        ))
    }

    pub fn symbols(&self) -> BTreeSet<String> {
        match self {
            RaTerm::Name(s) => [s.clone()].into_iter().collect(),
            RaTerm::Identity => BTreeSet::new(),
            RaTerm::Union(l, r) | RaTerm::Compose(l, r) => {
                let mut set = l.symbols();
                set.extend(r.symbols());
                set
            }
            RaTerm::Complement(t) | RaTerm::Converse(t) => t.symbols(),
        }
    }
}
