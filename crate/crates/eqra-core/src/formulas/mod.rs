//! First-order formulas over finite structures, relation-algebra terms,
//! and bounded primitive-positive definability search.
//!
//! The submodules provide:
//! - [`ast`]: formula and term syntax trees with fragment classification;
//! - [`parse`]: concrete syntax for both languages;
//! - [`print`]: precedence-aware printers that round-trip through the
//!   parsers;
//! - [`eval`]: assignment-set (cylindric) formula evaluation, term
//!   evaluation, the three-variable translation of terms, and the
//!   constructive reconstruction of closure members as terms;
//! - [`pp`]: conjunctive-query evaluation and exhaustive bounded search
//!   for primitive-positive definitions.

pub mod ast;
pub mod eval;
pub mod parse;
pub mod pp;
pub mod print;

#[cfg(test)]
pub(crate) mod testgen;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::rel::{BaseSize, BinRel, RelError};

pub use ast::{fragment_report, Formula, FragmentReport, RaTerm};
pub use eval::{atom_terms, evaluate_binary, evaluate_ra_term, member_term, ra_term_to_fo3};
pub use parse::{parse_formula, parse_ra_term, ParseError};
pub use pp::{
    pp_evaluate, pp_search, pp_search_estimate, PpAtom, PpQuery, PpSearchResult, EQUALITY_SYMBOL,
};

/// Hard cap on candidate enumeration in [`pp_search`].
pub const PP_SEARCH_HARD_CAP: u128 = 1_000_000_000;

/// Estimates above this in [`pp_search_estimate`] deserve a warning
/// before starting a search.
pub const PP_SEARCH_WARN: u128 = 10_000_000;

/// Cap on assignment-table entries during formula evaluation (`n^k` for
/// `k` live variables).
pub const MAX_ASSIGN_ENTRIES: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error("unknown relation symbol {0:?}")]
    UnknownSymbol(String),
    #[error("free variable {var:?} is not one of the two output variables")]
    FreeVariableOutsideXY { var: String },
    #[error("the two output variables must be distinct, got {var:?} twice")]
    DuplicateFreeVariables { var: String },
    #[error("assignment space of {entries} entries exceeds the cap of {cap}")]
    AssignSpaceTooLarge { entries: u128, cap: u128 },
    #[error("relation symbol {0:?} is not a valid identifier")]
    BadSymbolName(String),
    #[error("search budgets must allow at least 2 variables and 1 constraint")]
    BadBudget,
    #[error("{names} names were given for {generators} generator relations")]
    GeneratorNamesMismatch { names: usize, generators: usize },
    #[error("estimated enumeration of {estimate} candidates exceeds the hard cap of {cap}")]
    BudgetTooLarge { estimate: u128, cap: u128 },
}

/// A finite structure: a base set `{0, .., n−1}` with named binary
/// relations. Symbol order is deterministic (sorted by name).
#[derive(Debug, Clone)]
pub struct Structure {
    n: BaseSize,
    names: BTreeMap<String, BinRel>,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Structure {
    pub fn new(n: BaseSize) -> Structure {
        Structure {
            n,
            names: BTreeMap::new(),
        }
    }

    /// Adds (or replaces) a named relation; the name must be an
    /// identifier and the relation must live on this structure's base.
    pub fn insert(&mut self, name: impl Into<String>, rel: BinRel) -> Result<(), FormulaError> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(FormulaError::BadSymbolName(name));
        }
        if rel.base_size() != self.n.get() {
            return Err(RelError::SizeMismatch {
                left: self.n.get(),
                right: rel.base_size(),
            }
            .into());
        }
        self.names.insert(name, rel);
        Ok(())
    }

    pub fn base_size(&self) -> usize {
        self.n.get()
    }

    pub fn size(&self) -> BaseSize {
        self.n
    }

    pub fn get(&self, name: &str) -> Option<&BinRel> {
        self.names.get(name)
    }

    pub fn resolve(&self, name: &str) -> Result<&BinRel, FormulaError> {
        self.get(name)
            .ok_or_else(|| FormulaError::UnknownSymbol(name.to_string()))
    }

    /// Relations in sorted name order.
    pub fn symbols(&self) -> impl Iterator<Item = (&str, &BinRel)> {
        self.names.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn symbol_count(&self) -> usize {
        self.names.len()
    }
}
