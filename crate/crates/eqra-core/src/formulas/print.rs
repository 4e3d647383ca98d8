//! Printers for formulas and terms.
//!
//! Printing is precedence-aware and inserts parentheses exactly where the
//! grammar requires them, so `parse(print(ast)) == ast` structurally —
//! including for right-nested chains of the left-associative binary
//! operators, which are parenthesized on the right.

use std::fmt;

use super::ast::{Formula, RaTerm};

// Context levels for formulas: 0 accepts a quantifier, 1 a disjunction,
// 2 a conjunction, 3 only a literal.
fn fmt_formula(f: &Formula, level: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    match f {
        Formula::Atom {
            symbol,
            left,
            right,
        } => write!(out, "{symbol}({left},{right})"),
        Formula::Equals { left, right } => write!(out, "{left} = {right}"),
        Formula::Not(inner) => {
            write!(out, "!")?;
            fmt_formula(inner, 3, out)
        }
        Formula::And(l, r) => {
            if level > 2 {
                write!(out, "(")?;
            }
            fmt_formula(l, 2, out)?;
            write!(out, " & ")?;
            fmt_formula(r, 3, out)?;
            if level > 2 {
                write!(out, ")")?;
            }
            Ok(())
        }
        Formula::Or(l, r) => {
            if level > 1 {
                write!(out, "(")?;
            }
            fmt_formula(l, 1, out)?;
            write!(out, " | ")?;
            fmt_formula(r, 2, out)?;
            if level > 1 {
                write!(out, ")")?;
            }
            Ok(())
        }
        Formula::Exists { var, body } | Formula::ForAll { var, body } => {
            let word = if matches!(f, Formula::Exists { .. }) {
                "exists"
            } else {
                "forall"
            };
            if level > 0 {
                write!(out, "(")?;
            }
            write!(out, "{word} {var}. ")?;
            fmt_formula(body, 0, out)?;
            if level > 0 {
                write!(out, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_formula(self, 0, out)
    }
}

// Context levels for terms: 0 accepts a union, 1 a composition, 2 a
// complement, 3 only a postfix/primary.
fn fmt_term(t: &RaTerm, level: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        RaTerm::Name(s) => write!(out, "{s}"),
        RaTerm::Identity => write!(out, "id"),
        RaTerm::Union(l, r) => {
            if level > 0 {
                write!(out, "(")?;
            }
            fmt_term(l, 0, out)?;
            write!(out, " + ")?;
            fmt_term(r, 1, out)?;
            if level > 0 {
                write!(out, ")")?;
            }
            Ok(())
        }
        RaTerm::Compose(l, r) => {
            if level > 1 {
                write!(out, "(")?;
            }
            fmt_term(l, 1, out)?;
            write!(out, " ; ")?;
            fmt_term(r, 2, out)?;
            if level > 1 {
                write!(out, ")")?;
            }
            Ok(())
        }
        RaTerm::Complement(inner) => {
            if level > 2 {
                write!(out, "(")?;
            }
            write!(out, "~")?;
            fmt_term(inner, 2, out)?;
            if level > 2 {
                write!(out, ")")?;
            }
            Ok(())
        }
        RaTerm::Converse(inner) => {
            fmt_term(inner, 3, out)?;
            write!(out, "^")
        }
    }
}

impl fmt::Display for RaTerm {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term(self, 0, out)
    }
}
