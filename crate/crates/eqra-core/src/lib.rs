//! Relation algebras of binary relations on finite sets.
//!
//! The crate computes closures of finite relation families under the
//! operations union, complement, composition, converse, and identity,
//! extracts the equivalence relations they contain as lattices, evaluates
//! first-order and primitive-positive formulas over finite structures,
//! and emits machine-checkable certificates for each verification.
//!
//! Module map:
//! - [`rel`] — packed bit-matrix binary relations and the algebra operations
//! - [`closure`] — partition refinement into atom structures
//! - [`eqlattice`] — equivalence extraction, lattice assembly, `M_n` recognition
//! - [`formulas`] — formula/term parsing, evaluation, three-variable translation,
//!   and bounded primitive-positive definability search
//! - [`algebra`] — finite algebras, compatibility, congruence lattices
//! - [`constructions`] — the `Z_p^2` relation families, grid examples, witness
//!   functions, and the `M_n` representation pipeline
//! - [`cert`] — certificate records shared by the verification entry points
//! - [`io`] — text and JSON file formats for relations, algebras, structures

pub mod algebra;
pub mod cert;
pub mod closure;
pub mod constructions;
pub mod eqlattice;
pub mod formulas;
pub mod io;
pub mod rel;

pub use cert::{Certificate, Check, CheckStatus};
pub use closure::{AtomSet, AtomStructure, BooleanAtoms, Decomposition};
pub use eqlattice::{EqLattice, MnShape};
pub use formulas::{Formula, PpAtom, PpQuery, RaTerm, Structure};
pub use rel::{BaseSize, BinRel};
