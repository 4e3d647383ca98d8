//! Proptest strategies shared by the formula/term/query test modules.

use proptest::prelude::*;

use super::ast::{Formula, RaTerm};
use super::pp::PpAtom;
use super::Structure;
use crate::rel::{BaseSize, BinRel};

pub const SYMBOLS: [&str; 3] = ["R", "S", "T"];
pub const VARS: [&str; 4] = ["x", "y", "z", "w"];

pub fn arb_var() -> impl Strategy<Value = String> {
    prop::sample::select(VARS.to_vec()).prop_map(str::to_string)
}

pub fn arb_symbol() -> impl Strategy<Value = String> {
    prop::sample::select(SYMBOLS.to_vec()).prop_map(str::to_string)
}

/// A structure on 2..=6 elements with the three standard symbols bound to
/// arbitrary relations.
pub fn arb_structure() -> impl Strategy<Value = Structure> {
    (2usize..=6)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(prop::collection::vec(any::<bool>(), n * n), SYMBOLS.len()),
            )
        })
        .prop_map(|(n, tables)| {
            let size = BaseSize::new(n).unwrap();
            let mut s = Structure::new(size);
            for (name, bits) in SYMBOLS.iter().zip(tables) {
                let mut rel = BinRel::empty(size);
                for (idx, bit) in bits.into_iter().enumerate() {
                    if bit {
                        rel.set(idx / n, idx % n);
                    }
                }
                s.insert(*name, rel).unwrap();
            }
            s
        })
}

/// Arbitrary formulas over the standard symbols and variables, any shape.
pub fn arb_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        (arb_symbol(), arb_var(), arb_var()).prop_map(|(s, l, r)| Formula::atom(s, l, r)),
        (arb_var(), arb_var()).prop_map(|(l, r)| Formula::equals(l, r)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            inner.clone().prop_map(Formula::not),
            (arb_var(), inner.clone()).prop_map(|(v, b)| Formula::exists(v, b)),
            (arb_var(), inner).prop_map(|(v, b)| Formula::forall(v, b)),
        ]
    })
}

/// Arbitrary relation-algebra terms over the standard symbols.
pub fn arb_term() -> impl Strategy<Value = RaTerm> {
    let leaf = prop_oneof![
        arb_symbol().prop_map(RaTerm::Name),
        Just(RaTerm::Identity),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| RaTerm::union(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| RaTerm::compose(l, r)),
            inner.clone().prop_map(RaTerm::complement),
            inner.prop_map(RaTerm::converse),
        ]
    })
}

/// Arbitrary conjunctive-query constraint lists over the standard symbols
/// and variables (equality atoms included occasionally).
pub fn arb_pp_atoms() -> impl Strategy<Value = Vec<PpAtom>> {
    let symbol = prop_oneof![
        4 => arb_symbol(),
        1 => Just(super::pp::EQUALITY_SYMBOL.to_string()),
    ];
    prop::collection::vec(
        (arb_var(), arb_var(), symbol).prop_map(|(left, right, symbol)| PpAtom {
            left,
            right,
            symbol,
        }),
        0..=5,
    )
}
