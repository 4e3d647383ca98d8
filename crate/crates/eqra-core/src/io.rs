//! File formats for relations, finite algebras, and named structures.
//!
//! Relation text format: the first line is the base size `n`; the
//! remaining lines are either an `n`-line 0/1 matrix or whitespace-
//! separated `a b` pairs (0-based), auto-detected. A block of exactly
//! `n` lines each consisting of `n` digits 0/1 (spaces between digits
//! allowed) is read as a matrix — so `1 1` under `n = 2` is a matrix
//! row, not the pair (1, 1). Blank lines and `#` comment lines are
//! ignored everywhere.
//!
//! Relation JSON: `{"n": int, "pairs": [[a, b], ...]}`.
//!
//! Algebra JSON: `{"n": int, "ops": [{"name": str, "arity": k,
//! "table": nested-array}]}` where `table` is nested `k` levels deep
//! with `n` entries per level (a bare integer when `k = 0`).
//!
//! Structure JSON: `{"n": int, "relations": {name: [[a, b], ...]}}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, FinAlgebra, Operation};
use crate::formulas::{FormulaError, Structure};
use crate::rel::{BaseSize, BinRel, RelError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}, column {column}: {message}")]
    Format {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("operation {op}: {message}")]
    BadTable { op: String, message: String },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

fn format_err(line: usize, column: usize, message: impl Into<String>) -> IoError {
    IoError::Format {
        line,
        column,
        message: message.into(),
    }
}

/// Content lines with their 1-based line numbers; blanks and `#`
/// comments dropped.
fn content_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

/// 1-based column of each whitespace-separated token.
fn tokens_with_columns(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn matrix_row(line: &str, n: usize) -> Option<Vec<bool>> {
    let digits: Vec<char> = line.chars().filter(|c| !c.is_whitespace()).collect();
    if digits.len() != n || !digits.iter().all(|&c| c == '0' || c == '1') {
        return None;
    }
    Some(digits.into_iter().map(|c| c == '1').collect())
}

/// Parses the relation text format (leading `n` line, then a 0/1
/// matrix or `a b` pair lines, auto-detected).
pub fn parse_relation_text(text: &str) -> Result<BinRel, IoError> {
    let lines = content_lines(text);
    let Some(&(first_line, first)) = lines.first() else {
        return Err(format_err(1, 1, "empty input: expected a base size"));
    };
    let header = tokens_with_columns(first);
    if header.len() != 1 {
        return Err(format_err(
            first_line,
            header.get(1).map_or(1, |t| t.0),
            "the first line must hold exactly one integer (the base size)",
        ));
    }
    let n_raw: usize = header[0].1.parse().map_err(|_| {
        format_err(
            first_line,
            header[0].0,
            format!("invalid base size {:?}", header[0].1),
        )
    })?;
    let n = BaseSize::new(n_raw)?;
    let body = &lines[1..];

    // A block of exactly n rows of n binary digits is a matrix; in the
    // ambiguous case (e.g. `1 1` under n = 2) the matrix reading wins.
    if body.len() == n_raw {
        let rows: Vec<Option<Vec<bool>>> =
            body.iter().map(|(_, l)| matrix_row(l, n_raw)).collect();
        if rows.iter().all(Option::is_some) {
            let mut r = BinRel::empty(n);
            for (a, row) in rows.into_iter().enumerate() {
                for (b, bit) in row.unwrap().into_iter().enumerate() {
                    if bit {
                        r.set(a, b);
                    }
                }
            }
            return Ok(r);
        }
    }

    let mut r = BinRel::empty(n);
    for &(line_no, line) in body {
        let tokens = tokens_with_columns(line);
        if tokens.len() != 2 {
            return Err(format_err(
                line_no,
                tokens.get(2).map_or(1, |t| t.0),
                "expected two integers separated by whitespace",
            ));
        }
        let mut pair = [0usize; 2];
        for (slot, &(col, tok)) in pair.iter_mut().zip(&tokens) {
            let v: usize = tok
                .parse()
                .map_err(|_| format_err(line_no, col, format!("invalid element {tok:?}")))?;
            if v >= n_raw {
                return Err(format_err(
                    line_no,
                    col,
                    format!("element {v} out of range for base size {n_raw}"),
                ));
            }
            *slot = v;
        }
        r.set(pair[0], pair[1]);
    }
    Ok(r)
}

#[derive(Serialize, Deserialize)]
struct RelationJson {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

/// Parses the relation JSON format `{"n": int, "pairs": [[a,b],...]}`.
pub fn parse_relation_json(text: &str) -> Result<BinRel, IoError> {
    let raw: RelationJson = serde_json::from_str(text)?;
    let n = BaseSize::new(raw.n)?;
    Ok(BinRel::from_pairs(n, raw.pairs)?)
}

/// Auto-detects JSON (leading `{`) versus the text format.
pub fn parse_relation_auto(text: &str) -> Result<BinRel, IoError> {
    if text.trim_start().starts_with('{') {
        parse_relation_json(text)
    } else {
        parse_relation_text(text)
    }
}

/// Renders a relation in the pair text format.
pub fn format_relation_pairs(r: &BinRel) -> String {
    let mut out = format!("{}\n", r.base_size());
    for (a, b) in r.pairs() {
        out.push_str(&format!("{a} {b}\n"));
    }
    out
}

/// Renders a relation as the 0/1 matrix text format.
pub fn format_relation_matrix(r: &BinRel) -> String {
    let n = r.base_size();
    let mut out = format!("{n}\n");
    for a in 0..n {
        for b in 0..n {
            out.push(if r.contains(a, b) { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

/// Renders a relation as canonical JSON.
pub fn relation_to_json_string(r: &BinRel) -> String {
    let value = RelationJson {
        n: r.base_size(),
        pairs: r.pairs().collect(),
    };
    serde_json::to_string(&value).expect("relation JSON serializes")
}

#[derive(Deserialize)]
struct OpJson {
    name: String,
    arity: usize,
    table: serde_json::Value,
}

#[derive(Deserialize)]
struct AlgebraJson {
    n: usize,
    ops: Vec<OpJson>,
}

fn flatten_table(
    op: &str,
    value: &serde_json::Value,
    arity: usize,
    n: usize,
    out: &mut Vec<usize>,
) -> Result<(), IoError> {
    if arity == 0 {
        let Some(v) = value.as_u64() else {
            return Err(IoError::BadTable {
                op: op.to_string(),
                message: format!("expected an integer at depth {arity}, found {value}"),
            });
        };
        out.push(v as usize);
        return Ok(());
    }
    let Some(items) = value.as_array() else {
        return Err(IoError::BadTable {
            op: op.to_string(),
            message: format!("expected an array of {n} entries, found {value}"),
        });
    };
    if items.len() != n {
        return Err(IoError::BadTable {
            op: op.to_string(),
            message: format!("expected {n} entries per level, found {}", items.len()),
        });
    }
    for item in items {
        flatten_table(op, item, arity - 1, n, out)?;
    }
    Ok(())
}

/// Parses the algebra JSON format
/// `{"n": int, "ops": [{"name", "arity", "table"}]}`; tables are
/// nested arrays, one level per argument.
pub fn parse_algebra_json(text: &str) -> Result<FinAlgebra, IoError> {
    let raw: AlgebraJson = serde_json::from_str(text)?;
    let n = BaseSize::new(raw.n)?;
    let mut ops = Vec::with_capacity(raw.ops.len());
    for op in &raw.ops {
        let mut table = Vec::new();
        flatten_table(&op.name, &op.table, op.arity, raw.n, &mut table)?;
        ops.push(Operation::new(op.name.clone(), op.arity, table));
    }
    Ok(FinAlgebra::new(n, ops)?)
}

#[derive(Serialize, Deserialize)]
struct StructureJson {
    n: usize,
    relations: BTreeMap<String, Vec<(usize, usize)>>,
}

/// Parses the structure JSON format
/// `{"n": int, "relations": {name: [[a,b],...]}}`.
pub fn parse_structure_json(text: &str) -> Result<Structure, IoError> {
    let raw: StructureJson = serde_json::from_str(text)?;
    let n = BaseSize::new(raw.n)?;
    let mut s = Structure::new(n);
    for (name, pairs) in raw.relations {
        let rel = BinRel::from_pairs(n, pairs)?;
        s.insert(name, rel)?;
    }
    Ok(s)
}

/// Renders a structure as canonical JSON (symbols in sorted order).
pub fn structure_to_json_string(s: &Structure) -> String {
    let value = StructureJson {
        n: s.base_size(),
        relations: s
            .symbols()
            .map(|(name, rel)| (name.to_string(), rel.pairs().collect()))
            .collect(),
    };
    serde_json::to_string(&value).expect("structure JSON serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BinRel {
        let n = BaseSize::new(3).unwrap();
        BinRel::from_pairs(n, [(0, 0), (0, 2), (2, 1)]).unwrap()
    }

    #[test]
    fn pair_text_round_trips() {
        let r = sample();
        assert_eq!(parse_relation_text(&format_relation_pairs(&r)).unwrap(), r);
    }

    #[test]
    fn matrix_text_round_trips() {
        let r = sample();
        let text = format_relation_matrix(&r);
        assert_eq!(text, "3\n101\n000\n010\n");
        assert_eq!(parse_relation_text(&text).unwrap(), r);
    }

    #[test]
    fn json_round_trips() {
        let r = sample();
        let text = relation_to_json_string(&r);
        assert_eq!(text, r#"{"n":3,"pairs":[[0,0],[0,2],[2,1]]}"#);
        assert_eq!(parse_relation_json(&text).unwrap(), r);
        assert_eq!(parse_relation_auto(&text).unwrap(), r);
        assert_eq!(parse_relation_auto("3\n0 0\n0 2\n2 1\n").unwrap(), r);
    }

    #[test]
    fn ambiguous_digit_lines_read_as_a_matrix() {
        // Two lines of two binary digits under n = 2: matrix wins over
        // the pair reading {(1,1), (0,0)}.
        let r = parse_relation_text("2\n1 1\n0 0\n").unwrap();
        assert!(r.contains(0, 0) && r.contains(0, 1));
        assert!(!r.contains(1, 0) && !r.contains(1, 1));
        // Three pair lines cannot be a 2x2 matrix: pair reading.
        let r = parse_relation_text("2\n1 1\n0 0\n0 1\n").unwrap();
        assert!(r.contains(1, 1) && r.contains(0, 0) && r.contains(0, 1));
        assert!(!r.contains(1, 0));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let r = parse_relation_text("# header\n\n3\n\n# pairs\n0 1\n").unwrap();
        assert!(r.contains(0, 1));
        assert_eq!(r.pair_count(), 1);
    }

    #[test]
    fn format_errors_carry_line_and_column() {
        match parse_relation_text("abc\n").unwrap_err() {
            IoError::Format { line, column, .. } => assert_eq!((line, column), (1, 1)),
            other => panic!("unexpected error {other:?}"),
        }
        match parse_relation_text("3\n0 x\n").unwrap_err() {
            IoError::Format { line, column, .. } => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected error {other:?}"),
        }
        match parse_relation_text("3\n0 5\n").unwrap_err() {
            IoError::Format {
                line,
                column,
                message,
            } => {
                assert_eq!((line, column), (2, 3));
                assert!(message.contains("out of range"));
            }
            other => panic!("unexpected error {other:?}"),
        }
        match parse_relation_text("3\n7\n").unwrap_err() {
            IoError::Format { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        match parse_relation_text("0\n").unwrap_err() {
            IoError::Rel(RelError::BadBaseSize(0)) => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn algebra_json_accepts_each_arity_shape() {
        let text = r#"{
            "n": 2,
            "ops": [
                {"name": "zero", "arity": 0, "table": 0},
                {"name": "flip", "arity": 1, "table": [1, 0]},
                {"name": "and", "arity": 2, "table": [[0, 0], [0, 1]]},
                {"name": "maj", "arity": 3, "table": [[[0,0],[0,1]], [[0,1],[1,1]]]}
            ]
        }"#;
        let a = parse_algebra_json(text).unwrap();
        assert_eq!(a.base_size(), 2);
        assert_eq!(a.operations().len(), 4);
        assert_eq!(a.operations()[3].apply(2, &[1, 0, 1]), 1);
    }

    #[test]
    fn algebra_json_rejects_bad_tables() {
        let short = r#"{"n": 2, "ops": [{"name": "f", "arity": 1, "table": [0]}]}"#;
        assert!(matches!(
            parse_algebra_json(short).unwrap_err(),
            IoError::BadTable { .. }
        ));
        let deep = r#"{"n": 2, "ops": [{"name": "f", "arity": 0, "table": [0, 1]}]}"#;
        assert!(matches!(
            parse_algebra_json(deep).unwrap_err(),
            IoError::BadTable { .. }
        ));
        let arity = r#"{"n": 2, "ops": [{"name": "f", "arity": 4,
            "table": [[[[0,0],[0,0]],[[0,0],[0,0]]],[[[0,0],[0,0]],[[0,0],[0,0]]]]}]}"#;
        assert!(matches!(
            parse_algebra_json(arity).unwrap_err(),
            IoError::Algebra(_)
        ));
        let entry = r#"{"n": 2, "ops": [{"name": "f", "arity": 1, "table": [0, 5]}]}"#;
        assert!(matches!(
            parse_algebra_json(entry).unwrap_err(),
            IoError::Algebra(_)
        ));
    }

    #[test]
    fn structure_json_round_trips() {
        let text = r#"{"n": 4, "relations": {"E0": [[0,0],[1,1]], "E1": [[0,1]]}}"#;
        let s = parse_structure_json(text).unwrap();
        assert_eq!(s.base_size(), 4);
        assert_eq!(s.symbol_count(), 2);
        assert!(s.get("E1").unwrap().contains(0, 1));
        let canonical = structure_to_json_string(&s);
        assert_eq!(
            canonical,
            r#"{"n":4,"relations":{"E0":[[0,0],[1,1]],"E1":[[0,1]]}}"#
        );
        let back = parse_structure_json(&canonical).unwrap();
        assert_eq!(structure_to_json_string(&back), canonical);
    }

    #[test]
    fn structure_json_rejects_bad_names_and_elements() {
        let bad_name = r#"{"n": 2, "relations": {"bad name": []}}"#;
        assert!(matches!(
            parse_structure_json(bad_name).unwrap_err(),
            IoError::Formula(_)
        ));
        let bad_element = r#"{"n": 2, "relations": {"R": [[0, 9]]}}"#;
        assert!(matches!(
            parse_structure_json(bad_element).unwrap_err(),
            IoError::Rel(_)
        ));
    }
}
