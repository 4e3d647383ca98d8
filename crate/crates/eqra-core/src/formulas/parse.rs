//! Concrete syntax for formulas and relation-algebra terms.
//!
//! Formula grammar:
//! ```text
//! formula := quant | disj
//! quant   := ("exists" | "forall") IDENT "." formula
//! disj    := conj ("|" conj)*
//! conj    := lit ("&" lit)*
//! lit     := "!" lit | "(" formula ")" | IDENT "(" IDENT "," IDENT ")" | IDENT "=" IDENT
//! ```
//! Term grammar (precedence: `~`/`^` bind tightest, then `;`, then `+`):
//! ```text
//! term    := plus
//! plus    := semi ("+" semi)*
//! semi    := unary (";" unary)*
//! unary   := "~" unary | primary "^"*
//! primary := "id" | IDENT | "(" plus ")"
//! ```
//! `exists`, `forall` (formulas) and `id` (terms) are reserved words.
//! Both operators associate to the left.

use std::fmt;

use thiserror::Error;

use super::ast::{Formula, RaTerm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at line {line}, column {column}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Amp,
    Pipe,
    Bang,
    Eq,
    Semi,
    Plus,
    Tilde,
    Caret,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier {s:?}"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::Comma => write!(f, "','"),
            Tok::Dot => write!(f, "'.'"),
            Tok::Amp => write!(f, "'&'"),
            Tok::Pipe => write!(f, "'|'"),
            Tok::Bang => write!(f, "'!'"),
            Tok::Eq => write!(f, "'='"),
            Tok::Semi => write!(f, "';'"),
            Tok::Plus => write!(f, "'+'"),
            Tok::Tilde => write!(f, "'~'"),
            Tok::Caret => write!(f, "'^'"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0usize;
    let mut line = 1usize;
    let mut column = 1usize;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, column);
        if c == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            column += 1;
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
                column += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                column: tc,
            });
            continue;
        }
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '&' => Tok::Amp,
            '|' => Tok::Pipe,
            '!' => Tok::Bang,
            '=' => Tok::Eq,
            ';' => Tok::Semi,
            '+' => Tok::Plus,
            '~' => Tok::Tilde,
            '^' => Tok::Caret,
            other => {
                return Err(ParseError {
                    line: tl,
                    column: tc,
                    expected: "a token".to_string(),
                    found: format!("character {other:?}"),
                })
            }
        };
        i += 1;
        column += 1;
        out.push(Spanned {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Spanned {
        tok: Tok::End,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        let here = self.peek();
        ParseError {
            line: here.line,
            column: here.column,
            expected: expected.into(),
            found: here.tok.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn expect_ident(&mut self, expected: &str) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if !is_formula_keyword(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(expected)),
        }
    }

    fn at_end(&self) -> bool {
        self.peek().tok == Tok::End
    }

    // ---- formula grammar ----

    fn formula(&mut self) -> Result<Formula, ParseError> {
        if let Tok::Ident(word) = &self.peek().tok {
            if word == "exists" || word == "forall" {
                let word = word.clone();
                self.bump();
                let var = self.expect_ident("a variable name")?;
                self.expect(Tok::Dot, "'.' after the quantified variable")?;
                let body = self.formula()?;
                return Ok(if word == "exists" {
                    Formula::exists(var, body)
                } else {
                    Formula::forall(var, body)
                });
            }
        }
        self.disj()
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conj()?;
        while self.peek().tok == Tok::Pipe {
            self.bump();
            acc = Formula::or(acc, self.conj()?);
        }
        Ok(acc)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.lit()?;
        while self.peek().tok == Tok::Amp {
            self.bump();
            acc = Formula::and(acc, self.lit()?);
        }
        Ok(acc)
    }

    fn lit(&mut self) -> Result<Formula, ParseError> {
        match &self.peek().tok {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.lit()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Tok::Ident(_) => {
                let first = self.expect_ident("a relation symbol or variable")?;
                match self.peek().tok {
                    Tok::LParen => {
                        self.bump();
                        let left = self.expect_ident("a variable name")?;
                        self.expect(Tok::Comma, "','")?;
                        let right = self.expect_ident("a variable name")?;
                        self.expect(Tok::RParen, "')'")?;
                        Ok(Formula::atom(first, left, right))
                    }
                    Tok::Eq => {
                        self.bump();
                        let right = self.expect_ident("a variable name")?;
                        Ok(Formula::equals(first, right))
                    }
                    _ => Err(self.error("'(' for an atom or '=' for an equality")),
                }
            }
            _ => Err(self.error("'!', '(', or an identifier")),
        }
    }

    // ---- term grammar ----

    fn term_plus(&mut self) -> Result<RaTerm, ParseError> {
        let mut acc = self.term_semi()?;
        while self.peek().tok == Tok::Plus {
            self.bump();
            acc = RaTerm::union(acc, self.term_semi()?);
        }
        Ok(acc)
    }

    fn term_semi(&mut self) -> Result<RaTerm, ParseError> {
        let mut acc = self.term_unary()?;
        while self.peek().tok == Tok::Semi {
            self.bump();
            acc = RaTerm::compose(acc, self.term_unary()?);
        }
        Ok(acc)
    }

    fn term_unary(&mut self) -> Result<RaTerm, ParseError> {
        if self.peek().tok == Tok::Tilde {
            self.bump();
            return Ok(RaTerm::complement(self.term_unary()?));
        }
        let mut acc = self.term_primary()?;
        while self.peek().tok == Tok::Caret {
            self.bump();
            acc = RaTerm::converse(acc);
        }
        Ok(acc)
    }

    fn term_primary(&mut self) -> Result<RaTerm, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == "id" => {
                self.bump();
                Ok(RaTerm::Identity)
            }
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(RaTerm::name(s))
            }
            Tok::LParen => {
                self.bump();
                let t = self.term_plus()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(t)
            }
            _ => Err(self.error("'~', '(', 'id', or a relation name")),
        }
    }
}

fn is_formula_keyword(s: &str) -> bool {
    s == "exists" || s == "forall"
}

/// Parses a first-order formula.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let f = p.formula()?;
    if !p.at_end() {
        return Err(p.error("end of input"));
    }
    Ok(f)
}

/// Parses a relation-algebra term.
pub fn parse_ra_term(text: &str) -> Result<RaTerm, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let t = p.term_plus()?;
    if !p.at_end() {
        return Err(p.error("end of input"));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_parses() {
        assert_eq!(parse_formula("x = y").unwrap(), Formula::equals("x", "y"));
    }

    #[test]
    fn the_two_variable_definition_parses() {
        let f = parse_formula("(x = y) | !(E0(x,y) | E1(x,y))").unwrap();
        assert_eq!(
            f,
            Formula::or(
                Formula::equals("x", "y"),
                Formula::not(Formula::or(
                    Formula::atom("E0", "x", "y"),
                    Formula::atom("E1", "x", "y"),
                )),
            )
        );
    }

    #[test]
    fn the_existential_network_parses() {
        let f = parse_formula(
            "exists c. exists d. E0(a,c) & E1(c,b) & E1(a,d) & E0(d,b) & A1(c,d)",
        )
        .unwrap();
        let conj = [
            Formula::atom("E0", "a", "c"),
            Formula::atom("E1", "c", "b"),
            Formula::atom("E1", "a", "d"),
            Formula::atom("E0", "d", "b"),
            Formula::atom("A1", "c", "d"),
        ]
        .into_iter()
        .reduce(Formula::and)
        .unwrap();
        assert_eq!(f, Formula::exists("c", Formula::exists("d", conj)));
    }

    #[test]
    fn precedence_and_binds_tighter_than_or() {
        let f = parse_formula("a = b | c = d & e = f").unwrap();
        assert_eq!(
            f,
            Formula::or(
                Formula::equals("a", "b"),
                Formula::and(Formula::equals("c", "d"), Formula::equals("e", "f")),
            )
        );
    }

    #[test]
    fn quantifier_body_extends_right() {
        let f = parse_formula("exists x. R(x,y) | S(x,y)").unwrap();
        assert_eq!(
            f,
            Formula::exists(
                "x",
                Formula::or(Formula::atom("R", "x", "y"), Formula::atom("S", "x", "y")),
            )
        );
    }

    #[test]
    fn parenthesized_quantifier_inside_conjunction() {
        let f = parse_formula("R(x,y) & (exists z. S(x,z))").unwrap();
        assert_eq!(
            f,
            Formula::and(
                Formula::atom("R", "x", "y"),
                Formula::exists("z", Formula::atom("S", "x", "z")),
            )
        );
    }

    #[test]
    fn errors_carry_position_and_expectation() {
        let err = parse_formula("R(x,)").unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.column, 5);
        assert!(err.expected.contains("variable"));

        let err = parse_formula("exists . R(x,y)").unwrap_err();
        assert_eq!(err.column, 8);

        let err = parse_formula("x = y extra").unwrap_err();
        assert!(err.expected.contains("end of input"));

        let err = parse_formula("x @ y").unwrap_err();
        assert!(err.found.contains('@'));

        let err = parse_formula("forall exists. R(x,y)").unwrap_err();
        assert_eq!(err.column, 8); // keywords are not variable names
    }

    #[test]
    fn multiline_positions() {
        let err = parse_formula("R(x,y) &\n S(x,").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.column, 6);
    }

    #[test]
    fn terms_parse_with_precedence() {
        use RaTerm as T;
        assert_eq!(parse_ra_term("id").unwrap(), T::Identity);
        assert_eq!(
            parse_ra_term("a ; b + c").unwrap(),
            T::union(T::compose(T::name("a"), T::name("b")), T::name("c"))
        );
        assert_eq!(
            parse_ra_term("a + b ; c").unwrap(),
            T::union(T::name("a"), T::compose(T::name("b"), T::name("c")))
        );
        assert_eq!(
            parse_ra_term("~a ; b^").unwrap(),
            T::compose(T::complement(T::name("a")), T::converse(T::name("b")))
        );
        assert_eq!(
            parse_ra_term("~a^").unwrap(),
            T::complement(T::converse(T::name("a")))
        );
        assert_eq!(
            parse_ra_term("(~a)^").unwrap(),
            T::converse(T::complement(T::name("a")))
        );
        assert_eq!(
            parse_ra_term("a ; (b + c)").unwrap(),
            T::compose(T::name("a"), T::union(T::name("b"), T::name("c")))
        );
        assert_eq!(
            parse_ra_term("a ; b ; c").unwrap(),
            T::compose(T::compose(T::name("a"), T::name("b")), T::name("c"))
        );
        assert_eq!(parse_ra_term("x^^").unwrap(), T::converse(T::converse(T::name("x"))));
    }

    #[test]
    fn term_errors_have_positions() {
        let err = parse_ra_term("a ; ; b").unwrap_err();
        assert_eq!(err.column, 5);
        let err = parse_ra_term("(a + b").unwrap_err();
        assert!(err.expected.contains("')'"));
    }
}
