//! The s-expression sentence grammar:
//!
//! ```text
//! s := (and s*) | (or s*) | (not s) | (exists x s) | (forall x s)
//!    | (atom R x*) | (eq x y)
//! ```

use std::sync::Arc;

use thiserror::Error;

use super::Formula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Word(&'a str),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn error(&self, offset: usize, message: impl Into<String>) -> ParseError {
        let before = &self.src[..offset.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ParseError {
            offset,
            line,
            column,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<Option<(usize, Tok<'a>)>, ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() {
            match bytes[self.pos] {
                b';' => {
                    while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
        if self.pos >= bytes.len() {
            return Ok(None);
        }
        let start = self.pos;
        match bytes[start] {
            b'(' => {
                self.pos += 1;
                Ok(Some((start, Tok::Open)))
            }
            b')' => {
                self.pos += 1;
                Ok(Some((start, Tok::Close)))
            }
            _ => {
                while self.pos < bytes.len() && is_ident_byte(bytes[self.pos]) {
                    self.pos += 1;
                }
                if self.pos == start {
                    let ch = self.src[start..].chars().next().unwrap();
                    return Err(self.error(start, format!("unexpected character `{ch}`")));
                }
                Ok(Some((start, Tok::Word(&self.src[start..self.pos]))))
            }
        }
    }
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b'\'' | b'.' | b'-' | b'$')
}

struct Parser<'a> {
    lex: Lexer<'a>,
    peeked: Option<Option<(usize, Tok<'a>)>>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<Option<(usize, Tok<'a>)>, ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lex.next()?);
        }
        Ok(self.peeked.clone().unwrap())
    }

    fn bump(&mut self) -> Result<Option<(usize, Tok<'a>)>, ParseError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lex.next(),
        }
    }

    fn eof_offset(&self) -> usize {
        self.lex.src.len()
    }

    fn word(&mut self, what: &str) -> Result<&'a str, ParseError> {
        match self.bump()? {
            Some((_, Tok::Word(w))) => Ok(w),
            Some((off, _)) => Err(self.lex.error(off, format!("expected {what}"))),
            None => Err(self.lex.error(self.eof_offset(), format!("expected {what}, found end of input"))),
        }
    }

    fn close(&mut self, head: &str) -> Result<(), ParseError> {
        match self.bump()? {
            Some((_, Tok::Close)) => Ok(()),
            Some((off, _)) => Err(self.lex.error(off, format!("too many arguments to `{head}`"))),
            None => Err(self.lex.error(self.eof_offset(), "unclosed `(`")),
        }
    }

    fn formula(&mut self) -> Result<Arc<Formula>, ParseError> {
        let open = match self.bump()? {
            Some((off, Tok::Open)) => off,
            Some((off, Tok::Close)) => return Err(self.lex.error(off, "unexpected `)`")),
            Some((off, Tok::Word(w))) => {
                return Err(self.lex.error(off, format!("expected `(`, found `{w}`")))
            }
            None => return Err(self.lex.error(self.eof_offset(), "expected a formula, found end of input")),
        };
        let (head_off, head) = match self.bump()? {
            Some((off, Tok::Word(w))) => (off, w),
            Some((off, _)) => return Err(self.lex.error(off, "expected a connective after `(`")),
            None => return Err(self.lex.error(self.eof_offset(), "unclosed `(`")),
        };
        let f = match head {
            "and" | "or" => {
                let mut children = Vec::new();
                loop {
                    match self.peek()? {
                        Some((_, Tok::Close)) => {
                            self.bump()?;
                            break;
                        }
                        None => return Err(self.lex.error(open, "unclosed `(`")),
                        _ => children.push(self.formula()?),
                    }
                }
                if head == "and" {
                    Formula::And(children)
                } else {
                    Formula::Or(children)
                }
            }
            "not" => {
                let c = self.formula()?;
                self.close(head)?;
                Formula::Not(c)
            }
            "exists" | "forall" => {
                let x = self.word("a variable")?.to_string();
                let c = self.formula()?;
                self.close(head)?;
                if head == "exists" {
                    Formula::Exists(x, c)
                } else {
                    Formula::Forall(x, c)
                }
            }
            "atom" => {
                let rel = self.word("a relation name")?.to_string();
                let mut args = Vec::new();
                loop {
                    match self.bump()? {
                        Some((_, Tok::Close)) => break,
                        Some((_, Tok::Word(w))) => args.push(w.to_string()),
                        Some((off, Tok::Open)) => {
                            return Err(self.lex.error(off, "atom arguments must be variables"))
                        }
                        None => return Err(self.lex.error(open, "unclosed `(`")),
                    }
                }
                Formula::Atom { rel, args }
            }
            "eq" => {
                let x = self.word("a variable")?.to_string();
                let y = self.word("a variable")?.to_string();
                self.close(head)?;
                Formula::Eq(x, y)
            }
            other => {
                return Err(self
                    .lex
                    .error(head_off, format!("unknown connective `{other}`")))
            }
        };
        Ok(Arc::new(f))
    }
}

/// Parses one formula; trailing input is an error.
pub fn parse_formula(src: &str) -> Result<Arc<Formula>, ParseError> {
    let mut p = Parser {
        lex: Lexer { src, pos: 0 },
        peeked: None,
    };
    let f = p.formula()?;
    if let Some((off, _)) = p.bump()? {
        return Err(p.lex.error(off, "trailing input after formula"));
    }
    Ok(f)
}

/// Parses a list of sentence strings, reporting the index of the first failure.
pub fn parse_theory_strings<S: AsRef<str>>(items: &[S]) -> Result<Vec<Arc<Formula>>, (usize, ParseError)> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| parse_formula(s.as_ref()).map_err(|e| (i, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build::*;

    #[test]
    fn parses_every_connective() {
        let f = parse_formula("(forall x (exists y (and (atom R x y) (not (eq x y)) (or))))").unwrap();
        let expected = forall(
            "x",
            exists("y", and(vec![atom("R", &["x", "y"]), not(eq("x", "y")), or(vec![])])),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn display_round_trips() {
        let src = "(and (exists x (atom P x)) (forall x (or (atom R x x) (not (eq x x)))))";
        assert_eq!(parse_formula(src).unwrap().to_string(), src);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_formula("(and (atom P x)\n  (bogus x))").unwrap_err();
        assert_eq!((e.line, e.column), (2, 4));
        assert!(e.message.contains("bogus"));

        let e = parse_formula("(not (eq x y)").unwrap_err();
        assert!(e.message.contains("unclosed"));

        let e = parse_formula("(eq x y z)").unwrap_err();
        assert!(e.message.contains("too many"));

        let e = parse_formula("(eq x y)) ").unwrap_err();
        assert!(e.message.contains("trailing"));
        assert_eq!(e.offset, 8);
    }

    #[test]
    fn theory_reports_failing_index() {
        let err = parse_theory_strings(&["(eq x x)", "(atom"]).unwrap_err();
        assert_eq!(err.0, 1);
    }
}
