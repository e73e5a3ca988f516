//! Boolean formulas over the two input strings, parsed from the textual
//! grammar and normalized so negation appears only on variables.
//!
//! Grammar: `expr := AND(expr,expr) | OR(expr,expr) | NOT(expr) | x<digits> |
//! y<digits>`, whitespace-insensitive. Formula size is the number of leaf
//! occurrences counted with repetition.

use crate::protocol::{BitRef, Side};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable name {name:?} at position {pos}")]
    UnknownVariable { pos: usize, name: String },
}

/// A normalized formula: AND/OR over possibly-negated variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Var(BitRef),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    /// Number of leaf occurrences, counted with repetition.
    pub fn size(&self) -> u64 {
        match self {
            Formula::Var(_) => 1,
            Formula::And(a, b) | Formula::Or(a, b) => a.size() + b.size(),
        }
    }

    pub fn evaluate(&self, x: &[bool], y: &[bool]) -> bool {
        match self {
            Formula::Var(bit) => bit.resolve(x, y),
            Formula::And(a, b) => a.evaluate(x, y) && b.evaluate(x, y),
            Formula::Or(a, b) => a.evaluate(x, y) || b.evaluate(x, y),
        }
    }

    /// Highest variable index referenced on each side, as (left, right).
    pub fn input_widths(&self) -> (usize, usize) {
        match self {
            Formula::Var(bit) => match bit.side {
                Side::Left => (bit.index, 0),
                Side::Right => (0, bit.index),
            },
            Formula::And(a, b) | Formula::Or(a, b) => {
                let (al, ar) = a.input_widths();
                let (bl, br) = b.input_widths();
                (al.max(bl), ar.max(br))
            }
        }
    }
}

impl std::fmt::Display for Formula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Formula::Var(bit) => {
                if bit.negated {
                    write!(f, "NOT(")?;
                }
                let side = match bit.side {
                    Side::Left => 'x',
                    Side::Right => 'y',
                };
                write!(f, "{side}{}", bit.index)?;
                if bit.negated {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Formula::And(a, b) => write!(f, "AND({a},{b})"),
            Formula::Or(a, b) => write!(f, "OR({a},{b})"),
        }
    }
}

/// Parses and normalizes a formula. NOTs are pushed down to the leaves with
/// De Morgan's laws; size is preserved.
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let mut parser = Parser {
        text: text.as_bytes(),
        pos: 0,
    };
    let raw = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.text.len() {
        return Err(FormulaError::Syntax {
            pos: parser.pos,
            msg: "trailing input after formula".into(),
        });
    }
    Ok(normalize(raw, false))
}

enum Raw {
    Var(Side, usize),
    Not(Box<Raw>),
    And(Box<Raw>, Box<Raw>),
    Or(Box<Raw>, Box<Raw>),
}

fn normalize(raw: Raw, negate: bool) -> Formula {
    match raw {
        Raw::Var(side, index) => Formula::Var(BitRef {
            side,
            index,
            negated: negate,
        }),
        Raw::Not(inner) => normalize(*inner, !negate),
        Raw::And(a, b) => {
            let a = normalize(*a, negate);
            let b = normalize(*b, negate);
            if negate {
                Formula::Or(Box::new(a), Box::new(b))
            } else {
                Formula::And(Box::new(a), Box::new(b))
            }
        }
        Raw::Or(a, b) => {
            let a = normalize(*a, negate);
            let b = normalize(*b, negate);
            if negate {
                Formula::And(Box::new(a), Box::new(b))
            } else {
                Formula::Or(Box::new(a), Box::new(b))
            }
        }
    }
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), FormulaError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(FormulaError::Syntax {
                pos: self.pos,
                msg: format!("expected {:?}", c as char),
            })
        }
    }

    fn expr(&mut self) -> Result<Raw, FormulaError> {
        match self.peek() {
            Some(b'A') | Some(b'O') | Some(b'N') => {
                let start = self.pos;
                let word = self.word();
                match word.as_str() {
                    "AND" => {
                        self.expect(b'(')?;
                        let a = self.expr()?;
                        self.expect(b',')?;
                        let b = self.expr()?;
                        self.expect(b')')?;
                        Ok(Raw::And(Box::new(a), Box::new(b)))
                    }
                    "OR" => {
                        self.expect(b'(')?;
                        let a = self.expr()?;
                        self.expect(b',')?;
                        let b = self.expr()?;
                        self.expect(b')')?;
                        Ok(Raw::Or(Box::new(a), Box::new(b)))
                    }
                    "NOT" => {
                        self.expect(b'(')?;
                        let a = self.expr()?;
                        self.expect(b')')?;
                        Ok(Raw::Not(Box::new(a)))
                    }
                    other => Err(FormulaError::Syntax {
                        pos: start,
                        msg: format!("unknown connective {other:?}"),
                    }),
                }
            }
            Some(b'x') | Some(b'y') => {
                let start = self.pos;
                let side = if self.text[self.pos] == b'x' {
                    Side::Left
                } else {
                    Side::Right
                };
                self.pos += 1;
                let digits_start = self.pos;
                while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if digits_start == self.pos {
                    return Err(FormulaError::Syntax {
                        pos: start,
                        msg: "variable needs a 1-based index, like x1".into(),
                    });
                }
                let digits = std::str::from_utf8(&self.text[digits_start..self.pos]).unwrap();
                let index: usize = digits.parse().map_err(|_| FormulaError::Syntax {
                    pos: digits_start,
                    msg: "variable index out of range".into(),
                })?;
                if index == 0 {
                    return Err(FormulaError::UnknownVariable {
                        pos: start,
                        name: format!("{}0", if side == Side::Left { 'x' } else { 'y' }),
                    });
                }
                Ok(Raw::Var(side, index))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let word = self.word();
                Err(FormulaError::UnknownVariable {
                    pos: start,
                    name: word,
                })
            }
            Some(c) => Err(FormulaError::Syntax {
                pos: self.pos,
                msg: format!("unexpected character {:?}", c as char),
            }),
            None => Err(FormulaError::Syntax {
                pos: self.pos,
                msg: "unexpected end of input".into(),
            }),
        }
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.text[start..self.pos]).into_owned()
    }
}
