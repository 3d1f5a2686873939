//! Text forms of trees and series.
//!
//! ```text
//! series   := term (" + " term)* | "0"
//! term     := rational "*" tree | tree
//! rational := int | int "/" int        (int may carry a leading '-')
//! tree     := "o" children?
//! node     := label children?
//! children := "(" node (" " node)* ")"
//! label    := positive decimal (or "•" for unlabelled shapes)
//! ```
//!
//! Whitespace around `+` and `*` and between children is tolerated on input;
//! the printers always emit the canonical single-space form.

use num::{BigInt, Zero};
use thiserror::Error;

use crate::series::{check_labels, ExactSeries, LabelledTree, Rational, SeriesError};
use crate::tree::{Label, Node, Tree, TreeShape};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error(transparent)]
    Label(#[from] SeriesError),
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos,
            message: message.into(),
        })
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(x) if x == c => {
                self.bump();
                Ok(())
            }
            Some(x) => self.error(format!("expected '{c}', found '{x}'")),
            None => self.error(format!("expected '{c}', found end of input")),
        }
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        &self.text[start..self.pos]
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        let start = self.pos;
        if self.peek() == Some('-') {
            self.bump();
        }
        let digits = self.digits();
        if digits.is_empty() {
            self.pos = start;
            return self.error("expected an integer");
        }
        Ok(self.text[start..self.pos].parse().expect("validated digits"))
    }
}

trait LabelSyntax: Label {
    fn parse_label(cur: &mut Cursor<'_>) -> Result<Self, ParseError>;
}

impl LabelSyntax for u32 {
    fn parse_label(cur: &mut Cursor<'_>) -> Result<Self, ParseError> {
        let start = cur.pos;
        let digits = cur.digits();
        match digits.parse::<u32>() {
            Ok(v) if v > 0 => Ok(v),
            _ => {
                cur.pos = start;
                cur.error("expected a positive label")
            }
        }
    }
}

impl LabelSyntax for () {
    fn parse_label(cur: &mut Cursor<'_>) -> Result<Self, ParseError> {
        match cur.peek() {
            Some('•') | Some('*') => {
                cur.bump();
                Ok(())
            }
            _ => cur.error("expected '•'"),
        }
    }
}

fn parse_children<L: LabelSyntax>(cur: &mut Cursor<'_>) -> Result<Vec<Node<L>>, ParseError> {
    let mut children = Vec::new();
    if cur.peek() != Some('(') {
        return Ok(children);
    }
    cur.bump();
    loop {
        cur.skip_ws();
        let label = L::parse_label(cur)?;
        let grand = parse_children(cur)?;
        children.push(Node::new(label, grand));
        cur.skip_ws();
        match cur.peek() {
            Some(')') => {
                cur.bump();
                return Ok(children);
            }
            Some(_) if children.last().is_some() => {
                let before = cur.pos;
                // a separator must have been consumed as whitespace
                if cur.text[..before].ends_with(char::is_whitespace) {
                    continue;
                }
                return cur.error("expected ' ' or ')'");
            }
            _ => return cur.error("unterminated children list"),
        }
    }
}

fn parse_tree_at<L: LabelSyntax>(cur: &mut Cursor<'_>) -> Result<Tree<L>, ParseError> {
    cur.expect('o')?;
    let children = parse_children(cur)?;
    Ok(Tree::new(children))
}

fn finish<T>(cur: &mut Cursor<'_>, value: T) -> Result<T, ParseError> {
    cur.skip_ws();
    if cur.peek().is_some() {
        return cur.error("trailing input");
    }
    Ok(value)
}

/// Parses a labelled tree such as `o(1 3(2))`; child order is canonicalized.
pub fn parse_tree(text: &str) -> Result<LabelledTree, ParseError> {
    let mut cur = Cursor::new(text.trim_end());
    cur.skip_ws();
    let t = parse_tree_at::<u32>(&mut cur)?;
    finish(&mut cur, t)
}

/// Parses an unlabelled shape such as `o(•(•))` (`*` is accepted for `•`).
pub fn parse_shape(text: &str) -> Result<TreeShape, ParseError> {
    let mut cur = Cursor::new(text.trim_end());
    cur.skip_ws();
    let t = parse_tree_at::<()>(&mut cur)?;
    finish(&mut cur, t)
}

fn parse_coefficient(cur: &mut Cursor<'_>) -> Result<Option<Rational>, ParseError> {
    if !cur.peek().is_some_and(|c| c == '-' || c.is_ascii_digit()) {
        return Ok(None);
    }
    let numer = cur.integer()?;
    let mut denom = BigInt::from(1);
    if cur.peek() == Some('/') {
        cur.bump();
        let at = cur.pos;
        denom = cur.integer()?;
        if denom.is_zero() {
            cur.pos = at;
            return cur.error("zero denominator");
        }
    }
    Ok(Some(Rational::new(numer, denom)))
}

/// Parses a series. With `dim = None` the dimension is the largest label
/// present (at least one).
pub fn parse_series(text: &str, dim: Option<usize>) -> Result<ExactSeries, ParseError> {
    let mut cur = Cursor::new(text);
    cur.skip_ws();
    let mut terms: Vec<(LabelledTree, Rational)> = Vec::new();
    if cur.rest().trim() == "0" {
        return Ok(ExactSeries::zero(dim.unwrap_or(1)));
    }
    loop {
        cur.skip_ws();
        let coef = match parse_coefficient(&mut cur)? {
            Some(c) => {
                cur.skip_ws();
                cur.expect('*')?;
                cur.skip_ws();
                c
            }
            None => Rational::from_integer(BigInt::from(1)),
        };
        let t = parse_tree_at::<u32>(&mut cur)?;
        terms.push((t, coef));
        cur.skip_ws();
        match cur.peek() {
            None => break,
            Some('+') => {
                cur.bump();
            }
            Some(c) => return cur.error(format!("expected '+' or end of input, found '{c}'")),
        }
    }
    let max_label = terms.iter().flat_map(|(t, _)| t.labels_preorder()).max().unwrap_or(1) as usize;
    let dim = dim.unwrap_or(max_label.max(1));
    let mut series = ExactSeries::zero(dim);
    for (t, c) in terms {
        check_labels(&t, dim)?;
        series.add_term(t, c)?;
    }
    Ok(series)
}
