//! MALL formulas over polarized atoms, with the ASCII surface grammar.
//!
//! Atoms are negative by convention; their duals (written `a^`) are positive.
//! The connectives come in two groups: negative `|` (par) and `&` (with),
//! positive `*` (tensor) and `+` (plus). Units, exponentials and quantifiers
//! are out of scope.
//!
//! Grammar (EBNF):
//!
//! ```text
//! formula := term (("|" | "&") term)*
//! term    := factor (("*" | "+") factor)*
//! factor  := ident "^"? | "(" formula ")"
//! ident   := [a-z][a-zA-Z0-9_]*
//! ```
//!
//! `^` applies to atoms only; duals of compound formulas are computed with
//! [`Formula::dual`], never written. Both operator levels are
//! left-associative.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// A propositional atom. Atoms are negative; `a^` denotes the positive dual.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom(String);

impl Atom {
    /// Creates an atom. The name must be a valid identifier and nonempty.
    pub fn new(name: impl Into<String>) -> Atom {
        let name = name.into();
        debug_assert!(is_ident(&name), "invalid atom name: {name:?}");
        Atom(name)
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Atom({})", self.0)
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Negative => Polarity::Positive,
            Polarity::Positive => Polarity::Negative,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarity::Negative => f.write_str("negative"),
            Polarity::Positive => f.write_str("positive"),
        }
    }
}

/// A MALL formula tree. Binary connectives only; n-ary chains are nested
/// left-associatively by the parser.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    NegAtom(Atom),
    /// The dual `a^` of an atom.
    PosAtom(Atom),
    Par(Box<Formula>, Box<Formula>),
    With(Box<Formula>, Box<Formula>),
    Tensor(Box<Formula>, Box<Formula>),
    Plus(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Formula {
        Formula::NegAtom(Atom::new(name))
    }

    pub fn dual_atom(name: impl Into<String>) -> Formula {
        Formula::PosAtom(Atom::new(name))
    }

    pub fn par(a: Formula, b: Formula) -> Formula {
        Formula::Par(Box::new(a), Box::new(b))
    }

    pub fn with(a: Formula, b: Formula) -> Formula {
        Formula::With(Box::new(a), Box::new(b))
    }

    pub fn tensor(a: Formula, b: Formula) -> Formula {
        Formula::Tensor(Box::new(a), Box::new(b))
    }

    pub fn plus(a: Formula, b: Formula) -> Formula {
        Formula::Plus(Box::new(a), Box::new(b))
    }

    /// Negative for atoms, par and with; positive otherwise.
    pub fn polarity(&self) -> Polarity {
        match self {
            Formula::NegAtom(_) | Formula::Par(_, _) | Formula::With(_, _) => Polarity::Negative,
            Formula::PosAtom(_) | Formula::Tensor(_, _) | Formula::Plus(_, _) => Polarity::Positive,
        }
    }

    /// True iff every leaf is a negative atom and every internal node is a
    /// negative connective. A bare atom counts as a monopole.
    pub fn is_monopole(&self) -> bool {
        match self {
            Formula::NegAtom(_) => true,
            Formula::Par(a, b) | Formula::With(a, b) => a.is_monopole() && b.is_monopole(),
            Formula::PosAtom(_) | Formula::Tensor(_, _) | Formula::Plus(_, _) => false,
        }
    }

    /// True iff the formula is a bare positive atom, or its positive skeleton
    /// (the maximal top region of tensor/plus nodes) has at least one node and
    /// every skeleton leaf is a positive atom or a monopole.
    ///
    /// Bipoles and monopoles are disjoint by construction.
    pub fn is_bipole(&self) -> bool {
        fn skeleton_leaves_ok(f: &Formula) -> bool {
            match f {
                Formula::Tensor(a, b) | Formula::Plus(a, b) => {
                    skeleton_leaves_ok(a) && skeleton_leaves_ok(b)
                }
                Formula::PosAtom(_) => true,
                other => other.is_monopole(),
            }
        }
        match self {
            Formula::PosAtom(_) => true,
            Formula::Tensor(_, _) | Formula::Plus(_, _) => skeleton_leaves_ok(self),
            _ => false,
        }
    }

    /// Involutive De Morgan negation.
    pub fn dual(&self) -> Formula {
        match self {
            Formula::NegAtom(a) => Formula::PosAtom(a.clone()),
            Formula::PosAtom(a) => Formula::NegAtom(a.clone()),
            Formula::Par(a, b) => Formula::tensor(a.dual(), b.dual()),
            Formula::Tensor(a, b) => Formula::par(a.dual(), b.dual()),
            Formula::With(a, b) => Formula::plus(a.dual(), b.dual()),
            Formula::Plus(a, b) => Formula::with(a.dual(), b.dual()),
        }
    }

    /// All atom names occurring in the formula (positive or negative),
    /// deduplicated and sorted.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_atoms(&self, out: &mut Vec<Atom>) {
        match self {
            Formula::NegAtom(a) | Formula::PosAtom(a) => out.push(a.clone()),
            Formula::Par(a, b)
            | Formula::With(a, b)
            | Formula::Tensor(a, b)
            | Formula::Plus(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq)]
enum Op {
    Par,
    With,
    Tensor,
    Plus,
}

impl Op {
    fn level(self) -> u8 {
        match self {
            Op::Par | Op::With => 1,
            Op::Tensor | Op::Plus => 2,
        }
    }

    fn symbol(self) -> char {
        match self {
            Op::Par => '|',
            Op::With => '&',
            Op::Tensor => '*',
            Op::Plus => '+',
        }
    }
}

fn node_op(f: &Formula) -> Option<Op> {
    match f {
        Formula::Par(_, _) => Some(Op::Par),
        Formula::With(_, _) => Some(Op::With),
        Formula::Tensor(_, _) => Some(Op::Tensor),
        Formula::Plus(_, _) => Some(Op::Plus),
        _ => None,
    }
}

impl fmt::Display for Formula {
    /// Prints with the fewest parentheses that re-parse to the same tree,
    /// except that a chain switching operator within one precedence level is
    /// parenthesized for readability (`(a^ + b^) * c^` rather than the
    /// equivalent `a^ + b^ * c^`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(
            f: &Formula,
            out: &mut fmt::Formatter<'_>,
            parent: Option<Op>,
            right: bool,
        ) -> fmt::Result {
            match node_op(f) {
                None => match f {
                    Formula::NegAtom(a) => write!(out, "{a}"),
                    Formula::PosAtom(a) => write!(out, "{a}^"),
                    _ => unreachable!(),
                },
                Some(op) => {
                    let needs_parens = match parent {
                        None => false,
                        Some(p) => {
                            op.level() < p.level()
                                || (op.level() == p.level() && (right || op != p))
                        }
                    };
                    if needs_parens {
                        out.write_str("(")?;
                    }
                    let (a, b) = match f {
                        Formula::Par(a, b)
                        | Formula::With(a, b)
                        | Formula::Tensor(a, b)
                        | Formula::Plus(a, b) => (a, b),
                        _ => unreachable!(),
                    };
                    go(a, out, Some(op), false)?;
                    write!(out, " {} ", op.symbol())?;
                    go(b, out, Some(op), true)?;
                    if needs_parens {
                        out.write_str(")")?;
                    }
                    Ok(())
                }
            }
        }
        go(self, f, None, false)
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('|') => {
                    self.bump();
                    lhs = Formula::par(lhs, self.term()?);
                }
                Some('&') => {
                    self.bump();
                    lhs = Formula::with(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('*') => {
                    self.bump();
                    lhs = Formula::tensor(lhs, self.factor()?);
                }
                Some('+') => {
                    self.bump();
                    lhs = Formula::plus(lhs, self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Formula, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.bump();
                let inner = self.formula()?;
                self.skip_ws();
                if self.peek() == Some(')') {
                    self.bump();
                    Ok(inner)
                } else {
                    self.error("expected ')'")
                }
            }
            Some(c) if c.is_ascii_lowercase() => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        self.pos += c.len_utf8();
                    } else {
                        break;
                    }
                }
                let atom = Atom::new(&self.src[start..self.pos]);
                if self.peek() == Some('^') {
                    self.bump();
                    Ok(Formula::PosAtom(atom))
                } else {
                    Ok(Formula::NegAtom(atom))
                }
            }
            Some(c) => self.error(format!("unexpected character {c:?}")),
            None => self.error("unexpected end of input"),
        }
    }
}

/// Parses a formula from the surface grammar. Parsing a printed formula is a
/// fixpoint.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text);
    let f = p.formula()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return p.error("trailing input");
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// Atom multisets
// ---------------------------------------------------------------------------

/// A multiset of atoms, ordered by atom name. Used for sequents, triggers and
/// premises.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Default, Debug)]
pub struct Multiset(BTreeMap<Atom, usize>);

impl Multiset {
    pub fn new() -> Multiset {
        Multiset::default()
    }

    pub fn insert(&mut self, a: Atom) {
        *self.0.entry(a).or_insert(0) += 1;
    }

    pub fn remove(&mut self, a: &Atom) -> bool {
        match self.0.get_mut(a) {
            Some(n) if *n > 1 => {
                *n -= 1;
                true
            }
            Some(_) => {
                self.0.remove(a);
                true
            }
            None => false,
        }
    }

    pub fn count(&self, a: &Atom) -> usize {
        self.0.get(a).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Multiset inclusion.
    pub fn subset_of(&self, other: &Multiset) -> bool {
        self.0.iter().all(|(a, n)| other.count(a) >= *n)
    }

    /// Multiset difference, saturating at zero per atom.
    pub fn minus(&self, other: &Multiset) -> Multiset {
        let mut out = self.clone();
        for (a, n) in &other.0 {
            for _ in 0..*n {
                out.remove(a);
            }
        }
        out
    }

    pub fn union(&self, other: &Multiset) -> Multiset {
        let mut out = self.clone();
        for a in other.iter() {
            out.insert(a.clone());
        }
        out
    }

    /// Iterates atoms with multiplicity, in name order.
    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.0.iter().flat_map(|(a, n)| std::iter::repeat_n(a, *n))
    }
}

impl FromIterator<Atom> for Multiset {
    fn from_iter<T: IntoIterator<Item = Atom>>(iter: T) -> Multiset {
        let mut m = Multiset::new();
        for a in iter {
            m.insert(a);
        }
        m
    }
}

impl fmt::Display for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for a in self.iter() {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{a}")?;
        }
        Ok(())
    }
}
