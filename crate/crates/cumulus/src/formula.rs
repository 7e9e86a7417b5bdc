//! Formulas of the conditional language and their concrete syntax.
//!
//! The language has atoms, falsity, the three classical binary connectives,
//! and the binary conditional `A > B`. Negation and truth are parser-level
//! sugar: `~A` reads as `A -> false` and `true` reads as `false -> false`,
//! so downstream code only ever sees the six constructors.

use std::collections::BTreeSet;
use std::fmt;

use serde_json::{json, Value};

/// A formula of the conditional language.
///
/// `Cond(a, b)` is the conditional `a > b`; everything else is classical.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    /// Propositional atom, named by a lowercase identifier.
    Atom(String),
    /// Falsity `false`.
    Bottom,
    /// Conjunction `a & b`.
    And(Box<Formula>, Box<Formula>),
    /// Disjunction `a | b`.
    Or(Box<Formula>, Box<Formula>),
    /// Material implication `a -> b`.
    Implies(Box<Formula>, Box<Formula>),
    /// Conditional `a > b`.
    Cond(Box<Formula>, Box<Formula>),
}

impl Formula {
    /// Atom with the given name. The name is not validated; use
    /// [`parse_formula`] for checked input.
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn cond(a: Formula, b: Formula) -> Formula {
        Formula::Cond(Box::new(a), Box::new(b))
    }

    /// `~a`, desugared to `a -> false`.
    pub fn neg(a: Formula) -> Formula {
        Formula::implies(a, Formula::Bottom)
    }

    /// `true`, desugared to `false -> false`.
    pub fn top() -> Formula {
        Formula::implies(Formula::Bottom, Formula::Bottom)
    }

    /// Number of symbols: atoms and `false` count 1, each binary
    /// connective counts 1 plus its operands.
    pub fn size(&self) -> u64 {
        match self {
            Formula::Atom(_) | Formula::Bottom => 1,
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Cond(a, b) => a.size() + b.size() + 1,
        }
    }

    /// Nesting depth of conditionals: 0 for purely classical formulas,
    /// and one more than the deeper operand for each conditional.
    pub fn conditional_degree(&self) -> u64 {
        match self {
            Formula::Atom(_) | Formula::Bottom => 0,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.conditional_degree().max(b.conditional_degree())
            }
            Formula::Cond(a, b) => a.conditional_degree().max(b.conditional_degree()) + 1,
        }
    }

    /// Termination weight: atoms and `false` weigh 1; `&` and `->` add 1,
    /// `|` adds 2, and `>` adds 3 on top of the operand weights.
    pub fn weight(&self) -> u64 {
        match self {
            Formula::Atom(_) | Formula::Bottom => 1,
            Formula::And(a, b) | Formula::Implies(a, b) => a.weight() + b.weight() + 1,
            Formula::Or(a, b) => a.weight() + b.weight() + 2,
            Formula::Cond(a, b) => a.weight() + b.weight() + 3,
        }
    }

    /// Names of the atoms occurring in the formula, sorted.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::Bottom => {}
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Cond(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Conditional subformulas, in first-occurrence order of a left-to-right
    /// post-order walk, without duplicates.
    pub fn conditional_subformulas(&self) -> Vec<Formula> {
        let mut out = Vec::new();
        self.collect_conds(&mut out);
        out
    }

    fn collect_conds(&self, out: &mut Vec<Formula>) {
        match self {
            Formula::Atom(_) | Formula::Bottom => {}
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_conds(out);
                b.collect_conds(out);
            }
            Formula::Cond(a, b) => {
                a.collect_conds(out);
                b.collect_conds(out);
                if !out.contains(self) {
                    out.push(self.clone());
                }
            }
        }
    }

    /// JSON rendering as nested tagged objects, for example
    /// `{"op":"cond","args":[{"op":"atom","args":["p"]},{"op":"false","args":[]}]}`.
    pub fn to_json(&self) -> Value {
        match self {
            Formula::Atom(p) => json!({"op": "atom", "args": [p]}),
            Formula::Bottom => json!({"op": "false", "args": []}),
            Formula::And(a, b) => json!({"op": "and", "args": [a.to_json(), b.to_json()]}),
            Formula::Or(a, b) => json!({"op": "or", "args": [a.to_json(), b.to_json()]}),
            Formula::Implies(a, b) => {
                json!({"op": "implies", "args": [a.to_json(), b.to_json()]})
            }
            Formula::Cond(a, b) => json!({"op": "cond", "args": [a.to_json(), b.to_json()]}),
        }
    }

    /// Parses the JSON rendering produced by [`Formula::to_json`].
    pub fn from_json(v: &Value) -> Result<Formula, FormulaJsonError> {
        let obj = v
            .as_object()
            .ok_or_else(|| FormulaJsonError::new("formula must be an object", v))?;
        let op = obj
            .get("op")
            .and_then(Value::as_str)
            .ok_or_else(|| FormulaJsonError::new("missing string field \"op\"", v))?;
        let args = obj
            .get("args")
            .and_then(Value::as_array)
            .ok_or_else(|| FormulaJsonError::new("missing array field \"args\"", v))?;
        let binary = |ctor: fn(Formula, Formula) -> Formula| -> Result<Formula, FormulaJsonError> {
            if args.len() != 2 {
                return Err(FormulaJsonError::new("binary op needs two args", v));
            }
            Ok(ctor(Formula::from_json(&args[0])?, Formula::from_json(&args[1])?))
        };
        match op {
            "atom" => {
                let name = args
                    .first()
                    .and_then(Value::as_str)
                    .filter(|_| args.len() == 1)
                    .ok_or_else(|| FormulaJsonError::new("atom needs one string arg", v))?;
                if !is_atom_name(name) {
                    return Err(FormulaJsonError::new("invalid atom name", v));
                }
                Ok(Formula::Atom(name.to_string()))
            }
            "false" => {
                if !args.is_empty() {
                    return Err(FormulaJsonError::new("false takes no args", v));
                }
                Ok(Formula::Bottom)
            }
            "and" => binary(Formula::and),
            "or" => binary(Formula::or),
            "implies" => binary(Formula::implies),
            "cond" => binary(Formula::cond),
            other => Err(FormulaJsonError::new(
                &format!("unknown op {other:?}"),
                v,
            )),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_formula(self))
    }
}

/// Error from [`Formula::from_json`], carrying a fragment of the offending value.
#[derive(Debug, Clone, thiserror::Error)]
#[error("malformed formula JSON: {message} in {fragment}")]
pub struct FormulaJsonError {
    pub message: String,
    pub fragment: String,
}

impl FormulaJsonError {
    fn new(message: &str, v: &Value) -> FormulaJsonError {
        let mut fragment = v.to_string();
        if fragment.len() > 80 {
            fragment.truncate(77);
            fragment.push_str("...");
        }
        FormulaJsonError {
            message: message.to_string(),
            fragment,
        }
    }
}

pub(crate) fn is_atom_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Parse error with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            position,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    False,
    True,
    Tilde,
    Amp,
    Pipe,
    Arrow,
    Gt,
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "identifier {s:?}"),
            Token::False => f.write_str("\"false\""),
            Token::True => f.write_str("\"true\""),
            Token::Tilde => f.write_str("\"~\""),
            Token::Amp => f.write_str("\"&\""),
            Token::Pipe => f.write_str("\"|\""),
            Token::Arrow => f.write_str("\"->\""),
            Token::Gt => f.write_str("\">\""),
            Token::LParen => f.write_str("\"(\""),
            Token::RParen => f.write_str("\")\""),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'~' => {
                tokens.push((i, Token::Tilde));
                i += 1;
            }
            b'&' => {
                tokens.push((i, Token::Amp));
                i += 1;
            }
            b'|' => {
                tokens.push((i, Token::Pipe));
                i += 1;
            }
            b'(' => {
                tokens.push((i, Token::LParen));
                i += 1;
            }
            b')' => {
                tokens.push((i, Token::RParen));
                i += 1;
            }
            b'-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    tokens.push((i, Token::Arrow));
                    i += 2;
                } else {
                    return Err(ParseError::new(i, "expected \"->\" after \"-\""));
                }
            }
            b'>' => {
                tokens.push((i, Token::Gt));
                i += 1;
            }
            b'a'..=b'z' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_lowercase()
                        || bytes[i].is_ascii_digit()
                        || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &text[start..i];
                let token = match word {
                    "false" => Token::False,
                    "true" => Token::True,
                    _ => Token::Ident(word.to_string()),
                };
                tokens.push((start, token));
            }
            _ => {
                return Err(ParseError::new(
                    i,
                    format!("unexpected character {:?}", text[i..].chars().next().unwrap()),
                ));
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(at, _)| *at)
            .unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<(usize, Token)> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: &Token) -> Result<(), ParseError> {
        match self.bump() {
            Some((_, ref t)) if t == want => Ok(()),
            Some((at, t)) => Err(ParseError::new(at, format!("expected {want}, found {t}"))),
            None => Err(ParseError::new(self.end, format!("expected {want}, found end of input"))),
        }
    }

    // implication := conditional ("->" implication)?   right-associative, loosest
    fn implication(&mut self) -> Result<Formula, ParseError> {
        let left = self.conditional()?;
        if self.peek() == Some(&Token::Arrow) {
            self.bump();
            let right = self.implication()?;
            Ok(Formula::implies(left, right))
        } else {
            Ok(left)
        }
    }

    // conditional := disjunction (">" disjunction)?   non-associative
    fn conditional(&mut self) -> Result<Formula, ParseError> {
        let left = self.disjunction()?;
        if self.peek() == Some(&Token::Gt) {
            self.bump();
            let right = self.disjunction()?;
            if self.peek() == Some(&Token::Gt) {
                return Err(ParseError::new(
                    self.here(),
                    "\">\" is non-associative; parenthesize one side",
                ));
            }
            Ok(Formula::cond(left, right))
        } else {
            Ok(left)
        }
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.conjunction()?;
        while self.peek() == Some(&Token::Pipe) {
            self.bump();
            let right = self.conjunction()?;
            left = Formula::or(left, right);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.unary()?;
        while self.peek() == Some(&Token::Amp) {
            self.bump();
            let right = self.unary()?;
            left = Formula::and(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.bump() {
            Some((_, Token::Tilde)) => Ok(Formula::neg(self.unary()?)),
            Some((_, Token::False)) => Ok(Formula::Bottom),
            Some((_, Token::True)) => Ok(Formula::top()),
            Some((_, Token::Ident(name))) => Ok(Formula::Atom(name)),
            Some((_, Token::LParen)) => {
                let inner = self.implication()?;
                self.expect(&Token::RParen)?;
                Ok(inner)
            }
            Some((at, t)) => Err(ParseError::new(at, format!("expected a formula, found {t}"))),
            None => Err(ParseError::new(self.end, "expected a formula, found end of input")),
        }
    }
}

/// Parses the concrete syntax.
///
/// Binding strength, tightest first: `~`, `&`, `|`, `>`, `->`. Implication
/// is right-associative; the conditional is non-associative, so `p > q > r`
/// is rejected with the position of the second `>`. `~a` is read as
/// `a -> false` and `true` as `false -> false`.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let formula = parser.implication()?;
    match parser.bump() {
        None => Ok(formula),
        Some((at, t)) => Err(ParseError::new(at, format!("unexpected {t} after formula"))),
    }
}

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Implies(_, _) => 1,
        Formula::Cond(_, _) => 2,
        Formula::Or(_, _) => 3,
        Formula::And(_, _) => 4,
        Formula::Atom(_) | Formula::Bottom => 5,
    }
}

fn render_at(f: &Formula, min: u8, out: &mut String) {
    let parens = prec(f) < min;
    if parens {
        out.push('(');
    }
    match f {
        Formula::Atom(p) => out.push_str(p),
        Formula::Bottom => out.push_str("false"),
        Formula::And(a, b) => {
            render_at(a, 4, out);
            out.push_str(" & ");
            render_at(b, 5, out);
        }
        Formula::Or(a, b) => {
            render_at(a, 3, out);
            out.push_str(" | ");
            render_at(b, 4, out);
        }
        Formula::Implies(a, b) => {
            render_at(a, 2, out);
            out.push_str(" -> ");
            render_at(b, 1, out);
        }
        Formula::Cond(a, b) => {
            render_at(a, 3, out);
            out.push_str(" > ");
            render_at(b, 3, out);
        }
    }
    if parens {
        out.push(')');
    }
}

/// Renders a formula with minimal parentheses; `parse_formula` of the result
/// returns the same tree. Sugar is never emitted: negation prints as
/// `... -> false` and truth as `false -> false`.
pub fn render_formula(f: &Formula) -> String {
    let mut out = String::new();
    render_at(f, 0, &mut out);
    out
}
