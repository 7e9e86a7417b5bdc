//! World and neighbourhood labels, and the labelled formulas built from them.
//!
//! A labelled sequent mentions world labels `x0, x1, ...`, neighbourhood
//! labels `a0, a1, ...`, and singleton labels `{x}` for a world label `x`.
//! Labelled formulas come in seven shapes: three relational atoms that may
//! appear only in antecedents, and four formula assertions.

use std::fmt;

use serde_json::{json, Value};

use crate::formula::{Formula, FormulaJsonError};

/// World label, displayed as `x{index}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WorldLabel(pub u32);

impl fmt::Display for WorldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Neighbourhood label: either a plain label `a{index}` or the singleton
/// label `{x}` of a world label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NbhdLabel {
    Plain(u32),
    Singleton(WorldLabel),
}

impl fmt::Display for NbhdLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NbhdLabel::Plain(i) => write!(f, "a{i}"),
            NbhdLabel::Singleton(x) => write!(f, "{{{x}}}"),
        }
    }
}

/// Either kind of label; used for generation-tree bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    World(WorldLabel),
    Nbhd(NbhdLabel),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::World(x) => x.fmt(f),
            Label::Nbhd(a) => a.fmt(f),
        }
    }
}

impl From<WorldLabel> for Label {
    fn from(x: WorldLabel) -> Label {
        Label::World(x)
    }
}

impl From<NbhdLabel> for Label {
    fn from(a: NbhdLabel) -> Label {
        Label::Nbhd(a)
    }
}

/// A labelled formula.
///
/// The first three shapes are relational atoms; they are restricted to
/// antecedents. The variant order fixes the `Ord` used for deterministic
/// sequent iteration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelledFormula {
    /// `a ∈ N(x)`: the neighbourhood named `a` belongs to the family at `x`.
    InN(NbhdLabel, WorldLabel),
    /// `x ∈ a`: the world named `x` is a member of the neighbourhood `a`.
    MemberOf(WorldLabel, NbhdLabel),
    /// `a ⊆ b`.
    SubsetOf(NbhdLabel, NbhdLabel),
    /// `x : A`: the formula `A` holds at the world `x`.
    At(WorldLabel, Formula),
    /// `a ⊩∀ A`: every member of `a` satisfies `A`.
    ForcesAll(NbhdLabel, Formula),
    /// `a ⊩∃ A`: some member of `a` satisfies `A`.
    ForcesSome(NbhdLabel, Formula),
    /// `x ⊩_a A | B`: some subset of `a` witnesses the conditional `A > B`
    /// at `x`.
    CondAt(WorldLabel, NbhdLabel, Formula, Formula),
}

impl LabelledFormula {
    /// Whether this is one of the three relational atoms.
    pub fn is_relational(&self) -> bool {
        matches!(
            self,
            LabelledFormula::InN(_, _)
                | LabelledFormula::MemberOf(_, _)
                | LabelledFormula::SubsetOf(_, _)
        )
    }

    /// Termination weight `(pure, label)`. Relational atoms weigh `(0, 0)`;
    /// `x:A` weighs `(w(A), 0)`; `a ⊩∀ A` and `a ⊩∃ A` weigh `(w(A), 1)`;
    /// `x ⊩_a A | B` weighs `(w(A) + w(B) + 2, 0)`.
    pub fn labelled_weight(&self) -> (u64, u8) {
        match self {
            LabelledFormula::InN(_, _)
            | LabelledFormula::MemberOf(_, _)
            | LabelledFormula::SubsetOf(_, _) => (0, 0),
            LabelledFormula::At(_, f) => (f.weight(), 0),
            LabelledFormula::ForcesAll(_, f) | LabelledFormula::ForcesSome(_, f) => {
                (f.weight(), 1)
            }
            LabelledFormula::CondAt(_, _, a, b) => (a.weight() + b.weight() + 2, 0),
        }
    }

    /// Replaces every occurrence of the world label `from` with `to`,
    /// including inside singleton neighbourhood labels.
    pub fn substitute_world(&self, from: WorldLabel, to: WorldLabel) -> LabelledFormula {
        let w = |x: &WorldLabel| if *x == from { to } else { *x };
        let n = |a: &NbhdLabel| match a {
            NbhdLabel::Singleton(x) => NbhdLabel::Singleton(w(x)),
            plain => *plain,
        };
        match self {
            LabelledFormula::InN(a, x) => LabelledFormula::InN(n(a), w(x)),
            LabelledFormula::MemberOf(x, a) => LabelledFormula::MemberOf(w(x), n(a)),
            LabelledFormula::SubsetOf(a, b) => LabelledFormula::SubsetOf(n(a), n(b)),
            LabelledFormula::At(x, f) => LabelledFormula::At(w(x), f.clone()),
            LabelledFormula::ForcesAll(a, f) => LabelledFormula::ForcesAll(n(a), f.clone()),
            LabelledFormula::ForcesSome(a, f) => LabelledFormula::ForcesSome(n(a), f.clone()),
            LabelledFormula::CondAt(x, a, f, g) => {
                LabelledFormula::CondAt(w(x), n(a), f.clone(), g.clone())
            }
        }
    }

    /// Replaces every occurrence of the neighbourhood label `from` with `to`.
    pub fn substitute_nbhd(&self, from: NbhdLabel, to: NbhdLabel) -> LabelledFormula {
        let n = |a: &NbhdLabel| if *a == from { to } else { *a };
        match self {
            LabelledFormula::InN(a, x) => LabelledFormula::InN(n(a), *x),
            LabelledFormula::MemberOf(x, a) => LabelledFormula::MemberOf(*x, n(a)),
            LabelledFormula::SubsetOf(a, b) => LabelledFormula::SubsetOf(n(a), n(b)),
            LabelledFormula::At(_, _) => self.clone(),
            LabelledFormula::ForcesAll(a, f) => LabelledFormula::ForcesAll(n(a), f.clone()),
            LabelledFormula::ForcesSome(a, f) => LabelledFormula::ForcesSome(n(a), f.clone()),
            LabelledFormula::CondAt(x, a, f, g) => {
                LabelledFormula::CondAt(*x, n(a), f.clone(), g.clone())
            }
        }
    }

    /// World labels occurring in the formula, including inside singleton
    /// labels, in display order.
    pub fn world_labels(&self) -> Vec<WorldLabel> {
        fn push(out: &mut Vec<WorldLabel>, x: WorldLabel) {
            if !out.contains(&x) {
                out.push(x);
            }
        }
        fn push_singleton(out: &mut Vec<WorldLabel>, a: &NbhdLabel) {
            if let NbhdLabel::Singleton(x) = a {
                push(out, *x);
            }
        }
        let mut out = Vec::new();
        match self {
            LabelledFormula::InN(a, x) => {
                push_singleton(&mut out, a);
                push(&mut out, *x);
            }
            LabelledFormula::MemberOf(x, a) => {
                push(&mut out, *x);
                push_singleton(&mut out, a);
            }
            LabelledFormula::SubsetOf(a, b) => {
                push_singleton(&mut out, a);
                push_singleton(&mut out, b);
            }
            LabelledFormula::At(x, _) => push(&mut out, *x),
            LabelledFormula::ForcesAll(a, _) | LabelledFormula::ForcesSome(a, _) => {
                push_singleton(&mut out, a)
            }
            LabelledFormula::CondAt(x, a, _, _) => {
                push(&mut out, *x);
                push_singleton(&mut out, a);
            }
        }
        out
    }

    /// Neighbourhood labels occurring in the formula, in display order.
    pub fn nbhd_labels(&self) -> Vec<NbhdLabel> {
        let mut out = Vec::new();
        let mut push = |a: NbhdLabel| {
            if !out.contains(&a) {
                out.push(a);
            }
        };
        match self {
            LabelledFormula::InN(a, _) => push(*a),
            LabelledFormula::MemberOf(_, a) => push(*a),
            LabelledFormula::SubsetOf(a, b) => {
                push(*a);
                push(*b);
            }
            LabelledFormula::At(_, _) => {}
            LabelledFormula::ForcesAll(a, _) | LabelledFormula::ForcesSome(a, _) => push(*a),
            LabelledFormula::CondAt(_, a, _, _) => push(*a),
        }
        out
    }

    /// Whether the given label occurs in the formula. Worlds inside
    /// singleton labels count as occurrences of both the world and the
    /// singleton.
    pub fn mentions(&self, label: Label) -> bool {
        match label {
            Label::World(x) => self.world_labels().contains(&x),
            Label::Nbhd(a) => self.nbhd_labels().contains(&a),
        }
    }

    /// JSON rendering as a tagged object, for example
    /// `{"kind":"member","world":"x0","nbhd":"a1"}`.
    pub fn to_json(&self) -> Value {
        match self {
            LabelledFormula::InN(a, x) => {
                json!({"kind": "in_n", "nbhd": a.to_string(), "world": x.to_string()})
            }
            LabelledFormula::MemberOf(x, a) => {
                json!({"kind": "member", "world": x.to_string(), "nbhd": a.to_string()})
            }
            LabelledFormula::SubsetOf(a, b) => {
                json!({"kind": "subset", "sub": a.to_string(), "sup": b.to_string()})
            }
            LabelledFormula::At(x, f) => {
                json!({"kind": "at", "world": x.to_string(), "formula": f.to_json()})
            }
            LabelledFormula::ForcesAll(a, f) => {
                json!({"kind": "forces_all", "nbhd": a.to_string(), "formula": f.to_json()})
            }
            LabelledFormula::ForcesSome(a, f) => {
                json!({"kind": "forces_some", "nbhd": a.to_string(), "formula": f.to_json()})
            }
            LabelledFormula::CondAt(x, a, f, g) => json!({
                "kind": "cond_at",
                "world": x.to_string(),
                "nbhd": a.to_string(),
                "antecedent": f.to_json(),
                "consequent": g.to_json(),
            }),
        }
    }

    /// Parses the JSON rendering produced by [`LabelledFormula::to_json`].
    pub fn from_json(v: &Value) -> Result<LabelledFormula, LabelJsonError> {
        let obj = v
            .as_object()
            .ok_or_else(|| LabelJsonError::at("labelled formula must be an object", v))?;
        let kind = obj
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| LabelJsonError::at("missing string field \"kind\"", v))?;
        let world = |field: &str| -> Result<WorldLabel, LabelJsonError> {
            let s = obj
                .get(field)
                .and_then(Value::as_str)
                .ok_or_else(|| LabelJsonError::at(&format!("missing field {field:?}"), v))?;
            parse_world_label(s).ok_or_else(|| LabelJsonError::at("bad world label", v))
        };
        let nbhd = |field: &str| -> Result<NbhdLabel, LabelJsonError> {
            let s = obj
                .get(field)
                .and_then(Value::as_str)
                .ok_or_else(|| LabelJsonError::at(&format!("missing field {field:?}"), v))?;
            parse_nbhd_label(s).ok_or_else(|| LabelJsonError::at("bad neighbourhood label", v))
        };
        let formula = |field: &str| -> Result<Formula, LabelJsonError> {
            let fv = obj
                .get(field)
                .ok_or_else(|| LabelJsonError::at(&format!("missing field {field:?}"), v))?;
            Ok(Formula::from_json(fv)?)
        };
        match kind {
            "in_n" => Ok(LabelledFormula::InN(nbhd("nbhd")?, world("world")?)),
            "member" => Ok(LabelledFormula::MemberOf(world("world")?, nbhd("nbhd")?)),
            "subset" => Ok(LabelledFormula::SubsetOf(nbhd("sub")?, nbhd("sup")?)),
            "at" => Ok(LabelledFormula::At(world("world")?, formula("formula")?)),
            "forces_all" => Ok(LabelledFormula::ForcesAll(nbhd("nbhd")?, formula("formula")?)),
            "forces_some" => Ok(LabelledFormula::ForcesSome(nbhd("nbhd")?, formula("formula")?)),
            "cond_at" => Ok(LabelledFormula::CondAt(
                world("world")?,
                nbhd("nbhd")?,
                formula("antecedent")?,
                formula("consequent")?,
            )),
            other => Err(LabelJsonError::at(&format!("unknown kind {other:?}"), v)),
        }
    }
}

impl fmt::Display for LabelledFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelledFormula::InN(a, x) => write!(f, "{a} in N({x})"),
            LabelledFormula::MemberOf(x, a) => write!(f, "{x} in {a}"),
            LabelledFormula::SubsetOf(a, b) => write!(f, "{a} sub {b}"),
            LabelledFormula::At(x, g) => write!(f, "{x}: {g}"),
            LabelledFormula::ForcesAll(a, g) => write!(f, "{a} all {g}"),
            LabelledFormula::ForcesSome(a, g) => write!(f, "{a} some {g}"),
            LabelledFormula::CondAt(x, a, g, h) => write!(f, "{x} at {a}: {g} | {h}"),
        }
    }
}

/// Error from [`LabelledFormula::from_json`] and the sequent and proof
/// deserializers built on it.
#[derive(Debug, Clone, thiserror::Error)]
#[error("malformed labelled formula JSON: {message} in {fragment}")]
pub struct LabelJsonError {
    pub message: String,
    pub fragment: String,
}

impl LabelJsonError {
    pub(crate) fn at(message: &str, v: &Value) -> LabelJsonError {
        let mut fragment = v.to_string();
        if fragment.len() > 80 {
            fragment.truncate(77);
            fragment.push_str("...");
        }
        LabelJsonError {
            message: message.to_string(),
            fragment,
        }
    }
}

impl From<FormulaJsonError> for LabelJsonError {
    fn from(e: FormulaJsonError) -> LabelJsonError {
        LabelJsonError {
            message: e.message,
            fragment: e.fragment,
        }
    }
}

/// Parses `x{index}`.
pub fn parse_world_label(s: &str) -> Option<WorldLabel> {
    let rest = s.strip_prefix('x')?;
    if rest.is_empty() || rest.len() > 9 || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if rest.len() > 1 && rest.starts_with('0') {
        return None;
    }
    Some(WorldLabel(rest.parse().ok()?))
}

/// Parses `a{index}` or `{x{index}}`.
pub fn parse_nbhd_label(s: &str) -> Option<NbhdLabel> {
    if let Some(inner) = s.strip_prefix('{').and_then(|t| t.strip_suffix('}')) {
        return Some(NbhdLabel::Singleton(parse_world_label(inner)?));
    }
    let rest = s.strip_prefix('a')?;
    if rest.is_empty() || rest.len() > 9 || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if rest.len() > 1 && rest.starts_with('0') {
        return None;
    }
    Some(NbhdLabel::Plain(rest.parse().ok()?))
}

/// Parses either label kind from its display form.
pub fn parse_label(s: &str) -> Option<Label> {
    parse_world_label(s)
        .map(Label::World)
        .or_else(|| parse_nbhd_label(s).map(Label::Nbhd))
}
