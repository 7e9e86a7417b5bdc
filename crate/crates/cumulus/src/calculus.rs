//! The fifteen logics, their labelled sequent rules, and derivations.
//!
//! A logic is a set of frame flags closed downward along the chain
//! centering, weak centering, total reflexivity, normality, optionally
//! extended by uniformity or absoluteness. Each logic selects a rule set.
//! Rules are instantiated against the current sequent of a branch; an
//! instance is withheld when its saturation condition is already met, which
//! is what guarantees termination of backward search. The derivation
//! checker replays rule applications without any of those restrictions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::formula::Formula;
use crate::label::{
    parse_label, Label, LabelledFormula, NbhdLabel, WorldLabel,
};
use crate::sequent::{Branch, GenTree, Sequent};

/// Frame flags, ordered by the downward-closure chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flag {
    /// Normality: every neighbourhood family is nonempty.
    N,
    /// Total reflexivity: some neighbourhood of `x` contains `x`.
    T,
    /// Weak centering: every neighbourhood of `x` contains `x`.
    W,
    /// Centering: the singleton of `x` is a neighbourhood of `x`.
    C,
    /// Uniformity: worlds reachable through a neighbourhood see the same
    /// union of neighbourhoods.
    U,
    /// Absoluteness: worlds reachable through a neighbourhood carry the
    /// same neighbourhood family.
    A,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Flag::N => "normality",
            Flag::T => "total reflexivity",
            Flag::W => "weak centering",
            Flag::C => "centering",
            Flag::U => "uniformity",
            Flag::A => "absoluteness",
        };
        f.write_str(s)
    }
}

/// Names of the fifteen supported logics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[allow(clippy::upper_case_acronyms)]
pub enum LogicName {
    PCL,
    PN,
    PT,
    PW,
    PC,
    PU,
    PNU,
    PTU,
    PWU,
    PCU,
    PA,
    PNA,
    PTA,
    PWA,
    PCA,
}

impl LogicName {
    /// All fifteen names, base family first, then the uniform and absolute
    /// families.
    pub fn all() -> [LogicName; 15] {
        use LogicName::*;
        [PCL, PN, PT, PW, PC, PU, PNU, PTU, PWU, PCU, PA, PNA, PTA, PWA, PCA]
    }

    /// The flags the name stands for, before downward closure.
    fn base_flags(self) -> &'static [Flag] {
        use LogicName::*;
        match self {
            PCL => &[],
            PN => &[Flag::N],
            PT => &[Flag::T],
            PW => &[Flag::W],
            PC => &[Flag::C],
            PU => &[Flag::U],
            PNU => &[Flag::N, Flag::U],
            PTU => &[Flag::T, Flag::U],
            PWU => &[Flag::W, Flag::U],
            PCU => &[Flag::C, Flag::U],
            PA => &[Flag::A],
            PNA => &[Flag::N, Flag::A],
            PTA => &[Flag::T, Flag::A],
            PWA => &[Flag::W, Flag::A],
            PCA => &[Flag::C, Flag::A],
        }
    }

    pub fn as_str(self) -> &'static str {
        use LogicName::*;
        match self {
            PCL => "PCL",
            PN => "PN",
            PT => "PT",
            PW => "PW",
            PC => "PC",
            PU => "PU",
            PNU => "PNU",
            PTU => "PTU",
            PWU => "PWU",
            PCU => "PCU",
            PA => "PA",
            PNA => "PNA",
            PTA => "PTA",
            PWA => "PWA",
            PCA => "PCA",
        }
    }
}

impl fmt::Display for LogicName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LogicName {
    type Err = UnknownLogic;

    fn from_str(s: &str) -> Result<LogicName, UnknownLogic> {
        let upper = s.to_ascii_uppercase();
        LogicName::all()
            .into_iter()
            .find(|n| n.as_str() == upper)
            .ok_or_else(|| UnknownLogic(s.to_string()))
    }
}

/// Error for unrecognized logic names.
#[derive(Debug, Clone, thiserror::Error)]
#[error("unknown logic {0:?}; expected one of PCL PN PT PW PC PU PNU PTU PWU PCU PA PNA PTA PWA PCA")]
pub struct UnknownLogic(pub String);

/// A logic: a name plus its downward-closed flag set.
///
/// Closure runs along centering -> weak centering -> total reflexivity ->
/// normality, so for example `PW` carries `{N, T, W}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Logic {
    name: LogicName,
    flags: BTreeSet<Flag>,
}

impl Logic {
    pub fn new(name: LogicName) -> Logic {
        let mut flags: BTreeSet<Flag> = name.base_flags().iter().copied().collect();
        if flags.contains(&Flag::C) {
            flags.insert(Flag::W);
        }
        if flags.contains(&Flag::W) {
            flags.insert(Flag::T);
        }
        if flags.contains(&Flag::T) {
            flags.insert(Flag::N);
        }
        Logic { name, flags }
    }

    pub fn name(&self) -> LogicName {
        self.name
    }

    pub fn flags(&self) -> &BTreeSet<Flag> {
        &self.flags
    }

    pub fn has(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.name.fmt(f)
    }
}

impl FromStr for Logic {
    type Err = UnknownLogic;

    fn from_str(s: &str) -> Result<Logic, UnknownLogic> {
        Ok(Logic::new(LogicName::from_str(s)?))
    }
}

/// Rule identifiers, including the two closing rules for leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    /// Leaf: an atomic `x : p` occurs on both sides.
    Init,
    /// Leaf: `x : false` occurs in the antecedent.
    BotL,
    LAnd,
    RAnd,
    LOr,
    ROr,
    LImp,
    RImp,
    LForall,
    RForall,
    LExists,
    RExists,
    /// Right conditional rule: unfolds `x : A > B` in the succedent with a
    /// fresh neighbourhood label.
    RCond,
    /// Left conditional rule as used in derivations being checked.
    LCond,
    /// Left conditional rule as used by search; its second premise keeps a
    /// copy of the existential forcing for saturation bookkeeping.
    LCondStar,
    /// Right rule for `x at a: A | B` formulas in the succedent.
    RCondAt,
    /// Left rule for `x at a: A | B` formulas in the antecedent.
    LCondAt,
    /// Reflexivity of inclusion for every neighbourhood label in sight.
    Ref,
    /// Transitivity of inclusion.
    Tr,
    /// Membership propagates along inclusion.
    LSubset,
    /// Universal forcing propagates down inclusion.
    MonForall,
    /// Normality: every world gets a neighbourhood.
    N,
    /// Every neighbourhood gets a member, where the strategy asks for one.
    Zero,
    /// Total reflexivity: every world gets a neighbourhood containing it.
    T,
    /// Weak centering: every neighbourhood contains its world.
    W,
    /// Centering: the singleton label joins the family and sits below
    /// every neighbourhood.
    C,
    /// Singleton labels contain their world.
    Single,
    /// Atomic facts about `x` transfer to members of `{x}`.
    Repl1,
    /// Atomic facts about members of `{x}` transfer to `x`.
    Repl2,
    /// Uniformity, outward: members of neighbourhoods of a member's
    /// neighbourhood are covered at the original world.
    Unif1,
    /// Uniformity, inward: members of neighbourhoods at the original world
    /// are covered at the member.
    Unif2,
    /// Absoluteness, outward: families transfer from a world to members of
    /// its neighbourhoods.
    Abs1,
    /// Absoluteness, inward: families transfer back.
    Abs2,
}

/// What kind of fresh label a rule consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreshKind {
    World,
    Nbhd,
}

/// Priority classes of the search strategy, low fires first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PriorityClass {
    /// All static rules other than the starred left conditional rule.
    Static,
    /// The right conditional rule.
    RightCond,
    /// The starred left conditional rule.
    LeftCondStar,
    /// The remaining label-creating rules.
    Dynamic,
}

impl RuleId {
    pub fn as_str(self) -> &'static str {
        use RuleId::*;
        match self {
            Init => "init",
            BotL => "bot_l",
            LAnd => "l_and",
            RAnd => "r_and",
            LOr => "l_or",
            ROr => "r_or",
            LImp => "l_imp",
            RImp => "r_imp",
            LForall => "l_forall",
            RForall => "r_forall",
            LExists => "l_exists",
            RExists => "r_exists",
            RCond => "r_cond",
            LCond => "l_cond",
            LCondStar => "l_cond_star",
            RCondAt => "r_cond_at",
            LCondAt => "l_cond_at",
            Ref => "ref",
            Tr => "tr",
            LSubset => "l_subset",
            MonForall => "mon_forall",
            N => "n",
            Zero => "zero",
            T => "t",
            W => "w",
            C => "c",
            Single => "single",
            Repl1 => "repl1",
            Repl2 => "repl2",
            Unif1 => "unif1",
            Unif2 => "unif2",
            Abs1 => "abs1",
            Abs2 => "abs2",
        }
    }

    /// All rule identifiers.
    pub fn all() -> &'static [RuleId] {
        use RuleId::*;
        &[
            Init, BotL, LAnd, RAnd, LOr, ROr, LImp, RImp, LForall, RForall, LExists, RExists,
            RCond, LCond, LCondStar, RCondAt, LCondAt, Ref, Tr, LSubset, MonForall, N, Zero, T,
            W, C, Single, Repl1, Repl2, Unif1, Unif2, Abs1, Abs2,
        ]
    }

    /// Fresh labels the rule creates, in premise order.
    pub fn fresh_kinds(self) -> &'static [FreshKind] {
        use RuleId::*;
        match self {
            RForall | LExists | Zero => &[FreshKind::World],
            RCond | LCondAt | N | T | Unif1 | Unif2 => &[FreshKind::Nbhd],
            _ => &[],
        }
    }

    /// The strategy class the rule belongs to.
    pub fn priority_class(self) -> PriorityClass {
        use RuleId::*;
        match self {
            RCond => PriorityClass::RightCond,
            LCond | LCondStar => PriorityClass::LeftCondStar,
            RForall | LExists | LCondAt | N | Zero | T | Unif1 | Unif2 => PriorityClass::Dynamic,
            _ => PriorityClass::Static,
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleId {
    type Err = UnknownRule;

    fn from_str(s: &str) -> Result<RuleId, UnknownRule> {
        RuleId::all()
            .iter()
            .copied()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| UnknownRule(s.to_string()))
    }
}

/// Error for unrecognized rule names.
#[derive(Debug, Clone, thiserror::Error)]
#[error("unknown rule {0:?}")]
pub struct UnknownRule(pub String);

/// Whether a rule table is built for backward search or for checking
/// finished derivations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableMode {
    Search,
    Check,
}

/// The rules of the given logic, in strategy priority order: static rules,
/// then the right conditional rule, then the starred left conditional rule,
/// then the label-creating rules.
///
/// In check mode the plain left conditional rule is accepted alongside the
/// starred one, so hand-written derivations and search output both pass.
pub fn rule_table(logic: &Logic, mode: TableMode) -> Vec<RuleId> {
    use RuleId::*;
    let mut statics = vec![Ref, Tr, LSubset, MonForall];
    if logic.has(Flag::W) {
        statics.push(W);
    }
    if logic.has(Flag::C) {
        statics.extend([C, Single, Repl1, Repl2]);
    }
    if logic.has(Flag::A) {
        statics.extend([Abs1, Abs2]);
    }
    statics.extend([LAnd, ROr, RImp, LForall, RExists, RAnd, LOr, LImp, RCondAt]);

    let mut table = statics;
    table.push(RCond);
    table.push(LCondStar);
    if mode == TableMode::Check {
        table.push(LCond);
    }
    let mut dynamics = vec![LExists, RForall, LCondAt];
    if logic.has(Flag::T) {
        dynamics.push(T);
    }
    if logic.has(Flag::N) {
        dynamics.extend([N, Zero]);
    }
    if logic.has(Flag::U) {
        dynamics.extend([Unif1, Unif2]);
    }
    table.extend(dynamics);
    table
}

/// One way a rule can fire on a sequent: the rule, its principal formulas,
/// label parameters for rules acting on labels rather than formulas, the
/// fresh labels it consumes, the resulting premises, and the
/// generation-tree edges the step creates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleInstance {
    pub rule: RuleId,
    pub principals: Vec<LabelledFormula>,
    pub params: Vec<Label>,
    pub fresh: Vec<Label>,
    pub premises: Vec<Sequent>,
    pub edges: Vec<(Label, Label)>,
}

fn set_with(
    base: &BTreeSet<LabelledFormula>,
    add: &[LabelledFormula],
) -> BTreeSet<LabelledFormula> {
    let mut s = base.clone();
    s.extend(add.iter().cloned());
    s
}

fn set_without_with(
    base: &BTreeSet<LabelledFormula>,
    remove: &LabelledFormula,
    add: &[LabelledFormula],
) -> BTreeSet<LabelledFormula> {
    let mut s = base.clone();
    s.remove(remove);
    s.extend(add.iter().cloned());
    s
}

fn seq(antecedent: BTreeSet<LabelledFormula>, succedent: BTreeSet<LabelledFormula>) -> Sequent {
    Sequent::new(antecedent, succedent).expect("rules never move relational atoms right")
}

/// The subject world of an atomic-fact formula: `x : p` with `p` an atom,
/// `x in a`, or `a in N(x)`. Compound `x : A` formulas have no subject.
fn at_shape_subject(f: &LabelledFormula) -> Option<WorldLabel> {
    match f {
        LabelledFormula::At(x, Formula::Atom(_)) => Some(*x),
        LabelledFormula::MemberOf(x, _) => Some(*x),
        LabelledFormula::InN(_, x) => Some(*x),
        _ => None,
    }
}

/// Replaces the subject world of an atomic-fact formula, leaving label
/// internals such as singleton tags untouched.
fn replace_subject(f: &LabelledFormula, to: WorldLabel) -> LabelledFormula {
    match f {
        LabelledFormula::At(_, p) => LabelledFormula::At(to, p.clone()),
        LabelledFormula::MemberOf(_, a) => LabelledFormula::MemberOf(to, *a),
        LabelledFormula::InN(a, _) => LabelledFormula::InN(*a, to),
        other => other.clone(),
    }
}

/// Candidate principal formulas and label parameters for one rule on one
/// sequent, in lexicographic order of the principal tuple. For the rules
/// that act on every label of a kind, the candidates carry parameters
/// instead of principals.
fn candidates(rule: RuleId, s: &Sequent) -> Vec<(Vec<LabelledFormula>, Vec<Label>)> {
    use LabelledFormula as LF;
    let gamma = &s.antecedent;
    let delta = &s.succedent;
    let mut out = Vec::new();
    match rule {
        RuleId::Init | RuleId::BotL => {}
        RuleId::LAnd => {
            for f in gamma {
                if matches!(f, LF::At(_, Formula::And(_, _))) {
                    out.push((vec![f.clone()], vec![]));
                }
            }
        }
        RuleId::RAnd => {
            for f in delta {
                if matches!(f, LF::At(_, Formula::And(_, _))) {
                    out.push((vec![f.clone()], vec![]));
                }
            }
        }
        RuleId::LOr => {
            for f in gamma {
                if matches!(f, LF::At(_, Formula::Or(_, _))) {
                    out.push((vec![f.clone()], vec![]));
                }
            }
        }
        RuleId::ROr => {
            for f in delta {
                if matches!(f, LF::At(_, Formula::Or(_, _))) {
                    out.push((vec![f.clone()], vec![]));
                }
            }
        }
        RuleId::LImp => {
            for f in gamma {
                if matches!(f, LF::At(_, Formula::Implies(_, _))) {
                    out.push((vec![f.clone()], vec![]));
                }
            }
        }
        RuleId::RImp => {
            for f in delta {
                if matches!(f, LF::At(_, Formula::Implies(_, _))) {
                    out.push((vec![f.clone()], vec![]));
                }
            }
        }
        RuleId::LForall => {
            let mut all_by_nbhd: BTreeMap<NbhdLabel, Vec<&LF>> = BTreeMap::new();
            for g in gamma {
                if let LF::ForcesAll(b, _) = g {
                    all_by_nbhd.entry(*b).or_default().push(g);
                }
            }
            for m in gamma {
                if let LF::MemberOf(_, a) = m {
                    for g in all_by_nbhd.get(a).into_iter().flatten() {
                        out.push((vec![m.clone(), (*g).clone()], vec![]));
                    }
                }
            }
        }
        RuleId::RForall => {
            for f in delta {
                if matches!(f, LF::ForcesAll(_, _)) {
                    out.push((vec![f.clone()], vec![]));
                }
            }
        }
        RuleId::LExists => {
            for f in gamma {
                if matches!(f, LF::ForcesSome(_, _)) {
                    out.push((vec![f.clone()], vec![]));
                }
            }
        }
        RuleId::RExists => {
            let mut some_by_nbhd: BTreeMap<NbhdLabel, Vec<&LF>> = BTreeMap::new();
            for g in delta {
                if let LF::ForcesSome(b, _) = g {
                    some_by_nbhd.entry(*b).or_default().push(g);
                }
            }
            for m in gamma {
                if let LF::MemberOf(_, a) = m {
                    for g in some_by_nbhd.get(a).into_iter().flatten() {
                        out.push((vec![m.clone(), (*g).clone()], vec![]));
                    }
                }
            }
        }
        RuleId::RCond => {
            for f in delta {
                if matches!(f, LF::At(_, Formula::Cond(_, _))) {
                    out.push((vec![f.clone()], vec![]));
                }
            }
        }
        RuleId::LCond | RuleId::LCondStar => {
            let mut cond_by_world: BTreeMap<WorldLabel, Vec<&LF>> = BTreeMap::new();
            for g in gamma {
                if let LF::At(y, Formula::Cond(_, _)) = g {
                    cond_by_world.entry(*y).or_default().push(g);
                }
            }
            for n in gamma {
                if let LF::InN(_, x) = n {
                    for g in cond_by_world.get(x).into_iter().flatten() {
                        out.push((vec![n.clone(), (*g).clone()], vec![]));
                    }
                }
            }
        }
        RuleId::RCondAt => {
            let mut sub_by_left: BTreeMap<NbhdLabel, Vec<&LF>> = BTreeMap::new();
            for sub in gamma {
                if let LF::SubsetOf(c, _) = sub {
                    sub_by_left.entry(*c).or_default().push(sub);
                }
            }
            let mut cond_at: BTreeMap<(WorldLabel, NbhdLabel), Vec<&LF>> = BTreeMap::new();
            for g in delta {
                if let LF::CondAt(y, b, _, _) = g {
                    cond_at.entry((*y, *b)).or_default().push(g);
                }
            }
            for n in gamma {
                if let LF::InN(c, x) = n {
                    for sub in sub_by_left.get(c).into_iter().flatten() {
                        let LF::SubsetOf(_, a) = sub else { continue };
                        for g in cond_at.get(&(*x, *a)).into_iter().flatten() {
                            out.push((vec![n.clone(), (*sub).clone(), (*g).clone()], vec![]));
                        }
                    }
                }
            }
        }
        RuleId::LCondAt => {
            for f in gamma {
                if matches!(f, LF::CondAt(_, _, _, _)) {
                    out.push((vec![f.clone()], vec![]));
                }
            }
        }
        RuleId::Ref => {
            for a in s.nbhd_labels() {
                out.push((vec![], vec![Label::Nbhd(a)]));
            }
        }
        RuleId::Tr => {
            let mut sub_by_left: BTreeMap<NbhdLabel, Vec<&LF>> = BTreeMap::new();
            for g in gamma {
                if let LF::SubsetOf(b, _) = g {
                    sub_by_left.entry(*b).or_default().push(g);
                }
            }
            for f in gamma {
                if let LF::SubsetOf(_, b) = f {
                    for g in sub_by_left.get(b).into_iter().flatten() {
                        out.push((vec![f.clone(), (*g).clone()], vec![]));
                    }
                }
            }
        }
        RuleId::LSubset => {
            let mut sub_by_left: BTreeMap<NbhdLabel, Vec<&LF>> = BTreeMap::new();
            for g in gamma {
                if let LF::SubsetOf(a, _) = g {
                    sub_by_left.entry(*a).or_default().push(g);
                }
            }
            for m in gamma {
                if let LF::MemberOf(_, a) = m {
                    for g in sub_by_left.get(a).into_iter().flatten() {
                        out.push((vec![m.clone(), (*g).clone()], vec![]));
                    }
                }
            }
        }
        RuleId::MonForall => {
            let mut all_by_nbhd: BTreeMap<NbhdLabel, Vec<&LF>> = BTreeMap::new();
            for g in gamma {
                if let LF::ForcesAll(a, _) = g {
                    all_by_nbhd.entry(*a).or_default().push(g);
                }
            }
            for f in gamma {
                if let LF::SubsetOf(_, a) = f {
                    for g in all_by_nbhd.get(a).into_iter().flatten() {
                        out.push((vec![f.clone(), (*g).clone()], vec![]));
                    }
                }
            }
        }
        RuleId::N | RuleId::T => {
            for x in s.world_labels() {
                out.push((vec![], vec![Label::World(x)]));
            }
        }
        RuleId::Zero | RuleId::W | RuleId::C => {
            for f in gamma {
                if matches!(f, LF::InN(_, _)) {
                    out.push((vec![f.clone()], vec![]));
                }
            }
        }
        RuleId::Single => {
            for f in gamma {
                if matches!(f, LF::InN(NbhdLabel::Singleton(x), y) if x == y) {
                    out.push((vec![f.clone()], vec![]));
                }
            }
        }
        RuleId::Repl1 => {
            for m in gamma {
                if let LF::MemberOf(_, NbhdLabel::Singleton(x)) = m {
                    for g in gamma {
                        if at_shape_subject(g) == Some(*x) {
                            out.push((vec![m.clone(), g.clone()], vec![]));
                        }
                    }
                }
            }
        }
        RuleId::Repl2 => {
            for m in gamma {
                if let LF::MemberOf(y, NbhdLabel::Singleton(_)) = m {
                    for g in gamma {
                        if at_shape_subject(g) == Some(*y) {
                            out.push((vec![m.clone(), g.clone()], vec![]));
                        }
                    }
                }
            }
        }
        RuleId::Unif1 | RuleId::Unif2 => {
            for n1 in gamma {
                if let LF::InN(a, x) = n1 {
                    for m1 in gamma {
                        if !matches!(m1, LF::MemberOf(_, a2) if a2 == a) {
                            continue;
                        }
                        let y = match m1 {
                            LF::MemberOf(y, _) => *y,
                            _ => unreachable!(),
                        };
                        let inner_world = if rule == RuleId::Unif1 { y } else { *x };
                        for n2 in gamma {
                            if !matches!(n2, LF::InN(_, x2) if *x2 == inner_world) {
                                continue;
                            }
                            let b = match n2 {
                                LF::InN(b, _) => *b,
                                _ => unreachable!(),
                            };
                            for m2 in gamma {
                                if matches!(m2, LF::MemberOf(_, b2) if *b2 == b) {
                                    out.push((
                                        vec![n1.clone(), m1.clone(), n2.clone(), m2.clone()],
                                        vec![],
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        RuleId::Abs1 | RuleId::Abs2 => {
            for n1 in gamma {
                if let LF::InN(a, x) = n1 {
                    for m1 in gamma {
                        if !matches!(m1, LF::MemberOf(_, a2) if a2 == a) {
                            continue;
                        }
                        let y = match m1 {
                            LF::MemberOf(y, _) => *y,
                            _ => unreachable!(),
                        };
                        let family_world = if rule == RuleId::Abs1 { *x } else { y };
                        for n2 in gamma {
                            if matches!(n2, LF::InN(_, x2) if *x2 == family_world) {
                                out.push((vec![n1.clone(), m1.clone(), n2.clone()], vec![]));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Premises of one rule application. `principals`, `params`, and `fresh`
/// must fit the rule's shape; candidates from [`candidates`] always do.
pub(crate) fn premises(
    rule: RuleId,
    s: &Sequent,
    principals: &[LabelledFormula],
    params: &[Label],
    fresh: &[Label],
) -> Vec<Sequent> {
    use LabelledFormula as LF;
    let gamma = &s.antecedent;
    let delta = &s.succedent;
    let fresh_world = || match fresh {
        [Label::World(x)] => *x,
        _ => panic!("rule {rule} needs one fresh world label"),
    };
    let fresh_nbhd = || match fresh {
        [Label::Nbhd(a)] => *a,
        _ => panic!("rule {rule} needs one fresh neighbourhood label"),
    };
    match (rule, principals) {
        (RuleId::LAnd, [p @ LF::At(x, Formula::And(a, b))]) => vec![seq(
            set_without_with(
                gamma,
                p,
                &[LF::At(*x, *a.clone()), LF::At(*x, *b.clone())],
            ),
            delta.clone(),
        )],
        (RuleId::RAnd, [p @ LF::At(x, Formula::And(a, b))]) => vec![
            seq(
                gamma.clone(),
                set_without_with(delta, p, &[LF::At(*x, *a.clone())]),
            ),
            seq(
                gamma.clone(),
                set_without_with(delta, p, &[LF::At(*x, *b.clone())]),
            ),
        ],
        (RuleId::LOr, [p @ LF::At(x, Formula::Or(a, b))]) => vec![
            seq(
                set_without_with(gamma, p, &[LF::At(*x, *a.clone())]),
                delta.clone(),
            ),
            seq(
                set_without_with(gamma, p, &[LF::At(*x, *b.clone())]),
                delta.clone(),
            ),
        ],
        (RuleId::ROr, [p @ LF::At(x, Formula::Or(a, b))]) => vec![seq(
            gamma.clone(),
            set_without_with(
                delta,
                p,
                &[LF::At(*x, *a.clone()), LF::At(*x, *b.clone())],
            ),
        )],
        (RuleId::LImp, [p @ LF::At(x, Formula::Implies(a, b))]) => vec![
            seq(
                set_without_with(gamma, p, &[]),
                set_with(delta, &[LF::At(*x, *a.clone())]),
            ),
            seq(
                set_without_with(gamma, p, &[LF::At(*x, *b.clone())]),
                delta.clone(),
            ),
        ],
        (RuleId::RImp, [p @ LF::At(x, Formula::Implies(a, b))]) => vec![seq(
            set_with(gamma, &[LF::At(*x, *a.clone())]),
            set_without_with(delta, p, &[LF::At(*x, *b.clone())]),
        )],
        (RuleId::LForall, [LF::MemberOf(x, _), LF::ForcesAll(_, f)]) => vec![seq(
            set_with(gamma, &[LF::At(*x, f.clone())]),
            delta.clone(),
        )],
        (RuleId::RForall, [p @ LF::ForcesAll(a, f)]) => {
            let x = fresh_world();
            vec![seq(
                set_with(gamma, &[LF::MemberOf(x, *a)]),
                set_without_with(delta, p, &[LF::At(x, f.clone())]),
            )]
        }
        (RuleId::LExists, [p @ LF::ForcesSome(a, f)]) => {
            let x = fresh_world();
            vec![seq(
                set_without_with(gamma, p, &[LF::MemberOf(x, *a), LF::At(x, f.clone())]),
                delta.clone(),
            )]
        }
        (RuleId::RExists, [LF::MemberOf(x, _), LF::ForcesSome(_, f)]) => vec![seq(
            gamma.clone(),
            set_with(delta, &[LF::At(*x, f.clone())]),
        )],
        (RuleId::RCond, [p @ LF::At(x, Formula::Cond(f, g))]) => {
            let a = fresh_nbhd();
            vec![seq(
                set_with(gamma, &[LF::InN(a, *x), LF::ForcesSome(a, *f.clone())]),
                set_without_with(delta, p, &[LF::CondAt(*x, a, *f.clone(), *g.clone())]),
            )]
        }
        (RuleId::LCond, [LF::InN(a, x), LF::At(_, Formula::Cond(f, g))]) => vec![
            seq(
                gamma.clone(),
                set_with(delta, &[LF::ForcesSome(*a, *f.clone())]),
            ),
            seq(
                set_with(gamma, &[LF::CondAt(*x, *a, *f.clone(), *g.clone())]),
                delta.clone(),
            ),
        ],
        (RuleId::LCondStar, [LF::InN(a, x), LF::At(_, Formula::Cond(f, g))]) => vec![
            seq(
                gamma.clone(),
                set_with(delta, &[LF::ForcesSome(*a, *f.clone())]),
            ),
            seq(
                set_with(
                    gamma,
                    &[
                        LF::ForcesSome(*a, *f.clone()),
                        LF::CondAt(*x, *a, *f.clone(), *g.clone()),
                    ],
                ),
                delta.clone(),
            ),
        ],
        (RuleId::RCondAt, [LF::InN(c, _), LF::SubsetOf(_, _), LF::CondAt(_, _, f, g)]) => vec![
            seq(
                gamma.clone(),
                set_with(delta, &[LF::ForcesSome(*c, f.clone())]),
            ),
            seq(
                gamma.clone(),
                set_with(
                    delta,
                    &[LF::ForcesAll(*c, Formula::implies(f.clone(), g.clone()))],
                ),
            ),
        ],
        (RuleId::LCondAt, [p @ LF::CondAt(x, a, f, g)]) => {
            let c = fresh_nbhd();
            vec![seq(
                set_without_with(
                    gamma,
                    p,
                    &[
                        LF::InN(c, *x),
                        LF::SubsetOf(c, *a),
                        LF::ForcesSome(c, f.clone()),
                        LF::ForcesAll(c, Formula::implies(f.clone(), g.clone())),
                    ],
                ),
                delta.clone(),
            )]
        }
        (RuleId::Ref, []) => {
            let a = match params {
                [Label::Nbhd(a)] => *a,
                _ => panic!("ref needs one neighbourhood parameter"),
            };
            vec![seq(
                set_with(gamma, &[LF::SubsetOf(a, a)]),
                delta.clone(),
            )]
        }
        (RuleId::Tr, [LF::SubsetOf(a, _), LF::SubsetOf(_, c)]) => vec![seq(
            set_with(gamma, &[LF::SubsetOf(*a, *c)]),
            delta.clone(),
        )],
        (RuleId::LSubset, [LF::MemberOf(x, _), LF::SubsetOf(_, b)]) => vec![seq(
            set_with(gamma, &[LF::MemberOf(*x, *b)]),
            delta.clone(),
        )],
        (RuleId::MonForall, [LF::SubsetOf(b, _), LF::ForcesAll(_, f)]) => vec![seq(
            set_with(gamma, &[LF::ForcesAll(*b, f.clone())]),
            delta.clone(),
        )],
        (RuleId::N, []) => {
            let x = match params {
                [Label::World(x)] => *x,
                _ => panic!("n needs one world parameter"),
            };
            let a = fresh_nbhd();
            vec![seq(set_with(gamma, &[LF::InN(a, x)]), delta.clone())]
        }
        (RuleId::Zero, [LF::InN(a, _)]) => {
            let y = fresh_world();
            vec![seq(set_with(gamma, &[LF::MemberOf(y, *a)]), delta.clone())]
        }
        (RuleId::T, []) => {
            let x = match params {
                [Label::World(x)] => *x,
                _ => panic!("t needs one world parameter"),
            };
            let a = fresh_nbhd();
            vec![seq(
                set_with(gamma, &[LF::MemberOf(x, a), LF::InN(a, x)]),
                delta.clone(),
            )]
        }
        (RuleId::W, [LF::InN(a, x)]) => vec![seq(
            set_with(gamma, &[LF::MemberOf(*x, *a)]),
            delta.clone(),
        )],
        (RuleId::C, [LF::InN(a, x)]) => {
            let sx = NbhdLabel::Singleton(*x);
            vec![seq(
                set_with(gamma, &[LF::InN(sx, *x), LF::SubsetOf(sx, *a)]),
                delta.clone(),
            )]
        }
        (RuleId::Single, [LF::InN(NbhdLabel::Singleton(x), _)]) => vec![seq(
            set_with(
                gamma,
                &[LF::MemberOf(*x, NbhdLabel::Singleton(*x))],
            ),
            delta.clone(),
        )],
        (RuleId::Repl1, [LF::MemberOf(y, NbhdLabel::Singleton(_)), g]) => vec![seq(
            set_with(gamma, &[replace_subject(g, *y)]),
            delta.clone(),
        )],
        (RuleId::Repl2, [LF::MemberOf(_, NbhdLabel::Singleton(x)), g]) => vec![seq(
            set_with(gamma, &[replace_subject(g, *x)]),
            delta.clone(),
        )],
        (RuleId::Unif1, [LF::InN(_, x), _, _, LF::MemberOf(z, _)]) => {
            let c = fresh_nbhd();
            vec![seq(
                set_with(gamma, &[LF::MemberOf(*z, c), LF::InN(c, *x)]),
                delta.clone(),
            )]
        }
        (RuleId::Unif2, [LF::InN(_, _), LF::MemberOf(y, _), _, LF::MemberOf(z, _)]) => {
            let c = fresh_nbhd();
            vec![seq(
                set_with(gamma, &[LF::MemberOf(*z, c), LF::InN(c, *y)]),
                delta.clone(),
            )]
        }
        (RuleId::Abs1, [LF::InN(_, _), LF::MemberOf(y, _), LF::InN(b, _)]) => vec![seq(
            set_with(gamma, &[LF::InN(*b, *y)]),
            delta.clone(),
        )],
        (RuleId::Abs2, [LF::InN(_, x), LF::MemberOf(_, _), LF::InN(b, _)]) => vec![seq(
            set_with(gamma, &[LF::InN(*b, *x)]),
            delta.clone(),
        )],
        _ => panic!("malformed principals for rule {rule}"),
    }
}

/// Per-sequent lookup tables consulted by the saturation conditions whose
/// straightforward reading would rescan the antecedent per candidate.
struct SatCtx<'a> {
    /// The antecedent's universal forcings, grouped by forced formula.
    forces_all_by_formula: BTreeMap<&'a Formula, Vec<NbhdLabel>>,
    /// The antecedent's membership atoms, grouped by neighbourhood.
    members_of: BTreeMap<NbhdLabel, Vec<WorldLabel>>,
}

impl<'a> SatCtx<'a> {
    fn new(s: &'a Sequent) -> SatCtx<'a> {
        use LabelledFormula as LF;
        let mut forces_all_by_formula: BTreeMap<&'a Formula, Vec<NbhdLabel>> = BTreeMap::new();
        let mut members_of: BTreeMap<NbhdLabel, Vec<WorldLabel>> = BTreeMap::new();
        for f in &s.antecedent {
            match f {
                LF::ForcesAll(a, g) => forces_all_by_formula.entry(g).or_default().push(*a),
                LF::MemberOf(x, a) => members_of.entry(*a).or_default().push(*x),
                _ => {}
            }
        }
        SatCtx {
            forces_all_by_formula,
            members_of,
        }
    }

    fn member_worlds(&self, a: &NbhdLabel) -> &[WorldLabel] {
        self.members_of.get(a).map_or(&[], Vec::as_slice)
    }
}

/// Whether the saturation condition of this instance is already met on the
/// branch, so firing it again could not add anything new.
fn saturation_met(
    rule: RuleId,
    principals: &[LabelledFormula],
    params: &[Label],
    branch: &Branch,
    ctx: &SatCtx,
) -> bool {
    use LabelledFormula as LF;
    let gamma = &branch.current.antecedent;
    let delta = &branch.current.succedent;
    let dg = &branch.down_gamma;
    let dd = &branch.down_delta;
    let member_worlds = |a: &NbhdLabel| -> &[WorldLabel] { ctx.member_worlds(a) };
    match (rule, principals) {
        (RuleId::LAnd, [LF::At(x, Formula::And(a, b))]) => {
            dg.contains(&LF::At(*x, *a.clone())) && dg.contains(&LF::At(*x, *b.clone()))
        }
        (RuleId::RAnd, [LF::At(x, Formula::And(a, b))]) => {
            dd.contains(&LF::At(*x, *a.clone())) || dd.contains(&LF::At(*x, *b.clone()))
        }
        (RuleId::LOr, [LF::At(x, Formula::Or(a, b))]) => {
            dg.contains(&LF::At(*x, *a.clone())) || dg.contains(&LF::At(*x, *b.clone()))
        }
        (RuleId::ROr, [LF::At(x, Formula::Or(a, b))]) => {
            dd.contains(&LF::At(*x, *a.clone())) && dd.contains(&LF::At(*x, *b.clone()))
        }
        (RuleId::LImp, [LF::At(x, Formula::Implies(a, b))]) => {
            dg.contains(&LF::At(*x, *b.clone())) || dd.contains(&LF::At(*x, *a.clone()))
        }
        (RuleId::RImp, [LF::At(x, Formula::Implies(a, b))]) => {
            dg.contains(&LF::At(*x, *a.clone())) && dd.contains(&LF::At(*x, *b.clone()))
        }
        (RuleId::LForall, [LF::MemberOf(x, _), LF::ForcesAll(_, f)]) => {
            dg.contains(&LF::At(*x, f.clone()))
        }
        (RuleId::RForall, [LF::ForcesAll(a, f)]) => member_worlds(a)
            .iter()
            .any(|y| dd.contains(&LF::At(*y, f.clone()))),
        (RuleId::LExists, [LF::ForcesSome(a, f)]) => member_worlds(a)
            .iter()
            .any(|y| dg.contains(&LF::At(*y, f.clone()))),
        (RuleId::RExists, [LF::MemberOf(x, _), LF::ForcesSome(_, f)]) => {
            dd.contains(&LF::At(*x, f.clone()))
        }
        (RuleId::RCond, [LF::At(x, Formula::Cond(f, g))]) => gamma.iter().any(|h| {
            matches!(h, LF::InN(b, y) if y == x
                && dg.contains(&LF::ForcesSome(*b, *f.clone()))
                && delta.contains(&LF::CondAt(*x, *b, *f.clone(), *g.clone())))
        }),
        (RuleId::LCond | RuleId::LCondStar, [LF::InN(a, x), LF::At(_, Formula::Cond(f, g))]) => {
            dd.contains(&LF::ForcesSome(*a, *f.clone()))
                || (dg.contains(&LF::ForcesSome(*a, *f.clone()))
                    && dg.contains(&LF::CondAt(*x, *a, *f.clone(), *g.clone())))
        }
        (RuleId::RCondAt, [LF::InN(c, _), LF::SubsetOf(_, _), LF::CondAt(_, _, f, g)]) => {
            delta.contains(&LF::ForcesSome(*c, f.clone()))
                || dd.contains(&LF::ForcesAll(
                    *c,
                    Formula::implies(f.clone(), g.clone()),
                ))
        }
        (RuleId::LCondAt, [LF::CondAt(x, a, f, g)]) => {
            // A witnessing neighbourhood must carry the universal forcing
            // of the implication, so it suffices to scan those entries.
            let imp = Formula::implies(f.clone(), g.clone());
            gamma.iter().any(|h| {
                matches!(h, LF::ForcesAll(d, fa) if *fa == imp
                    && gamma.contains(&LF::InN(*d, *x))
                    && gamma.contains(&LF::SubsetOf(*d, *a))
                    && dg.contains(&LF::ForcesSome(*d, f.clone())))
            })
        }
        (RuleId::Ref, []) => {
            let a = match params {
                [Label::Nbhd(a)] => *a,
                _ => return false,
            };
            gamma.contains(&LF::SubsetOf(a, a))
        }
        (RuleId::Tr, [LF::SubsetOf(a, _), LF::SubsetOf(_, c)]) => {
            gamma.contains(&LF::SubsetOf(*a, *c))
        }
        (RuleId::LSubset, [LF::MemberOf(x, _), LF::SubsetOf(_, b)]) => {
            gamma.contains(&LF::MemberOf(*x, *b))
        }
        (RuleId::MonForall, [LF::SubsetOf(b, _), LF::ForcesAll(_, f)]) => {
            gamma.contains(&LF::ForcesAll(*b, f.clone()))
        }
        (RuleId::N, []) => {
            let x = match params {
                [Label::World(x)] => *x,
                _ => return false,
            };
            gamma.iter().any(|f| matches!(f, LF::InN(_, y) if *y == x))
        }
        (RuleId::Zero, [LF::InN(a, _)]) => !member_worlds(a).is_empty(),
        (RuleId::T, []) => {
            let x = match params {
                [Label::World(x)] => *x,
                _ => return false,
            };
            gamma.iter().any(|f| {
                matches!(f, LF::InN(b, y) if *y == x && gamma.contains(&LF::MemberOf(x, *b)))
            })
        }
        (RuleId::W, [LF::InN(a, x)]) => gamma.contains(&LF::MemberOf(*x, *a)),
        (RuleId::C, [LF::InN(a, x)]) => {
            let sx = NbhdLabel::Singleton(*x);
            gamma.contains(&LF::InN(sx, *x)) && gamma.contains(&LF::SubsetOf(sx, *a))
        }
        (RuleId::Single, [LF::InN(NbhdLabel::Singleton(x), _)]) => {
            gamma.contains(&LF::MemberOf(*x, NbhdLabel::Singleton(*x)))
        }
        (RuleId::Repl1, [LF::MemberOf(y, NbhdLabel::Singleton(_)), g]) => {
            gamma.contains(&replace_subject(g, *y))
        }
        (RuleId::Repl2, [LF::MemberOf(_, NbhdLabel::Singleton(x)), g]) => {
            gamma.contains(&replace_subject(g, *x))
        }
        (RuleId::Unif1, [LF::InN(_, x), _, _, LF::MemberOf(z, _)]) => gamma.iter().any(|f| {
            matches!(f, LF::InN(d, y) if y == x && gamma.contains(&LF::MemberOf(*z, *d)))
        }),
        (RuleId::Unif2, [LF::InN(_, _), LF::MemberOf(y, _), _, LF::MemberOf(z, _)]) => {
            gamma.iter().any(|f| {
                matches!(f, LF::InN(d, w) if w == y && gamma.contains(&LF::MemberOf(*z, *d)))
            })
        }
        (RuleId::Abs1, [LF::InN(_, _), LF::MemberOf(y, _), LF::InN(b, _)]) => {
            gamma.contains(&LF::InN(*b, *y))
        }
        (RuleId::Abs2, [LF::InN(_, x), LF::MemberOf(_, _), LF::InN(b, _)]) => {
            gamma.contains(&LF::InN(*b, *x))
        }
        _ => false,
    }
}

/// The strategy's extra restriction on the member-creating rule: it only
/// fires for a neighbourhood that carries an existential forcing in the
/// succedent or a universal forcing in the antecedent.
fn zero_trigger(a: &NbhdLabel, s: &Sequent) -> bool {
    s.succedent
        .iter()
        .any(|f| matches!(f, LabelledFormula::ForcesSome(b, _) if b == a))
        || s.antecedent
            .iter()
            .any(|f| matches!(f, LabelledFormula::ForcesAll(b, _) if b == a))
}

fn fresh_labels_for(rule: RuleId, branch: &Branch) -> Vec<Label> {
    rule.fresh_kinds()
        .iter()
        .map(|k| match k {
            FreshKind::World => Label::World(branch.fresh_world()),
            FreshKind::Nbhd => Label::Nbhd(branch.fresh_nbhd()),
        })
        .collect()
}

fn edges_for(
    rule: RuleId,
    principals: &[LabelledFormula],
    params: &[Label],
    fresh: &[Label],
    gen_tree: &GenTree,
) -> Vec<(Label, Label)> {
    use LabelledFormula as LF;
    let parent: Option<Label> = match (rule, principals) {
        (RuleId::RCond, [LF::At(x, _)]) => Some(Label::World(*x)),
        (RuleId::LExists, [LF::ForcesSome(a, _)]) => Some(Label::Nbhd(*a)),
        (RuleId::RForall, [LF::ForcesAll(a, _)]) => Some(Label::Nbhd(*a)),
        (RuleId::LCondAt, [LF::CondAt(x, _, _, _)]) => Some(Label::World(*x)),
        (RuleId::Zero, [LF::InN(a, _)]) => Some(Label::Nbhd(*a)),
        (RuleId::N | RuleId::T, []) => params.first().copied(),
        (RuleId::Unif1, [LF::InN(_, x), _, _, _]) => Some(Label::World(*x)),
        (RuleId::Unif2, [_, LF::MemberOf(y, _), _, _]) => Some(Label::World(*y)),
        (RuleId::C, [LF::InN(_, x)]) => {
            let sx = Label::Nbhd(NbhdLabel::Singleton(*x));
            if gen_tree.contains(sx) {
                None
            } else {
                return vec![(Label::World(*x), sx)];
            }
        }
        _ => None,
    };
    match (parent, fresh) {
        (Some(p), [child]) => vec![(p, *child)],
        _ => vec![],
    }
}

/// Indexed enumeration for the uniformity rules, whose principal tuples
/// grow with the fourth power of the branch. Their saturation condition
/// depends only on the owning world of the receiving family and on the
/// world being transferred, so the covered pairs are computed once per
/// sequent and saturated tuples are skipped without being materialized.
/// The admitted instances, and their lexicographic order, are exactly
/// those the generic path would produce.
fn push_unif_instances(
    rule: RuleId,
    branch: &Branch,
    first_only: bool,
    out: &mut Vec<RuleInstance>,
) -> bool {
    use LabelledFormula as LF;
    let gamma = &branch.current.antecedent;
    let mut nbhds_of: BTreeMap<WorldLabel, Vec<NbhdLabel>> = BTreeMap::new();
    let mut members_of: BTreeMap<NbhdLabel, Vec<WorldLabel>> = BTreeMap::new();
    for f in gamma {
        match f {
            LF::InN(a, x) => nbhds_of.entry(*x).or_default().push(*a),
            LF::MemberOf(y, a) => members_of.entry(*a).or_default().push(*y),
            _ => {}
        }
    }
    let mut covered: BTreeMap<WorldLabel, BTreeSet<WorldLabel>> = BTreeMap::new();
    for (x, nbhds) in &nbhds_of {
        let c = covered.entry(*x).or_default();
        for a in nbhds {
            if let Some(ms) = members_of.get(a) {
                c.extend(ms.iter().copied());
            }
        }
    }
    let no_nbhds: Vec<NbhdLabel> = Vec::new();
    let no_members: Vec<WorldLabel> = Vec::new();
    let no_cover: BTreeSet<WorldLabel> = BTreeSet::new();
    let mut pushed = false;
    for n1 in gamma {
        let LF::InN(a, x) = n1 else { continue };
        for y in members_of.get(a).unwrap_or(&no_members) {
            let inner = if rule == RuleId::Unif1 { *y } else { *x };
            let receiver = if rule == RuleId::Unif1 { *x } else { *y };
            let cov = covered.get(&receiver).unwrap_or(&no_cover);
            for b in nbhds_of.get(&inner).unwrap_or(&no_nbhds) {
                for z in members_of.get(b).unwrap_or(&no_members) {
                    if cov.contains(z) {
                        continue;
                    }
                    let principals = vec![
                        n1.clone(),
                        LF::MemberOf(*y, *a),
                        LF::InN(*b, inner),
                        LF::MemberOf(*z, *b),
                    ];
                    let fresh = fresh_labels_for(rule, branch);
                    let prem = premises(rule, &branch.current, &principals, &[], &fresh);
                    let edges = edges_for(rule, &principals, &[], &fresh, &branch.gen_tree);
                    out.push(RuleInstance {
                        rule,
                        principals,
                        params: vec![],
                        fresh,
                        premises: prem,
                        edges,
                    });
                    pushed = true;
                    if first_only {
                        return true;
                    }
                }
            }
        }
    }
    pushed
}

/// All rule instances the strategy allows on the branch, grouped by rule in
/// priority order and, within a rule, in lexicographic order of the
/// principal tuple. An instance is excluded when its saturation condition
/// is met; the member-creating rule is additionally restricted to
/// neighbourhoods with a forcing to witness.
pub fn applicable_instances(branch: &Branch, logic: &Logic) -> Vec<RuleInstance> {
    collect_instances(branch, logic, false)
}

/// The instance search would fire next, if any: the first entry of
/// [`applicable_instances`].
pub fn first_applicable_instance(branch: &Branch, logic: &Logic) -> Option<RuleInstance> {
    collect_instances(branch, logic, true).into_iter().next()
}

pub static PROFILE: std::sync::Mutex<
    std::collections::BTreeMap<RuleId, (std::time::Duration, std::time::Duration, u64)>,
> = std::sync::Mutex::new(std::collections::BTreeMap::new());

fn collect_instances(branch: &Branch, logic: &Logic, first_only: bool) -> Vec<RuleInstance> {
    let mut out = Vec::new();
    for rule in rule_table(logic, TableMode::Search) {
        let profile_start = std::time::Instant::now();
        let cands = match rule {
            // The world-indexed rules range over every world on the branch,
            // not only those in the current sequent.
            RuleId::N | RuleId::T => branch
                .down_world_labels()
                .into_iter()
                .map(|x| (vec![], vec![Label::World(x)]))
                .collect(),
            // The uniformity rules take an indexed path that skips
            // saturated tuples before materializing them.
            RuleId::Unif1 | RuleId::Unif2 => {
                let found = push_unif_instances(rule, branch, first_only, &mut out);
                PROFILE.lock().unwrap().entry(rule).or_default().0 += profile_start.elapsed();
                if found && first_only {
                    return out;
                }
                continue;
            }
            _ => candidates(rule, &branch.current),
        };
        let n_cands = cands.len() as u64;
        {
            let mut p = PROFILE.lock().unwrap();
            let e = p.entry(rule).or_default();
            e.0 += profile_start.elapsed();
            e.2 += n_cands;
        }
        let profile_start = std::time::Instant::now();
        for (principals, params) in cands {
            if rule == RuleId::Zero {
                let a = match &principals[..] {
                    [LabelledFormula::InN(a, _)] => *a,
                    _ => continue,
                };
                if !zero_trigger(&a, &branch.current) {
                    continue;
                }
            }
            if saturation_met(rule, &principals, &params, branch) {
                continue;
            }
            let fresh = fresh_labels_for(rule, branch);
            let prem = premises(rule, &branch.current, &principals, &params, &fresh);
            let edges = edges_for(rule, &principals, &params, &fresh, &branch.gen_tree);
            out.push(RuleInstance {
                rule,
                principals,
                params,
                fresh,
                premises: prem,
                edges,
            });
            if first_only {
                PROFILE.lock().unwrap().entry(rule).or_default().1 += profile_start.elapsed();
                return out;
            }
        }
        PROFILE.lock().unwrap().entry(rule).or_default().1 += profile_start.elapsed();
    }
    out
}

/// Unrestricted instantiation of one rule on one sequent with caller-chosen
/// fresh labels: every candidate instance, with no saturation blocking and
/// no strategy restrictions. This is the checker's view of the calculus; it
/// is also what randomized soundness tests sample from.
pub fn candidate_instances(
    s: &Sequent,
    rule: RuleId,
    fresh: &[Label],
) -> Result<Vec<RuleInstance>, InstanceError> {
    let kinds = rule.fresh_kinds();
    if fresh.len() != kinds.len() {
        return Err(InstanceError::FreshArity {
            rule,
            want: kinds.len(),
            got: fresh.len(),
        });
    }
    for (lab, kind) in fresh.iter().zip(kinds) {
        let ok = match kind {
            FreshKind::World => matches!(lab, Label::World(_)),
            FreshKind::Nbhd => matches!(lab, Label::Nbhd(NbhdLabel::Plain(_))),
        };
        if !ok {
            return Err(InstanceError::FreshKind { rule });
        }
    }
    Ok(candidates(rule, s)
        .into_iter()
        .map(|(principals, params)| {
            let prem = premises(rule, s, &principals, &params, fresh);
            RuleInstance {
                rule,
                principals,
                params,
                fresh: fresh.to_vec(),
                premises: prem,
                edges: vec![],
            }
        })
        .collect())
}

/// Errors from [`candidate_instances`].
#[derive(Debug, Clone, thiserror::Error)]
pub enum InstanceError {
    #[error("rule {rule} takes {want} fresh labels, got {got}")]
    FreshArity { rule: RuleId, want: usize, got: usize },
    #[error("rule {rule} given a fresh label of the wrong kind")]
    FreshKind { rule: RuleId },
}

/// The closing rule applying to a sequent, if any: `init` when an atomic
/// `x : p` occurs on both sides, otherwise `bot_l` when some `x : false`
/// occurs in the antecedent.
pub fn closing_rule(s: &Sequent) -> Option<RuleId> {
    for f in &s.antecedent {
        if let LabelledFormula::At(_, Formula::Atom(_)) = f {
            if s.succedent.contains(f) {
                return Some(RuleId::Init);
            }
        }
    }
    if s.antecedent
        .iter()
        .any(|f| matches!(f, LabelledFormula::At(_, Formula::Bottom)))
    {
        return Some(RuleId::BotL);
    }
    None
}

/// A node of a derivation: its sequent, the rule applied to it, the fresh
/// labels the application consumed, and the indices of its premises in
/// left-to-right order. Leaves carry `init` or `bot_l` and no children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivNode {
    pub sequent: Sequent,
    pub rule: RuleId,
    pub fresh: Vec<Label>,
    pub children: Vec<usize>,
}

/// A finished derivation: a tree of rule applications stored as a node
/// array with a root index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub logic: LogicName,
    pub root: usize,
    pub nodes: Vec<DerivNode>,
}

impl Derivation {
    /// JSON rendering: `{"logic", "root", "nodes"}` with each node as
    /// `{"sequent", "rule", "fresh", "children"}`.
    pub fn to_json(&self) -> Value {
        json!({
            "logic": self.logic.as_str(),
            "root": self.root,
            "nodes": self.nodes.iter().map(|n| json!({
                "sequent": n.sequent.to_json(),
                "rule": n.rule.as_str(),
                "fresh": n.fresh.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                "children": n.children,
            })).collect::<Vec<_>>(),
        })
    }

    /// Parses the JSON rendering, validating names, label syntax, index
    /// ranges, and that the nodes form a tree rooted at `root`.
    pub fn from_json(v: &Value) -> Result<Derivation, DerivationJsonError> {
        let err = |m: &str| DerivationJsonError(m.to_string());
        let obj = v.as_object().ok_or_else(|| err("derivation must be an object"))?;
        let logic: LogicName = obj
            .get("logic")
            .and_then(Value::as_str)
            .ok_or_else(|| err("missing string field \"logic\""))?
            .parse()
            .map_err(|e: UnknownLogic| err(&e.to_string()))?;
        let root = obj
            .get("root")
            .and_then(Value::as_u64)
            .ok_or_else(|| err("missing integer field \"root\""))? as usize;
        let raw_nodes = obj
            .get("nodes")
            .and_then(Value::as_array)
            .ok_or_else(|| err("missing array field \"nodes\""))?;
        let mut nodes = Vec::with_capacity(raw_nodes.len());
        for rn in raw_nodes {
            let o = rn.as_object().ok_or_else(|| err("node must be an object"))?;
            let sequent = Sequent::from_json(
                o.get("sequent").ok_or_else(|| err("node missing \"sequent\""))?,
            )
            .map_err(|e| err(&e.to_string()))?;
            let rule: RuleId = o
                .get("rule")
                .and_then(Value::as_str)
                .ok_or_else(|| err("node missing string \"rule\""))?
                .parse()
                .map_err(|e: UnknownRule| err(&e.to_string()))?;
            let fresh = o
                .get("fresh")
                .and_then(Value::as_array)
                .ok_or_else(|| err("node missing array \"fresh\""))?
                .iter()
                .map(|lv| {
                    lv.as_str()
                        .and_then(parse_label)
                        .ok_or_else(|| err("bad label in \"fresh\""))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let children = o
                .get("children")
                .and_then(Value::as_array)
                .ok_or_else(|| err("node missing array \"children\""))?
                .iter()
                .map(|cv| {
                    cv.as_u64()
                        .map(|c| c as usize)
                        .ok_or_else(|| err("bad child index"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            nodes.push(DerivNode {
                sequent,
                rule,
                fresh,
                children,
            });
        }
        let d = Derivation { logic, root, nodes };
        d.validate_tree().map_err(|e| err(&e.to_string()))?;
        Ok(d)
    }

    /// Checks that `root` and all child indices are in range and that every
    /// node is reachable from the root exactly once.
    pub fn validate_tree(&self) -> Result<(), CheckError> {
        if self.root >= self.nodes.len() {
            return Err(CheckError::BadIndex(self.root));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(i) = stack.pop() {
            if seen[i] {
                return Err(CheckError::NotATree(i));
            }
            seen[i] = true;
            for &c in &self.nodes[i].children {
                if c >= self.nodes.len() {
                    return Err(CheckError::BadIndex(c));
                }
                stack.push(c);
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(CheckError::Unreachable(i));
        }
        Ok(())
    }
}

/// Errors from [`Derivation::from_json`].
#[derive(Debug, Clone, thiserror::Error)]
#[error("malformed derivation JSON: {0}")]
pub struct DerivationJsonError(pub String);

/// Errors from [`check_derivation`].
#[derive(Debug, Clone, thiserror::Error)]
pub enum CheckError {
    #[error("node index {0} out of range")]
    BadIndex(usize),
    #[error("node {0} is reachable twice; derivations must be trees")]
    NotATree(usize),
    #[error("node {0} is not reachable from the root")]
    Unreachable(usize),
    #[error("leaf node {node} is not closed by {rule}")]
    LeafNotClosed { node: usize, rule: RuleId },
    #[error("leaf node {node} carries non-leaf rule {rule}")]
    LeafRule { node: usize, rule: RuleId },
    #[error("inner node {node} carries leaf rule {rule}")]
    InnerLeafRule { node: usize, rule: RuleId },
    #[error("node {node}: rule {rule} is not in the calculus for {logic}")]
    RuleNotInCalculus {
        node: usize,
        rule: RuleId,
        logic: LogicName,
    },
    #[error("node {node}: fresh labels do not fit rule {rule}")]
    BadFresh { node: usize, rule: RuleId },
    #[error("node {node}: label {label} is not fresh on its branch")]
    FreshnessViolation { node: usize, label: String },
    #[error("node {node}: no instance of {rule} yields the stated premises")]
    PremiseMismatch { node: usize, rule: RuleId },
}

/// Checks a derivation against a logic: every leaf closes, every inner node
/// is an instance of a rule of the logic's calculus whose premises are
/// exactly the child sequents in order, and every fresh label is globally
/// fresh along its branch, counting occurrences inside singleton labels.
///
/// The checker imposes no saturation or strategy restrictions.
pub fn check_derivation(d: &Derivation, logic: &Logic) -> Result<(), CheckError> {
    d.validate_tree()?;
    let table = rule_table(logic, TableMode::Check);
    // Depth-first walk carrying the set of labels seen on the path so far.
    let mut stack: Vec<(usize, BTreeSet<Label>)> = vec![(d.root, BTreeSet::new())];
    while let Some((i, above)) = stack.pop() {
        let node = &d.nodes[i];
        let mut path_labels = above;
        for x in node.sequent.world_labels() {
            path_labels.insert(Label::World(x));
        }
        for a in node.sequent.nbhd_labels() {
            path_labels.insert(Label::Nbhd(a));
        }
        if node.children.is_empty() {
            match node.rule {
                RuleId::Init | RuleId::BotL => {
                    if closing_rule(&node.sequent) != Some(node.rule) {
                        return Err(CheckError::LeafNotClosed {
                            node: i,
                            rule: node.rule,
                        });
                    }
                }
                rule => return Err(CheckError::LeafRule { node: i, rule }),
            }
            continue;
        }
        if matches!(node.rule, RuleId::Init | RuleId::BotL) {
            return Err(CheckError::InnerLeafRule {
                node: i,
                rule: node.rule,
            });
        }
        if !table.contains(&node.rule) {
            return Err(CheckError::RuleNotInCalculus {
                node: i,
                rule: node.rule,
                logic: logic.name(),
            });
        }
        let mut distinct = BTreeSet::new();
        for lab in &node.fresh {
            if path_labels.contains(lab) || !distinct.insert(*lab) {
                return Err(CheckError::FreshnessViolation {
                    node: i,
                    label: lab.to_string(),
                });
            }
        }
        let instances = candidate_instances(&node.sequent, node.rule, &node.fresh)
            .map_err(|_| CheckError::BadFresh {
                node: i,
                rule: node.rule,
            })?;
        let child_seqs: Vec<&Sequent> =
            node.children.iter().map(|&c| &d.nodes[c].sequent).collect();
        let matched = instances.iter().any(|inst| {
            inst.premises.len() == child_seqs.len()
                && inst
                    .premises
                    .iter()
                    .zip(&child_seqs)
                    .all(|(p, c)| p == *c)
        });
        if !matched {
            return Err(CheckError::PremiseMismatch {
                node: i,
                rule: node.rule,
            });
        }
        for &c in &node.children {
            stack.push((c, path_labels.clone()));
        }
    }
    Ok(())
}
