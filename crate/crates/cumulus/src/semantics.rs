//! Neighbourhood models, the forcing relation, frame conditions,
//! realizations of labelled sequents, and exhaustive countermodel search.
//!
//! This module is the semantic ground truth the proof machinery is tested
//! against: forcing implements the selection-style truth condition for the
//! conditional, [`check_frame`] implements the frame condition of each
//! flag, and [`enumerate_countermodel`] decides by brute force whether a
//! formula has a model of bounded size that refutes it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Map, Value};

use crate::calculus::{Flag, Logic};
use crate::formula::{is_atom_name, Formula};
use crate::label::{LabelledFormula, NbhdLabel, WorldLabel};
use crate::sequent::Sequent;

/// A finite neighbourhood model: named worlds, a family of neighbourhoods
/// per world, and a valuation, plus a distinguished root world.
///
/// Neighbourhoods are stored as sets of world indices. Every neighbourhood
/// is nonempty; empty families are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighbourhoodModel {
    names: Vec<String>,
    families: Vec<BTreeSet<BTreeSet<usize>>>,
    valuation: BTreeMap<String, BTreeSet<usize>>,
    root: usize,
}

/// Errors from model construction or parsing.
#[derive(Debug, Clone, thiserror::Error)]
pub enum ModelError {
    #[error("a model needs at least one world")]
    NoWorlds,
    #[error("duplicate world name {0:?}")]
    DuplicateWorld(String),
    #[error("expected one neighbourhood family per world")]
    FamilyCount,
    #[error("world {0:?} has an empty neighbourhood")]
    EmptyNeighbourhood(String),
    #[error("world index {index} out of range in the family of {world:?}")]
    MemberOutOfRange { world: String, index: usize },
    #[error("valuation key {0:?} is not an atom name")]
    BadAtomName(String),
    #[error("valuation of {atom:?} mentions world index {index}, which is out of range")]
    ValuationOutOfRange { atom: String, index: usize },
    #[error("root index {0} out of range")]
    RootOutOfRange(usize),
    #[error("unknown world name {0:?}")]
    UnknownWorld(String),
    #[error("malformed model JSON: {0}")]
    Json(String),
}

impl NeighbourhoodModel {
    pub fn new(
        names: Vec<String>,
        families: Vec<BTreeSet<BTreeSet<usize>>>,
        valuation: BTreeMap<String, BTreeSet<usize>>,
        root: usize,
    ) -> Result<NeighbourhoodModel, ModelError> {
        if names.is_empty() {
            return Err(ModelError::NoWorlds);
        }
        let n = names.len();
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name) {
                return Err(ModelError::DuplicateWorld(name.clone()));
            }
        }
        if families.len() != n {
            return Err(ModelError::FamilyCount);
        }
        for (w, family) in families.iter().enumerate() {
            for alpha in family {
                if alpha.is_empty() {
                    return Err(ModelError::EmptyNeighbourhood(names[w].clone()));
                }
                if let Some(&bad) = alpha.iter().find(|&&i| i >= n) {
                    return Err(ModelError::MemberOutOfRange {
                        world: names[w].clone(),
                        index: bad,
                    });
                }
            }
        }
        for (atom, set) in &valuation {
            if !is_atom_name(atom) {
                return Err(ModelError::BadAtomName(atom.clone()));
            }
            if let Some(&bad) = set.iter().find(|&&i| i >= n) {
                return Err(ModelError::ValuationOutOfRange {
                    atom: atom.clone(),
                    index: bad,
                });
            }
        }
        if root >= n {
            return Err(ModelError::RootOutOfRange(root));
        }
        Ok(NeighbourhoodModel {
            names,
            families,
            valuation,
            root,
        })
    }

    pub fn world_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name_of(&self, world: usize) -> &str {
        &self.names[world]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn family(&self, world: usize) -> &BTreeSet<BTreeSet<usize>> {
        &self.families[world]
    }

    pub fn valuation(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.valuation
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// The forcing relation. For the conditional: `A > B` holds at `x` when
    /// every neighbourhood of `x` containing an `A`-world includes a smaller
    /// neighbourhood of `x` that still contains an `A`-world and whose
    /// worlds all satisfy `A -> B`.
    pub fn forces(&self, world: usize, f: &Formula) -> bool {
        assert!(world < self.names.len(), "world index out of range");
        match f {
            Formula::Atom(p) => self
                .valuation
                .get(p)
                .is_some_and(|set| set.contains(&world)),
            Formula::Bottom => false,
            Formula::And(l, r) => self.forces(world, l) && self.forces(world, r),
            Formula::Or(l, r) => self.forces(world, l) || self.forces(world, r),
            Formula::Implies(l, r) => !self.forces(world, l) || self.forces(world, r),
            Formula::Cond(a, b) => {
                let family = &self.families[world];
                family.iter().all(|alpha| {
                    !self.forces_some_set(alpha, a)
                        || family.iter().any(|beta| {
                            beta.is_subset(alpha)
                                && self.forces_some_set(beta, a)
                                && beta
                                    .iter()
                                    .all(|&w| !self.forces(w, a) || self.forces(w, b))
                        })
                })
            }
        }
    }

    /// Whether every world in the set forces the formula.
    pub fn forces_all_set(&self, set: &BTreeSet<usize>, f: &Formula) -> bool {
        set.iter().all(|&w| self.forces(w, f))
    }

    /// Whether some world in the set forces the formula.
    pub fn forces_some_set(&self, set: &BTreeSet<usize>, f: &Formula) -> bool {
        set.iter().any(|&w| self.forces(w, f))
    }

    fn set_names(&self, set: &BTreeSet<usize>) -> String {
        let mut out = String::from("{");
        for (i, w) in set.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&self.names[*w]);
        }
        out.push('}');
        out
    }

    fn union_family(&self, world: usize) -> BTreeSet<usize> {
        self.families[world]
            .iter()
            .flat_map(|alpha| alpha.iter().copied())
            .collect()
    }

    /// JSON rendering: `{"worlds", "neighbourhoods", "valuation", "root"}`
    /// with worlds referred to by name throughout.
    pub fn to_json(&self) -> Value {
        let neighbourhoods: Map<String, Value> = self
            .names
            .iter()
            .enumerate()
            .map(|(w, name)| {
                let family: Vec<Value> = self.families[w]
                    .iter()
                    .map(|alpha| {
                        Value::Array(
                            alpha
                                .iter()
                                .map(|&i| Value::String(self.names[i].clone()))
                                .collect(),
                        )
                    })
                    .collect();
                (name.clone(), Value::Array(family))
            })
            .collect();
        let valuation: Map<String, Value> = self
            .valuation
            .iter()
            .map(|(atom, set)| {
                (
                    atom.clone(),
                    Value::Array(
                        set.iter()
                            .map(|&i| Value::String(self.names[i].clone()))
                            .collect(),
                    ),
                )
            })
            .collect();
        json!({
            "worlds": self.names.clone(),
            "neighbourhoods": Value::Object(neighbourhoods),
            "valuation": Value::Object(valuation),
            "root": self.names[self.root].clone(),
        })
    }

    /// Parses the JSON rendering. Worlds missing from `"neighbourhoods"`
    /// get an empty family; every other inconsistency is an error.
    pub fn from_json(v: &Value) -> Result<NeighbourhoodModel, ModelError> {
        let err = |m: &str| ModelError::Json(m.to_string());
        let obj = v.as_object().ok_or_else(|| err("model must be an object"))?;
        let names: Vec<String> = obj
            .get("worlds")
            .and_then(Value::as_array)
            .ok_or_else(|| err("missing array field \"worlds\""))?
            .iter()
            .map(|w| {
                w.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| err("world names must be strings"))
            })
            .collect::<Result<_, _>>()?;
        let index: BTreeMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let look = |name: &str| -> Result<usize, ModelError> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| ModelError::UnknownWorld(name.to_string()))
        };
        let mut families = vec![BTreeSet::new(); names.len()];
        let raw_families = obj
            .get("neighbourhoods")
            .and_then(Value::as_object)
            .ok_or_else(|| err("missing object field \"neighbourhoods\""))?;
        for (name, fam) in raw_families {
            let w = look(name)?;
            let fam = fam
                .as_array()
                .ok_or_else(|| err("each neighbourhood family must be an array"))?;
            for alpha in fam {
                let alpha = alpha
                    .as_array()
                    .ok_or_else(|| err("each neighbourhood must be an array of world names"))?;
                let set: BTreeSet<usize> = alpha
                    .iter()
                    .map(|m| {
                        m.as_str()
                            .ok_or_else(|| err("neighbourhood members must be world names"))
                            .and_then(look)
                    })
                    .collect::<Result<_, _>>()?;
                if set.is_empty() {
                    return Err(ModelError::EmptyNeighbourhood(name.clone()));
                }
                families[w].insert(set);
            }
        }
        let mut valuation = BTreeMap::new();
        let raw_valuation = obj
            .get("valuation")
            .and_then(Value::as_object)
            .ok_or_else(|| err("missing object field \"valuation\""))?;
        for (atom, set) in raw_valuation {
            let set = set
                .as_array()
                .ok_or_else(|| err("each valuation entry must be an array of world names"))?;
            let set: BTreeSet<usize> = set
                .iter()
                .map(|m| {
                    m.as_str()
                        .ok_or_else(|| err("valuation members must be world names"))
                        .and_then(look)
                })
                .collect::<Result<_, _>>()?;
            valuation.insert(atom.clone(), set);
        }
        let root = look(
            obj.get("root")
                .and_then(Value::as_str)
                .ok_or_else(|| err("missing string field \"root\""))?,
        )?;
        NeighbourhoodModel::new(names, families, valuation, root)
    }
}

impl fmt::Display for NeighbourhoodModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "worlds: {}", self.names.join(" "))?;
        for (w, name) in self.names.iter().enumerate() {
            let family = &self.families[w];
            if family.is_empty() {
                writeln!(f, "N({name}): (empty)")?;
            } else {
                let sets: Vec<String> = family.iter().map(|a| self.set_names(a)).collect();
                writeln!(f, "N({name}): {}", sets.join(" "))?;
            }
        }
        for (atom, set) in &self.valuation {
            let members: Vec<&str> = set.iter().map(|&i| self.names[i].as_str()).collect();
            writeln!(f, "{atom}: {}", members.join(" "))?;
        }
        write!(f, "root: {}", self.names[self.root])
    }
}

/// One frame condition failure, with a human-readable witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameViolation {
    pub flag: Flag,
    pub detail: String,
}

impl fmt::Display for FrameViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated: {}", self.flag, self.detail)
    }
}

/// The outcome of checking a model against a logic's frame conditions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrameReport {
    pub violations: Vec<FrameViolation>,
}

impl FrameReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for FrameReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "frame conditions hold");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every frame condition the logic's flags impose, collecting all
/// violations with witnesses.
pub fn check_frame(m: &NeighbourhoodModel, logic: &Logic) -> FrameReport {
    let mut violations = Vec::new();
    let n = m.world_count();
    for &flag in logic.flags() {
        match flag {
            Flag::N => {
                for x in 0..n {
                    if m.family(x).is_empty() {
                        violations.push(FrameViolation {
                            flag,
                            detail: format!("N({}) is empty", m.name_of(x)),
                        });
                    }
                }
            }
            Flag::T => {
                for x in 0..n {
                    if !m.family(x).iter().any(|alpha| alpha.contains(&x)) {
                        violations.push(FrameViolation {
                            flag,
                            detail: format!(
                                "no neighbourhood of {} contains it",
                                m.name_of(x)
                            ),
                        });
                    }
                }
            }
            Flag::W => {
                for x in 0..n {
                    for alpha in m.family(x) {
                        if !alpha.contains(&x) {
                            violations.push(FrameViolation {
                                flag,
                                detail: format!(
                                    "neighbourhood {} of {} does not contain it",
                                    m.set_names(alpha),
                                    m.name_of(x)
                                ),
                            });
                        }
                    }
                }
            }
            Flag::C => {
                for x in 0..n {
                    let singleton: BTreeSet<usize> = [x].into_iter().collect();
                    if !m.family(x).contains(&singleton) {
                        violations.push(FrameViolation {
                            flag,
                            detail: format!(
                                "{{{}}} is not a neighbourhood of {}",
                                m.name_of(x),
                                m.name_of(x)
                            ),
                        });
                    }
                }
            }
            Flag::U => {
                for x in 0..n {
                    for alpha in m.family(x) {
                        for &y in alpha {
                            if m.union_family(x) != m.union_family(y) {
                                violations.push(FrameViolation {
                                    flag,
                                    detail: format!(
                                        "{} reaches {} but their neighbourhood unions differ",
                                        m.name_of(x),
                                        m.name_of(y)
                                    ),
                                });
                            }
                        }
                    }
                }
            }
            Flag::A => {
                for x in 0..n {
                    for alpha in m.family(x) {
                        for &y in alpha {
                            if m.families[x] != m.families[y] {
                                violations.push(FrameViolation {
                                    flag,
                                    detail: format!(
                                        "{} reaches {} but their neighbourhood families differ",
                                        m.name_of(x),
                                        m.name_of(y)
                                    ),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    violations.dedup();
    FrameReport { violations }
}

/// A realization of labels in a model: worlds for world labels and sets of
/// worlds for neighbourhood labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Realization {
    pub world_map: BTreeMap<WorldLabel, usize>,
    pub nbhd_map: BTreeMap<NbhdLabel, BTreeSet<usize>>,
}

impl Realization {
    fn world(&self, x: &WorldLabel, bound: usize) -> Result<usize, RealizationError> {
        let w = *self
            .world_map
            .get(x)
            .ok_or(RealizationError::World(*x))?;
        if w >= bound {
            return Err(RealizationError::Range(w));
        }
        Ok(w)
    }

    fn nbhd(&self, a: &NbhdLabel) -> Result<&BTreeSet<usize>, RealizationError> {
        self.nbhd_map.get(a).ok_or(RealizationError::Nbhd(*a))
    }
}

/// Errors when a realization does not cover the labels in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum RealizationError {
    #[error("world label {0} is not realized")]
    World(WorldLabel),
    #[error("neighbourhood label {0} is not realized")]
    Nbhd(NbhdLabel),
    #[error("realized world index {0} out of range")]
    Range(usize),
}

/// Whether the realization satisfies one labelled formula in the model.
///
/// Relational atoms read off the model directly and `x : A` means `A` is
/// forced at the realized world. `x at a : A | B` means the realized
/// neighbourhood contains a neighbourhood of `x` that has an `A`-world and
/// forces `A -> B` throughout; the witness ranges over neighbourhoods, not
/// arbitrary subsets, which is what makes the left rule for the indexed
/// conditional sound and lets a failed succedent entry certify failure.
pub fn satisfies(
    m: &NeighbourhoodModel,
    r: &Realization,
    lf: &LabelledFormula,
) -> Result<bool, RealizationError> {
    let n = m.world_count();
    match lf {
        LabelledFormula::InN(a, x) => {
            Ok(m.family(r.world(x, n)?).contains(r.nbhd(a)?))
        }
        LabelledFormula::MemberOf(x, a) => Ok(r.nbhd(a)?.contains(&r.world(x, n)?)),
        LabelledFormula::SubsetOf(a, b) => Ok(r.nbhd(a)?.is_subset(r.nbhd(b)?)),
        LabelledFormula::At(x, f) => Ok(m.forces(r.world(x, n)?, f)),
        LabelledFormula::ForcesAll(a, f) => Ok(m.forces_all_set(r.nbhd(a)?, f)),
        LabelledFormula::ForcesSome(a, f) => Ok(m.forces_some_set(r.nbhd(a)?, f)),
        LabelledFormula::CondAt(x, a, f, g) => {
            let w = r.world(x, n)?;
            let alpha = r.nbhd(a)?;
            Ok(m.family(w).contains(alpha)
                && m.family(w).iter().any(|beta| {
                    beta.is_subset(alpha)
                        && m.forces_some_set(beta, f)
                        && beta.iter().all(|&u| !m.forces(u, f) || m.forces(u, g))
                }))
        }
    }
}

/// Whether the realization satisfies the sequent: some antecedent formula
/// fails or some succedent formula holds. A sequent that is not satisfied
/// is a counterexample witness.
pub fn satisfies_sequent(
    m: &NeighbourhoodModel,
    r: &Realization,
    s: &Sequent,
) -> Result<bool, RealizationError> {
    for f in &s.antecedent {
        if !satisfies(m, r, f)? {
            return Ok(true);
        }
    }
    for f in &s.succedent {
        if satisfies(m, r, f)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Errors from [`enumerate_countermodel`].
#[derive(Debug, Clone, thiserror::Error)]
pub enum EnumerateError {
    #[error(
        "enumeration over {worlds} worlds and {letters} letters needs 2^{bits} \
         assignments, past the supported limit"
    )]
    TooLarge {
        worlds: usize,
        letters: usize,
        bits: usize,
    },
}

/// All distinct subformulas, children before parents.
fn subformulas_post_order(f: &Formula) -> Vec<&Formula> {
    fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>, seen: &mut BTreeSet<&'a Formula>) {
        if seen.contains(f) {
            return;
        }
        match f {
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Cond(l, r) => {
                walk(l, out, seen);
                walk(r, out, seen);
            }
            _ => {}
        }
        seen.insert(f);
        out.push(f);
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    walk(f, &mut out, &mut seen);
    out
}

/// Searches exhaustively for a model of the logic with at most `max_worlds`
/// worlds that falsifies the formula at its root, returning the smallest
/// one found.
///
/// The search guesses a truth value per world for every atom and every
/// conditional subformula, closes the guess under the Boolean connectives,
/// and then looks for neighbourhood families realizing exactly the guessed
/// conditional values while meeting the logic's frame conditions. Cost
/// grows as `2^(worlds * letters)` times a per-guess family search, so
/// keep `max_worlds` at three or below unless the formula is tiny. Every
/// hit is re-verified with [`NeighbourhoodModel::forces`] and
/// [`check_frame`] before being returned.
pub fn enumerate_countermodel(
    f: &Formula,
    logic: &Logic,
    max_worlds: usize,
) -> Result<Option<NeighbourhoodModel>, EnumerateError> {
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    let conds: Vec<Formula> = f.conditional_subformulas();
    let letters = atoms.len() + conds.len();
    for k in 1..=max_worlds {
        let bits = k * letters;
        if bits > 26 {
            return Err(EnumerateError::TooLarge {
                worlds: k,
                letters,
                bits,
            });
        }
        if let Some(m) = enumerate_k(f, logic, k, &atoms, &conds) {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

fn enumerate_k(
    f: &Formula,
    logic: &Logic,
    k: usize,
    atoms: &[String],
    conds: &[Formula],
) -> Option<NeighbourhoodModel> {
    let full: u32 = (1u32 << k) - 1;
    let n_masks = (1usize << k) - 1;
    let subs = subformulas_post_order(f);
    let atom_pos: BTreeMap<&str, usize> = atoms
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();
    let cond_pos: BTreeMap<&Formula, usize> =
        conds.iter().enumerate().map(|(i, c)| (c, i)).collect();

    // For each nonempty subset mask alpha, the family bitset of its
    // nonempty subsets; family bitsets index mask alpha at bit alpha-1.
    let mut subs_bits = vec![0u32; n_masks + 1];
    for alpha in 1..=n_masks as u32 {
        let mut bits = 0u32;
        for beta in 1..=alpha {
            if beta & alpha == beta {
                bits |= 1 << (beta - 1);
            }
        }
        subs_bits[alpha as usize] = bits;
    }
    // Family bitset of the masks containing world x.
    let contain_bits: Vec<u32> = (0..k)
        .map(|x| {
            let mut b = 0u32;
            for alpha in 1..=n_masks as u32 {
                if alpha >> x & 1 == 1 {
                    b |= 1 << (alpha - 1);
                }
            }
            b
        })
        .collect();
    let union_of = |fam: u32| -> u32 {
        let mut rest = fam;
        let mut u = 0u32;
        while rest != 0 {
            let bit = rest.trailing_zeros();
            rest &= rest - 1;
            u |= bit + 1;
        }
        u
    };
    // Condition for the conditional: every family member with an
    // antecedent world must include a family member that is good for the
    // conditional.
    let cond_holds = |fam: u32, ex_mask: u32, good_bits: u32| -> bool {
        let mut rest = fam;
        while rest != 0 {
            let bit = rest.trailing_zeros();
            rest &= rest - 1;
            let alpha = bit + 1;
            if alpha & ex_mask != 0 && fam & subs_bits[alpha as usize] & good_bits == 0 {
                return false;
            }
        }
        true
    };

    let letters = atoms.len() + conds.len();
    let total: u64 = 1u64 << (k * letters);
    let family_count: u32 = 1u32 << n_masks;
    let needs_join = logic.has(Flag::U) || logic.has(Flag::A);

    'guess: for g in 0..total {
        let letter_mask =
            |j: usize| -> u32 { ((g >> (j * k)) as u32) & full };
        // Boolean closure of the guess over all subformulas.
        let mut truth: BTreeMap<&Formula, u32> = BTreeMap::new();
        for s in &subs {
            let mask = match s {
                Formula::Atom(p) => letter_mask(atom_pos[p.as_str()]),
                Formula::Bottom => 0,
                Formula::And(l, r) => truth[&**l] & truth[&**r],
                Formula::Or(l, r) => truth[&**l] | truth[&**r],
                Formula::Implies(l, r) => (!truth[&**l] & full) | truth[&**r],
                Formula::Cond(_, _) => letter_mask(atoms.len() + cond_pos[s]),
            };
            truth.insert(s, mask);
        }
        if truth[f] & 1 != 0 {
            continue; // the formula must fail at world 0
        }
        // Per conditional: masks with an antecedent world, and the family
        // bitset of good neighbourhoods.
        let mut ex_masks = Vec::with_capacity(conds.len());
        let mut good_bits = Vec::with_capacity(conds.len());
        for c in conds {
            let (ca, cb) = match c {
                Formula::Cond(a, b) => (&**a, &**b),
                _ => unreachable!(),
            };
            let a_mask = truth[ca];
            let impl_mask = (!a_mask & full) | truth[cb];
            ex_masks.push(a_mask);
            let mut good = 0u32;
            for alpha in 1..=n_masks as u32 {
                if alpha & a_mask != 0 && alpha & !impl_mask == 0 {
                    good |= 1 << (alpha - 1);
                }
            }
            good_bits.push(good);
        }
        // Families consistent with the guess, per world.
        let mut per_world: Vec<Vec<u32>> = Vec::with_capacity(k);
        for x in 0..k {
            let mut list = Vec::new();
            'fam: for fam in 0..family_count {
                if logic.has(Flag::N) && fam == 0 {
                    continue;
                }
                if logic.has(Flag::T) && fam & contain_bits[x] == 0 {
                    continue;
                }
                if logic.has(Flag::W) && fam & !contain_bits[x] != 0 {
                    continue;
                }
                if logic.has(Flag::C) && fam & (1 << ((1u32 << x) - 1)) == 0 {
                    continue;
                }
                for i in 0..conds.len() {
                    let want = truth[&conds[i]] >> x & 1 == 1;
                    if cond_holds(fam, ex_masks[i], good_bits[i]) != want {
                        continue 'fam;
                    }
                }
                list.push(fam);
            }
            if list.is_empty() {
                continue 'guess;
            }
            per_world.push(list);
        }
        let chosen: Option<Vec<u32>> = if !needs_join {
            Some(per_world.iter().map(|l| l[0]).collect())
        } else {
            // Uniformity and absoluteness relate the families of distinct
            // worlds, so search assignments with prefix pruning.
            fn join_ok(
                chosen: &[u32],
                j: usize,
                contain_bits: &[u32],
                union_of: &dyn Fn(u32) -> u32,
                absolute: bool,
            ) -> bool {
                for i in 0..=j {
                    for (x, y) in [(i, j), (j, i)] {
                        if chosen[x] & contain_bits[y] != 0 {
                            let ok = if absolute {
                                chosen[x] == chosen[y]
                            } else {
                                union_of(chosen[x]) == union_of(chosen[y])
                            };
                            if !ok {
                                return false;
                            }
                        }
                    }
                }
                true
            }
            fn dfs(
                j: usize,
                k: usize,
                per_world: &[Vec<u32>],
                chosen: &mut Vec<u32>,
                contain_bits: &[u32],
                union_of: &dyn Fn(u32) -> u32,
                absolute: bool,
            ) -> bool {
                if j == k {
                    return true;
                }
                for &fam in &per_world[j] {
                    chosen.push(fam);
                    if join_ok(chosen, j, contain_bits, union_of, absolute)
                        && dfs(j + 1, k, per_world, chosen, contain_bits, union_of, absolute)
                    {
                        return true;
                    }
                    chosen.pop();
                }
                false
            }
            let mut chosen = Vec::with_capacity(k);
            if dfs(
                0,
                k,
                &per_world,
                &mut chosen,
                &contain_bits,
                &union_of,
                logic.has(Flag::A),
            ) {
                Some(chosen)
            } else {
                None
            }
        };
        let Some(fams) = chosen else { continue };

        // Reconstruct and re-verify against the real semantics.
        let names: Vec<String> = (0..k).map(|i| format!("w{i}")).collect();
        let families: Vec<BTreeSet<BTreeSet<usize>>> = fams
            .iter()
            .map(|&fam| {
                let mut family = BTreeSet::new();
                let mut rest = fam;
                while rest != 0 {
                    let bit = rest.trailing_zeros();
                    rest &= rest - 1;
                    let alpha = bit + 1;
                    family.insert((0..k).filter(|&w| alpha >> w & 1 == 1).collect());
                }
                family
            })
            .collect();
        let valuation: BTreeMap<String, BTreeSet<usize>> = atoms
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let mask = letter_mask(j);
                (
                    a.clone(),
                    (0..k).filter(|&w| mask >> w & 1 == 1).collect(),
                )
            })
            .collect();
        let Ok(model) = NeighbourhoodModel::new(names, families, valuation, 0) else {
            continue;
        };
        let guessed_match = conds.iter().enumerate().all(|(i, c)| {
            (0..k).all(|w| model.forces(w, c) == (truth[&conds[i]] >> w & 1 == 1))
        });
        if guessed_match && !model.forces(0, f) && check_frame(&model, logic).is_ok() {
            return Some(model);
        }
    }
    None
}
