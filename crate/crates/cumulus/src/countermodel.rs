//! Countermodel extraction from saturated branches.
//!
//! A saturated branch describes a finite neighbourhood model directly: the
//! world labels become worlds, each neighbourhood label denotes the set of
//! its recorded members, and the valuation reads off the atomic facts. The
//! realization mapping labels to their denotations then satisfies every
//! antecedent formula the branch accumulated and falsifies every succedent
//! formula, so the root formula fails at the root world.
//!
//! Two refinements cover the stronger logics. When normality is present
//! without total reflexivity, the normality rule can leave labels with no
//! recorded members; they all denote one shared fresh world whose only
//! neighbourhood is its own singleton. When centering is present, the
//! replacement rules can identify distinct world labels, so worlds are
//! equivalence classes of labels rather than labels. Logics with
//! absoluteness have no extraction; refutations there are reported as
//! saturated branches only.

use std::collections::{BTreeMap, BTreeSet};

use crate::calculus::{Flag, Logic};
use crate::formula::Formula;
use crate::label::{LabelledFormula, NbhdLabel, WorldLabel};
use crate::search::is_saturated;
use crate::semantics::{satisfies, ModelError, NeighbourhoodModel, Realization};
use crate::sequent::Branch;

/// Errors from [`extract_model`].
#[derive(Debug, Clone, thiserror::Error)]
pub enum ExtractError {
    #[error("branch is not saturated: {0}")]
    NotSaturated(String),
    #[error("extraction is not defined for logics with absoluteness; use the saturated branch directly")]
    Absoluteness,
    #[error("extracted structure is not a model: {0}")]
    Model(#[from] ModelError),
}

/// Builds a countermodel and the realization of the branch labels in it
/// from a saturated branch of the given logic.
///
/// The distinguished root of the model realizes the branch's root world
/// label, so the formula the search started from fails there.
pub fn extract_model(
    branch: &Branch,
    logic: &Logic,
) -> Result<(NeighbourhoodModel, Realization), ExtractError> {
    if logic.has(Flag::A) {
        return Err(ExtractError::Absoluteness);
    }
    let report = is_saturated(branch, logic);
    if !report.saturated() {
        return Err(ExtractError::NotSaturated(report.to_string()));
    }
    if logic.has(Flag::C) {
        extract_centered(branch)
    } else {
        extract_plain(branch, logic.has(Flag::N) && !logic.has(Flag::T))
    }
}

fn members_of(branch: &Branch, a: NbhdLabel) -> BTreeSet<WorldLabel> {
    branch
        .current
        .antecedent
        .iter()
        .filter_map(|f| match f {
            LabelledFormula::MemberOf(y, b) if *b == a => Some(*y),
            _ => None,
        })
        .collect()
}

fn in_n_pairs(branch: &Branch) -> Vec<(NbhdLabel, WorldLabel)> {
    branch
        .current
        .antecedent
        .iter()
        .filter_map(|f| match f {
            LabelledFormula::InN(a, x) => Some((*a, *x)),
            _ => None,
        })
        .collect()
}

fn atom_facts(branch: &Branch) -> Vec<(WorldLabel, String)> {
    branch
        .down_gamma
        .iter()
        .filter_map(|f| match f {
            LabelledFormula::At(x, Formula::Atom(p)) => Some((*x, p.clone())),
            _ => None,
        })
        .collect()
}

fn extract_plain(
    branch: &Branch,
    fresh_world_for_bare: bool,
) -> Result<(NeighbourhoodModel, Realization), ExtractError> {
    let world_labels = branch.down_world_labels();
    let nbhd_labels = branch.down_nbhd_labels();
    let mut names: Vec<String> = world_labels.iter().map(|x| x.to_string()).collect();
    let index: BTreeMap<WorldLabel, usize> = world_labels
        .iter()
        .enumerate()
        .map(|(i, x)| (*x, i))
        .collect();

    let mut denotation: BTreeMap<NbhdLabel, BTreeSet<usize>> = nbhd_labels
        .iter()
        .map(|&a| {
            let members = members_of(branch, a)
                .into_iter()
                .map(|y| index[&y])
                .collect();
            (a, members)
        })
        .collect();

    // Labels the normality rule created and nothing ever populated all
    // denote one shared fresh world that sees only itself.
    let in_n = in_n_pairs(branch);
    let bare: Vec<NbhdLabel> = in_n
        .iter()
        .map(|(a, _)| *a)
        .filter(|a| denotation[a].is_empty())
        .collect();
    let mut extra_family: Option<(usize, BTreeSet<BTreeSet<usize>>)> = None;
    if fresh_world_for_bare && !bare.is_empty() {
        let u = names.len();
        names.push("u".to_string());
        let u_set: BTreeSet<usize> = [u].into_iter().collect();
        for a in bare {
            denotation.insert(a, u_set.clone());
        }
        extra_family = Some((u, [u_set].into_iter().collect()));
    }

    let mut families: Vec<BTreeSet<BTreeSet<usize>>> = vec![BTreeSet::new(); names.len()];
    for (a, x) in &in_n {
        families[index[x]].insert(denotation[a].clone());
    }
    if let Some((u, fam)) = extra_family {
        families[u] = fam;
    }

    let mut valuation: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for (x, p) in atom_facts(branch) {
        valuation.entry(p).or_default().insert(index[&x]);
    }

    let root = index[&WorldLabel(0)];
    let model = NeighbourhoodModel::new(names, families, valuation, root)?;
    let realization = Realization {
        world_map: index,
        nbhd_map: denotation,
    };
    Ok((model, realization))
}

/// Union-find over world labels, merging labels the replacement rules
/// identified through singleton membership.
struct Classes {
    parent: BTreeMap<WorldLabel, WorldLabel>,
}

impl Classes {
    fn new(labels: &BTreeSet<WorldLabel>) -> Classes {
        Classes {
            parent: labels.iter().map(|&x| (x, x)).collect(),
        }
    }

    fn find(&mut self, x: WorldLabel) -> WorldLabel {
        let p = self.parent[&x];
        if p == x {
            return x;
        }
        let root = self.find(p);
        self.parent.insert(x, root);
        root
    }

    /// Merges keeping the smaller label as representative.
    fn union(&mut self, x: WorldLabel, y: WorldLabel) {
        let rx = self.find(x);
        let ry = self.find(y);
        if rx == ry {
            return;
        }
        let (keep, drop) = if rx < ry { (rx, ry) } else { (ry, rx) };
        self.parent.insert(drop, keep);
    }
}

fn extract_centered(branch: &Branch) -> Result<(NeighbourhoodModel, Realization), ExtractError> {
    let world_labels = branch.down_world_labels();
    let mut classes = Classes::new(&world_labels);
    for f in &branch.current.antecedent {
        if let LabelledFormula::MemberOf(y, NbhdLabel::Singleton(x)) = f {
            classes.union(*y, *x);
        }
    }
    let reps: BTreeSet<WorldLabel> = world_labels
        .iter()
        .map(|&x| classes.find(x))
        .collect();
    let names: Vec<String> = reps.iter().map(|x| x.to_string()).collect();
    let rep_index: BTreeMap<WorldLabel, usize> =
        reps.iter().enumerate().map(|(i, x)| (*x, i)).collect();
    let index: BTreeMap<WorldLabel, usize> = world_labels
        .iter()
        .map(|&x| (x, rep_index[&classes.find(x)]))
        .collect();

    // A label denotes the classes of its members together with the classes
    // of the worlds it is a neighbourhood of.
    let in_n = in_n_pairs(branch);
    let mut denotation: BTreeMap<NbhdLabel, BTreeSet<usize>> = branch
        .down_nbhd_labels()
        .iter()
        .map(|&a| {
            let members: BTreeSet<usize> = members_of(branch, a)
                .into_iter()
                .map(|y| index[&y])
                .collect();
            (a, members)
        })
        .collect();
    for (a, x) in &in_n {
        denotation.get_mut(a).expect("label collected").insert(index[x]);
    }

    let mut families: Vec<BTreeSet<BTreeSet<usize>>> = vec![BTreeSet::new(); names.len()];
    for (a, x) in &in_n {
        families[index[x]].insert(denotation[a].clone());
    }

    let mut valuation: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for (x, p) in atom_facts(branch) {
        valuation.entry(p).or_default().insert(index[&x]);
    }

    let root = index[&WorldLabel(0)];
    let model = NeighbourhoodModel::new(names, families, valuation, root)?;
    let realization = Realization {
        world_map: index,
        nbhd_map: denotation,
    };
    Ok((model, realization))
}

/// One failed extraction invariant.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvariantViolation {
    #[error("accumulated antecedent formula {0} is not satisfied")]
    GammaUnsatisfied(String),
    #[error("accumulated succedent formula {0} is satisfied")]
    DeltaSatisfied(String),
    #[error("inclusion {0} does not hold between denotations")]
    InclusionBroken(String),
    #[error("label not realized: {0}")]
    Unrealized(String),
}

/// Checks the invariants an extracted model must have: every formula of
/// the accumulated antecedent is satisfied under the realization, every
/// formula of the accumulated succedent is falsified, and recorded
/// inclusions hold between denotations. Returns the first violation.
pub fn model_invariant_report(
    model: &NeighbourhoodModel,
    realization: &Realization,
    branch: &Branch,
) -> Result<(), InvariantViolation> {
    for f in &branch.down_gamma {
        match satisfies(model, realization, f) {
            Ok(true) => {}
            Ok(false) => {
                if let LabelledFormula::SubsetOf(_, _) = f {
                    return Err(InvariantViolation::InclusionBroken(f.to_string()));
                }
                return Err(InvariantViolation::GammaUnsatisfied(f.to_string()));
            }
            Err(e) => return Err(InvariantViolation::Unrealized(e.to_string())),
        }
    }
    for f in &branch.down_delta {
        match satisfies(model, realization, f) {
            Ok(false) => {}
            Ok(true) => return Err(InvariantViolation::DeltaSatisfied(f.to_string())),
            Err(e) => return Err(InvariantViolation::Unrealized(e.to_string())),
        }
    }
    Ok(())
}
