//! Sequents over labelled formulas, and search branches with their history.
//!
//! A sequent is a pair of finite sets. A branch additionally remembers every
//! formula that has ever appeared on either side, the generation tree of its
//! labels, and monotone counters for fresh label allocation. Rules delete
//! their principal formula from the current sequent in several cases, so the
//! cumulative sets, written here as `down_gamma` and `down_delta`, are what
//! saturation conditions and countermodel extraction quantify over.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Value};

use crate::formula::Formula;
use crate::label::{
    Label, LabelJsonError, LabelledFormula, NbhdLabel, WorldLabel,
};

/// A labelled sequent: antecedent and succedent as sets.
///
/// Relational atoms may occur only in the antecedent; the checked
/// constructors enforce this.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Sequent {
    pub antecedent: BTreeSet<LabelledFormula>,
    pub succedent: BTreeSet<LabelledFormula>,
}

impl Sequent {
    /// Builds a sequent, rejecting relational atoms in the succedent.
    pub fn new(
        antecedent: BTreeSet<LabelledFormula>,
        succedent: BTreeSet<LabelledFormula>,
    ) -> Result<Sequent, SequentError> {
        if let Some(bad) = succedent.iter().find(|f| f.is_relational()) {
            return Err(SequentError::RelationalInSuccedent(bad.to_string()));
        }
        Ok(Sequent {
            antecedent,
            succedent,
        })
    }

    /// The root sequent `=> x0 : f`.
    pub fn root(f: Formula) -> Sequent {
        let mut succedent = BTreeSet::new();
        succedent.insert(LabelledFormula::At(WorldLabel(0), f));
        Sequent {
            antecedent: BTreeSet::new(),
            succedent,
        }
    }

    /// All world labels occurring in the sequent, sorted.
    pub fn world_labels(&self) -> BTreeSet<WorldLabel> {
        self.antecedent
            .iter()
            .chain(self.succedent.iter())
            .flat_map(|f| f.world_labels())
            .collect()
    }

    /// All neighbourhood labels occurring in the sequent, sorted.
    pub fn nbhd_labels(&self) -> BTreeSet<NbhdLabel> {
        self.antecedent
            .iter()
            .chain(self.succedent.iter())
            .flat_map(|f| f.nbhd_labels())
            .collect()
    }

    /// Whether the label occurs anywhere in the sequent.
    pub fn mentions(&self, label: Label) -> bool {
        self.antecedent
            .iter()
            .chain(self.succedent.iter())
            .any(|f| f.mentions(label))
    }

    /// JSON rendering with sorted `antecedent` and `succedent` arrays.
    pub fn to_json(&self) -> Value {
        json!({
            "antecedent": self.antecedent.iter().map(|f| f.to_json()).collect::<Vec<_>>(),
            "succedent": self.succedent.iter().map(|f| f.to_json()).collect::<Vec<_>>(),
        })
    }

    /// Parses the JSON rendering, enforcing the relational-atom restriction.
    pub fn from_json(v: &Value) -> Result<Sequent, LabelJsonError> {
        let obj = v
            .as_object()
            .ok_or_else(|| LabelJsonError::at("sequent must be an object", v))?;
        let side = |field: &str| -> Result<BTreeSet<LabelledFormula>, LabelJsonError> {
            let arr = obj
                .get(field)
                .and_then(Value::as_array)
                .ok_or_else(|| LabelJsonError::at(&format!("missing array {field:?}"), v))?;
            arr.iter().map(LabelledFormula::from_json).collect()
        };
        Sequent::new(side("antecedent")?, side("succedent")?)
            .map_err(|e| LabelJsonError::at(&e.to_string(), v))
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for g in &self.antecedent {
            if !first {
                f.write_str(", ")?;
            }
            write!(f, "{g}")?;
            first = false;
        }
        f.write_str(" => ")?;
        first = true;
        for d in &self.succedent {
            if !first {
                f.write_str(", ")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        Ok(())
    }
}

/// Errors from sequent construction.
#[derive(Debug, Clone, thiserror::Error)]
pub enum SequentError {
    #[error("relational atom {0} in succedent")]
    RelationalInSuccedent(String),
}

/// A node of the generation tree: the step at which the label appeared and
/// its parent label, if any. The root world has no parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenNode {
    pub parent: Option<Label>,
    pub step: u32,
}

/// The generation tree of a branch: each label points to the label it was
/// created from. Singleton labels count as labels of their own.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GenTree {
    nodes: BTreeMap<Label, GenNode>,
    next_step: u32,
}

impl GenTree {
    /// Whether the label has been recorded.
    pub fn contains(&self, label: Label) -> bool {
        self.nodes.contains_key(&label)
    }

    /// Parent of a recorded label.
    pub fn parent(&self, label: Label) -> Option<Label> {
        self.nodes.get(&label).and_then(|n| n.parent)
    }

    /// Creation step of a recorded label.
    pub fn step(&self, label: Label) -> Option<u32> {
        self.nodes.get(&label).map(|n| n.step)
    }

    /// All recorded labels with their nodes, in label order.
    pub fn labels(&self) -> impl Iterator<Item = (Label, GenNode)> + '_ {
        self.nodes.iter().map(|(l, n)| (*l, *n))
    }

    fn insert(&mut self, label: Label, parent: Option<Label>) -> Result<(), ExtendError> {
        if self.nodes.contains_key(&label) {
            return Err(ExtendError::SecondParent(label.to_string()));
        }
        if let Some(p) = parent {
            if !self.nodes.contains_key(&p) {
                return Err(ExtendError::UnknownParent(p.to_string()));
            }
        }
        self.nodes.insert(
            label,
            GenNode {
                parent,
                step: self.next_step,
            },
        );
        self.next_step += 1;
        Ok(())
    }
}

/// A branch of the search tree.
///
/// `current` is the present sequent; `down_gamma` and `down_delta`
/// accumulate every formula that has appeared in an antecedent or succedent
/// along the branch. `next_world` and `next_nbhd` are monotone counters, so
/// a label index at or above them is fresh for the whole branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub current: Sequent,
    pub down_gamma: BTreeSet<LabelledFormula>,
    pub down_delta: BTreeSet<LabelledFormula>,
    pub gen_tree: GenTree,
    pub next_world: u32,
    pub next_nbhd: u32,
}

impl Branch {
    /// The root branch for proving `f`: the sequent `=> x0 : f` with `x0`
    /// as the root of the generation tree.
    pub fn root(f: Formula) -> Branch {
        let current = Sequent::root(f);
        let mut gen_tree = GenTree::default();
        gen_tree
            .insert(Label::World(WorldLabel(0)), None)
            .expect("empty tree accepts the root");
        Branch {
            down_gamma: current.antecedent.clone(),
            down_delta: current.succedent.clone(),
            current,
            gen_tree,
            next_world: 1,
            next_nbhd: 0,
        }
    }

    /// Extends the branch with a premise sequent, recording generation-tree
    /// edges for labels created by the step. Each new label must be genuinely
    /// new and name an existing parent; counters advance past every new
    /// index, so they never repeat on the branch.
    pub fn extend(
        &self,
        premise: Sequent,
        new_edges: &[(Label, Label)],
    ) -> Result<Branch, ExtendError> {
        let mut next = self.clone();
        for (parent, child) in new_edges {
            next.gen_tree.insert(*child, Some(*parent))?;
            match child {
                Label::World(WorldLabel(i)) => {
                    next.next_world = next.next_world.max(i + 1);
                }
                Label::Nbhd(NbhdLabel::Plain(i)) => {
                    next.next_nbhd = next.next_nbhd.max(i + 1);
                }
                Label::Nbhd(NbhdLabel::Singleton(_)) => {}
            }
        }
        next.down_gamma.extend(premise.antecedent.iter().cloned());
        next.down_delta.extend(premise.succedent.iter().cloned());
        next.current = premise;
        Ok(next)
    }

    /// A world index unused anywhere on the branch.
    pub fn fresh_world(&self) -> WorldLabel {
        WorldLabel(self.next_world)
    }

    /// A plain neighbourhood index unused anywhere on the branch.
    pub fn fresh_nbhd(&self) -> NbhdLabel {
        NbhdLabel::Plain(self.next_nbhd)
    }

    /// World labels occurring in the cumulative sets, sorted.
    pub fn down_world_labels(&self) -> BTreeSet<WorldLabel> {
        self.down_gamma
            .iter()
            .chain(self.down_delta.iter())
            .flat_map(|f| f.world_labels())
            .collect()
    }

    /// Neighbourhood labels occurring in the cumulative sets, sorted.
    pub fn down_nbhd_labels(&self) -> BTreeSet<NbhdLabel> {
        self.down_gamma
            .iter()
            .chain(self.down_delta.iter())
            .flat_map(|f| f.nbhd_labels())
            .collect()
    }

    /// JSON rendering of the branch: the current sequent plus the
    /// cumulative antecedent and succedent sets.
    pub fn to_json(&self) -> Value {
        json!({
            "current": self.current.to_json(),
            "down_gamma": self.down_gamma.iter().map(|f| f.to_json()).collect::<Vec<_>>(),
            "down_delta": self.down_delta.iter().map(|f| f.to_json()).collect::<Vec<_>>(),
        })
    }
}

/// Errors from [`Branch::extend`].
#[derive(Debug, Clone, thiserror::Error)]
pub enum ExtendError {
    #[error("label {0} already has a generation-tree node")]
    SecondParent(String),
    #[error("generation-tree parent {0} does not exist")]
    UnknownParent(String),
}
