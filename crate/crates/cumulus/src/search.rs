//! Backward proof search.
//!
//! Search expands one branch at a time, depth first, always firing the
//! first instance the strategy admits: static rules, then the right
//! conditional rule, then the starred left conditional rule, then the
//! label-creating rules. Saturation blocking makes the strategy
//! terminating, so every run ends in a derivation, a saturated branch, or
//! an exhausted budget.

use std::time::{Duration, Instant};

use serde_json::{json, Value};

use crate::calculus::{
    applicable_instances, closing_rule, first_applicable_instance, premises, DerivNode,
    Derivation, Logic, PriorityClass, RuleId, RuleInstance,
};
use crate::formula::Formula;
use crate::label::{Label, LabelledFormula};
use crate::sequent::{Branch, Sequent};

/// Resource limits for one search run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budget {
    /// Maximum number of sequents expanded.
    pub max_nodes: u64,
    /// Maximum number of labels on any single branch.
    pub max_labels: u64,
    /// Optional wall-clock limit.
    pub wall_clock: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget {
            max_nodes: 200_000,
            max_labels: 5_000,
            wall_clock: None,
        }
    }
}

/// Which budget limit a search ran into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExhaustReason {
    Nodes,
    Labels,
    WallClock,
}

impl ExhaustReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExhaustReason::Nodes => "nodes",
            ExhaustReason::Labels => "labels",
            ExhaustReason::WallClock => "wall_clock",
        }
    }
}

/// A search that gave up, with the state of the counters when it did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exhaustion {
    pub reason: ExhaustReason,
    pub nodes: u64,
    pub labels: u64,
}

impl std::fmt::Display for Exhaustion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "budget exhausted ({}) after {} nodes, {} labels on the last branch",
            self.reason.as_str(),
            self.nodes,
            self.labels
        )
    }
}

/// The verdict of a search run.
#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum SearchOutcome {
    /// Every branch closed; the derivation is checkable.
    Provable(Derivation),
    /// A saturated branch was found; it realizes a countermodel.
    Refutable(Branch),
    /// The budget ran out first.
    Unknown(Exhaustion),
}

/// Counters describing a finished run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SearchStats {
    /// Sequents expanded, counting leaves.
    pub nodes: u64,
    /// Largest label count reached on any branch.
    pub peak_labels: u64,
    /// Deepest branch reached.
    pub max_depth: u64,
    pub elapsed: Duration,
}

/// One line of a search trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    /// A rule fired. `applicable` counts the admitted instances per
    /// strategy class at that moment, in class order; strategy compliance
    /// means every class before the chosen one counts zero.
    Expand {
        node: u64,
        depth: u64,
        rule: RuleId,
        class: PriorityClass,
        fresh: Vec<Label>,
        premises: usize,
        applicable: [u32; 4],
    },
    /// The sequent closed as a leaf.
    Closed { node: u64, rule: RuleId },
    /// No admitted instance remained: the branch is saturated.
    Saturated { node: u64 },
    /// The budget ran out at this node.
    Exhausted { node: u64, reason: ExhaustReason },
}

fn class_name(c: PriorityClass) -> &'static str {
    match c {
        PriorityClass::Static => "static",
        PriorityClass::RightCond => "right_cond",
        PriorityClass::LeftCondStar => "left_cond_star",
        PriorityClass::Dynamic => "dynamic",
    }
}

impl TraceEvent {
    pub fn to_json(&self) -> Value {
        match self {
            TraceEvent::Expand {
                node,
                depth,
                rule,
                class,
                fresh,
                premises,
                applicable,
            } => json!({
                "event": "expand",
                "node": node,
                "depth": depth,
                "rule": rule.as_str(),
                "class": class_name(*class),
                "fresh": fresh.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                "premises": premises,
                "applicable": {
                    "static": applicable[0],
                    "right_cond": applicable[1],
                    "left_cond_star": applicable[2],
                    "dynamic": applicable[3],
                },
            }),
            TraceEvent::Closed { node, rule } => json!({
                "event": "closed",
                "node": node,
                "rule": rule.as_str(),
            }),
            TraceEvent::Saturated { node } => json!({
                "event": "saturated",
                "node": node,
            }),
            TraceEvent::Exhausted { node, reason } => json!({
                "event": "exhausted",
                "node": node,
                "reason": reason.as_str(),
            }),
        }
    }
}

/// Whether the sequent closes as a leaf.
pub fn is_closed(s: &Sequent) -> bool {
    closing_rule(s).is_some()
}

/// The rule instance keeping a branch from being saturated, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnmetInstance {
    pub rule: RuleId,
    pub principals: Vec<LabelledFormula>,
    pub params: Vec<Label>,
}

/// The saturation status of a branch under a logic's strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaturationReport {
    /// The branch closed instead; closed branches are not saturated.
    pub closed: bool,
    /// The first rule instance still admitted, if any.
    pub unmet: Option<UnmetInstance>,
}

impl SaturationReport {
    pub fn saturated(&self) -> bool {
        !self.closed && self.unmet.is_none()
    }
}

impl std::fmt::Display for SaturationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.closed {
            return write!(f, "branch is closed");
        }
        match &self.unmet {
            None => write!(f, "branch is saturated"),
            Some(u) => {
                write!(f, "rule {} still applies", u.rule)?;
                if !u.principals.is_empty() {
                    let ps: Vec<String> =
                        u.principals.iter().map(|p| p.to_string()).collect();
                    write!(f, " to {}", ps.join(", "))?;
                }
                if !u.params.is_empty() {
                    let ps: Vec<String> = u.params.iter().map(|p| p.to_string()).collect();
                    write!(f, " at {}", ps.join(", "))?;
                }
                Ok(())
            }
        }
    }
}

/// Reports whether the branch is saturated: not closed, and no rule
/// instance is admitted by the strategy (saturation blocking included).
pub fn is_saturated(branch: &Branch, logic: &Logic) -> SaturationReport {
    if is_closed(&branch.current) {
        return SaturationReport {
            closed: true,
            unmet: None,
        };
    }
    let unmet = first_applicable_instance(branch, logic).map(|i| UnmetInstance {
        rule: i.rule,
        principals: i.principals,
        params: i.params,
    });
    SaturationReport {
        closed: false,
        unmet,
    }
}

/// A derivation node as recorded during search: the rule instance without
/// the sequent, which is reproducible by replaying premises from the root.
/// Keeping sequents out of the arena keeps deep searches in linear memory.
struct CompactNode {
    rule: RuleId,
    principals: Vec<LabelledFormula>,
    params: Vec<Label>,
    fresh: Vec<Label>,
    children: Vec<usize>,
}

struct SearchCtx<'a> {
    logic: &'a Logic,
    budget: &'a Budget,
    start: Instant,
    nodes: u64,
    peak_labels: u64,
    max_depth: u64,
    traced: bool,
    trace: Vec<TraceEvent>,
    deriv: Vec<CompactNode>,
}

enum Expanded {
    Closed(usize),
    Open(Branch),
}

fn expand(mut branch: Branch, mut depth: u64, ctx: &mut SearchCtx) -> Result<Expanded, Exhaustion> {
    // Single-premise steps expand iteratively, dropping the parent state
    // as soon as the child exists; their derivation nodes are recorded on
    // the way back out, once the chain's subtree index is known.
    let mut chain: Vec<(RuleId, Vec<LabelledFormula>, Vec<Label>, Vec<Label>)> = Vec::new();
    let record_chain = |ctx: &mut SearchCtx,
                        chain: Vec<(RuleId, Vec<LabelledFormula>, Vec<Label>, Vec<Label>)>,
                        mut idx: usize| {
        for (rule, principals, params, fresh) in chain.into_iter().rev() {
            ctx.deriv.push(CompactNode {
                rule,
                principals,
                params,
                fresh,
                children: vec![idx],
            });
            idx = ctx.deriv.len() - 1;
        }
        idx
    };
    loop {
        ctx.nodes += 1;
        let node = ctx.nodes;
        ctx.max_depth = ctx.max_depth.max(depth);
        let labels = branch.gen_tree.labels().count() as u64;
        ctx.peak_labels = ctx.peak_labels.max(labels);
        let exhausted = |ctx: &mut SearchCtx, reason: ExhaustReason| {
            let ex = Exhaustion {
                reason,
                nodes: ctx.nodes,
                labels,
            };
            if ctx.traced {
                ctx.trace.push(TraceEvent::Exhausted { node, reason });
            }
            ex
        };
        if ctx.nodes > ctx.budget.max_nodes {
            return Err(exhausted(ctx, ExhaustReason::Nodes));
        }
        if labels > ctx.budget.max_labels {
            return Err(exhausted(ctx, ExhaustReason::Labels));
        }
        if let Some(limit) = ctx.budget.wall_clock {
            if ctx.start.elapsed() > limit {
                return Err(exhausted(ctx, ExhaustReason::WallClock));
            }
        }
        if let Some(rule) = closing_rule(&branch.current) {
            if ctx.traced {
                ctx.trace.push(TraceEvent::Closed { node, rule });
            }
            ctx.deriv.push(CompactNode {
                rule,
                principals: vec![],
                params: vec![],
                fresh: vec![],
                children: vec![],
            });
            let idx = record_chain(ctx, chain, ctx.deriv.len() - 1);
            return Ok(Expanded::Closed(idx));
        }
        let inst: Option<RuleInstance> = if ctx.traced {
            let all = applicable_instances(&branch, ctx.logic);
            if let Some(first) = all.first() {
                let mut counts = [0u32; 4];
                for i in &all {
                    counts[i.rule.priority_class() as usize] += 1;
                }
                ctx.trace.push(TraceEvent::Expand {
                    node,
                    depth,
                    rule: first.rule,
                    class: first.rule.priority_class(),
                    fresh: first.fresh.clone(),
                    premises: first.premises.len(),
                    applicable: counts,
                });
            }
            all.into_iter().next()
        } else {
            first_applicable_instance(&branch, ctx.logic)
        };
        let Some(inst) = inst else {
            if ctx.traced {
                ctx.trace.push(TraceEvent::Saturated { node });
            }
            return Ok(Expanded::Open(branch));
        };
        let RuleInstance {
            rule,
            principals,
            params,
            fresh,
            premises: prems,
            edges,
        } = inst;
        if prems.len() == 1 {
            let premise = prems.into_iter().next().expect("one premise");
            let child = branch
                .extend(premise, &edges)
                .expect("rule instances extend their own branch");
            chain.push((rule, principals, params, fresh));
            branch = child;
            depth += 1;
            continue;
        }
        let mut children = Vec::with_capacity(prems.len());
        for premise in prems {
            let child = branch
                .extend(premise, &edges)
                .expect("rule instances extend their own branch");
            match expand(child, depth + 1, ctx)? {
                Expanded::Closed(idx) => children.push(idx),
                open @ Expanded::Open(_) => return Ok(open),
            }
        }
        ctx.deriv.push(CompactNode {
            rule,
            principals,
            params,
            fresh,
            children,
        });
        let idx = record_chain(ctx, chain, ctx.deriv.len() - 1);
        return Ok(Expanded::Closed(idx));
    }
}

/// Rebuilds the full derivation from the compact arena by replaying each
/// node's premises from the root sequent downward. Children precede their
/// parent in the arena, so one descending pass sees every parent first.
fn materialize(mut compact: Vec<CompactNode>, root: usize, initial: Sequent) -> Vec<DerivNode> {
    let mut sequents: Vec<Option<Sequent>> = vec![None; compact.len()];
    sequents[root] = Some(initial);
    let mut out: Vec<Option<DerivNode>> = (0..compact.len()).map(|_| None).collect();
    for i in (0..compact.len()).rev() {
        let sequent = sequents[i].take().expect("arena nodes form one tree");
        let node = &mut compact[i];
        if !node.children.is_empty() {
            let prems = premises(node.rule, &sequent, &node.principals, &node.params, &node.fresh);
            debug_assert_eq!(prems.len(), node.children.len());
            for (child, premise) in node.children.iter().zip(prems) {
                sequents[*child] = Some(premise);
            }
        }
        out[i] = Some(DerivNode {
            sequent,
            rule: node.rule,
            fresh: std::mem::take(&mut node.fresh),
            children: std::mem::take(&mut node.children),
        });
    }
    out.into_iter()
        .map(|n| n.expect("every arena node materialized"))
        .collect()
}

fn run(formula: Formula, logic: Logic, budget: Budget, traced: bool) -> TracedOutcome {
    let mut ctx = SearchCtx {
        logic: &logic,
        budget: &budget,
        start: Instant::now(),
        nodes: 0,
        peak_labels: 0,
        max_depth: 0,
        traced,
        trace: Vec::new(),
        deriv: Vec::new(),
    };
    let root_branch = Branch::root(formula);
    let initial = root_branch.current.clone();
    let outcome = match expand(root_branch, 0, &mut ctx) {
        Ok(Expanded::Closed(root)) => SearchOutcome::Provable(Derivation {
            logic: logic.name(),
            root,
            nodes: materialize(std::mem::take(&mut ctx.deriv), root, initial),
        }),
        Ok(Expanded::Open(branch)) => SearchOutcome::Refutable(branch),
        Err(ex) => SearchOutcome::Unknown(ex),
    };
    TracedOutcome {
        outcome,
        stats: SearchStats {
            nodes: ctx.nodes,
            peak_labels: ctx.peak_labels,
            max_depth: ctx.max_depth,
            elapsed: ctx.start.elapsed(),
        },
        trace: ctx.trace,
    }
}

/// Stack size for the search worker thread. Static cascades recurse once
/// per rule application, so the default thread stack is not enough for
/// adversarial inputs.
const SEARCH_STACK: usize = 256 * 1024 * 1024;

fn run_in_thread(formula: Formula, logic: Logic, budget: Budget, traced: bool) -> TracedOutcome {
    std::thread::Builder::new()
        .name("proof-search".to_string())
        .stack_size(SEARCH_STACK)
        .spawn(move || run(formula, logic, budget, traced))
        .expect("spawning the search thread")
        .join()
        .expect("search thread panicked")
}

/// The result of [`prove_traced`]: the verdict plus counters and the full
/// event trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TracedOutcome {
    pub outcome: SearchOutcome,
    pub stats: SearchStats,
    pub trace: Vec<TraceEvent>,
}

/// Decides the formula in the logic within the budget.
pub fn prove(formula: &Formula, logic: &Logic, budget: &Budget) -> SearchOutcome {
    run_in_thread(formula.clone(), logic.clone(), budget.clone(), false).outcome
}

/// Like [`prove`], also returning counters and a trace with one event per
/// expanded sequent, in expansion order.
pub fn prove_traced(formula: &Formula, logic: &Logic, budget: &Budget) -> TracedOutcome {
    run_in_thread(formula.clone(), logic.clone(), budget.clone(), true)
}
