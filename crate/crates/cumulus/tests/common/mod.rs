//! Shared fixtures for the integration tests: hand-transcribed derivations
//! of the conjunctive cautious monotony, normality, total reflexivity, and
//! first uniformity axioms, rebuilt rule application by rule application.
//!
//! Each transcription fixes the rule skeleton: which rule fires, on which
//! principal formulas, with which fresh labels, in which order. The premise
//! sequents themselves are computed by the calculus, exactly as the
//! derivation checker recomputes them, so a transcription only checks out
//! if every leaf closes and every step is a legal instance. Premises the
//! printed trees leave out as "derivable" are expanded into explicit rule
//! applications down to initial sequents.

#![allow(dead_code)]

use cumulus::calculus::{candidate_instances, closing_rule, DerivNode, Derivation, LogicName, RuleId};
use cumulus::formula::Formula;
use cumulus::label::{Label, LabelledFormula, NbhdLabel, WorldLabel};
use cumulus::sequent::Sequent;

/// One node of a transcription: the rule, the fresh labels it consumes,
/// the principal formulas (plus label parameters for the rules that act on
/// labels), and the subtrees for its premises in order.
pub struct Step {
    pub rule: RuleId,
    pub fresh: Vec<Label>,
    pub principals: Vec<LabelledFormula>,
    pub params: Vec<Label>,
    pub children: Vec<Step>,
}

pub fn leaf(rule: RuleId) -> Step {
    Step {
        rule,
        fresh: vec![],
        principals: vec![],
        params: vec![],
        children: vec![],
    }
}

pub fn step(rule: RuleId, principals: Vec<LabelledFormula>, children: Vec<Step>) -> Step {
    Step {
        rule,
        fresh: vec![],
        principals,
        params: vec![],
        children,
    }
}

pub fn step_fresh(
    rule: RuleId,
    fresh: Vec<Label>,
    principals: Vec<LabelledFormula>,
    children: Vec<Step>,
) -> Step {
    Step {
        rule,
        fresh,
        principals,
        params: vec![],
        children,
    }
}

/// For the world-parameterised rules (normality and total reflexivity).
pub fn step_param(rule: RuleId, param: Label, fresh: Vec<Label>, children: Vec<Step>) -> Step {
    Step {
        rule,
        fresh,
        principals: vec![],
        params: vec![param],
        children,
    }
}

/// Builds the derivation a step tree describes, starting from the root
/// sequent of the goal formula. Panics with the offending sequent when a
/// step does not match exactly one rule instance or a leaf does not close,
/// so a broken transcription fails loudly rather than silently.
pub fn build_derivation(goal: &Formula, logic: LogicName, root_step: &Step) -> Derivation {
    let mut nodes = Vec::new();
    let root = add_node(&mut nodes, Sequent::root(goal.clone()), root_step);
    Derivation { logic, root, nodes }
}

fn add_node(nodes: &mut Vec<DerivNode>, sequent: Sequent, step: &Step) -> usize {
    if matches!(step.rule, RuleId::Init | RuleId::BotL) {
        assert_eq!(
            closing_rule(&sequent),
            Some(step.rule),
            "leaf does not close by {}: {sequent}",
            step.rule
        );
        nodes.push(DerivNode {
            sequent,
            rule: step.rule,
            fresh: vec![],
            children: vec![],
        });
        return nodes.len() - 1;
    }
    let instances = candidate_instances(&sequent, step.rule, &step.fresh)
        .unwrap_or_else(|e| panic!("bad fresh labels for {}: {e}", step.rule));
    let matching: Vec<_> = instances
        .into_iter()
        .filter(|inst| inst.principals == step.principals && inst.params == step.params)
        .collect();
    assert_eq!(
        matching.len(),
        1,
        "rule {} with the given principals must match exactly one instance at: {sequent}",
        step.rule
    );
    let inst = &matching[0];
    assert_eq!(
        inst.premises.len(),
        step.children.len(),
        "rule {} yields {} premises, transcription has {} subtrees",
        step.rule,
        inst.premises.len(),
        step.children.len()
    );
    let children: Vec<usize> = inst
        .premises
        .iter()
        .zip(&step.children)
        .map(|(premise, sub)| add_node(nodes, premise.clone(), sub))
        .collect();
    nodes.push(DerivNode {
        sequent,
        rule: step.rule,
        fresh: step.fresh.clone(),
        children,
    });
    nodes.len() - 1
}

fn w(n: u32) -> WorldLabel {
    WorldLabel(n)
}

fn nl(n: u32) -> Label {
    Label::Nbhd(NbhdLabel::Plain(n))
}

fn wl(n: u32) -> Label {
    Label::World(WorldLabel(n))
}

fn at(x: u32, f: &Formula) -> LabelledFormula {
    LabelledFormula::At(w(x), f.clone())
}

fn inn(a: u32, x: u32) -> LabelledFormula {
    LabelledFormula::InN(NbhdLabel::Plain(a), w(x))
}

fn member(x: u32, a: u32) -> LabelledFormula {
    LabelledFormula::MemberOf(w(x), NbhdLabel::Plain(a))
}

fn subset(a: u32, b: u32) -> LabelledFormula {
    LabelledFormula::SubsetOf(NbhdLabel::Plain(a), NbhdLabel::Plain(b))
}

fn fsome(a: u32, f: &Formula) -> LabelledFormula {
    LabelledFormula::ForcesSome(NbhdLabel::Plain(a), f.clone())
}

fn fall(a: u32, f: &Formula) -> LabelledFormula {
    LabelledFormula::ForcesAll(NbhdLabel::Plain(a), f.clone())
}

fn cond_at(x: u32, a: u32, f: &Formula, g: &Formula) -> LabelledFormula {
    LabelledFormula::CondAt(w(x), NbhdLabel::Plain(a), f.clone(), g.clone())
}

/// Conjunctive cautious monotony, provable in the base logic:
/// `(p > q) & (p > r) -> ((p & q) > r)`.
///
/// Skeleton: unfold the implication and conjunction, introduce the goal
/// conditional's neighbourhood, chain the two hypothesis conditionals
/// through their indexed forms to reach a neighbourhood included in the
/// goal's one, bridge the inclusions by transitivity, and discharge the
/// indexed goal by exhibiting that neighbourhood. The three premises the
/// printed tree leaves out as derivable (two existential-forcing premises
/// and the existential half of the indexed goal) are expanded in place.
pub fn cm_derivation() -> Derivation {
    use RuleId::*;
    let p = Formula::atom("p");
    let q = Formula::atom("q");
    let r = Formula::atom("r");
    let pq = Formula::and(p.clone(), q.clone());
    let cpq = Formula::cond(p.clone(), q.clone());
    let cpr = Formula::cond(p.clone(), r.clone());
    let hyp = Formula::and(cpq.clone(), cpr.clone());
    let cgoal = Formula::cond(pq.clone(), r.clone());
    let goal = Formula::implies(hyp.clone(), cgoal.clone());
    let ipq = Formula::implies(p.clone(), q.clone());
    let ipr = Formula::implies(p.clone(), r.clone());
    let ipqr = Formula::implies(pq.clone(), r.clone());

    // Left premise of the lower conditional elimination: the hypothesis
    // neighbourhood a0 carries an existential p & q, so it has an
    // existential p.
    let lower_left = step_fresh(
        LExists,
        vec![wl(1)],
        vec![fsome(0, &pq)],
        vec![step(
            LAnd,
            vec![at(1, &pq)],
            vec![step(
                RExists,
                vec![member(1, 0), fsome(0, &p)],
                vec![leaf(Init)],
            )],
        )],
    );
    // Left premise of the upper conditional elimination: a1 carries an
    // existential p by construction.
    let upper_left = step_fresh(
        LExists,
        vec![wl(1)],
        vec![fsome(1, &p)],
        vec![step(
            RExists,
            vec![member(1, 1), fsome(1, &p)],
            vec![leaf(Init)],
        )],
    );
    // Existential half of the indexed goal: a2 has a p-world, the world
    // propagates into a1 by the inclusion a2 sub a1, and a1's universal
    // p -> q turns it into a p & q world.
    let goal_exists = step_fresh(
        LExists,
        vec![wl(1)],
        vec![fsome(2, &p)],
        vec![step(
            LSubset,
            vec![member(1, 2), subset(2, 1)],
            vec![step(
                LForall,
                vec![member(1, 1), fall(1, &ipq)],
                vec![step(
                    LImp,
                    vec![at(1, &ipq)],
                    vec![
                        leaf(Init),
                        step(
                            RExists,
                            vec![member(1, 2), fsome(2, &pq)],
                            vec![step(
                                RAnd,
                                vec![at(1, &pq)],
                                vec![leaf(Init), leaf(Init)],
                            )],
                        ),
                    ],
                )],
            )],
        )],
    );
    // Universal half of the indexed goal: a fresh member of a2 forcing
    // p & q must force r, by the universal p -> r that a2 carries.
    let goal_forall = step_fresh(
        RForall,
        vec![wl(1)],
        vec![fall(2, &ipqr)],
        vec![step(
            RImp,
            vec![at(1, &ipqr)],
            vec![step(
                LAnd,
                vec![at(1, &pq)],
                vec![step(
                    LForall,
                    vec![member(1, 2), fall(2, &ipr)],
                    vec![step(
                        LImp,
                        vec![at(1, &ipr)],
                        vec![leaf(Init), leaf(Init)],
                    )],
                )],
            )],
        )],
    );

    let root = step(
        RImp,
        vec![at(0, &goal)],
        vec![step(
            LAnd,
            vec![at(0, &hyp)],
            vec![step_fresh(
                RCond,
                vec![nl(0)],
                vec![at(0, &cgoal)],
                vec![step(
                    LCond,
                    vec![inn(0, 0), at(0, &cpq)],
                    vec![
                        lower_left,
                        step_fresh(
                            LCondAt,
                            vec![nl(1)],
                            vec![cond_at(0, 0, &p, &q)],
                            vec![step(
                                LCond,
                                vec![inn(1, 0), at(0, &cpr)],
                                vec![
                                    upper_left,
                                    step_fresh(
                                        LCondAt,
                                        vec![nl(2)],
                                        vec![cond_at(0, 1, &p, &r)],
                                        vec![step(
                                            Tr,
                                            vec![subset(2, 1), subset(1, 0)],
                                            vec![step(
                                                RCondAt,
                                                vec![
                                                    inn(2, 0),
                                                    subset(2, 0),
                                                    cond_at(0, 0, &pq, &r),
                                                ],
                                                vec![goal_exists, goal_forall],
                                            )],
                                        )],
                                    ),
                                ],
                            )],
                        ),
                    ],
                )],
            )],
        )],
    );
    build_derivation(&goal, LogicName::PCL, &root)
}

/// Normality: `~(true > false)`, provable once every world has a
/// neighbourhood.
///
/// Skeleton: assume the vacuous conditional, create a neighbourhood by the
/// normality rule, then eliminate the conditional. Its existential premise
/// is discharged by populating the neighbourhood (the member-creation
/// rule) and proving `true` there; the indexed premise yields an included
/// neighbourhood whose universal `true -> false` refutes its own member.
pub fn n_derivation() -> Derivation {
    use RuleId::*;
    let top = Formula::top();
    let bot = Formula::Bottom;
    let ctb = Formula::cond(top.clone(), bot.clone());
    let goal = Formula::implies(ctb.clone(), bot.clone());
    let itb = Formula::implies(top.clone(), bot.clone());

    let exists_half = step_fresh(
        Zero,
        vec![wl(1)],
        vec![inn(0, 0)],
        vec![step(
            RExists,
            vec![member(1, 0), fsome(0, &top)],
            vec![step(RImp, vec![at(1, &top)], vec![leaf(BotL)])],
        )],
    );
    let indexed_half = step_fresh(
        LCondAt,
        vec![nl(1)],
        vec![cond_at(0, 0, &top, &bot)],
        vec![step_fresh(
            LExists,
            vec![wl(1)],
            vec![fsome(1, &top)],
            vec![step(
                LSubset,
                vec![member(1, 1), subset(1, 0)],
                vec![step(
                    LForall,
                    vec![member(1, 1), fall(1, &itb)],
                    vec![step(
                        LImp,
                        vec![at(1, &itb)],
                        vec![
                            step(RImp, vec![at(1, &top)], vec![leaf(BotL)]),
                            leaf(BotL),
                        ],
                    )],
                )],
            )],
        )],
    );

    let root = step(
        RImp,
        vec![at(0, &goal)],
        vec![step_param(
            N,
            wl(0),
            vec![nl(0)],
            vec![step(
                LCond,
                vec![inn(0, 0), at(0, &ctb)],
                vec![exists_half, indexed_half],
            )],
        )],
    );
    build_derivation(&goal, LogicName::PN, &root)
}

/// Total reflexivity: `p -> ~(p > false)`.
///
/// Skeleton: after unfolding the implications, the total reflexivity rule
/// gives a neighbourhood containing the root world itself, which witnesses
/// the conditional's existential premise; the indexed premise produces an
/// included neighbourhood whose universal `p -> false` refutes its own
/// p-member.
pub fn t_derivation() -> Derivation {
    use RuleId::*;
    let p = Formula::atom("p");
    let bot = Formula::Bottom;
    let cpb = Formula::cond(p.clone(), bot.clone());
    let inner = Formula::implies(cpb.clone(), bot.clone());
    let goal = Formula::implies(p.clone(), inner.clone());
    let ipb = Formula::implies(p.clone(), bot.clone());

    let exists_half = step(
        RExists,
        vec![member(0, 0), fsome(0, &p)],
        vec![leaf(Init)],
    );
    let indexed_half = step_fresh(
        LCondAt,
        vec![nl(1)],
        vec![cond_at(0, 0, &p, &bot)],
        vec![step_fresh(
            LExists,
            vec![wl(1)],
            vec![fsome(1, &p)],
            vec![step(
                LForall,
                vec![member(1, 1), fall(1, &ipb)],
                vec![step(
                    LImp,
                    vec![at(1, &ipb)],
                    vec![leaf(Init), leaf(BotL)],
                )],
            )],
        )],
    );

    let root = step(
        RImp,
        vec![at(0, &goal)],
        vec![step(
            RImp,
            vec![at(0, &inner)],
            vec![step_param(
                T,
                wl(0),
                vec![nl(0)],
                vec![step(
                    LCond,
                    vec![inn(0, 0), at(0, &cpb)],
                    vec![exists_half, indexed_half],
                )],
            )],
        )],
    );
    build_derivation(&goal, LogicName::PT, &root)
}

/// First uniformity axiom: `(~p > false) -> (~(~p > false) > false)`.
///
/// Skeleton: introduce the goal conditional's neighbourhood a0 and a
/// member world x1 where the negated hypothesis fails, giving the
/// hypothesis conditional at x1; its own neighbourhood a1 has a ~p member
/// x2. Uniformity copies x2 into a neighbourhood a2 of the root world, so
/// the root hypothesis conditional can be eliminated at a2: its
/// existential premise is witnessed by x2, and the indexed premise yields
/// an included neighbourhood whose universal `~p -> false` refutes its own
/// ~p member.
pub fn u1_derivation() -> Derivation {
    use RuleId::*;
    let p = Formula::atom("p");
    let bot = Formula::Bottom;
    let np = Formula::implies(p.clone(), bot.clone());
    let g = Formula::cond(np.clone(), bot.clone());
    let ng = Formula::implies(g.clone(), bot.clone());
    let cng = Formula::cond(ng.clone(), bot.clone());
    let goal = Formula::implies(g.clone(), cng.clone());
    let inp = Formula::implies(np.clone(), bot.clone());

    let exists_half = step(
        RExists,
        vec![member(2, 2), fsome(2, &np)],
        vec![step(
            RImp,
            vec![at(2, &np)],
            vec![step(
                LImp,
                vec![at(2, &np)],
                vec![leaf(Init), leaf(BotL)],
            )],
        )],
    );
    let indexed_half = step_fresh(
        LCondAt,
        vec![nl(3)],
        vec![cond_at(0, 2, &np, &bot)],
        vec![step_fresh(
            LExists,
            vec![wl(3)],
            vec![fsome(3, &np)],
            vec![step(
                LForall,
                vec![member(3, 3), fall(3, &inp)],
                vec![step(
                    LImp,
                    vec![at(3, &inp)],
                    vec![
                        step(
                            RImp,
                            vec![at(3, &np)],
                            vec![step(
                                LImp,
                                vec![at(3, &np)],
                                vec![leaf(Init), leaf(BotL)],
                            )],
                        ),
                        leaf(BotL),
                    ],
                )],
            )],
        )],
    );

    let root = step(
        RImp,
        vec![at(0, &goal)],
        vec![step_fresh(
            RCond,
            vec![nl(0)],
            vec![at(0, &cng)],
            vec![step_fresh(
                LExists,
                vec![wl(1)],
                vec![fsome(0, &ng)],
                vec![step(
                    LImp,
                    vec![at(1, &ng)],
                    vec![
                        step_fresh(
                            RCond,
                            vec![nl(1)],
                            vec![at(1, &g)],
                            vec![step_fresh(
                                LExists,
                                vec![wl(2)],
                                vec![fsome(1, &np)],
                                vec![step_fresh(
                                    Unif1,
                                    vec![nl(2)],
                                    vec![inn(0, 0), member(1, 0), inn(1, 1), member(2, 1)],
                                    vec![step(
                                        LCond,
                                        vec![inn(2, 0), at(0, &g)],
                                        vec![exists_half, indexed_half],
                                    )],
                                )],
                            )],
                        ),
                        leaf(BotL),
                    ],
                )],
            )],
        )],
    );
    build_derivation(&goal, LogicName::PU, &root)
}

/// The four transcriptions with the logic each one lives in.
pub fn transcribed_derivations() -> Vec<(&'static str, Derivation)> {
    vec![
        ("conjunctive cautious monotony (CM)", cm_derivation()),
        ("normality (N)", n_derivation()),
        ("total reflexivity (T)", t_derivation()),
        ("first uniformity (U1)", u1_derivation()),
    ]
}
