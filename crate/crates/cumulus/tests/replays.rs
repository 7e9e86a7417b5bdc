//! The transcribed derivations must pass the checker in their own logics,
//! survive a JSON round trip, and fail the checker when tampered with.

mod common;

use cumulus::calculus::{check_derivation, CheckError, Derivation, Logic, LogicName, RuleId};
use cumulus::label::{Label, NbhdLabel};

#[test]
fn transcriptions_check_in_their_logics() {
    for (name, derivation) in common::transcribed_derivations() {
        let logic = Logic::new(derivation.logic);
        check_derivation(&derivation, &logic)
            .unwrap_or_else(|e| panic!("{name} rejected in {}: {e}", derivation.logic));
    }
}

#[test]
fn transcriptions_check_in_stronger_logics() {
    // Rule tables grow along the lattice, so a derivation keeps checking
    // anywhere above its own logic.
    let cm = common::cm_derivation();
    for name in [LogicName::PC, LogicName::PCU, LogicName::PCA] {
        check_derivation(&cm, &Logic::new(name)).unwrap();
    }
    let u1 = common::u1_derivation();
    check_derivation(&u1, &Logic::new(LogicName::PCU)).unwrap();
}

#[test]
fn extension_rules_are_rejected_in_the_base_logic() {
    let base = Logic::new(LogicName::PCL);
    for (derivation, rule) in [
        (common::n_derivation(), RuleId::N),
        (common::t_derivation(), RuleId::T),
        (common::u1_derivation(), RuleId::Unif1),
    ] {
        match check_derivation(&derivation, &base) {
            Err(CheckError::RuleNotInCalculus { rule: got, .. }) => assert_eq!(got, rule),
            other => panic!("expected a rule-not-in-calculus error for {rule}, got {other:?}"),
        }
    }
}

#[test]
fn cm_round_trips_through_json() {
    let cm = common::cm_derivation();
    let v = cm.to_json();
    let back = Derivation::from_json(&v).unwrap();
    assert_eq!(back, cm);
    check_derivation(&back, &Logic::new(LogicName::PCL)).unwrap();
}

#[test]
fn tampered_fresh_label_is_a_freshness_violation() {
    let mut cm = common::cm_derivation();
    let target = cm
        .nodes
        .iter()
        .position(|n| {
            n.rule == RuleId::LCondAt && n.fresh == vec![Label::Nbhd(NbhdLabel::Plain(1))]
        })
        .expect("the transcription introduces a1 by the indexed left rule");
    cm.nodes[target].fresh = vec![Label::Nbhd(NbhdLabel::Plain(0))];
    match check_derivation(&cm, &Logic::new(LogicName::PCL)) {
        Err(CheckError::FreshnessViolation { .. }) => {}
        other => panic!("expected a freshness violation, got {other:?}"),
    }
}

#[test]
fn tampered_premise_is_a_premise_mismatch() {
    let mut cm = common::cm_derivation();
    // Redirect the root's child to one of its grandchildren: the premise no
    // longer matches any instance of the root's rule.
    let root_children = cm.nodes[cm.root].children.clone();
    let child = root_children[0];
    let grandchild = cm.nodes[child].children[0];
    cm.nodes[cm.root].children = vec![grandchild];
    // The orphaned subtree must stay reachable for the tree check, so graft
    // it where the grandchild used to hang.
    cm.nodes[grandchild].children.push(child);
    cm.nodes[child].children = vec![];
    let err = check_derivation(&cm, &Logic::new(LogicName::PCL)).unwrap_err();
    assert!(
        matches!(
            err,
            CheckError::PremiseMismatch { .. } | CheckError::LeafRule { .. }
        ),
        "got {err:?}"
    );
}
