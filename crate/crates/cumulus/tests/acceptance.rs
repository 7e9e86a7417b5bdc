//! Acceptance suite: one test per criterion, one pass/fail line each.
//!
//! The criteria pin down the toolkit end to end: axiom and derived-theorem
//! provability with wall-clock bounds, replay of hand-transcribed
//! derivations, non-theorems with semantically verified countermodels, a
//! randomized termination sweep, agreement between the prover and the
//! semantic oracles, per-rule soundness sampling, lattice monotonicity,
//! and honest reporting in the absoluteness logics.
//!
//! The sweep of criterion 5 also feeds criteria 6 and 8, so it runs once
//! behind a lock. Every test serializes on one mutex: the timed criteria
//! must not compete with the heavy ones for cores.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use cumulus::calculus::{
    candidate_instances, check_derivation, closing_rule, rule_table, Flag, Logic, LogicName,
    RuleId, RuleInstance, TableMode,
};
use cumulus::countermodel::{extract_model, model_invariant_report};
use cumulus::formula::{parse_formula, Formula};
use cumulus::label::{Label, LabelledFormula, NbhdLabel, WorldLabel};
use cumulus::search::{is_saturated, prove, Budget, SearchOutcome};
use cumulus::semantics::{
    check_frame, enumerate_countermodel, satisfies_sequent, NeighbourhoodModel, Realization,
};
use cumulus::sequent::{Branch, Sequent};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn pf(text: &str) -> Formula {
    parse_formula(text).expect("acceptance formulas parse")
}

fn verdict_name(o: &SearchOutcome) -> &'static str {
    match o {
        SearchOutcome::Provable(_) => "Provable",
        SearchOutcome::Refutable(_) => "Refutable",
        SearchOutcome::Unknown(_) => "Unknown",
    }
}

/// The characteristic axioms, each under the weakest logic proving it.
const AXIOMS: &[(&str, &str, LogicName)] = &[
    ("(ID)", "p > p", LogicName::PCL),
    ("(R-And)", "(p > q) & (p > r) -> (p > (q & r))", LogicName::PCL),
    ("(CM)", "(p > q) & (p > r) -> ((p & q) > r)", LogicName::PCL),
    ("(OR)", "(p > r) & (q > r) -> ((p | q) > r)", LogicName::PCL),
    ("(N)", "~(true > false)", LogicName::PN),
    ("(T)", "p -> ~(p > false)", LogicName::PT),
    ("(W)", "(p > q) -> (p -> q)", LogicName::PW),
    ("(C)", "(p & q) -> (p > q)", LogicName::PC),
    ("(U1)", "(~p > false) -> (~(~p > false) > false)", LogicName::PU),
    ("(U2)", "~(p > false) -> ((p > false) > false)", LogicName::PU),
];

/// Theorems derivable in the base logic.
const DERIVED: &[(&str, &str)] = &[
    ("(RT)", "(p > q) & ((p & q) > r) -> (p > r)"),
    ("(MOD)", "(p > false) -> (q > ~p)"),
    ("(DT)", "((p & q) > r) -> (p > (q -> r))"),
    ("(CSO)", "(p > q) & (q > p) -> ((p > r) -> (q > r))"),
    ("(ACR1)", "((p | q) > p) & ((q | r) > q) -> ((p | r) > p)"),
    ("(ACR2)", "((p | q) > p) & ((q | r) > q) -> (p > (r -> q))"),
    ("(ACR3)", "((p | q) > p) & (q > r) -> (p > (q -> r))"),
];

/// Monotonicity patterns the conditional rejects.
const NON_THEOREMS: &[(&str, &str)] = &[
    ("strengthening", "(p > q) -> ((p & r) > q)"),
    ("transitivity", "(p > q) & (q > r) -> (p > r)"),
    ("contraposition", "(p > q) -> (~q > ~p)"),
];

const ABSOLUTENESS_AXIOMS: &[(&str, &str)] = &[
    ("(A1)", "(p > q) -> (r > (p > q))"),
    ("(A2)", "~(p > q) -> (r > ~(p > q))"),
];

const NON_A_LOGICS: [LogicName; 10] = [
    LogicName::PCL,
    LogicName::PN,
    LogicName::PT,
    LogicName::PW,
    LogicName::PC,
    LogicName::PU,
    LogicName::PNU,
    LogicName::PTU,
    LogicName::PWU,
    LogicName::PCU,
];

const A_LOGICS: [LogicName; 5] = [
    LogicName::PA,
    LogicName::PNA,
    LogicName::PTA,
    LogicName::PWA,
    LogicName::PCA,
];

#[test]
fn criterion_1_axioms_prove_in_their_logics() {
    let _g = serial();
    let mut failures = Vec::new();
    for &(name, text, ln) in AXIOMS {
        let logic = Logic::new(ln);
        let start = Instant::now();
        let outcome = prove(&pf(text), &logic, &Budget::default());
        let wall = start.elapsed();
        match outcome {
            SearchOutcome::Provable(d) => {
                if let Err(e) = check_derivation(&d, &logic) {
                    failures.push(format!("{name} in {ln}: derivation rejected: {e}"));
                }
                if wall > Duration::from_secs(10) {
                    failures.push(format!("{name} in {ln}: {wall:.1?} exceeds the 10 s bound"));
                }
            }
            other => failures.push(format!(
                "{name} in {ln}: expected Provable, got {}",
                verdict_name(&other)
            )),
        }
    }
    assert!(failures.is_empty(), "\n{}", failures.join("\n"));
}

#[test]
fn criterion_2_derived_theorems_prove_in_the_base_logic() {
    let _g = serial();
    let logic = Logic::new(LogicName::PCL);
    let mut failures = Vec::new();
    for &(name, text) in DERIVED {
        let start = Instant::now();
        let outcome = prove(&pf(text), &logic, &Budget::default());
        let wall = start.elapsed();
        match outcome {
            SearchOutcome::Provable(d) => {
                if let Err(e) = check_derivation(&d, &logic) {
                    failures.push(format!("{name}: derivation rejected: {e}"));
                }
                if wall > Duration::from_secs(30) {
                    failures.push(format!("{name}: {wall:.1?} exceeds the 30 s bound"));
                }
            }
            other => failures.push(format!(
                "{name}: expected Provable in PCL, got {}",
                verdict_name(&other)
            )),
        }
    }
    assert!(failures.is_empty(), "\n{}", failures.join("\n"));
}

#[test]
fn criterion_3_transcribed_derivations_replay() {
    let _g = serial();
    for (name, derivation) in common::transcribed_derivations() {
        let logic = Logic::new(derivation.logic);
        check_derivation(&derivation, &logic)
            .unwrap_or_else(|e| panic!("transcription of {name} rejected: {e}"));
    }
}

/// Proves the formula refutable in PCL and extracts its countermodel.
fn refuted_in_pcl(text: &str) -> (Formula, NeighbourhoodModel, Realization, Branch) {
    let logic = Logic::new(LogicName::PCL);
    let f = pf(text);
    match prove(&f, &logic, &Budget::default()) {
        SearchOutcome::Refutable(branch) => {
            let (model, realization) = extract_model(&branch, &logic)
                .unwrap_or_else(|e| panic!("{text}: extraction failed: {e}"));
            (f, model, realization, branch)
        }
        other => panic!("{text}: expected Refutable in PCL, got {}", verdict_name(&other)),
    }
}

#[test]
fn criterion_4_non_theorems_refute_with_verified_models() {
    let _g = serial();
    let logic = Logic::new(LogicName::PCL);
    for &(name, text) in NON_THEOREMS {
        let (f, model, _realization, _branch) = refuted_in_pcl(text);
        let frame = check_frame(&model, &logic);
        assert!(frame.is_ok(), "{name}: extracted model breaks frame conditions: {frame}");
        assert!(
            !model.forces(model.root(), &f),
            "{name}: extracted model does not falsify the formula at its root"
        );
        for w in 0..model.world_count() {
            for alpha in model.family(w) {
                assert!(!alpha.is_empty(), "{name}: empty neighbourhood at {}", model.name_of(w));
            }
        }
        // An independent oracle: exhaustive search over tiny models.
        let found = enumerate_countermodel(&f, &logic, 3)
            .expect("enumeration within the supported size")
            .unwrap_or_else(|| panic!("{name}: no countermodel with at most 3 worlds"));
        assert!(!found.forces(found.root(), &f), "{name}: enumerated model fails to refute");
        let frame = check_frame(&found, &logic);
        assert!(frame.is_ok(), "{name}: enumerated model breaks frame conditions: {frame}");
    }
}

enum Verdict {
    Provable,
    Refutable {
        certificate: Result<(NeighbourhoodModel, Realization), String>,
        branch: Branch,
    },
    Unknown(String),
}

struct SweepEntry {
    verdict: Verdict,
    wall: Duration,
}

struct Sweep {
    formulas: Vec<Formula>,
    /// Indexed `[logic][formula]`, logics in `NON_A_LOGICS` order.
    entries: Vec<Vec<SweepEntry>>,
}

static SWEEP: OnceLock<Sweep> = OnceLock::new();

fn sweep() -> &'static Sweep {
    SWEEP.get_or_init(build_sweep)
}

/// A pseudo-random formula of exactly the given odd size over `p, q, r`.
fn random_formula(rng: &mut ChaCha8Rng, size: u64) -> Formula {
    if size <= 1 {
        return match rng.random_range(0..7u32) {
            0 => Formula::Bottom,
            i => Formula::atom(["p", "q", "r"][(i as usize - 1) % 3]),
        };
    }
    let left = 2 * rng.random_range(0..(size - 1) / 2) + 1;
    let a = random_formula(rng, left);
    let b = random_formula(rng, size - 1 - left);
    match rng.random_range(0..4u32) {
        0 => Formula::and(a, b),
        1 => Formula::or(a, b),
        2 => Formula::implies(a, b),
        _ => Formula::cond(a, b),
    }
}

fn build_sweep() -> Sweep {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE97);
    let mut seen = BTreeSet::new();
    let mut formulas = Vec::new();
    while formulas.len() < 200 {
        let size = *[3u64, 5, 5, 7, 7, 7, 9, 9, 9, 9].choose(&mut rng).unwrap();
        let f = random_formula(&mut rng, size);
        if seen.insert(f.clone()) {
            formulas.push(f);
        }
    }
    let entries = NON_A_LOGICS
        .iter()
        .map(|&ln| {
            let logic = Logic::new(ln);
            formulas
                .iter()
                .map(|f| {
                    let start = Instant::now();
                    let outcome = prove(f, &logic, &Budget::default());
                    let wall = start.elapsed();
                    let verdict = match outcome {
                        SearchOutcome::Provable(_) => Verdict::Provable,
                        SearchOutcome::Refutable(branch) => Verdict::Refutable {
                            certificate: extract_model(&branch, &logic)
                                .map_err(|e| e.to_string()),
                            branch,
                        },
                        SearchOutcome::Unknown(ex) => Verdict::Unknown(ex.to_string()),
                    };
                    SweepEntry { verdict, wall }
                })
                .collect()
        })
        .collect();
    Sweep { formulas, entries }
}

#[test]
fn criterion_5_random_sweep_terminates_with_a_verdict() {
    let _g = serial();
    let sw = sweep();
    let mut failures = Vec::new();
    for (li, &ln) in NON_A_LOGICS.iter().enumerate() {
        for (fi, f) in sw.formulas.iter().enumerate() {
            let entry = &sw.entries[li][fi];
            if let Verdict::Unknown(reason) = &entry.verdict {
                failures.push(format!("{ln} on {f}: Unknown ({reason})"));
            }
            if entry.wall > Duration::from_secs(60) {
                failures.push(format!("{ln} on {f}: {:.1?} exceeds the 60 s bound", entry.wall));
            }
        }
    }
    assert!(failures.is_empty(), "\n{}", failures.join("\n"));
}

#[test]
fn criterion_6_semantic_oracles_agree_with_the_prover() {
    let _g = serial();
    let sw = sweep();
    let mut failures = Vec::new();

    // Every formula proved somewhere, with every logic that proved it.
    let mut proved: BTreeMap<Formula, BTreeSet<LogicName>> = BTreeMap::new();
    for &(_, text, ln) in AXIOMS {
        proved.entry(pf(text)).or_default().insert(ln);
    }
    for &(_, text) in DERIVED {
        proved.entry(pf(text)).or_default().insert(LogicName::PCL);
    }
    for (li, &ln) in NON_A_LOGICS.iter().enumerate() {
        for (fi, f) in sw.formulas.iter().enumerate() {
            if matches!(sw.entries[li][fi].verdict, Verdict::Provable) {
                proved.entry(f.clone()).or_default().insert(ln);
            }
        }
    }

    // No proved formula has a countermodel with at most 3 worlds. A frame
    // class is shrunk by every flag it adds, so an empty enumeration under
    // a flag subset covers the larger flag sets and the rest are skipped.
    for (f, logics) in &proved {
        let mut sorted: Vec<Logic> = logics.iter().map(|&ln| Logic::new(ln)).collect();
        sorted.sort_by_key(|l| l.flags().len());
        let mut covered: Vec<BTreeSet<Flag>> = Vec::new();
        for logic in sorted {
            if covered.iter().any(|c| c.is_subset(logic.flags())) {
                continue;
            }
            match enumerate_countermodel(f, &logic, 3) {
                Ok(None) => covered.push(logic.flags().clone()),
                Ok(Some(m)) => failures.push(format!(
                    "{f}: proved in {} yet a {}-world countermodel exists",
                    logic.name(),
                    m.world_count()
                )),
                Err(e) => failures.push(format!("{f}: enumeration failed: {e}")),
            }
        }
    }

    // Every refutation certificate satisfies the branch invariants.
    for &(name, text) in NON_THEOREMS {
        let (_, model, realization, branch) = refuted_in_pcl(text);
        if let Err(v) = model_invariant_report(&model, &realization, &branch) {
            failures.push(format!("{name}: invariant violation: {v}"));
        }
    }
    for (li, &ln) in NON_A_LOGICS.iter().enumerate() {
        for (fi, f) in sw.formulas.iter().enumerate() {
            if let Verdict::Refutable { certificate, branch } = &sw.entries[li][fi].verdict {
                match certificate {
                    Ok((model, realization)) => {
                        if let Err(v) = model_invariant_report(model, realization, branch) {
                            failures.push(format!("{ln} on {f}: invariant violation: {v}"));
                        }
                    }
                    Err(e) => failures.push(format!("{ln} on {f}: extraction failed: {e}")),
                }
            }
        }
    }
    assert!(failures.is_empty(), "\n{}", failures.join("\n"));
}

/// The weakest logic whose calculus admits the rule; soundness is sampled
/// over that logic's frame class.
fn weakest_logic_for(rule: RuleId) -> Logic {
    use LogicName::*;
    for ln in [PCL, PN, PT, PW, PC, PU, PA] {
        let logic = Logic::new(ln);
        if rule_table(&logic, TableMode::Check).contains(&rule) {
            return logic;
        }
    }
    // Closing rules are part of every calculus.
    Logic::new(PCL)
}

fn random_nonempty_subset(rng: &mut ChaCha8Rng, k: usize) -> BTreeSet<usize> {
    let mut set: BTreeSet<usize> = (0..k).filter(|_| rng.random_bool(0.5)).collect();
    if set.is_empty() {
        set.insert(rng.random_range(0..k));
    }
    set
}

fn random_nonempty_subset_of(rng: &mut ChaCha8Rng, base: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut set: BTreeSet<usize> = base.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
    if set.is_empty() {
        set.insert(*base.iter().choose(rng).unwrap());
    }
    set
}

/// A random model of at most 4 worlds inside the logic's frame class,
/// built by construction and re-checked against `check_frame`.
fn random_model(rng: &mut ChaCha8Rng, logic: &Logic) -> NeighbourhoodModel {
    let k = rng.random_range(1..=4usize);
    let mut families: Vec<BTreeSet<BTreeSet<usize>>> = Vec::new();
    if logic.has(Flag::A) {
        // A shared family makes every pair of worlds agree.
        let mut shared = BTreeSet::new();
        if !rng.random_bool(0.15) {
            for _ in 0..rng.random_range(1..=3) {
                shared.insert(random_nonempty_subset(rng, k));
            }
        }
        families = vec![shared; k];
    } else if logic.has(Flag::U) {
        // Every nonempty family contains one shared cover set, so all
        // reachable worlds see the same union.
        let cover = random_nonempty_subset(rng, k);
        for w in 0..k {
            if !cover.contains(&w) && rng.random_bool(0.3) {
                families.push(BTreeSet::new());
                continue;
            }
            let mut fam = BTreeSet::new();
            for _ in 0..rng.random_range(0..3) {
                fam.insert(random_nonempty_subset_of(rng, &cover));
            }
            fam.insert(cover.clone());
            families.push(fam);
        }
    } else {
        for w in 0..k {
            let mut fam = BTreeSet::new();
            for _ in 0..rng.random_range(0..=3) {
                fam.insert(random_nonempty_subset(rng, k));
            }
            if logic.has(Flag::W) {
                fam = fam
                    .into_iter()
                    .map(|mut alpha| {
                        alpha.insert(w);
                        alpha
                    })
                    .collect();
            }
            if logic.has(Flag::C) {
                fam.insert(BTreeSet::from([w]));
            }
            let self_contained = fam.iter().any(|alpha| alpha.contains(&w));
            if (logic.has(Flag::N) && fam.is_empty()) || (logic.has(Flag::T) && !self_contained) {
                let mut extra = random_nonempty_subset(rng, k);
                if logic.has(Flag::T) {
                    extra.insert(w);
                }
                fam.insert(extra);
            }
            families.push(fam);
        }
    }
    let names = (0..k).map(|i| format!("w{i}")).collect();
    let mut valuation = BTreeMap::new();
    for atom in ["p", "q", "r"] {
        let set: BTreeSet<usize> = (0..k).filter(|_| rng.random_bool(0.5)).collect();
        valuation.insert(atom.to_string(), set);
    }
    let model = NeighbourhoodModel::new(names, families, valuation, 0)
        .expect("sampled model is well formed");
    let frame = check_frame(&model, logic);
    assert!(frame.is_ok(), "sampler left the frame class of {}: {frame}", logic.name());
    model
}

/// Label pools for sampled sequents; index 9 is reserved for fresh labels.
fn pool_world(rng: &mut ChaCha8Rng) -> WorldLabel {
    WorldLabel(rng.random_range(0..3))
}

fn pool_nbhd(rng: &mut ChaCha8Rng) -> NbhdLabel {
    NbhdLabel::Plain(rng.random_range(0..3))
}

fn small_formula(rng: &mut ChaCha8Rng) -> Formula {
    let size = *[1u64, 1, 3, 3, 5].choose(rng).unwrap();
    random_formula(rng, size)
}

/// A random sequent seeded so the rule has something to fire on. The one
/// structural invariant of reachable sequents that local soundness needs is
/// kept: an indexed conditional in the succedent always sits next to the
/// membership of its neighbourhood in the antecedent.
fn seeded_sequent(rng: &mut ChaCha8Rng, rule: RuleId) -> Sequent {
    use LabelledFormula as LF;
    let mut gamma: BTreeSet<LabelledFormula> = BTreeSet::new();
    let mut delta: BTreeSet<LabelledFormula> = BTreeSet::new();

    // Noise around the principal shapes.
    for _ in 0..rng.random_range(1..=3) {
        let x = pool_world(rng);
        let a = pool_nbhd(rng);
        gamma.insert(match rng.random_range(0..6u32) {
            0 => LF::InN(a, x),
            1 => LF::MemberOf(x, a),
            2 => LF::SubsetOf(a, pool_nbhd(rng)),
            3 => LF::At(x, small_formula(rng)),
            4 => LF::ForcesAll(a, small_formula(rng)),
            _ => LF::ForcesSome(a, small_formula(rng)),
        });
    }
    for _ in 0..rng.random_range(0..=2) {
        let x = pool_world(rng);
        let a = pool_nbhd(rng);
        delta.insert(match rng.random_range(0..3u32) {
            0 => LF::At(x, small_formula(rng)),
            1 => LF::ForcesAll(a, small_formula(rng)),
            _ => LF::ForcesSome(a, small_formula(rng)),
        });
    }

    let x = pool_world(rng);
    let y = pool_world(rng);
    let z = pool_world(rng);
    let a = NbhdLabel::Plain(0);
    let b = NbhdLabel::Plain(1);
    let c = NbhdLabel::Plain(2);
    let f = small_formula(rng);
    let g = small_formula(rng);
    match rule {
        RuleId::Init => {
            let shared = LF::At(x, Formula::atom("p"));
            gamma.insert(shared.clone());
            delta.insert(shared);
        }
        RuleId::BotL => {
            gamma.insert(LF::At(x, Formula::Bottom));
        }
        RuleId::LAnd => {
            gamma.insert(LF::At(x, Formula::and(f, g)));
        }
        RuleId::RAnd => {
            delta.insert(LF::At(x, Formula::and(f, g)));
        }
        RuleId::LOr => {
            gamma.insert(LF::At(x, Formula::or(f, g)));
        }
        RuleId::ROr => {
            delta.insert(LF::At(x, Formula::or(f, g)));
        }
        RuleId::LImp => {
            gamma.insert(LF::At(x, Formula::implies(f, g)));
        }
        RuleId::RImp => {
            delta.insert(LF::At(x, Formula::implies(f, g)));
        }
        RuleId::LForall => {
            gamma.insert(LF::MemberOf(x, a));
            gamma.insert(LF::ForcesAll(a, f));
        }
        RuleId::RForall => {
            delta.insert(LF::ForcesAll(a, f));
        }
        RuleId::LExists => {
            gamma.insert(LF::ForcesSome(a, f));
        }
        RuleId::RExists => {
            gamma.insert(LF::MemberOf(x, a));
            delta.insert(LF::ForcesSome(a, f));
        }
        RuleId::RCond => {
            delta.insert(LF::At(x, Formula::cond(f, g)));
        }
        RuleId::LCond | RuleId::LCondStar => {
            gamma.insert(LF::InN(a, x));
            gamma.insert(LF::At(x, Formula::cond(f, g)));
        }
        RuleId::RCondAt => {
            gamma.insert(LF::InN(c, x));
            gamma.insert(LF::SubsetOf(c, a));
            gamma.insert(LF::InN(a, x));
            delta.insert(LF::CondAt(x, a, f, g));
        }
        RuleId::LCondAt => {
            gamma.insert(LF::CondAt(x, a, f, g));
        }
        RuleId::Ref | RuleId::N | RuleId::T => {
            gamma.insert(LF::MemberOf(x, a));
        }
        RuleId::Tr => {
            gamma.insert(LF::SubsetOf(a, b));
            gamma.insert(LF::SubsetOf(b, c));
        }
        RuleId::LSubset => {
            gamma.insert(LF::MemberOf(x, a));
            gamma.insert(LF::SubsetOf(a, b));
        }
        RuleId::MonForall => {
            gamma.insert(LF::SubsetOf(b, a));
            gamma.insert(LF::ForcesAll(a, f));
        }
        RuleId::Zero | RuleId::W | RuleId::C => {
            gamma.insert(LF::InN(a, x));
        }
        RuleId::Single => {
            gamma.insert(LF::InN(NbhdLabel::Singleton(x), x));
        }
        RuleId::Repl1 | RuleId::Repl2 => {
            gamma.insert(LF::MemberOf(y, NbhdLabel::Singleton(x)));
            let subject = if rule == RuleId::Repl1 { x } else { y };
            gamma.insert(match rng.random_range(0..3u32) {
                0 => LF::At(subject, Formula::atom("q")),
                1 => LF::MemberOf(subject, b),
                _ => LF::InN(b, subject),
            });
        }
        RuleId::Unif1 | RuleId::Unif2 => {
            gamma.insert(LF::InN(a, x));
            gamma.insert(LF::MemberOf(y, a));
            let inner = if rule == RuleId::Unif1 { y } else { x };
            gamma.insert(LF::InN(b, inner));
            gamma.insert(LF::MemberOf(z, b));
        }
        RuleId::Abs1 | RuleId::Abs2 => {
            gamma.insert(LF::InN(a, x));
            gamma.insert(LF::MemberOf(y, a));
            let owner = if rule == RuleId::Abs1 { x } else { y };
            gamma.insert(LF::InN(b, owner));
        }
    }
    Sequent::new(gamma, delta).expect("seeded sequents keep relational atoms left")
}

/// A realization of every label in the sequent: worlds at random,
/// neighbourhood labels biased toward family members of the world they are
/// asserted to belong to, singletons canonical.
fn random_realization(
    rng: &mut ChaCha8Rng,
    model: &NeighbourhoodModel,
    s: &Sequent,
) -> Realization {
    let k = model.world_count();
    let mut r = Realization::default();
    for x in s.world_labels() {
        r.world_map.insert(x, rng.random_range(0..k));
    }
    for a in s.nbhd_labels() {
        let set = match a {
            NbhdLabel::Singleton(x) => BTreeSet::from([r.world_map[&x]]),
            NbhdLabel::Plain(_) => {
                let asserted_at = s.antecedent.iter().find_map(|lf| match lf {
                    LabelledFormula::InN(b, x) if *b == a => r.world_map.get(x).copied(),
                    _ => None,
                });
                match asserted_at {
                    Some(w) if !model.family(w).is_empty() && rng.random_bool(0.75) => {
                        model.family(w).iter().choose(rng).unwrap().clone()
                    }
                    _ => random_nonempty_subset(rng, k),
                }
            }
        };
        r.nbhd_map.insert(a, set);
    }
    r
}

/// Singleton labels introduced by a premise are realized canonically.
fn realize_premise_singletons(r: &mut Realization, premises: &[Sequent]) {
    for premise in premises {
        for a in premise.nbhd_labels() {
            if let NbhdLabel::Singleton(x) = a {
                let w = r.world_map[&x];
                r.nbhd_map.entry(a).or_insert_with(|| BTreeSet::from([w]));
            }
        }
    }
}

/// All ways to realize the fresh labels of an instance: any world for a
/// fresh world label, any nonempty set of worlds for a fresh
/// neighbourhood label.
fn extensions(
    model: &NeighbourhoodModel,
    base: &Realization,
    fresh: &[Label],
) -> Vec<Realization> {
    match fresh {
        [] => vec![base.clone()],
        [Label::World(x)] => (0..model.world_count())
            .map(|w| {
                let mut e = base.clone();
                e.world_map.insert(*x, w);
                e
            })
            .collect(),
        [Label::Nbhd(a)] => {
            let k = model.world_count();
            (1u32..1 << k)
                .map(|mask| {
                    let set: BTreeSet<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
                    let mut e = base.clone();
                    e.nbhd_map.insert(*a, set);
                    e
                })
                .collect()
        }
        _ => panic!("no rule takes more than one fresh label"),
    }
}

fn fresh_labels_for(rule: RuleId) -> Vec<Label> {
    rule.fresh_kinds()
        .iter()
        .map(|kind| match kind {
            cumulus::calculus::FreshKind::World => Label::World(WorldLabel(9)),
            cumulus::calculus::FreshKind::Nbhd => Label::Nbhd(NbhdLabel::Plain(9)),
        })
        .collect()
}

fn soundness_sample(rng: &mut ChaCha8Rng, rule: RuleId, logic: &Logic) -> bool {
    let model = random_model(rng, logic);
    let s = seeded_sequent(rng, rule);
    let base = random_realization(rng, &model, &s);

    if matches!(rule, RuleId::Init | RuleId::BotL) {
        assert_eq!(closing_rule(&s), Some(rule), "seeded leaf does not close");
        let ok = satisfies_sequent(&model, &base, &s).expect("leaf labels realized");
        assert!(
            ok,
            "closing rule {rule} unsound: a closed leaf is falsified\nmodel:\n{model}\nsequent: {s}"
        );
        return true;
    }

    let fresh = fresh_labels_for(rule);
    let instances = candidate_instances(&s, rule, &fresh).expect("fresh labels fit the rule");
    let inst: &RuleInstance = instances
        .choose(rng)
        .unwrap_or_else(|| panic!("seeding left no {rule} instance on {s}"));
    let mut base = base;
    realize_premise_singletons(&mut base, &inst.premises);

    let premises_hold = extensions(&model, &base, &inst.fresh).iter().all(|e| {
        inst.premises
            .iter()
            .all(|p| satisfies_sequent(&model, e, p).expect("premise labels realized"))
    });
    if !premises_hold {
        return false;
    }
    let conclusion_holds =
        satisfies_sequent(&model, &base, &s).expect("conclusion labels realized");
    assert!(
        conclusion_holds,
        "rule {rule} unsound in {}: premises satisfied under every extension, \
         conclusion falsified\nmodel:\n{model}\nsequent: {s}\nrealization: {base:?}\n\
         principals: {:?}",
        logic.name(),
        inst.principals,
    );
    true
}

#[test]
fn criterion_7_every_rule_is_sound_on_random_samples() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(0x50C1A1);
    for &rule in RuleId::all() {
        let logic = weakest_logic_for(rule);
        let mut armed = 0u32;
        for _ in 0..1000 {
            if soundness_sample(&mut rng, rule, &logic) {
                armed += 1;
            }
        }
        assert!(
            armed >= 25,
            "rule {rule}: only {armed} of 1000 samples had all premises satisfied; \
             the sampler has gone vacuous"
        );
    }
}

#[test]
fn criterion_8_base_logic_theorems_lift_across_the_lattice() {
    let _g = serial();
    let sw = sweep();
    let mut failures = Vec::new();
    let mut lifted = 0u32;
    for (fi, f) in sw.formulas.iter().enumerate() {
        if !matches!(sw.entries[0][fi].verdict, Verdict::Provable) {
            continue;
        }
        lifted += 1;
        for (li, &ln) in NON_A_LOGICS.iter().enumerate().skip(1) {
            match &sw.entries[li][fi].verdict {
                Verdict::Provable => {}
                Verdict::Refutable { .. } => {
                    failures.push(format!("{f}: provable in PCL but refutable in {ln}"))
                }
                Verdict::Unknown(reason) => {
                    failures.push(format!("{f}: provable in PCL but unknown in {ln} ({reason})"))
                }
            }
        }
    }
    assert!(failures.is_empty(), "\n{}", failures.join("\n"));
    assert!(lifted >= 5, "only {lifted} PCL theorems in the sweep; the generator went trivial");
}

#[test]
fn criterion_9_absoluteness_logics_prove_their_axioms_and_report_honestly() {
    let _g = serial();
    let mut failures = Vec::new();
    for &ln in &A_LOGICS {
        let logic = Logic::new(ln);
        for &(name, text) in ABSOLUTENESS_AXIOMS {
            match prove(&pf(text), &logic, &Budget::default()) {
                SearchOutcome::Provable(d) => {
                    if let Err(e) = check_derivation(&d, &logic) {
                        failures.push(format!("{name} in {ln}: derivation rejected: {e}"));
                    }
                }
                other => failures.push(format!(
                    "{name} in {ln}: expected Provable, got {}",
                    verdict_name(&other)
                )),
            }
        }
        // Every refutation claim must rest on a saturated branch; running
        // out of budget must surface as Unknown instead.
        let probes = [
            "p",
            "p > q",
            "(p > q) -> ((p & r) > q)",
            "(p > q) & (q > r) -> (p > r)",
            "(p > q) -> (~q > ~p)",
        ];
        for text in probes {
            let f = pf(text);
            match prove(&f, &logic, &Budget::default()) {
                SearchOutcome::Provable(d) => {
                    if let Err(e) = check_derivation(&d, &logic) {
                        failures.push(format!("{ln} on {text}: derivation rejected: {e}"));
                    }
                }
                SearchOutcome::Refutable(branch) => {
                    let report = is_saturated(&branch, &logic);
                    if !report.saturated() {
                        failures.push(format!(
                            "{ln} on {text}: refutable without a saturated branch: {report}"
                        ));
                    }
                }
                SearchOutcome::Unknown(_) => {}
            }
        }
    }
    assert!(failures.is_empty(), "\n{}", failures.join("\n"));
}
