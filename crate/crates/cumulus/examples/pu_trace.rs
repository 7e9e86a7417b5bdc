//! Traces one slow uniformity-logic search, for profiling.

use cumulus::calculus::{Logic, LogicName};
use cumulus::formula::parse_formula;
use cumulus::search::{prove, prove_traced, Budget};

fn main() {
    let nodes: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2000);
    let plain = std::env::args().nth(2).as_deref() == Some("plain");
    let f = parse_formula("r > ((r > q) > false)").unwrap();
    let logic = Logic::new(LogicName::PU);
    let budget = Budget {
        max_nodes: nodes,
        ..Budget::default()
    };
    if plain {
        let start = std::time::Instant::now();
        let outcome = prove(&f, &logic, &budget);
        println!("outcome: {}", match outcome {
            cumulus::search::SearchOutcome::Provable(_) => "provable",
            cumulus::search::SearchOutcome::Refutable(_) => "refutable",
            cumulus::search::SearchOutcome::Unknown(_) => "unknown",
        });
        println!("wall: {:?}", start.elapsed());
    } else {
        let traced = prove_traced(&f, &logic, &budget);
        println!("stats: {:?}", traced.stats);
        let mut counts = std::collections::BTreeMap::new();
        for ev in &traced.trace {
            if let cumulus::search::TraceEvent::Expand { rule, .. } = ev {
                *counts.entry(format!("{rule:?}")).or_insert(0u32) += 1;
            }
        }
        let mut counts: Vec<_> = counts.into_iter().collect();
        counts.sort_by_key(|(_, n)| std::cmp::Reverse(*n));
        for (rule, n) in counts.iter().take(12) {
            println!("{rule:12} {n}");
        }
    }
    let profile = cumulus::calculus::PROFILE.lock().unwrap();
    let mut rows: Vec<_> = profile.iter().map(|(r, (d1, d2, n))| (*r, *d1, *d2, *n)).collect();
    rows.sort_by_key(|(_, d1, d2, _)| std::cmp::Reverse(*d1 + *d2));
    for (rule, enum_d, sat_d, cands) in rows.iter().take(16) {
        println!(
            "{rule:?}\tenum {:8.1}ms\tsat {:8.1}ms\t{cands} candidates",
            enum_d.as_secs_f64() * 1e3,
            sat_d.as_secs_f64() * 1e3
        );
    }
}
