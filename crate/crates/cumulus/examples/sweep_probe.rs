//! Replays the acceptance sweep with progress output, for profiling.

use cumulus::calculus::{Logic, LogicName};
use cumulus::formula::Formula;
use cumulus::search::{prove, Budget, SearchOutcome};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::time::Instant;

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

fn peak_rss_mb() -> u64 {
    let status = std::fs::read_to_string("/proc/self/status").unwrap_or_default();
    for line in status.lines() {
        if let Some(rest) = line.strip_prefix("VmHWM:") {
            let kb: u64 = rest.trim().trim_end_matches(" kB").trim().parse().unwrap_or(0);
            return kb / 1024;
        }
    }
    0
}

fn main() {
    let logics = [
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
    for ln in logics {
        let logic = Logic::new(ln);
        for (i, f) in formulas.iter().enumerate() {
            let start = Instant::now();
            let outcome = prove(f, &logic, &Budget::default());
            let wall = start.elapsed();
            let verdict = match &outcome {
                SearchOutcome::Provable(_) => "P",
                SearchOutcome::Refutable(_) => "R",
                SearchOutcome::Unknown(_) => "U",
            };
            println!(
                "{ln}\t{i:3}\t{verdict}\t{:8.1}ms\t{:5}MB\t{f}",
                wall.as_secs_f64() * 1e3,
                peak_rss_mb()
            );
        }
    }
}
