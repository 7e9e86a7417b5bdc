//! Command line interface for the conditional-logic toolkit.
//!
//! Five subcommands tie the engine together: `prove` decides a formula by
//! backward proof search, `check-model` evaluates a formula in a model
//! loaded from JSON and checks the model's frame, `enumerate` looks for a
//! small countermodel exhaustively, `check-proof` validates a proof object,
//! and `corpus` runs a table of expected verdicts.
//!
//! Exit codes form a stable contract: 0 provable (or check passed),
//! 1 refutable (or check failed), 2 unknown (budget exhausted or no model
//! found within the bound), 64 usage or malformed input.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use cumulus::calculus::{check_derivation, Derivation, Flag, Logic, LogicName};
use cumulus::countermodel::{extract_model, model_invariant_report};
use cumulus::formula::{parse_formula, render_formula, Formula};
use cumulus::search::{prove_traced, Budget, SearchOutcome, TracedOutcome};
use cumulus::semantics::{
    check_frame, enumerate_countermodel, EnumerateError, NeighbourhoodModel, Realization,
};

const EXIT_PROVABLE: u8 = 0;
const EXIT_REFUTABLE: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "cumulus",
    version,
    about = "Decision procedures for preferential conditional logics",
    after_help = "Exit codes: 0 provable/check passed, 1 refutable/check failed, \
                  2 unknown, 64 usage error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a formula by backward proof search
    Prove(ProveArgs),
    /// Evaluate a formula in a model from JSON and check the model's frame
    CheckModel(CheckModelArgs),
    /// Search exhaustively for a countermodel with at most a few worlds
    Enumerate(EnumerateArgs),
    /// Validate a proof object from JSON against the rules of a logic
    CheckProof(CheckProofArgs),
    /// Run a TSV corpus of (logic, formula, expected) entries
    Corpus(CorpusArgs),
}

#[derive(Args)]
struct FormulaInput {
    /// Formula text, e.g. "(p > q) -> ~q > ~p"
    #[arg(long)]
    formula: Option<String>,
    /// File containing the formula text
    #[arg(long)]
    file: Option<PathBuf>,
}

impl FormulaInput {
    fn load(&self) -> Result<Formula> {
        let text = match (&self.formula, &self.file) {
            (Some(t), None) => t.clone(),
            (None, Some(path)) => fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?,
            _ => bail!("exactly one of --formula and --file is required"),
        };
        Ok(parse_formula(text.trim())?)
    }
}

#[derive(Args)]
struct BudgetArgs {
    /// Maximum number of sequents expanded
    #[arg(long)]
    max_nodes: Option<u64>,
    /// Maximum number of labels on any single branch
    #[arg(long)]
    max_labels: Option<u64>,
    /// Wall-clock limit in seconds
    #[arg(long)]
    timeout: Option<f64>,
}

impl BudgetArgs {
    fn to_budget(&self) -> Result<Budget> {
        let mut budget = Budget::default();
        if let Some(n) = self.max_nodes {
            budget.max_nodes = n;
        }
        if let Some(n) = self.max_labels {
            budget.max_labels = n;
        }
        if let Some(secs) = self.timeout {
            if !secs.is_finite() || secs <= 0.0 {
                bail!("--timeout must be a positive number of seconds");
            }
            budget.wall_clock = Some(Duration::from_secs_f64(secs));
        }
        Ok(budget)
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Include the search trace (prove) or per-entry detail (corpus)
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct ProveArgs {
    /// Logic name: PCL, PN, PT, PW, PC, PU, PNU, PTU, PWU, PCU, PA, PNA, PTA, PWA, PCA
    #[arg(long)]
    logic: String,
    #[command(flatten)]
    input: FormulaInput,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CheckModelArgs {
    /// Logic whose frame conditions the model must satisfy
    #[arg(long)]
    logic: String,
    /// Model JSON file (as printed by `prove --format json` or `enumerate`)
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: FormulaInput,
    /// World at which to evaluate the formula (defaults to the model's root)
    #[arg(long)]
    world: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Logic whose frame conditions candidate models must satisfy
    #[arg(long)]
    logic: String,
    #[command(flatten)]
    input: FormulaInput,
    /// Largest number of worlds to try
    #[arg(long, default_value_t = 3)]
    max_worlds: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CheckProofArgs {
    /// Proof JSON file (as printed by `prove --format json`)
    #[arg(long)]
    file: PathBuf,
    /// Check against this logic instead of the one recorded in the proof
    #[arg(long)]
    logic: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus TSV file: logic <TAB> formula <TAB> provable|refutable|unknown-ok
    #[arg(long)]
    file: PathBuf,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests exit cleanly; everything else is a
            // usage error.
            let code = if e.exit_code() == 0 { 0 } else { EXIT_USAGE };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Prove(args) => cmd_prove(args),
        Command::CheckModel(args) => cmd_check_model(args),
        Command::Enumerate(args) => cmd_enumerate(args),
        Command::CheckProof(args) => cmd_check_proof(args),
        Command::Corpus(args) => cmd_corpus(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn parse_logic(name: &str) -> Result<Logic> {
    let name: LogicName = name.parse()?;
    Ok(Logic::new(name))
}

/// Maps realized labels to world names and world-name sets so the model in
/// the same report can be read back against the branch.
fn realization_json(r: &Realization, m: &NeighbourhoodModel) -> Value {
    let worlds: Map<String, Value> = r
        .world_map
        .iter()
        .map(|(x, &w)| (x.to_string(), Value::String(m.name_of(w).to_string())))
        .collect();
    let neighbourhoods: Map<String, Value> = r
        .nbhd_map
        .iter()
        .map(|(a, set)| {
            let names: Vec<Value> = set
                .iter()
                .map(|&w| Value::String(m.name_of(w).to_string()))
                .collect();
            (a.to_string(), Value::Array(names))
        })
        .collect();
    json!({ "worlds": worlds, "neighbourhoods": neighbourhoods })
}

fn stats_json(t: &TracedOutcome) -> Value {
    json!({
        "nodes": t.stats.nodes,
        "peak_labels": t.stats.peak_labels,
        "max_depth": t.stats.max_depth,
        "wall_ms": t.stats.elapsed.as_secs_f64() * 1000.0,
    })
}

fn print_stats_text(t: &TracedOutcome) {
    println!(
        "nodes: {}  peak labels: {}  max depth: {}  time: {:.1} ms",
        t.stats.nodes,
        t.stats.peak_labels,
        t.stats.max_depth,
        t.stats.elapsed.as_secs_f64() * 1000.0
    );
}

fn cmd_prove(args: ProveArgs) -> Result<u8> {
    let logic = parse_logic(&args.logic)?;
    let formula = args.input.load()?;
    let budget = args.budget.to_budget()?;
    let traced = prove_traced(&formula, &logic, &budget);

    let mut report = Map::new();
    report.insert("logic".into(), json!(logic.name().as_str()));
    report.insert("formula".into(), json!(render_formula(&formula)));
    report.insert("stats".into(), stats_json(&traced));
    if args.output.verbose {
        let events: Vec<Value> = traced.trace.iter().map(|e| e.to_json()).collect();
        report.insert("trace".into(), Value::Array(events));
    }

    let code = match &traced.outcome {
        SearchOutcome::Provable(d) => {
            report.insert("verdict".into(), json!("provable"));
            report.insert("proof".into(), d.to_json());
            if args.output.format == Format::Text {
                println!("verdict: provable");
                println!("logic: {}  formula: {}", logic.name(), render_formula(&formula));
                print_stats_text(&traced);
                println!("proof: {} nodes (print with --format json)", d.nodes.len());
            }
            EXIT_PROVABLE
        }
        SearchOutcome::Refutable(branch) => {
            report.insert("verdict".into(), json!("refutable"));
            if logic.has(Flag::A) {
                // No finite extraction for absolute logics; the saturated
                // branch itself is the refutation certificate.
                report.insert("branch".into(), branch.to_json());
                if args.output.format == Format::Text {
                    println!("verdict: refutable (saturated branch; no finite model extraction under absoluteness)");
                    println!("logic: {}  formula: {}", logic.name(), render_formula(&formula));
                    print_stats_text(&traced);
                }
            } else {
                let (model, realization) = extract_model(branch, &logic)?;
                let mut problems = Vec::new();
                if let Err(v) = model_invariant_report(&model, &realization, branch) {
                    problems.push(v.to_string());
                }
                let frame = check_frame(&model, &logic);
                if !frame.is_ok() {
                    problems.push(frame.to_string());
                }
                if model.forces(model.root(), &formula) {
                    problems.push("formula holds at the root world".to_string());
                }
                report.insert("model".into(), model.to_json());
                report.insert("realization".into(), realization_json(&realization, &model));
                report.insert("verified".into(), json!(problems.is_empty()));
                if !problems.is_empty() {
                    report.insert("verification_problems".into(), json!(problems));
                }
                if args.output.format == Format::Text {
                    println!("verdict: refutable");
                    println!("logic: {}  formula: {}", logic.name(), render_formula(&formula));
                    print_stats_text(&traced);
                    println!("{model}");
                    if problems.is_empty() {
                        println!(
                            "countermodel verified: branch invariants, frame conditions, root falsification"
                        );
                    }
                }
                for p in &problems {
                    eprintln!("warning: extracted model failed verification: {p}");
                }
            }
            EXIT_REFUTABLE
        }
        SearchOutcome::Unknown(ex) => {
            report.insert("verdict".into(), json!("unknown"));
            report.insert("reason".into(), json!(ex.reason.as_str()));
            if args.output.format == Format::Text {
                println!("verdict: unknown");
                println!("logic: {}  formula: {}", logic.name(), render_formula(&formula));
                println!("{ex}");
                print_stats_text(&traced);
            }
            EXIT_UNKNOWN
        }
    };
    if args.output.format == Format::Json {
        println!("{}", serde_json::to_string_pretty(&Value::Object(report))?);
    } else if args.output.verbose {
        for event in &traced.trace {
            println!("{}", event.to_json());
        }
    }
    Ok(code)
}

/// Accepts either a bare object or a `prove --format json` report wrapping
/// it under the given key, so reports round-trip without editing.
fn unwrap_report(v: Value, key: &str) -> Value {
    match v {
        Value::Object(ref obj) if obj.contains_key(key) => obj[key].clone(),
        other => other,
    }
}

fn load_json(path: &PathBuf) -> Result<Value> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let v: Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))?;
    Ok(v)
}

fn cmd_check_model(args: CheckModelArgs) -> Result<u8> {
    let logic = parse_logic(&args.logic)?;
    let formula = args.input.load()?;
    let raw = unwrap_report(load_json(&args.model)?, "model");
    let model = NeighbourhoodModel::from_json(&raw)?;
    let world = match &args.world {
        Some(name) => model
            .index_of(name)
            .with_context(|| format!("world {name:?} does not occur in the model"))?,
        None => model.root(),
    };

    let holds = model.forces(world, &formula);
    let frame = check_frame(&model, &logic);
    let code = if holds && frame.is_ok() {
        EXIT_PROVABLE
    } else {
        EXIT_REFUTABLE
    };
    match args.output.format {
        Format::Json => {
            let report = json!({
                "logic": logic.name().as_str(),
                "formula": render_formula(&formula),
                "world": model.name_of(world),
                "formula_holds": holds,
                "frame_ok": frame.is_ok(),
                "frame_violations": frame.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Format::Text => {
            println!(
                "formula {} {} at world {}",
                render_formula(&formula),
                if holds { "holds" } else { "fails" },
                model.name_of(world)
            );
            if frame.is_ok() {
                println!("frame conditions for {}: ok", logic.name());
            } else {
                println!("frame conditions for {}: {}", logic.name(), frame);
            }
            if args.output.verbose {
                println!("{model}");
            }
        }
    }
    Ok(code)
}

fn cmd_enumerate(args: EnumerateArgs) -> Result<u8> {
    let logic = parse_logic(&args.logic)?;
    let formula = args.input.load()?;
    let found = match enumerate_countermodel(&formula, &logic, args.max_worlds) {
        Ok(found) => found,
        Err(e @ EnumerateError::TooLarge { .. }) => return Err(e.into()),
    };
    match &found {
        Some(model) => {
            match args.output.format {
                Format::Json => {
                    let report = json!({
                        "found": true,
                        "logic": logic.name().as_str(),
                        "formula": render_formula(&formula),
                        "worlds": model.world_count(),
                        "model": model.to_json(),
                    });
                    println!("{}", serde_json::to_string_pretty(&report)?);
                }
                Format::Text => {
                    println!(
                        "countermodel with {} world(s) falsifies {} at the root",
                        model.world_count(),
                        render_formula(&formula)
                    );
                    println!("{model}");
                }
            }
            Ok(EXIT_REFUTABLE)
        }
        None => {
            match args.output.format {
                Format::Json => {
                    let report = json!({
                        "found": false,
                        "logic": logic.name().as_str(),
                        "formula": render_formula(&formula),
                        "max_worlds": args.max_worlds,
                    });
                    println!("{}", serde_json::to_string_pretty(&report)?);
                }
                Format::Text => {
                    println!(
                        "no countermodel with at most {} world(s); the formula may still fail in larger models",
                        args.max_worlds
                    );
                }
            }
            Ok(EXIT_UNKNOWN)
        }
    }
}

fn cmd_check_proof(args: CheckProofArgs) -> Result<u8> {
    let raw = unwrap_report(load_json(&args.file)?, "proof");
    let derivation = Derivation::from_json(&raw)?;
    let logic = match &args.logic {
        Some(name) => parse_logic(name)?,
        None => Logic::new(derivation.logic),
    };
    let verdict = check_derivation(&derivation, &logic);
    let code = if verdict.is_ok() {
        EXIT_PROVABLE
    } else {
        EXIT_REFUTABLE
    };
    match args.output.format {
        Format::Json => {
            let report = json!({
                "valid": verdict.is_ok(),
                "logic": logic.name().as_str(),
                "nodes": derivation.nodes.len(),
                "root": derivation.nodes[derivation.root].sequent.to_string(),
                "error": verdict.as_ref().err().map(|e| e.to_string()),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Format::Text => match &verdict {
            Ok(()) => println!(
                "valid derivation in {}: {} nodes, root {}",
                logic.name(),
                derivation.nodes.len(),
                derivation.nodes[derivation.root].sequent
            ),
            Err(e) => println!("invalid derivation: {e}"),
        },
    }
    Ok(code)
}

#[derive(Copy, Clone, PartialEq, Eq)]
enum Expected {
    Provable,
    Refutable,
    UnknownOk,
}

impl Expected {
    fn parse(text: &str) -> Option<Expected> {
        match text {
            "provable" => Some(Expected::Provable),
            "refutable" => Some(Expected::Refutable),
            "unknown-ok" => Some(Expected::UnknownOk),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Expected::Provable => "provable",
            Expected::Refutable => "refutable",
            Expected::UnknownOk => "unknown-ok",
        }
    }
}

struct CorpusEntry {
    line: usize,
    logic: Logic,
    formula: Formula,
    expected: Expected,
}

fn parse_corpus(text: &str) -> (Vec<CorpusEntry>, Vec<(usize, String)>) {
    let mut entries = Vec::new();
    let mut malformed = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
        if fields.len() != 3 {
            malformed.push((line, format!("expected 3 tab-separated fields, found {}", fields.len())));
            continue;
        }
        let logic = match parse_logic(fields[0]) {
            Ok(l) => l,
            Err(e) => {
                malformed.push((line, e.to_string()));
                continue;
            }
        };
        let formula = match parse_formula(fields[1]) {
            Ok(f) => f,
            Err(e) => {
                malformed.push((line, e.to_string()));
                continue;
            }
        };
        let expected = match Expected::parse(fields[2]) {
            Some(e) => e,
            None => {
                malformed.push((
                    line,
                    format!("expected provable, refutable, or unknown-ok, found {:?}", fields[2]),
                ));
                continue;
            }
        };
        entries.push(CorpusEntry {
            line,
            logic,
            formula,
            expected,
        });
    }
    (entries, malformed)
}

/// Runs one corpus entry and verifies the verdict's certificate: proofs go
/// back through the checker, countermodels through frame and invariant
/// checks. Returns (got, pass, detail, milliseconds).
fn run_corpus_entry(entry: &CorpusEntry, budget: &Budget) -> (String, bool, String, f64) {
    let traced = prove_traced(&entry.formula, &entry.logic, budget);
    let ms = traced.stats.elapsed.as_secs_f64() * 1000.0;
    let (got, certified, detail) = match &traced.outcome {
        SearchOutcome::Provable(d) => match check_derivation(d, &entry.logic) {
            Ok(()) => ("provable", true, String::new()),
            Err(e) => ("provable", false, format!("derivation rejected: {e}")),
        },
        SearchOutcome::Refutable(branch) => {
            if entry.logic.has(Flag::A) {
                ("refutable", true, "saturated branch (no model extraction)".to_string())
            } else {
                match extract_model(branch, &entry.logic) {
                    Ok((model, realization)) => {
                        let mut problems = Vec::new();
                        if let Err(v) = model_invariant_report(&model, &realization, branch) {
                            problems.push(v.to_string());
                        }
                        let frame = check_frame(&model, &entry.logic);
                        if !frame.is_ok() {
                            problems.push(frame.to_string());
                        }
                        if model.forces(model.root(), &entry.formula) {
                            problems.push("formula holds at the root world".to_string());
                        }
                        if problems.is_empty() {
                            let detail = format!("verified model, {} world(s)", model.world_count());
                            ("refutable", true, detail)
                        } else {
                            ("refutable", false, problems.join("; "))
                        }
                    }
                    Err(e) => ("refutable", false, format!("extraction failed: {e}")),
                }
            }
        }
        SearchOutcome::Unknown(ex) => ("unknown", true, ex.to_string()),
    };
    let pass = match entry.expected {
        Expected::Provable => got == "provable" && certified,
        Expected::Refutable => got == "refutable" && certified,
        Expected::UnknownOk => certified,
    };
    (got.to_string(), pass, detail, ms)
}

fn cmd_corpus(args: CorpusArgs) -> Result<u8> {
    let text = fs::read_to_string(&args.file)
        .with_context(|| format!("cannot read {}", args.file.display()))?;
    let budget = args.budget.to_budget()?;
    let (entries, malformed) = parse_corpus(&text);

    let mut results = Vec::new();
    let mut passed = 0usize;
    for entry in &entries {
        let (got, pass, detail, ms) = run_corpus_entry(entry, &budget);
        if pass {
            passed += 1;
        }
        if args.output.format == Format::Text {
            let status = if pass { "PASS" } else { "FAIL" };
            let mut line = format!(
                "{status} line {:>3}  {:<4} expected {:<10} got {:<9} {:>8.1} ms  {}",
                entry.line,
                entry.logic.name(),
                entry.expected.as_str(),
                got,
                ms,
                render_formula(&entry.formula),
            );
            if (args.output.verbose || !pass) && !detail.is_empty() {
                line.push_str(&format!("  [{detail}]"));
            }
            println!("{line}");
        }
        results.push(json!({
            "line": entry.line,
            "logic": entry.logic.name().as_str(),
            "formula": render_formula(&entry.formula),
            "expected": entry.expected.as_str(),
            "got": got,
            "pass": pass,
            "detail": detail,
            "wall_ms": ms,
        }));
    }

    let failed = entries.len() - passed;
    match args.output.format {
        Format::Json => {
            let report = json!({
                "entries": results,
                "passed": passed,
                "failed": failed,
                "malformed": malformed
                    .iter()
                    .map(|(line, msg)| json!({ "line": line, "error": msg }))
                    .collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Format::Text => {
            for (line, msg) in &malformed {
                println!("MALFORMED line {line}: {msg}");
            }
            println!(
                "{} passed, {} failed, {} malformed",
                passed,
                failed,
                malformed.len()
            );
        }
    }
    Ok(if failed == 0 && malformed.is_empty() {
        EXIT_PROVABLE
    } else {
        EXIT_REFUTABLE
    })
}
