//! `wardlog` command-line front end.
//!
//! Exit codes:
//! 0 success, 1 the program is not certified (warded and safely tainted),
//! 2 usage, parse or I/O error, 3 unsatisfiable / chase failure,
//! 4 step limit reached, 5 the two satisfiability routes disagree.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use wardlog::analysis::{analyze, AnalysisReport, PositionAnalysis};
use wardlog::chase::{
    chase, export_dot, write_transcript, ChaseConfig, ChaseOutcome, ChaseStatus, DotOptions, Failure, Variant,
};
use wardlog::egd::{check_satisfiability, EgdConfig};
use wardlog::model::Atom;
use wardlog::reason::{answer, apply_egds, materialize, Certification, ReasonOptions, Status};
use wardlog::syntax::{load_csv_dir, merge_facts, parse_file, validate, Program};

const OK: u8 = 0;
const REJECTED: u8 = 1;
const INPUT_ERROR: u8 = 2;
const UNSATISFIABLE: u8 = 3;
const STEP_LIMIT: u8 = 4;
const DISAGREEMENT: u8 = 5;

#[derive(Parser)]
#[command(name = "wardlog", version, about = "Warded Datalog+/- reasoning with harmless EGDs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Affected and tainted positions, wards and the safe-taintedness verdict.
    Analyze(AnalyzeArgs),
    /// Run a chase and print the resulting instance.
    Chase(ChaseArgs),
    /// Answer every query in the program file.
    Query(QueryArgs),
    /// Decide whether the database and rules are satisfiable.
    Check(CheckArgs),
}

#[derive(Args)]
struct Input {
    /// Program file (.dlge).
    program: PathBuf,
    /// Directory of `<predicate>.csv` files merged into the inline facts.
    #[arg(long, value_name = "DIR")]
    facts: Option<PathBuf>,
}

#[derive(Args)]
struct Limits {
    /// Maximum number of TGD chase steps.
    #[arg(long, value_name = "N", default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    limit: u64,
    /// Rewrite the instance after this many new EGD equalities instead of
    /// once per pass.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    batch_threshold: Option<u64>,
}

impl Limits {
    fn chase(&self) -> ChaseConfig {
        ChaseConfig::with_limit(self.limit as usize)
    }

    fn egd(&self) -> EgdConfig {
        EgdConfig { batch_threshold: self.batch_threshold.map(|n| n as usize) }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
    Dot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Standard,
    Warded,
    Relaxed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Encoding,
    Direct,
    Both,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct ChaseArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    limits: Limits,
    /// `warded` and `relaxed` chase the TGDs and then apply the EGDs to
    /// fixpoint; `standard` interleaves them.
    #[arg(long, value_enum, default_value = "relaxed")]
    variant: VariantArg,
    /// Ignore the EGDs.
    #[arg(long)]
    tgd_only: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Group DOT nodes by track.
    #[arg(long)]
    clusters: bool,
    /// Write every chase step as a JSON line to FILE.
    #[arg(long, value_name = "FILE")]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    limits: Limits,
    /// Ignore the EGDs.
    #[arg(long)]
    tgd_only: bool,
    /// Answer even when the program is not certified harmless.
    #[arg(long, conflicts_with = "standard_fallback")]
    force_unsafe: bool,
    /// Answer uncertified programs over the bounded standard chase.
    #[arg(long)]
    standard_fallback: bool,
    /// Drop answer tuples that contain labelled nulls.
    #[arg(long)]
    constants_only: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    limits: Limits,
    #[arg(long, value_enum, default_value = "both")]
    method: Method,
    /// Check even when the program is not certified harmless.
    #[arg(long)]
    force_unsafe: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Chase(a) => cmd_chase(&a),
        Command::Query(a) => cmd_query(&a),
        Command::Check(a) => cmd_check(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}

fn require_format(f: Format, allowed: &[Format], cmd: &str) -> Result<()> {
    if !allowed.contains(&f) {
        let name = f.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
        bail!("format '{name}' is not available for {cmd}");
    }
    Ok(())
}

/// Parses and validates the program, then merges the CSV facts.
fn load(input: &Input) -> Result<(Program, Vec<Atom>)> {
    let p = parse_file(&input.program)?;
    let diags = validate(&p);
    if !diags.is_empty() {
        let lines: Vec<String> = diags
            .iter()
            .map(|d| match d.rule {
                Some(r) => format!("{r}: {}", d.message),
                None => d.message.clone(),
            })
            .collect();
        bail!("{}: ill-formed program\n  {}", input.program.display(), lines.join("\n  "));
    }
    let mut db = p.facts.clone();
    if let Some(dir) = &input.facts {
        merge_facts(&mut db, load_csv_dir(dir)?);
    }
    Ok((p, db))
}

fn stdout() -> BufWriter<std::io::StdoutLock<'static>> {
    BufWriter::new(std::io::stdout().lock())
}

fn certified(a: &PositionAnalysis) -> bool {
    a.is_warded() && a.is_safe()
}

fn print_rejection(a: &PositionAnalysis) {
    for v in &a.wardedness.violations {
        let vars: Vec<String> = v.variables.iter().map(|t| t.to_string()).collect();
        eprintln!("{}: no single body atom holds the dangerous variables {}", v.rule, vars.join(", "));
    }
    for w in a.safety.witnesses() {
        eprintln!("{w}");
    }
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<u8> {
    require_format(args.format, &[Format::Text, Format::Json], "analyze")?;
    let (p, _) = load(&args.input)?;
    let a = analyze(&p);
    let report = AnalysisReport::new(&p, &a);
    let mut out = stdout();
    if args.format == Format::Json {
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
    } else {
        write_analysis_text(&mut out, &report)?;
    }
    out.flush()?;
    Ok(if certified(&a) { OK } else { REJECTED })
}

fn list<T: ToString>(xs: &[T]) -> String {
    if xs.is_empty() {
        "none".to_string()
    } else {
        xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
    }
}

fn write_analysis_text(out: &mut impl Write, r: &AnalysisReport) -> Result<()> {
    writeln!(out, "warded: {}", if r.warded { "yes" } else { "no" })?;
    for v in &r.ward_violations {
        writeln!(out, "  {}: no ward for {}", v.rule, list(&v.variables))?;
    }
    writeln!(out, "affected: {}", list(&r.affected))?;
    writeln!(out, "tainted:")?;
    for q in &r.tainted {
        let cause = r.taint_cause.get(&q.to_string()).map(|c| list(c)).unwrap_or_default();
        writeln!(out, "  {q} <- {cause}")?;
    }
    writeln!(out, "rules:")?;
    for rule in &r.rules {
        match rule.ward {
            Some(i) => writeln!(out, "  {}: {}  [ward: body atom {}]", rule.id, rule.text, i + 1)?,
            None => writeln!(out, "  {}: {}", rule.id, rule.text)?,
        }
    }
    writeln!(out, "safe taintedness: {}", if r.safe { "safe" } else { "unknown" })?;
    for w in &r.witnesses {
        writeln!(out, "  {w}")?;
    }
    let verdict = if r.warded && r.safe { "certified" } else { "not certified" };
    writeln!(out, "verdict: {verdict}")?;
    Ok(())
}

fn failure_json(f: &Failure) -> Value {
    json!({
        "rule": f.rule.to_string(),
        "left": f.left.to_string(),
        "right": f.right.to_string(),
        "trigger": f.trigger.iter().map(|(k, v)| (k.to_string(), Value::String(v.to_string()))).collect::<serde_json::Map<_, _>>(),
    })
}

fn run_chase(args: &ChaseArgs, p: &Program, db: &[Atom]) -> ChaseOutcome {
    let mut cfg = args.limits.chase();
    cfg.transcript = args.transcript.is_some();
    let owned;
    let p = if args.tgd_only {
        owned = p.tgds_only();
        &owned
    } else {
        p
    };
    match args.variant {
        VariantArg::Standard => chase(db, p, Variant::Standard, &cfg),
        VariantArg::Warded => apply_egds(chase(db, p, Variant::Warded, &cfg), &p.egds, &args.limits.egd()),
        VariantArg::Relaxed => apply_egds(chase(db, p, Variant::Relaxed, &cfg), &p.egds, &args.limits.egd()),
    }
}

fn cmd_chase(args: &ChaseArgs) -> Result<u8> {
    require_format(args.format, &[Format::Text, Format::Json, Format::Dot], "chase")?;
    let (p, db) = load(&args.input)?;
    let out = run_chase(args, &p, &db);
    if let Some(path) = &args.transcript {
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        write_transcript(&out.transcript, BufWriter::new(f))?;
    }

    let mut w = stdout();
    match args.format {
        Format::Dot => {
            let opts = DotOptions { clusters: args.clusters, ..Default::default() };
            w.write_all(export_dot(&out.graph, &out.instance, &opts).as_bytes())?;
        }
        Format::Json => {
            let v = json!({
                "variant": match args.variant {
                    VariantArg::Standard => "standard",
                    VariantArg::Warded => "warded",
                    VariantArg::Relaxed => "relaxed",
                },
                "status": out.status.as_str(),
                "facts": out.instance.sorted_atoms().iter().map(|a| a.to_string()).collect::<Vec<_>>(),
                "stats": {
                    "facts": out.instance.len(),
                    "rounds": out.stats.rounds,
                    "tgd_steps": out.stats.tgd_steps,
                    "egd_steps": out.stats.egd_steps,
                    "suppressed": out.stats.suppressed,
                },
                "egd_assignments": out.egd_assignments.iter().map(|(k, v)| (k.to_string(), Value::String(v.to_string()))).collect::<serde_json::Map<_, _>>(),
                "failure": match &out.status {
                    ChaseStatus::Failed(f) => failure_json(f),
                    _ => Value::Null,
                },
            });
            serde_json::to_writer_pretty(&mut w, &v)?;
            writeln!(w)?;
        }
        _ => {
            for a in out.instance.sorted_atoms() {
                writeln!(w, "{a}.")?;
            }
            writeln!(
                w,
                "% {}: {} facts, {} TGD steps, {} EGD steps, {} suppressed",
                out.status.as_str(),
                out.instance.len(),
                out.stats.tgd_steps,
                out.stats.egd_steps,
                out.stats.suppressed
            )?;
        }
    }
    w.flush()?;
    Ok(match &out.status {
        ChaseStatus::Saturated => OK,
        ChaseStatus::Failed(f) => {
            eprintln!("chase failed: {} would equate {} and {}", f.rule, f.left, f.right);
            UNSATISFIABLE
        }
        ChaseStatus::StepLimitExceeded => {
            eprintln!("step limit of {} reached", args.limits.limit);
            STEP_LIMIT
        }
    })
}

fn cmd_query(args: &QueryArgs) -> Result<u8> {
    require_format(args.format, &[Format::Text, Format::Json, Format::Csv], "query")?;
    let (p, db) = load(&args.input)?;
    let certification = if args.force_unsafe {
        Certification::Force
    } else if args.standard_fallback {
        Certification::StandardFallback
    } else {
        Certification::Require
    };
    let opts = ReasonOptions {
        chase: args.limits.chase(),
        egd: args.limits.egd(),
        certification,
        tgd_only: args.tgd_only,
        constants_only: args.constants_only,
    };
    let m = materialize(&db, &p, &opts);
    for w in &m.warnings {
        eprintln!("warning: {w}");
    }
    if p.queries.is_empty() {
        eprintln!("warning: {} contains no queries", args.input.program.display());
    }

    let results: Vec<_> = p.queries.iter().map(|q| (q, answer(&m, q, args.constants_only))).collect();
    if let Some((_, r)) = results.first() {
        if let Some(note) = &r.note {
            eprintln!("note: {note}");
        }
    }
    let mut w = stdout();
    match args.format {
        Format::Json => {
            let items: Vec<Value> = results
                .iter()
                .map(|(q, r)| {
                    let mut v = r.to_json();
                    v["query"] = Value::String(q.to_string());
                    v
                })
                .collect();
            serde_json::to_writer_pretty(&mut w, &json!({ "results": items }))?;
            writeln!(w)?;
        }
        Format::Csv => {
            for (i, (_, r)) in results.iter().enumerate() {
                if i > 0 {
                    writeln!(w)?;
                }
                w.write_all(r.to_csv().as_bytes())?;
            }
        }
        _ => {
            let several = results.len() > 1;
            for (q, r) in &results {
                if several {
                    writeln!(w, "% {q}")?;
                }
                if let Some(b) = r.bcq_answer {
                    writeln!(w, "{b}")?;
                }
                for t in r.tuples.iter().flatten() {
                    writeln!(w, "({})", list(t))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(match &m.status {
        Status::Answered | Status::Unsatisfiable => OK,
        Status::NotCertified { .. } => {
            let checked = if args.tgd_only { p.tgds_only() } else { p };
            print_rejection(&analyze(&checked));
            eprintln!("refusing to answer; pass --force-unsafe or --standard-fallback to override");
            REJECTED
        }
        Status::StepLimit => {
            eprintln!("step limit of {} reached", args.limits.limit);
            STEP_LIMIT
        }
    })
}

fn cmd_check(args: &CheckArgs) -> Result<u8> {
    require_format(args.format, &[Format::Text, Format::Json], "check")?;
    let (p, db) = load(&args.input)?;
    let a = analyze(&p);
    if !certified(&a) {
        if !args.force_unsafe {
            print_rejection(&a);
            eprintln!("refusing to check; pass --force-unsafe to override");
            return Ok(REJECTED);
        }
        eprintln!("warning: program is not certified harmless; the result may be wrong");
    }
    let cfg = args.limits.chase();

    let encoding = if args.method != Method::Direct {
        match check_satisfiability(&db, &p, &cfg) {
            Some(b) => Some(b),
            None => {
                eprintln!("step limit of {} reached", args.limits.limit);
                return Ok(STEP_LIMIT);
            }
        }
    } else {
        None
    };
    let mut failure = None;
    let direct = if args.method != Method::Encoding {
        let out = wardlog::reason::chase_h(&db, &p, &cfg, &args.limits.egd());
        match out.status {
            ChaseStatus::Saturated => Some(true),
            ChaseStatus::Failed(f) => {
                failure = Some(f);
                Some(false)
            }
            ChaseStatus::StepLimitExceeded => {
                eprintln!("step limit of {} reached", args.limits.limit);
                return Ok(STEP_LIMIT);
            }
        }
    } else {
        None
    };
    let verdicts: BTreeSet<bool> = encoding.iter().chain(direct.iter()).copied().collect();
    let agree = verdicts.len() == 1;
    let satisfiable = encoding.or(direct).unwrap_or(true);

    let mut w = stdout();
    if args.format == Format::Json {
        let v = json!({
            "satisfiable": if agree { Value::Bool(satisfiable) } else { Value::Null },
            "encoding": encoding,
            "direct": direct,
            "failure": failure.as_ref().map(failure_json),
        });
        serde_json::to_writer_pretty(&mut w, &v)?;
        writeln!(w)?;
    } else if agree {
        writeln!(w, "{}", if satisfiable { "satisfiable" } else { "unsatisfiable" })?;
        if let Some(f) = &failure {
            writeln!(w, "% {} would equate {} and {}", f.rule, f.left, f.right)?;
        }
    }
    w.flush()?;
    if !agree {
        eprintln!("the encoding and the direct check disagree (encoding: {encoding:?}, direct: {direct:?})");
        return Ok(DISAGREEMENT);
    }
    Ok(if satisfiable { OK } else { UNSATISFIABLE })
}
