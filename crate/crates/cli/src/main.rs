mod output;

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use rwd_core::check::{self, CheckConfig, DEFAULT_SEED};
use rwd_core::correspondence::{embed, project};
use rwd_core::dsl::{self, ModelFile, RewritingFile, SystemBody, SystemFile};
use rwd_core::eval::{catamorphism, extend_with_identity, CarrierKind, SigmaAlgebra, Value};
use rwd_core::recurrence::{fit_linear_recurrence, reduce_linear, reduce_linear_exact, Reduction};
use rwd_core::rewrite::{rewrite_at, Iterates};
use rwd_core::term::Term;
use serde_json::{json, Map, Value as Json};

use output::{float_json, value_json, write_report, Format, RecordWriter};

#[derive(Parser, Debug)]
#[command(name = "rwd", version, about = "Rewriting models, dynamical systems and recurrences")]
struct Cli {
    /// Output format for records and reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Jsonl)]
    format: Format,
    /// Number of rewrites or transitions to run.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Reinterpret the model over another carrier: rational, float, term or vector(k).
    #[arg(long, global = true)]
    carrier: Option<CarrierKind>,
    /// Where to write the generated file (project, embed); stdout otherwise.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the initial term (or a given ground term), or a system's first output.
    Eval {
        file: PathBuf,
        /// A ground term over the model's signature.
        #[arg(long)]
        term: Option<String>,
    },
    /// Apply the rule repeatedly and print the terms.
    Rewrite { file: PathBuf },
    /// Emit one record per step of a model or system.
    Trace {
        file: PathBuf,
        /// Include the printed iterates.
        #[arg(long)]
        terms: bool,
        /// Evaluate iterates on a worker pool.
        #[arg(long)]
        parallel: bool,
    },
    /// Project a rewriting model onto a cartesian dynamical system.
    Project {
        file: PathBuf,
        #[arg(long)]
        parallel: bool,
    },
    /// Embed a system file as a rewriting model.
    Embed {
        file: PathBuf,
        /// Cross-check this many steps of the model against the system.
        #[arg(long)]
        verify: Option<usize>,
        /// Project the embedded model back and compare trajectories.
        #[arg(long)]
        roundtrip: bool,
    },
    /// Reduce a linear system to a linear recurrence.
    Reduce { file: PathBuf },
    /// Fit a linear recurrence to a numeric sequence (.csv or .jsonl).
    Fit {
        file: PathBuf,
        #[arg(long)]
        depth: usize,
        /// Include a constant term.
        #[arg(long)]
        constant: bool,
    },
    /// Run the seeded property suites.
    Check {
        /// Restrict to the named suites.
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// Cases per suite instead of each suite's default.
        #[arg(long)]
        cases: Option<usize>,
        #[arg(long)]
        parallel: bool,
        #[arg(long, hide = true)]
        mutant: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Verification(String),
    Limit(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Verification(_) => 2,
            Failure::Limit(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Verification(m) | Failure::Limit(m) => m,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

type Run = Result<(), Failure>;

fn validation(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

#[derive(Debug, Clone, Copy)]
struct Limits {
    nodes: u64,
    steps: usize,
}

impl Limits {
    fn from_env() -> Result<Self, Failure> {
        let mut limits = Limits {
            nodes: 1_000_000,
            steps: 100_000,
        };
        let Ok(spec) = std::env::var("RWD_LIMITS") else {
            return Ok(limits);
        };
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let bad = || Failure::Validation(format!("RWD_LIMITS: cannot read `{part}`; expected nodes=N,steps=M"));
            let (key, value) = part.split_once('=').ok_or_else(bad)?;
            let n: u64 = value.trim().replace('_', "").parse().map_err(|_| bad())?;
            match key.trim() {
                "nodes" => limits.nodes = n,
                "steps" => limits.steps = usize::try_from(n).map_err(|_| bad())?,
                _ => return Err(bad()),
            }
        }
        Ok(limits)
    }

    fn check_steps(&self, steps: usize) -> Run {
        if steps > self.steps {
            return Err(Failure::Limit(format!("{steps} steps exceed the limit of {}", self.steps)));
        }
        Ok(())
    }

    fn check_term(&self, step: usize, t: &Term, printed: bool) -> Run {
        let size = if printed { t.node_count() } else { t.dag_size() as u64 };
        if size > self.nodes {
            return Err(Failure::Limit(format!(
                "term at step {step} has {size} nodes, over the limit of {}",
                self.nodes
            )));
        }
        Ok(())
    }
}

struct Ctx {
    format: Format,
    steps: Option<usize>,
    seed: u64,
    carrier: Option<CarrierKind>,
    output: Option<PathBuf>,
    limits: Limits,
}

impl Ctx {
    fn steps(&self, default: usize) -> Result<usize, Failure> {
        let n = self.steps.unwrap_or(default);
        self.limits.check_steps(n)?;
        Ok(n)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message().is_empty() {
                eprintln!("error: {}", f.message());
            }
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Run {
    let ctx = Ctx {
        format: cli.format,
        steps: cli.steps,
        seed: cli.seed,
        carrier: cli.carrier,
        output: cli.output,
        limits: Limits::from_env()?,
    };
    match cli.command {
        Command::Eval { file, term } => cmd_eval(&ctx, &file, term.as_deref()),
        Command::Rewrite { file } => cmd_rewrite(&ctx, &file),
        Command::Trace { file, terms, parallel } => cmd_trace(&ctx, &file, terms, parallel),
        Command::Project { file, parallel } => cmd_project(&ctx, &file, parallel),
        Command::Embed { file, verify, roundtrip } => cmd_embed(&ctx, &file, verify, roundtrip),
        Command::Reduce { file } => cmd_reduce(&ctx, &file),
        Command::Fit { file, depth, constant } => cmd_fit(&ctx, &file, depth, constant),
        Command::Check {
            suites,
            cases,
            parallel,
            mutant,
        } => cmd_check(&ctx, &suites, cases, parallel, mutant),
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
    }
}

fn load_model(ctx: &Ctx, path: &Path) -> Result<ModelFile, Failure> {
    let src = read_input(path)?;
    let model = dsl::parse_model(&src).map_err(|e| {
        let lines: Vec<String> = e.diagnostics.iter().map(|d| format!("{}:{d}", path.display())).collect();
        Failure::Validation(format!("{} problem(s) found\n{}", lines.len(), lines.join("\n")))
    })?;
    Ok(match (ctx.carrier, model) {
        (None, m) => m,
        (Some(c), ModelFile::Rewriting(r)) => ModelFile::Rewriting(r.with_carrier(c)),
        (Some(c), ModelFile::System(s)) => {
            if c == CarrierKind::Term {
                return Err(validation("systems need a numeric carrier"));
            }
            ModelFile::System(s.with_carrier(c))
        }
    })
}

fn load_rewriting(ctx: &Ctx, path: &Path) -> Result<RewritingFile, Failure> {
    match load_model(ctx, path)? {
        ModelFile::Rewriting(r) => Ok(r),
        ModelFile::System(_) => Err(validation(format!("{} is a system file; a rewriting model is needed", path.display()))),
    }
}

fn load_system(ctx: &Ctx, path: &Path) -> Result<SystemFile, Failure> {
    match load_model(ctx, path)? {
        ModelFile::System(s) => Ok(s),
        ModelFile::Rewriting(_) => Err(validation(format!("{} is a rewriting model; a system file is needed", path.display()))),
    }
}

fn algebra_of(r: &RewritingFile) -> SigmaAlgebra {
    if r.algebra.has_identity() {
        r.algebra.clone()
    } else {
        extend_with_identity(&r.algebra)
    }
}

fn stdout() -> BufWriter<io::StdoutLock<'static>> {
    BufWriter::new(io::stdout().lock())
}

fn record(pairs: impl IntoIterator<Item = (&'static str, Json)>) -> Map<String, Json> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn cmd_eval(ctx: &Ctx, path: &Path, term: Option<&str>) -> Run {
    let (subject, value) = match load_model(ctx, path)? {
        ModelFile::Rewriting(r) => {
            let t = match term {
                Some(src) => dsl::parse_term(src, &r.signature, &BTreeSet::new()).map_err(|e| {
                    let lines: Vec<String> = e.diagnostics.iter().map(|d| format!("--term:{d}")).collect();
                    Failure::Validation(lines.join("\n"))
                })?,
                None => r.initial.clone(),
            };
            if !t.is_ground() {
                return Err(validation(format!("{t} is not ground")));
            }
            ctx.limits.check_term(0, &t, false)?;
            let v = catamorphism(&algebra_of(&r), &t).map_err(validation)?;
            (Some(t.to_string()), v)
        }
        ModelFile::System(s) => {
            if term.is_some() {
                return Err(validation("--term needs a rewriting model"));
            }
            let sys = s.system().map_err(validation)?;
            let x0 = s.initial_state().map_err(validation)?;
            (None, sys.observe(&x0).map_err(validation)?)
        }
    };
    let mut rec = Map::new();
    if let Some(t) = subject {
        rec.insert("term".into(), json!(t));
    }
    rec.insert("value".into(), value_json(&value));
    let mut w = RecordWriter::new(stdout(), ctx.format, vec!["term", "value"]);
    w.write(&rec)?;
    Ok(w.finish()?)
}

fn cmd_rewrite(ctx: &Ctx, path: &Path) -> Run {
    let r = load_rewriting(ctx, path)?;
    let steps = ctx.steps(1)?;
    let mut w = RecordWriter::new(stdout(), ctx.format, vec!["step", "term"]);
    let mut t = r.initial.clone();
    for step in 0..=steps {
        if step > 0 {
            t = rewrite_at(&r.rule, &t).map_err(|e| Failure::Validation(format!("step {step}: {e}")))?;
        }
        ctx.limits.check_term(step, &t, true)?;
        w.write(&record([("step", json!(step)), ("term", json!(t.to_string()))]))?;
    }
    Ok(w.finish()?)
}

fn cmd_trace(ctx: &Ctx, path: &Path, with_terms: bool, parallel: bool) -> Run {
    let steps = ctx.steps(10)?;
    match load_model(ctx, path)? {
        ModelFile::Rewriting(r) => trace_rewriting(ctx, &r, steps, with_terms, parallel),
        ModelFile::System(s) => {
            if with_terms {
                return Err(validation("--terms needs a rewriting model"));
            }
            let sys = s.system().map_err(validation)?;
            let x0 = s.initial_state().map_err(validation)?;
            let mut w = RecordWriter::new(stdout(), ctx.format, vec!["step", "value"]);
            for (step, y) in sys.states(x0).take(steps + 1).enumerate() {
                let y = y.map_err(validation)?;
                let v = sys.observe(&y).map_err(validation)?;
                w.write(&record([("step", json!(step)), ("value", value_json(&v))]))?;
            }
            Ok(w.finish()?)
        }
    }
}

const BATCH: usize = 64;

fn trace_rewriting(ctx: &Ctx, r: &RewritingFile, steps: usize, with_terms: bool, parallel: bool) -> Run {
    let alg = algebra_of(r);
    let columns = if with_terms {
        vec!["step", "value", "term"]
    } else {
        vec!["step", "value"]
    };
    let mut w = RecordWriter::new(stdout(), ctx.format, columns);
    let mut iterates = std::iter::once(Ok(r.initial.clone()))
        .chain(Iterates::new(r.rule.clone(), r.initial.clone()))
        .take(steps + 1)
        .enumerate();
    let batch_size = if parallel { BATCH } else { 1 };
    loop {
        let mut batch = Vec::with_capacity(batch_size);
        for (step, t) in iterates.by_ref().take(batch_size) {
            let t = t.map_err(|e| Failure::Validation(format!("step {step}: {e}")))?;
            ctx.limits.check_term(step, &t, with_terms)?;
            batch.push((step, t));
        }
        if batch.is_empty() {
            break;
        }
        let eval = |(step, t): &(usize, Term)| {
            catamorphism(&alg, t).map_err(|e| Failure::Validation(format!("step {step}: {e}")))
        };
        let values: Vec<Value> = if parallel {
            batch.par_iter().map(eval).collect::<Result<_, _>>()?
        } else {
            batch.iter().map(eval).collect::<Result<_, _>>()?
        };
        for ((step, t), v) in batch.iter().zip(values) {
            let mut rec = record([("step", json!(step)), ("value", value_json(&v))]);
            if with_terms {
                rec.insert("term".into(), json!(t.to_string()));
            }
            w.write(&rec)?;
        }
    }
    Ok(w.finish()?)
}

fn write_artifact(ctx: &Ctx, text: &str) -> Run {
    match &ctx.output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Validation(format!("{}: {e}", p.display()))),
        None => {
            let mut out = stdout();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn tolerance(carrier: CarrierKind) -> f64 {
    if carrier.is_exact() {
        0.0
    } else {
        1e-9
    }
}

/// Largest distance between two output streams, and whether they agree
/// within the carrier tolerance.
fn compare(a: &[Value], b: &[Value], carrier: CarrierKind) -> (f64, bool) {
    let worst = a.iter().zip(b).map(|(x, y)| x.distance(y)).fold(0.0, f64::max);
    let agree = a.len() == b.len()
        && if carrier.is_exact() {
            a == b
        } else {
            worst <= tolerance(carrier)
        };
    (worst, agree)
}

fn report_to_stderr(ctx: &Ctx, report: &Map<String, Json>) -> Run {
    let mut err = io::stderr().lock();
    write_report(&mut err, ctx.format, report)?;
    Ok(())
}

fn cmd_project(ctx: &Ctx, path: &Path, parallel: bool) -> Run {
    let r = load_rewriting(ctx, path)?;
    if !r.checked {
        return Err(validation("the rule is marked unchecked; only iterable rules can be projected"));
    }
    let steps = ctx.steps(10)?;
    let m = r.model().map_err(validation)?;
    let ps = project(&m).map_err(validation)?;
    let carrier = m.algebra().carrier();

    let mut terms = Vec::with_capacity(steps + 1);
    for (step, t) in m.iterates().take(steps + 1).enumerate() {
        let t = t.map_err(|e| Failure::Validation(format!("step {step}: {e}")))?;
        ctx.limits.check_term(step, &t, false)?;
        terms.push(t);
    }
    let eval = |t: &Term| catamorphism(m.algebra(), t).map_err(validation);
    let expected: Vec<Value> = if parallel {
        terms.par_iter().map(eval).collect::<Result<_, _>>()?
    } else {
        terms.iter().map(eval).collect::<Result<_, _>>()?
    };
    let got = ps.outputs(steps).map_err(validation)?;
    let (worst, agree) = compare(&expected, &got, carrier);

    let context = if ps.is_root() { None } else { Some(ps.context.expr.clone()) };
    let file = SystemFile::general(&ps.system, &ps.x0, context.clone())
        .map_err(|e| Failure::Validation(format!("cannot write the projected system: {e}")))?;
    write_artifact(ctx, &dsl::print(&ModelFile::System(file)))?;

    let mut report = record([
        ("dimension", json!(ps.system.dim())),
        ("position", json!(m.rule().position.to_string())),
        ("compared", json!(expected.len())),
        ("max_abs_diff", float_json(worst)),
        ("agree", json!(agree)),
    ]);
    if let Some(c) = context {
        report.insert("context".into(), json!(c.to_string()));
    }
    report_to_stderr(ctx, &report)?;
    if !agree {
        return Err(Failure::Verification(format!("projected system diverges from the model (max_abs_diff {worst})")));
    }
    Ok(())
}

fn cmd_embed(ctx: &Ctx, path: &Path, verify: Option<usize>, roundtrip: bool) -> Run {
    let s = load_system(ctx, path)?;
    let sys = s.system().map_err(validation)?;
    let x0 = s.initial_state().map_err(validation)?;
    let m = embed(&sys, &x0).map_err(validation)?;
    write_artifact(ctx, &dsl::print(&ModelFile::Rewriting(RewritingFile::from_model(&m))))?;

    let carrier = sys.carrier();
    let mut report = Map::new();
    let mut agree_all = true;
    if let Some(n) = verify {
        ctx.limits.check_steps(n)?;
        let want = sys.trajectory(&x0, n).map_err(validation)?.outputs;
        let got = m.outputs(n).map_err(validation)?;
        let (worst, agree) = compare(&want, &got, carrier);
        report.insert("verified_steps".into(), json!(n));
        report.insert("max_abs_diff".into(), float_json(worst));
        report.insert("verified".into(), json!(agree));
        agree_all &= agree;
    }
    if roundtrip {
        let n = ctx.steps(20)?;
        let want = sys.trajectory(&x0, n).map_err(validation)?.outputs;
        let got = project(&m).and_then(|ps| ps.outputs(n)).map_err(validation)?;
        let (worst, agree) = compare(&want, &got, carrier);
        report.insert("roundtrip_steps".into(), json!(n));
        report.insert("roundtrip_max_abs_diff".into(), float_json(worst));
        report.insert("roundtrip".into(), json!(agree));
        agree_all &= agree;
    }
    if !report.is_empty() {
        report_to_stderr(ctx, &report)?;
    }
    if !agree_all {
        return Err(Failure::Verification("embedded model diverges from the system".into()));
    }
    Ok(())
}

fn cmd_reduce(ctx: &Ctx, path: &Path) -> Run {
    let s = load_system(ctx, path)?;
    let (matrix, functional) = match (&s.body, &s.context) {
        (SystemBody::Linear { matrix, functional }, None) => (matrix, functional),
        _ => return Err(validation("reduce needs a system with `matrix` and `functional` and no context")),
    };
    let f = |row: &[rwd_core::number::Number]| row.iter().map(|x| x.to_f64()).collect::<Vec<f64>>();
    let a: Vec<Vec<f64>> = matrix.iter().map(|r| f(r)).collect();
    let b = f(functional);
    let report = match reduce_linear(&a, &b) {
        Reduction::Reducible {
            recurrence,
            residual,
            condition,
        } => {
            let mut rep = record([
                ("reducible", json!(true)),
                ("depth", json!(recurrence.depth())),
                ("coefficients", Json::Array(recurrence.coefficients.iter().map(|&c| float_json(c)).collect())),
                ("residual", float_json(residual)),
                ("condition", float_json(condition)),
            ]);
            if s.carrier == CarrierKind::Rational {
                if let Some(exact) = reduce_linear_exact(matrix, functional) {
                    rep.insert("exact".into(), json!(exact.iter().map(ToString::to_string).collect::<Vec<_>>()));
                }
            }
            rep
        }
        Reduction::NotReducible { reason, condition } => record([
            ("reducible", json!(false)),
            ("reason", json!(reason)),
            ("condition", float_json(condition)),
        ]),
    };
    let mut out = stdout();
    write_report(&mut out, ctx.format, &report)?;
    Ok(out.flush()?)
}

/// Reads the last column of a CSV (an optional header is skipped) or the
/// `value` field (or bare number) of each JSON line.
fn read_sequence(path: &Path) -> Result<Vec<f64>, Failure> {
    let src = read_input(path)?;
    let jsonl = path.extension().is_some_and(|e| e == "jsonl");
    let mut seq = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Failure::Validation(format!("{}:{}: not a number: `{line}`", path.display(), i + 1));
        let x = if jsonl {
            let v: Json = serde_json::from_str(line).map_err(|_| bad())?;
            let field = v.get("value").cloned().unwrap_or(v);
            match field {
                Json::Number(n) => n.as_f64(),
                Json::String(s) => s.parse::<rwd_core::number::Number>().ok().map(|n| n.to_f64()),
                _ => None,
            }
            .ok_or_else(bad)?
        } else {
            let cell = line.rsplit(',').next().unwrap_or(line).trim();
            match cell.parse::<f64>() {
                Ok(x) => x,
                Err(_) if seq.is_empty() && i == 0 => continue,
                Err(_) => return Err(bad()),
            }
        };
        seq.push(x);
    }
    Ok(seq)
}

fn cmd_fit(ctx: &Ctx, path: &Path, depth: usize, constant: bool) -> Run {
    let seq = read_sequence(path)?;
    let fit = fit_linear_recurrence(&seq, depth, constant).map_err(validation)?;
    let rec = &fit.recurrence;
    let mut report = record([
        ("depth", json!(rec.depth())),
        ("coefficients", Json::Array(rec.coefficients.iter().map(|&c| float_json(c)).collect())),
    ]);
    if let Some(c) = rec.constant {
        report.insert("constant".into(), float_json(c));
    }
    report.insert("residual".into(), float_json(fit.residual));
    report.insert("condition".into(), float_json(fit.condition));
    report.insert("rank_deficient".into(), json!(fit.rank_deficient));
    if let Some(k) = ctx.steps {
        ctx.limits.check_steps(k)?;
        let ext = rec.extend(&seq, k);
        report.insert(
            "prediction".into(),
            Json::Array(ext[seq.len()..].iter().map(|&x| float_json(x)).collect()),
        );
    }
    let mut out = stdout();
    write_report(&mut out, ctx.format, &report)?;
    Ok(out.flush()?)
}

fn cmd_check(ctx: &Ctx, suites: &[String], cases: Option<usize>, parallel: bool, mutant: bool) -> Run {
    let known = check::suite_names();
    let selected: Vec<&str> = if suites.is_empty() {
        known.clone()
    } else {
        let mut out = Vec::new();
        for s in suites {
            let Some(name) = known.iter().find(|k| **k == s.as_str()) else {
                return Err(validation(format!("unknown suite `{s}`; known suites: {}", known.join(", "))));
            };
            out.push(*name);
        }
        out
    };
    let cfg = CheckConfig {
        seed: ctx.seed,
        cases,
        parallel,
        mutant,
    };
    let mut w = RecordWriter::new(stdout(), ctx.format, vec!["suite", "cases", "passed", "status", "seed", "case", "counterexample"]);
    let mut failed = Vec::new();
    for name in selected {
        let r = check::run_suite(name, &cfg).expect("known suite");
        let mut rec = record([
            ("suite", json!(r.name)),
            ("cases", json!(r.cases)),
            ("passed", json!(r.passed)),
            ("status", json!(if r.ok() { "ok" } else { "FAILED" })),
            ("seed", json!(ctx.seed)),
        ]);
        if let Some(f) = &r.failure {
            rec.insert("case".into(), json!(f.case));
            rec.insert("counterexample".into(), json!(f.detail));
            eprintln!("{name}: counterexample (case {}):\n{}", f.case, f.detail);
            failed.push(name);
        }
        w.write(&rec)?;
    }
    w.finish()?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("failing suites: {}", failed.join(", "))))
    }
}
