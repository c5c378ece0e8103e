use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use clpct_core::driver::{default_seed, run_concolic_testing, Budget, TestingOptions};
use clpct_core::generation::{alts, csup_decide, AltsRequest, CsupInstance, CsupVerdict};
use clpct_core::parser::{parse_instance, Instance};
use clpct_core::{normalize_keeping, parse_constraint_atom, parse_program, parse_state, run_standard, Engine, Program, QueryLog};

#[derive(Parser)]
#[command(name = "clpct", version, about = "Concolic testing for constraint logic programs")]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(Subcommand)]
enum Mode {
    /// Generate test cases for an entry predicate.
    Test(TestArgs),
    /// Run a state with the standard semantics and print every derivation.
    Run(RunArgs),
    /// Decide a constraint selective unification problem.
    Csup(InstanceArgs),
    /// Compute alternative test cases.
    Alts(InstanceArgs),
}

#[derive(Args)]
struct Common {
    /// Print each solver query and its verdict to standard error.
    #[arg(long)]
    dump_solver_queries: bool,
    /// Write output to a file instead of standard output.
    #[arg(short = 'o', value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long, value_name = "FILE")]
    program: PathBuf,
    /// Entry predicate as name/arity.
    #[arg(long, value_name = "P/N")]
    entry: String,
    /// Initial test case, `{C} p(X, ...)`.
    #[arg(long)]
    seed: Option<String>,
    /// Deterministic steps per concolic run.
    #[arg(long, default_value_t = 1000)]
    max_steps: usize,
    #[arg(long, default_value_t = 100)]
    max_restarts: usize,
    /// Stop each run at its first solution.
    #[arg(long)]
    first_solution: bool,
    /// Print every step of the testing procedure to standard error.
    #[arg(long)]
    trace_steps: bool,
    /// Threads used for replaying test cases.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "FILE")]
    program: PathBuf,
    /// Initial state, `{C} A1, ..., An`.
    #[arg(long)]
    state: String,
    /// Derivation steps over the whole search.
    #[arg(long, default_value_t = 1000)]
    max_steps: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, value_name = "FILE")]
    instance: PathBuf,
    #[command(flatten)]
    common: Common,
}

/// Input problems exit with 1; a run that hit a budget exits with 2.
enum Status {
    Complete,
    Truncated,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(Status::Truncated) => ExitCode::from(2),
        Err(e) => {
            let prefix = if color_enabled() { "\x1b[1;31merror\x1b[0m" } else { "error" };
            eprintln!("{prefix}: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn color_enabled() -> bool {
    match std::env::var("CLPCT_COLOR").as_deref() {
        Ok("always") => true,
        Ok("never") => false,
        _ => std::io::stderr().is_terminal(),
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<Status> {
    match cli.mode {
        Mode::Test(a) => test(a),
        Mode::Run(a) => run(a),
        Mode::Csup(a) => csup(a),
        Mode::Alts(a) => alternatives(a),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_program(path: &Path) -> anyhow::Result<Program> {
    parse_program(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn engine<'p>(program: &'p Program, common: &Common) -> Engine<'p> {
    let e = Engine::new(program);
    if !common.dump_solver_queries {
        return e;
    }
    let log: QueryLog = Arc::new(|c, v| eprintln!("solv({c}) = {}", v.as_str()));
    e.with_log(log)
}

fn emit(common: &Common, text: &str) -> anyhow::Result<()> {
    match &common.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn parse_entry(entry: &str) -> anyhow::Result<(String, usize)> {
    let (name, arity) = entry.rsplit_once('/').ok_or_else(|| anyhow!("entry `{entry}` is not of the form name/arity"))?;
    let arity = arity.parse().with_context(|| format!("bad arity in entry `{entry}`"))?;
    Ok((name.to_string(), arity))
}

fn test(a: TestArgs) -> anyhow::Result<Status> {
    let program = load_program(&a.program)?;
    let (name, arity) = parse_entry(&a.entry)?;
    let seed = match &a.seed {
        Some(s) => parse_constraint_atom(s, &program.signature).context("in --seed")?,
        None => default_seed(&name, arity),
    };
    let e = engine(&program, &a.common);
    let options = TestingOptions {
        budget: Budget { max_steps: a.max_steps, max_restarts: a.max_restarts, replay_steps: a.max_steps, time_limit: None },
        first_solution: a.first_solution,
        jobs: a.jobs,
    };
    let report = run_concolic_testing(&e, (&name, arity), &seed, &options)?;
    if a.trace_steps {
        for s in &report.log {
            eprintln!("{s}");
        }
    }
    emit(&a.common, &(report.to_json() + "\n"))?;
    Ok(if report.summary.budget_exhausted { Status::Truncated } else { Status::Complete })
}

fn run(a: RunArgs) -> anyhow::Result<Status> {
    let program = load_program(&a.program)?;
    let q = parse_state(&a.state, &program.signature).context("in --state")?;
    let e = engine(&program, &a.common);
    let records = run_standard(&e, &q, a.max_steps)?;
    let keep = q.vars();
    let mut out = String::new();
    let mut truncated = false;
    for r in &records {
        let last = r.final_state(&q);
        let answer = clpct_core::State::new(normalize_keeping(&last.constraint, &keep), last.goal.clone());
        truncated |= r.outcome == clpct_core::Outcome::BudgetExhausted;
        out.push_str(&format!("{} {} {}\n", r.outcome, r.trace, answer));
    }
    if records.is_empty() {
        out.push_str("no derivations: the initial constraint is unsatisfiable\n");
    }
    emit(&a.common, &out)?;
    Ok(if truncated { Status::Truncated } else { Status::Complete })
}

fn load_instance(path: &Path, shared: &[&str]) -> anyhow::Result<Instance> {
    parse_instance(&read(path)?, shared).with_context(|| format!("in {}", path.display()))
}

fn single(inst: &Instance, section: &str) -> anyhow::Result<clpct_core::ConstraintAtom> {
    match inst.section(section) {
        [(_, c)] => Ok(c.clone()),
        other => bail!("section [{section}] needs exactly one entry, found {}", other.len()),
    }
}

fn csup(a: InstanceArgs) -> anyhow::Result<Status> {
    let inst = load_instance(&a.instance, &[])?;
    let problem = CsupInstance {
        c_atom: single(&inst, "C")?,
        h_plus: inst.section("H+").iter().map(|(_, c)| c.clone()).collect(),
        h_minus: inst.section("H-").iter().map(|(_, c)| c.clone()).collect(),
    };
    let program = Program::new(inst.signature.clone(), Vec::new());
    let e = engine(&program, &a.common);
    e.reserve(&problem.vars());
    let out = match csup_decide(&e, &problem)?.0 {
        CsupVerdict::Nonempty(w) => format!("nonempty\n{w}\n"),
        CsupVerdict::Empty => "empty\n".to_string(),
    };
    emit(&a.common, &out)?;
    Ok(Status::Complete)
}

fn alternatives(a: InstanceArgs) -> anyhow::Result<Status> {
    let inst = load_instance(&a.instance, &["I", "C"])?;
    let hs: Vec<_> = inst.section("HS").to_vec();
    let mut hq = Vec::new();
    for (text, _) in inst.section("HQ") {
        let found = hs.iter().find(|(t, _)| t == text).ok_or_else(|| anyhow!("[HQ] entry `{text}` is not listed in [HS]"))?;
        hq.push(found.1.clone());
    }
    let req = AltsRequest {
        initial: single(&inst, "I")?,
        current: single(&inst, "C")?,
        matched_concrete: hq,
        matched_symbolic: hs.into_iter().map(|(_, c)| c).collect(),
    };
    let program = Program::new(inst.signature.clone(), Vec::new());
    let e = engine(&program, &a.common);
    for c in std::iter::once(&req.initial).chain([&req.current]).chain(&req.matched_symbolic) {
        e.reserve(&c.vars());
    }
    let mut out = String::new();
    for r in alts(&e, &req)? {
        out.push_str(&format!("{r}\n"));
    }
    emit(&a.common, &out)?;
    Ok(Status::Complete)
}
