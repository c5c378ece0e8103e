//! The concolic testing loop: configurations and the skip/alts/restart rules.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::concolic::{DetConcolicState, StepLabel};
use crate::constraint::{Constraint, ConstraintAtom, State};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::generation::{alts, AltsRequest};
use crate::normalize::canonical_atom_key;
use crate::program::Program;
use crate::semantics::{run_standard, Outcome, Trace};
use crate::term::{Atom, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Deterministic steps per concolic run.
    pub max_steps: usize,
    /// Test cases taken from the pending set after the seed.
    pub max_restarts: usize,
    /// Derivation steps when replaying a test case.
    pub replay_steps: usize,
    pub time_limit: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_steps: 1000, max_restarts: 100, replay_steps: 1000, time_limit: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TestingOptions {
    pub budget: Budget,
    pub first_solution: bool,
    /// Threads used for replaying test cases.
    pub jobs: usize,
}

impl Default for TestingOptions {
    fn default() -> Self {
        TestingOptions { budget: Budget::default(), first_solution: false, jobs: 1 }
    }
}

/// `(PTC, TC, TR, I, C)`.
#[derive(Clone, Debug)]
pub struct Configuration {
    pub ptc: VecDeque<ConstraintAtom>,
    pub tc: Vec<ConstraintAtom>,
    pub tr: BTreeSet<Trace>,
    pub initial: ConstraintAtom,
    pub current: DetConcolicState,
    first_solution: bool,
    keys: BTreeSet<String>,
}

impl Configuration {
    /// `({}, {seed}, {}, I, <seed ][ I>)`; the seed must already have the
    /// form `<c | p(X1, ..., Xn)>` with distinct variables.
    pub fn new(seed: ConstraintAtom, initial: ConstraintAtom, first_solution: bool) -> Self {
        let current = DetConcolicState::new(seed.as_state(), initial.as_state()).first_solution(first_solution);
        let keys = BTreeSet::from([canonical_atom_key(&seed)]);
        Configuration { ptc: VecDeque::new(), tc: vec![seed], tr: BTreeSet::new(), initial, current, first_solution, keys }
    }
}

/// Which rule of the testing procedure fired.
#[derive(Clone, Debug)]
pub enum TestingStep {
    Skip(StepLabel),
    Alts(StepLabel, Vec<ConstraintAtom>),
    Restart(ConstraintAtom),
    Done,
}

impl fmt::Display for TestingStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestingStep::Skip(l) => write!(f, "skip ({}) {} {{{}}} {{{}}}", l.kind, l.trace, join(&l.r_q), join(&l.r_s)),
            TestingStep::Alts(l, new) => {
                write!(f, "alts ({}) {} {{{}}} {{{}}} +{}", l.kind, l.trace, join(&l.r_q), join(&l.r_s), new.len())
            }
            TestingStep::Restart(t) => write!(f, "restart {t}"),
            TestingStep::Done => write!(f, "done"),
        }
    }
}

fn join(ls: &[std::sync::Arc<str>]) -> String {
    ls.iter().map(|l| l.as_ref()).collect::<Vec<_>>().join(",")
}

impl TestingStep {
    /// `alts (choice)`, `skip (unfold)`, `restart`, as in a step listing.
    pub fn short(&self) -> String {
        match self {
            TestingStep::Skip(l) => format!("skip({})", l.kind),
            TestingStep::Alts(l, _) => format!("alts({})", l.kind),
            TestingStep::Restart(_) => "restart".into(),
            TestingStep::Done => "done".into(),
        }
    }
}

/// Applies one rule of the testing procedure to `cfg`.
pub fn testing_step(engine: &Engine<'_>, cfg: &mut Configuration) -> Result<TestingStep> {
    let before = cfg.current.head().map(|h| h.symbolic.clone());
    match cfg.current.step(engine)? {
        Ok(label) => record_step(engine, cfg, before, label),
        Err(_) => Ok(restart(cfg)),
    }
}

/// The skip or alts rule for a concolic step that has already been taken.
fn record_step(engine: &Engine<'_>, cfg: &mut Configuration, before: Option<State>, label: StepLabel) -> Result<TestingStep> {
    if label.r_s.is_empty() || cfg.tr.contains(&label.trace) {
        cfg.tr.insert(label.trace.clone());
        return Ok(TestingStep::Skip(label));
    }
    let symbolic = before.expect("a step needs a head state");
    let added = alternatives(engine, cfg, &symbolic, &label)?;
    cfg.tr.insert(label.trace.clone());
    Ok(TestingStep::Alts(label, added))
}

fn restart(cfg: &mut Configuration) -> TestingStep {
    let Some(next) = cfg.ptc.pop_front() else { return TestingStep::Done };
    cfg.tc.push(next.clone());
    cfg.current = DetConcolicState::new(next.as_state(), cfg.initial.as_state()).first_solution(cfg.first_solution);
    TestingStep::Restart(next)
}

fn alternatives(engine: &Engine<'_>, cfg: &mut Configuration, symbolic: &State, label: &StepLabel) -> Result<Vec<ConstraintAtom>> {
    let program = engine.program();
    let mut hs = Vec::new();
    let mut hq = Vec::new();
    for l in &label.r_s {
        let h = engine.fresh_rule(program.rule(l)?).c_atom();
        if label.r_q.contains(l) {
            hq.push(h.clone());
        }
        hs.push(h);
    }
    let req = AltsRequest { initial: cfg.initial.clone(), current: symbolic.c_atom()?, matched_concrete: hq, matched_symbolic: hs };
    let mut added = Vec::new();
    for t in alts(engine, &req)? {
        if cfg.keys.insert(canonical_atom_key(&t)) {
            cfg.ptc.push_back(t.clone());
            added.push(t);
        }
    }
    Ok(added)
}

/// One finished derivation of a replayed test case.
#[derive(Clone, Debug, Serialize)]
pub struct ReplayedDerivation {
    pub trace: Trace,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, Serialize)]
pub struct TestCaseReport {
    pub constraint: String,
    pub atom: String,
    /// Trace of the first finished derivation.
    pub trace: Trace,
    pub outcome: Outcome,
    pub budget_exhausted: bool,
    pub derivations: Vec<ReplayedDerivation>,
    /// False for pending test cases left over when a budget ran out.
    pub explored: bool,
    #[serde(skip)]
    pub test_case: ConstraintAtom,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub test_cases: usize,
    pub explored: usize,
    pub pending: usize,
    pub distinct_traces: usize,
    pub restarts: usize,
    pub steps: usize,
    pub budget_exhausted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageReport {
    pub test_cases: Vec<TestCaseReport>,
    pub summary: Summary,
    #[serde(skip)]
    pub log: Vec<TestingStep>,
}

impl CoverageReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// `<c /\ X = t | p(X)>` for a seed `<c | p(t)>` whose arguments are not
/// distinct variables; other seeds come back unchanged.
pub fn flatten_seed(engine: &Engine<'_>, seed: &ConstraintAtom) -> Result<ConstraintAtom> {
    let mut seen = BTreeSet::new();
    let distinct_vars = seed.atom.args.iter().all(|t| t.as_var().is_some_and(|v| seen.insert(v.clone())));
    if distinct_vars {
        return Ok(seed.clone());
    }
    engine.reserve(&seed.vars());
    let vars: Vec<Var> = (0..seed.atom.arity()).map(|_| engine.supply().fresh("X")).collect();
    let terms: Vec<Term> = vars.into_iter().map(Term::Var).collect();
    let eqs = Constraint::equations(engine.program().signature.domain, &terms, &seed.atom.args)?;
    let atom = Atom { predicate: seed.atom.predicate.clone(), args: terms };
    Ok(ConstraintAtom::new(Constraint::conj(vec![seed.constraint.clone(), eqs]), atom))
}

/// `<true | p(Y1, ..., Yn)>` with fresh variables named after the seed's.
pub fn initial_state(engine: &Engine<'_>, seed: &ConstraintAtom) -> ConstraintAtom {
    engine.reserve(&seed.vars());
    let args = seed
        .atom
        .args
        .iter()
        .map(|t| Term::Var(match t.as_var() {
            Some(v) => engine.supply().fresh_like(v),
            None => engine.supply().fresh("Y"),
        }))
        .collect();
    ConstraintAtom::new(Constraint::True, Atom { predicate: seed.atom.predicate.clone(), args })
}

/// `<true | p(X1, ..., Xn)>`.
pub fn default_seed(predicate: &str, arity: usize) -> ConstraintAtom {
    let args = (1..=arity).map(|i| Term::var(&format!("X{i}"))).collect();
    ConstraintAtom::new(Constraint::True, Atom::new(predicate, args))
}

/// Runs the testing procedure from `seed` until no pending test case is
/// left or a budget runs out, then replays every test case.
pub fn run_concolic_testing(engine: &Engine<'_>, entry: (&str, usize), seed: &ConstraintAtom, options: &TestingOptions) -> Result<CoverageReport> {
    if seed.atom.predicate.as_ref() != entry.0 || seed.atom.arity() != entry.1 {
        return Err(Error::Input(format!("seed atom `{}` does not match entry {}/{}", seed.atom, entry.0, entry.1)));
    }
    if !engine.program().signature.predicates.iter().any(|(p, n)| p.as_ref() == entry.0 && *n == entry.1) {
        return Err(Error::Input(format!("entry {}/{} is not a predicate of the program", entry.0, entry.1)));
    }
    if !engine.is_sat(&seed.constraint)? {
        return Err(Error::Input(format!("seed constraint `{}` is unsatisfiable", seed.constraint)));
    }
    let seed = flatten_seed(engine, seed)?;
    let initial = initial_state(engine, &seed);
    let budget = options.budget;
    let started = Instant::now();
    let mut cfg = Configuration::new(seed, initial, options.first_solution);
    let mut log = Vec::new();
    let mut exhausted_runs = BTreeSet::new();
    let mut steps_in_run = 0;
    let mut restarts = 0;
    let mut steps = 0;
    let mut out_of_budget = false;
    loop {
        if budget.time_limit.is_some_and(|t| started.elapsed() >= t) {
            exhausted_runs.insert(cfg.tc.len() - 1);
            break;
        }
        let halted = if steps_in_run >= budget.max_steps {
            exhausted_runs.insert(cfg.tc.len() - 1);
            true
        } else {
            let before = cfg.current.head().map(|h| h.symbolic.clone());
            match cfg.current.step(engine)? {
                Ok(label) => {
                    log.push(record_step(engine, &mut cfg, before, label)?);
                    steps += 1;
                    steps_in_run += 1;
                    false
                }
                Err(_) => true,
            }
        };
        if !halted {
            continue;
        }
        if cfg.ptc.is_empty() {
            break;
        }
        if restarts >= budget.max_restarts {
            out_of_budget = true;
            break;
        }
        log.push(restart(&mut cfg));
        steps += 1;
        restarts += 1;
        steps_in_run = 0;
    }
    if !exhausted_runs.is_empty() {
        out_of_budget = true;
    }
    let mut explored: Vec<(ConstraintAtom, bool, bool)> =
        cfg.tc.iter().enumerate().map(|(i, t)| (t.clone(), true, exhausted_runs.contains(&i))).collect();
    explored.extend(cfg.ptc.iter().map(|t| (t.clone(), false, true)));
    let reports = replay_all(engine, &explored, budget.replay_steps, options.jobs)?;
    let mut traces = BTreeSet::new();
    for r in &reports {
        for d in &r.derivations {
            traces.insert(d.trace.clone());
        }
    }
    let summary = Summary {
        test_cases: reports.len(),
        explored: cfg.tc.len(),
        pending: cfg.ptc.len(),
        distinct_traces: traces.len(),
        restarts,
        steps,
        budget_exhausted: out_of_budget || reports.iter().any(|r| r.budget_exhausted),
    };
    Ok(CoverageReport { test_cases: reports, summary, log })
}

fn replay_all(engine: &Engine<'_>, cases: &[(ConstraintAtom, bool, bool)], budget: usize, jobs: usize) -> Result<Vec<TestCaseReport>> {
    let jobs = jobs.max(1).min(cases.len().max(1));
    if jobs == 1 {
        return cases.iter().map(|(t, e, x)| replay(engine, t, *e, *x, budget)).collect();
    }
    let program: &Program = engine.program();
    let chunk = cases.len().div_ceil(jobs);
    let log = engine.log();
    let results: Vec<Result<Vec<TestCaseReport>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cases
            .chunks(chunk)
            .map(|part| {
                let log = log.clone();
                scope.spawn(move || {
                    let mut e = Engine::new(program);
                    if let Some(log) = log {
                        e = e.with_log(log);
                    }
                    part.iter().map(|(t, ex, x)| replay(&e, t, *ex, *x, budget)).collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("replay thread panicked")).collect()
    });
    let mut out = Vec::with_capacity(cases.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

fn replay(engine: &Engine<'_>, t: &ConstraintAtom, explored: bool, exhausted: bool, budget: usize) -> Result<TestCaseReport> {
    let q = t.as_state();
    let records = run_standard(engine, &q, budget)?;
    let derivations: Vec<ReplayedDerivation> = records.iter().map(|r| ReplayedDerivation { trace: r.trace.clone(), outcome: r.outcome }).collect();
    let (trace, outcome) = derivations.first().map(|d| (d.trace.clone(), d.outcome)).unwrap_or((Trace::empty(), Outcome::Failure));
    let namer = q.namer();
    Ok(TestCaseReport {
        constraint: namer.constraint(&q.constraint),
        atom: q.goal_text(&namer),
        trace,
        outcome,
        budget_exhausted: exhausted || derivations.iter().any(|d| d.outcome == Outcome::BudgetExhausted),
        derivations,
        explored,
        test_case: t.clone(),
    })
}

/// Step names of a run, e.g. `alts(choice)`.
pub fn step_names(log: &[TestingStep]) -> Vec<String> {
    log.iter().map(TestingStep::short).collect()
}

/// Groups test cases by the traces their replays produce.
pub fn behaviours(report: &CoverageReport) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for t in &report.test_cases {
        let key = t.derivations.iter().map(|d| format!("{}:{}", d.trace, d.outcome)).collect::<Vec<_>>().join(" ");
        out.entry(key).or_default().push(format!("{{{}}} {}", t.constraint, t.atom));
    }
    out
}
