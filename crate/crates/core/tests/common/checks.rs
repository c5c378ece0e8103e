//! One checker per acceptance criterion. Each returns a tally of the
//! instances it examined and every violation it found.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use clpct_core::concolic::gamma;
use clpct_core::driver::TestingOptions;
use clpct_core::generation::{alts_candidates, csup_gamma_set, csup_sufficient_bound};
use clpct_core::solver::oracle::sufficient_bound;
use clpct_core::*;
use rand::Rng;

use super::gen::{self, Shape};
use super::{catom, program, same_set, state, term_sig};

#[derive(Default)]
pub struct Tally {
    pub instances: usize,
    pub skipped: usize,
    pub violations: Vec<String>,
    pub unsupported: usize,
    pub elapsed: Duration,
}

impl Tally {
    pub fn ok(&self) -> bool {
        self.violations.is_empty() && self.unsupported == 0
    }

    fn fail(&mut self, msg: impl Into<String>) {
        if self.violations.len() < 20 {
            self.violations.push(msg.into());
        } else if self.violations.len() == 20 {
            self.violations.push("further violations omitted".into());
        }
    }

    /// Unwraps an engine result, recording errors as violations.
    fn take<T>(&mut self, what: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(Error::Solver(SolverError::Unsupported(m))) => {
                self.unsupported += 1;
                self.fail(format!("{what}: unsupported-formula {m}"));
                None
            }
            Err(e) => {
                self.fail(format!("{what}: {e}"));
                None
            }
        }
    }

    fn merge(&mut self, other: Tally) {
        self.instances += other.instances;
        self.skipped += other.skipped;
        self.unsupported += other.unsupported;
        self.elapsed += other.elapsed;
        for v in other.violations {
            self.fail(v);
        }
    }
}

impl fmt::Display for Tally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} instances, {} skipped, {} violations, {} unsupported, {:.2?}", self.instances, self.skipped, self.violations.len(), self.unsupported, self.elapsed)
    }
}

fn timed(f: impl FnOnce(&mut Tally)) -> Tally {
    let start = Instant::now();
    let mut t = Tally::default();
    f(&mut t);
    t.elapsed = start.elapsed();
    t
}

fn p_of(var: &str) -> Vec<Atom> {
    vec![Atom::new("p", vec![Term::var(var)])]
}

/// Same ground instances of `p(V)` at `u`, whatever the variable names.
fn same_p_set(a: &ConstraintAtom, b: &ConstraintAtom, sig: &Signature, u: &GroundUniverse) -> bool {
    same_set(&a.as_state(), &b.as_state(), sig, u)
}

/// The final test-case set of the worked example and its replay behaviour.
pub const GOLDEN_CASES: [(&str, &[(&str, Outcome)]); 5] = [
    ("{N = a} p(N)", &[("l1", Outcome::Success)]),
    ("{true} p(N)", &[("l1", Outcome::Success), ("l2.l3", Outcome::Success)]),
    ("{N \\= a} p(N)", &[("l2.l3", Outcome::Success)]),
    ("{N \\= a /\\ forall([Y], N \\= s(Y))} p(N)", &[("ε", Outcome::Failure)]),
    ("{forall([W], Y \\= W \\/ W \\= a) /\\ s(Y) = N} p(N)", &[("l2", Outcome::Failure)]),
];

pub fn golden_run() -> Tally {
    timed(|t| {
        let p = program("succ.clp");
        let e = Engine::new(&p);
        let seed = catom("{N = a} p(N)", &p.signature);
        let Some(report) = t.take("testing", run_concolic_testing(&e, ("p", 1), &seed, &TestingOptions::default())) else { return };
        let u = GroundUniverse::term(3);
        t.instances = report.test_cases.len();
        if report.test_cases.len() != GOLDEN_CASES.len() {
            t.fail(format!("{} test cases instead of {}", report.test_cases.len(), GOLDEN_CASES.len()));
        }
        let mut used = BTreeSet::new();
        for (src, behaviour) in GOLDEN_CASES {
            let expected = catom(src, &p.signature);
            let hit = report.test_cases.iter().enumerate().find(|(i, tc)| !used.contains(i) && same_p_set(&tc.test_case, &expected, &p.signature, &u));
            let Some((i, tc)) = hit else {
                t.fail(format!("no test case equivalent to {src}"));
                continue;
            };
            used.insert(i);
            let got: Vec<(String, Outcome)> = tc.derivations.iter().map(|d| (d.trace.to_string(), d.outcome)).collect();
            let want: Vec<(String, Outcome)> = behaviour.iter().map(|(tr, o)| (tr.to_string(), *o)).collect();
            if got != want {
                t.fail(format!("{src}: replay {got:?}, expected {want:?}"));
            }
        }
        if report.summary.budget_exhausted {
            t.fail("budget exhausted");
        }
    })
}

pub fn two_step_derivation() -> Tally {
    timed(|t| {
        let p = program("succ.clp");
        let e = Engine::new(&p);
        let sig = &p.signature;
        let start = ConcolicPair::new(state("{X = s(a)} p(X)", sig), state("{true} p(N)", sig));
        t.instances = 1;
        let Some(rq) = t.take("rules", e.rules_matching(&start.concrete)) else { return };
        let Some(rs) = t.take("rules", e.rules_matching(&start.symbolic)) else { return };
        let Some(g) = t.take("gamma", gamma(&e, &start.symbolic, &rq, &rs)) else { return };
        let expected = parse_constraint("forall([X1], N \\= X1 \\/ X1 \\= a)", sig).unwrap();
        let u = GroundUniverse::term(3);
        if !same_set(&State::new(g.clone(), p_of("N")), &State::new(expected, p_of("N")), sig, &u) {
            t.fail(format!("gamma {g} differs from the documented one"));
        }
        let Some((c1, l1)) = t.take("step 1", concolic_step_nd(&e, &start, "l2")) else { return };
        let Some((c2, l2)) = t.take("step 2", concolic_step_nd(&e, &c1, "l3")) else { return };
        let labels = [l1.to_string(), l2.to_string()];
        if labels != ["choice ε {l2} {l1,l2}", "choice l2 {l3} {l3}"] {
            t.fail(format!("labels {labels:?}"));
        }
        if c2.trace.to_string() != "l2.l3" || !c2.concrete.is_successful() || !c2.symbolic.is_successful() {
            t.fail(format!("final pair {c2}"));
        }
    })
}

pub fn alts_goldens() -> Tally {
    timed(|t| {
        let inst = parse_instance(&super::read("succ.alts"), &["I", "C"]).unwrap();
        let sig = &inst.signature;
        let req = alts_request(&inst);
        let prog = Program::new(sig.clone(), Vec::new());
        let e = engine_for(&prog, &req);
        let u = GroundUniverse::term(3);
        t.instances += 1;
        if let Some(got) = t.take("term alts", alts(&e, &req)) {
            let expected = ["{forall([M], W \\= a /\\ W \\= s(M))} p(W)", "{forall([M], W \\= s(M))} p(W)", "{true} p(W)"];
            if got.len() != expected.len() {
                t.fail(format!("term alts returned {} states", got.len()));
            }
            for src in expected {
                let want = catom(src, sig);
                if !got.iter().any(|g| same_p_set(g, &want, sig, &u)) {
                    t.fail(format!("term alts misses {src}"));
                }
            }
        }

        let inst = parse_instance(&super::read("bounds.alts"), &["I", "C"]).unwrap();
        let sig = &inst.signature;
        let req = alts_request(&inst);
        let prog = Program::new(sig.clone(), Vec::new());
        let e = engine_for(&prog, &req);
        let u = GroundUniverse::nat(20);
        t.instances += 1;
        if let Some(cands) = t.take("nat alts", alts_candidates(&e, &req)) {
            match cands.iter().find(|c| c.plus == [0, 1]) {
                Some(c) if c.result.is_none() => {}
                Some(c) => t.fail(format!("{{H1,H2}} accepted with {:?}", c.result)),
                None => t.fail("{H1,H2} not considered"),
            }
            let want = catom("{W < 8} p(W)", sig);
            match cands.iter().find(|c| c.plus == [0, 2]) {
                Some(AltsCandidateView { result: Some(r), .. }) if same_p_set(r, &want, sig, &u) => {}
                other => t.fail(format!("{{H1,H3}} gave {:?}", other.map(|c| &c.result))),
            }
        }
    })
}

type AltsCandidateView = clpct_core::generation::AltsCandidate;

pub fn alts_request(inst: &clpct_core::parser::Instance) -> AltsRequest {
    let hs: Vec<(String, ConstraintAtom)> = inst.section("HS").to_vec();
    let hq = inst.section("HQ").iter().map(|(text, _)| hs.iter().find(|(t, _)| t == text).expect("HQ entry in HS").1.clone()).collect();
    AltsRequest {
        initial: inst.section("I")[0].1.clone(),
        current: inst.section("C")[0].1.clone(),
        matched_concrete: hq,
        matched_symbolic: hs.into_iter().map(|(_, c)| c).collect(),
    }
}

fn engine_for<'p>(prog: &'p Program, req: &AltsRequest) -> Engine<'p> {
    let e = Engine::new(prog);
    for c in [&req.initial, &req.current].into_iter().chain(&req.matched_symbolic) {
        e.reserve(&c.vars());
    }
    e
}

pub fn universe(domain: Domain, bound: usize) -> GroundUniverse {
    match domain {
        Domain::Term => GroundUniverse::term(bound),
        Domain::Nat => GroundUniverse::nat(bound),
    }
}

/// Largest bound the brute-force checks are allowed to reach.
pub fn bound_cap(domain: Domain) -> usize {
    match domain {
        Domain::Term => 8,
        Domain::Nat => 48,
    }
}

/// A random `(C, H)` pair; `C` over `X`-variables, each `H` over its own.
fn c_and_heads(r: &mut gen::Rng8, shape: &Shape, heads: usize) -> (ConstraintAtom, Vec<ConstraintAtom>) {
    let arity = if r.gen_bool(0.75) { 1 } else { 2 };
    let c = shape.c_atom(r, "X", "q", arity, 3);
    let hs = (0..heads).map(|i| shape.head(r, &format!("H{i}_"), "q", arity, 2)).collect();
    (c, hs)
}

pub fn neg_constr_props(shape: &Shape, want: usize, seed: u64) -> Tally {
    timed(|t| {
        let sig = shape.sig();
        let prog = Program::new(sig.clone(), Vec::new());
        let mut r = gen::rng(seed);
        while t.instances < want {
            let heads = r.gen_range(1..=2);
            let (c, hs) = c_and_heads(&mut r, shape, heads);
            let e = Engine::new(&prog);
            let inst = CsupInstance { c_atom: c.clone(), h_plus: Vec::new(), h_minus: hs.clone() };
            e.reserve(&inst.vars());
            if !matches!(e.is_sat(&c.constraint), Ok(true)) {
                t.skipped += 1;
                continue;
            }
            let bound = csup_sufficient_bound(&inst, &sig);
            if bound > bound_cap(shape.domain) {
                t.skipped += 1;
                continue;
            }
            t.instances += 1;
            let Some(g) = t.take("neg_constr", neg_constr(shape.domain, &c, &hs)) else { continue };
            let cg = c.conjoin(g);
            for h in &hs {
                match t.take("unify", e.unifies(&cg, h)) {
                    Some(true) => t.fail(format!("C /\\ gamma unifies with H: {cg} vs {h}")),
                    _ => {}
                }
            }
            let u = universe(shape.domain, bound);
            let mut avoiding = set_of(&c.as_state(), &sig, &u);
            avoiding.retain(|g| !hs.iter().any(|h| oracle_member(h, &g[0], &sig, &u)));
            let gset = set_of(&cg.as_state(), &sig, &u);
            if !avoiding.is_subset(&gset) {
                t.fail(format!("maximality: {c} with {hs:?} at bound {bound}"));
            }
            for g in &gset {
                if hs.iter().any(|h| oracle_member(h, &g[0], &sig, &u)) {
                    t.fail(format!("C /\\ gamma reaches an instance of H: {cg} with {hs:?} at bound {bound}"));
                    break;
                }
            }
        }
    })
}

/// A random program with an initial pair whose whole derivation tree fits
/// `budget` steps.
pub struct SemanticsCase {
    pub source: String,
    pub program: Program,
    pub concrete: State,
    pub symbolic: State,
}

pub fn semantics_case(r: &mut gen::Rng8, shape: &Shape, budget: usize) -> Option<SemanticsCase> {
    let source = gen::program_text(r, shape);
    let program = parse_program(&source).ok()?;
    let c = shape.c_atom(r, "X", "p", 1, 2);
    let concrete = ConstraintAtom::new(c.constraint, Atom::new("p", c.atom.args)).as_state();
    let symbolic = State::new(Constraint::True, vec![Atom::new("p", vec![Term::var("S")])]);
    let e = Engine::new(&program);
    if !e.is_sat(&concrete.constraint).ok()? {
        return None;
    }
    let records = run_standard(&e, &concrete, budget).ok()?;
    if records.is_empty() || records.iter().any(|d| d.outcome == Outcome::BudgetExhausted) {
        return None;
    }
    Some(SemanticsCase { source, program, concrete, symbolic })
}

fn key(s: &State) -> String {
    canonical_key(s)
}

/// `<c | goal ++ extra>`, so bounded sets also pin the initial variables.
/// Variables outside the goal are eliminated first where equations allow.
fn with_goal(s: &State, extra: &[Atom]) -> State {
    let mut goal = s.goal.clone();
    goal.extend(extra.iter().cloned());
    let keep = goal.iter().flat_map(|a| a.vars()).collect();
    State::new(normalize_keeping(&s.constraint, &keep), goal)
}

pub fn semantics_agreement(shape: &Shape, want: usize, seed: u64) -> Tally {
    timed(|t| {
        let mut r = gen::rng(seed);
        let budget = 100;
        let sig = shape.sig();
        let u = universe(shape.domain, if shape.domain == Domain::Term { 2 } else { 6 });
        while t.instances < want {
            let Some(case) = semantics_case(&mut r, shape, budget) else {
                t.skipped += 1;
                continue;
            };
            let e = Engine::new(&case.program);
            e.reserve_state(&case.concrete);
            let start = ConcolicPair::new(case.concrete.clone(), case.symbolic.clone());
            let Some(runs) = t.take("explore", explore_nd(&e, &start, budget)) else { continue };
            if runs.iter().any(|r| r.outcome == Outcome::BudgetExhausted) {
                t.skipped += 1;
                continue;
            }
            t.instances += 1;
            let ctx = || format!("program:\n{}initial {}", case.source, case.concrete);
            let Some(records) = t.take("standard", run_standard(&e, &case.concrete, budget)) else { continue };

            // Same traces and outcomes, and equivalent final concrete states.
            let mut std_traces: BTreeMap<String, (Outcome, usize)> = BTreeMap::new();
            let mut nd_traces: BTreeMap<String, (Outcome, usize)> = BTreeMap::new();
            for d in &records {
                let entry = std_traces.entry(d.trace.to_string()).or_insert((d.outcome, 0));
                entry.1 += 1;
            }
            for run in &runs {
                let entry = nd_traces.entry(run.last().trace.to_string()).or_insert((run.outcome, 0));
                entry.1 += 1;
            }
            if std_traces != nd_traces {
                t.fail(format!("trace multisets differ: standard {std_traces:?}, concolic {nd_traces:?}\n{}", ctx()));
                continue;
            }
            for run in &runs {
                let last = run.last();
                let Some(d) = records.iter().find(|d| d.trace == last.trace) else { continue };
                let std_final = d.final_state(&case.concrete);
                let a = State::new(std_final.constraint.clone(), case.concrete.goal.clone());
                let b = State::new(last.concrete.constraint.clone(), case.concrete.goal.clone());
                if key(&a) != key(&b) && !same_set(&with_goal(&a, &[]), &with_goal(&b, &[]), &sig, &u) {
                    t.fail(format!("final states differ on {}\n{}", last.trace, ctx()));
                }
            }

            // Replaying each finished symbolic constraint follows its trace.
            for run in &runs {
                let last = run.last();
                let mut q = State::new(last.symbolic.constraint.clone(), case.symbolic.goal.clone());
                let mut followed = true;
                for label in last.trace.labels() {
                    let Some(rule) = t.take("rule", case.program.rule(label)) else { break };
                    match e.derive_step(&q, rule) {
                        Ok(next) => q = next,
                        Err(Error::RuleDoesNotMatch) => {
                            followed = false;
                            break;
                        }
                        Err(err) => {
                            t.take::<()>("replay", Err(err));
                            break;
                        }
                    }
                }
                if !followed || (run.outcome == Outcome::Success && !q.is_successful()) {
                    t.fail(format!("replay of {} from {} leaves its trace\n{}", last.trace, last.symbolic, ctx()));
                }
            }

            // Every head reached by the deterministic calculus is reachable
            // by nondeterministic steps.
            let mut reachable: BTreeMap<String, Vec<&ConcolicPair>> = BTreeMap::new();
            for run in &runs {
                for pair in &run.pairs {
                    reachable.entry(pair.trace.to_string()).or_default().push(pair);
                }
            }
            let mut det = DetConcolicState::new(case.concrete.clone(), case.symbolic.clone());
            for _ in 0..4 * budget {
                if let Some(h) = det.head().filter(|h| h.tag.is_none()) {
                    let found = reachable.get(&h.trace.to_string()).is_some_and(|ps| {
                        ps.iter().any(|p| {
                            (key(&p.concrete) == key(&h.concrete) && key(&p.symbolic) == key(&h.symbolic))
                                || (same_set(&with_goal(&p.concrete, &case.concrete.goal), &with_goal(&h.concrete, &case.concrete.goal), &sig, &u)
                                    && same_set(&with_goal(&p.symbolic, &case.symbolic.goal), &with_goal(&h.symbolic, &case.symbolic.goal), &sig, &u))
                        })
                    });
                    if !found {
                        t.fail(format!("deterministic head at {} is not reachable\n{}", h.trace, ctx()));
                        break;
                    }
                }
                match t.take("det step", det.step(&e)) {
                    Some(Ok(_)) => {}
                    _ => break,
                }
            }
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Truth {
    Nonempty,
    Empty,
}

pub fn csup_agreement(shape: &Shape, want: usize, seed: u64) -> Tally {
    timed(|t| {
        let sig = shape.sig();
        let prog = Program::new(sig.clone(), Vec::new());
        let mut r = gen::rng(seed);
        while t.instances < want {
            let arity = if r.gen_bool(0.75) { 1 } else { 2 };
            let c = shape.c_atom(&mut r, "X", "q", arity, 3);
            let n_plus = r.gen_range(0..=2);
            let n_minus = r.gen_range(0..=2);
            let h_plus = (0..n_plus).map(|i| shape.head(&mut r, &format!("P{i}_"), "q", arity, 2)).collect();
            let h_minus = (0..n_minus).map(|i| shape.head(&mut r, &format!("M{i}_"), "q", arity, 2)).collect();
            let inst = CsupInstance { c_atom: c, h_plus, h_minus };
            let top = csup_sufficient_bound(&inst, &sig).max(1);
            if top > bound_cap(shape.domain) {
                t.skipped += 1;
                continue;
            }
            // Escalate until the oracle commits.
            let mut truth = None;
            for b in 1..=top {
                match csup_oracle(&inst, &sig, &universe(shape.domain, b)) {
                    OracleVerdict::Nonempty(_) => {
                        truth = Some(Truth::Nonempty);
                        break;
                    }
                    OracleVerdict::Empty => {
                        truth = Some(Truth::Empty);
                        break;
                    }
                    OracleVerdict::Unknown => {}
                }
            }
            let Some(truth) = truth else {
                t.skipped += 1;
                continue;
            };
            t.instances += 1;
            let e = Engine::new(&prog);
            e.reserve(&inst.vars());
            let Some((verdict, _)) = t.take("csup_decide", csup_decide(&e, &inst)) else { continue };
            let decided = if matches!(verdict, CsupVerdict::Nonempty(_)) { Truth::Nonempty } else { Truth::Empty };
            if decided != truth {
                t.fail(format!("decide {decided:?}, oracle {truth:?}: C {} H+ {:?} H- {:?}", inst.c_atom, inst.h_plus, inst.h_minus));
                continue;
            }
            if decided == Truth::Nonempty {
                let u = universe(shape.domain, top);
                let OracleVerdict::Nonempty(allowed) = csup_oracle(&inst, &sig, &u) else {
                    t.fail(format!("oracle lost its witness at bound {top}: {}", inst.c_atom));
                    continue;
                };
                let Some(gset) = t.take("gamma set", csup_gamma_set(&inst, &sig, &u)) else { continue };
                if gset != allowed {
                    t.fail(format!("Set(C /\\ gamma) differs from the witness union at bound {top}: C {} H+ {:?} H- {:?}", inst.c_atom, inst.h_plus, inst.h_minus));
                }
            }
        }
    })
}

/// A fragment formula: literals, disjunctions, negated literals and
/// quantified negative clauses.
pub fn fragment_formula(r: &mut gen::Rng8, shape: &Shape) -> Constraint {
    let vs = gen::vars("F", 2);
    let n = r.gen_range(1..=3);
    let mut parts = Vec::new();
    for _ in 0..n {
        let part = match r.gen_range(0..10) {
            0..=4 => shape.literal(r, &vs),
            5..=6 => Constraint::Or(vec![shape.literal(r, &vs), shape.literal(r, &vs)]),
            7 => Constraint::Not(Box::new(shape.literal(r, &vs))),
            _ => {
                let c = ConstraintAtom::new(Constraint::True, Atom::new("q", vec![shape.arg(r, &vs)]));
                let h = shape.head(r, &format!("G{}_", parts.len()), "q", 1, 1);
                neg_constr(shape.domain, &c, &[h]).expect("same predicate")
            }
        };
        parts.push(part);
    }
    Constraint::conj(parts)
}

pub fn solver_agreement(shape: &Shape, want: usize, seed: u64) -> Tally {
    timed(|t| {
        let sig = shape.sig();
        let mut r = gen::rng(seed);
        while t.instances < want {
            let f = fragment_formula(&mut r, shape);
            let bound = sufficient_bound(&f, shape.domain).max(1);
            if bound > bound_cap(shape.domain) {
                t.skipped += 1;
                continue;
            }
            t.instances += 1;
            let Some(v) = t.take("solve", solve(&f, &sig).map_err(Error::from)) else { continue };
            let o = oracle_sat(&f, &sig, &universe(shape.domain, bound));
            if v != o {
                t.fail(format!("solver {v:?}, oracle {o:?} at bound {bound}: {f}"));
            }
        }
    })
}

/// Runs the sample programs through the testing procedure and reports
/// any solver query outside the supported fragment.
pub fn engine_runs_supported() -> Tally {
    timed(|t| {
        for (file, seed) in [("succ.clp", "{N = a} p(N)"), ("succ.clp", "{true} p(N)"), ("bounds.clp", "{true} p(N)"), ("bounds.clp", "{N = 9} p(N)")] {
            let p = program(file);
            let e = Engine::new(&p);
            let seed = catom(seed, &p.signature);
            t.instances += 1;
            t.take(file, run_concolic_testing(&e, ("p", 1), &seed, &TestingOptions::default()));
        }
    })
}

pub fn all_shapes() -> [Shape; 2] {
    [Shape::term(), Shape::nat()]
}

pub fn merged(parts: impl IntoIterator<Item = Tally>) -> Tally {
    let mut out = Tally::default();
    for p in parts {
        out.merge(p);
    }
    out
}

pub fn sig_for(domain: Domain) -> Signature {
    match domain {
        Domain::Term => term_sig(),
        Domain::Nat => Signature::nat(),
    }
}
