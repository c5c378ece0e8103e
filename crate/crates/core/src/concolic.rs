//! Concolic execution: concrete and symbolic states stepped in lockstep.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::constraint::{Constraint, ConstraintAtom, State};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::normalize::nnf;
use crate::program::Rule;
use crate::semantics::{Outcome, Trace};
use crate::term::{Domain, Var};

/// `forall V (s \= t \/ ~d)` for `h = <d | p(t)>` against `c = <_ | p(s)>`,
/// conjoined over every element of `hs`. The empty set gives `true`.
pub fn neg_constr(domain: Domain, c: &ConstraintAtom, hs: &[ConstraintAtom]) -> Result<Constraint> {
    let mut parts = Vec::with_capacity(hs.len());
    for h in hs {
        if c.atom.key() != h.atom.key() {
            return Err(Error::PredicateMismatch(c.atom.predicate.to_string(), h.atom.predicate.to_string()));
        }
        let mut vars: Vec<Var> = Vec::new();
        h.atom.collect_vars_ordered(&mut vars);
        for v in h.constraint.free_vars_ordered() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        let mut disjuncts = Vec::new();
        for (s, t) in c.atom.args.iter().zip(&h.atom.args) {
            disjuncts.push(Constraint::disequation(domain, s, t)?);
        }
        match nnf(&Constraint::Not(Box::new(h.constraint.clone()))) {
            Constraint::False => {}
            Constraint::Or(ds) => disjuncts.extend(ds),
            other => disjuncts.push(other),
        }
        parts.push(Constraint::forall(vars, Constraint::disj(disjuncts)));
    }
    Ok(Constraint::conj(parts))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Backtrack,
    Next,
    Choice,
    Unfold,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Backtrack => "backtrack",
            StepKind::Next => "next",
            StepKind::Choice => "choice",
            StepKind::Unfold => "unfold",
        })
    }
}

/// `(pi, R_Q, R_S)` together with the rule that produced the step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepLabel {
    pub kind: StepKind,
    pub trace: Trace,
    pub r_q: Vec<Arc<str>>,
    pub r_s: Vec<Arc<str>>,
}

impl StepLabel {
    fn new(kind: StepKind, trace: &Trace, r_q: &[&Rule], r_s: &[&Rule]) -> Self {
        let labels = |rs: &[&Rule]| rs.iter().map(|r| r.label.clone()).collect();
        StepLabel { kind, trace: trace.clone(), r_q: labels(r_q), r_s: labels(r_s) }
    }
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set = |ls: &[Arc<str>]| format!("{{{}}}", ls.iter().map(|l| l.as_ref()).collect::<Vec<_>>().join(","));
        write!(f, "{} {} {} {}", self.kind, self.trace, set(&self.r_q), set(&self.r_s))
    }
}

/// `<Q ][ S_pi>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcolicPair {
    pub concrete: State,
    pub symbolic: State,
    pub trace: Trace,
}

impl ConcolicPair {
    pub fn new(concrete: State, symbolic: State) -> Self {
        ConcolicPair { concrete, symbolic, trace: Trace::empty() }
    }
}

impl fmt::Display for ConcolicPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{} ][ {}_{}>", self.concrete, self.symbolic, self.trace)
    }
}

/// `gamma = neg_constr(c-atom(S), c-atom(R_S \ R_Q))` over fresh rule copies.
pub fn gamma(engine: &Engine<'_>, symbolic: &State, r_q: &[&Rule], r_s: &[&Rule]) -> Result<Constraint> {
    let excluded: Vec<ConstraintAtom> = r_s
        .iter()
        .filter(|r| !r_q.iter().any(|q| q.label == r.label))
        .map(|r| engine.fresh_rule(r).c_atom())
        .collect();
    neg_constr(engine.program().signature.domain, &symbolic.c_atom()?, &excluded)
}

fn strengthen(s: &State, gamma: &Constraint) -> State {
    if *gamma == Constraint::True {
        s.clone()
    } else {
        s.conjoin(gamma.clone())
    }
}

/// One nondeterministic concolic step with rule `label`, which must match
/// the concrete state.
pub fn concolic_step_nd(engine: &Engine<'_>, cs: &ConcolicPair, label: &str) -> Result<(ConcolicPair, StepLabel)> {
    let r_q = engine.rules_matching(&cs.concrete)?;
    let Some(rule) = r_q.iter().find(|r| r.label.as_ref() == label).copied() else {
        return Err(Error::RuleDoesNotMatch);
    };
    let r_s = engine.rules_matching(&cs.symbolic)?;
    let g = gamma(engine, &cs.symbolic, &r_q, &r_s)?;
    let step = StepLabel::new(StepKind::Choice, &cs.trace, &r_q, &r_s);
    let concrete = engine.resolve(&cs.concrete, rule)?;
    let symbolic = engine.resolve(&strengthen(&cs.symbolic, &g), rule)?;
    Ok((ConcolicPair { concrete, symbolic, trace: cs.trace.extend(&rule.label) }, step))
}

/// A finished nondeterministic concolic derivation.
#[derive(Clone, Debug)]
pub struct NdRun {
    pub pairs: Vec<ConcolicPair>,
    pub labels: Vec<StepLabel>,
    pub outcome: Outcome,
}

impl NdRun {
    pub fn last(&self) -> &ConcolicPair {
        self.pairs.last().expect("a run starts with its initial pair")
    }
}

/// Every finished nondeterministic concolic derivation from `start`, depth
/// first in program order, with at most `budget` steps in total.
pub fn explore_nd(engine: &Engine<'_>, start: &ConcolicPair, budget: usize) -> Result<Vec<NdRun>> {
    let mut out = Vec::new();
    if !engine.is_sat(&start.concrete.constraint)? {
        return Ok(out);
    }
    let mut used = 0;
    let mut stack = vec![NdRun { pairs: vec![start.clone()], labels: Vec::new(), outcome: Outcome::Success }];
    while let Some(run) = stack.pop() {
        let pair = run.last();
        if pair.concrete.is_successful() {
            out.push(run);
            continue;
        }
        let r_q = engine.rules_matching(&pair.concrete)?;
        if r_q.is_empty() {
            out.push(NdRun { outcome: Outcome::Failure, ..run });
            continue;
        }
        if used + r_q.len() > budget {
            out.push(NdRun { outcome: Outcome::BudgetExhausted, ..run });
            break;
        }
        let mut children = Vec::with_capacity(r_q.len());
        for r in &r_q {
            used += 1;
            let (next, label) = concolic_step_nd(engine, pair, &r.label)?;
            let mut child = run.clone();
            child.pairs.push(next);
            child.labels.push(label);
            children.push(child);
        }
        stack.extend(children.into_iter().rev());
    }
    Ok(out)
}

/// A stack entry of the deterministic calculus, optionally tagged with the
/// rule chosen for it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetEntry {
    pub concrete: State,
    pub symbolic: State,
    pub trace: Trace,
    pub tag: Option<Arc<str>>,
}

/// Why the deterministic calculus stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Halt {
    Exhausted,
    Solved,
    Failed,
}

/// `<Q1, ..., Qn ][ S1, ..., Sn>` with the head at the end of the vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetConcolicState {
    entries: Vec<DetEntry>,
    first_solution: bool,
}

impl DetConcolicState {
    pub fn new(concrete: State, symbolic: State) -> Self {
        DetConcolicState { entries: vec![DetEntry { concrete, symbolic, trace: Trace::empty(), tag: None }], first_solution: false }
    }

    /// Without the `next` rule the calculus stops at the first solution.
    pub fn first_solution(mut self, on: bool) -> Self {
        self.first_solution = on;
        self
    }

    pub fn head(&self) -> Option<&DetEntry> {
        self.entries.last()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries from head to bottom.
    pub fn entries(&self) -> impl Iterator<Item = &DetEntry> {
        self.entries.iter().rev()
    }

    /// Applies one rule of the calculus, or reports why none applies.
    pub fn step(&mut self, engine: &Engine<'_>) -> Result<std::result::Result<StepLabel, Halt>> {
        let Some(head) = self.entries.last() else { return Ok(Err(Halt::Exhausted)) };
        let has_tail = self.entries.len() > 1;
        if let Some(tag) = head.tag.clone() {
            let rule = engine.program().rule(&tag)?;
            let head = self.entries.pop().unwrap();
            let label = StepLabel::new(StepKind::Unfold, &head.trace, &[], &[]);
            let concrete = engine.resolve(&head.concrete, rule)?;
            let symbolic = engine.resolve(&head.symbolic, rule)?;
            self.entries.push(DetEntry { concrete, symbolic, trace: head.trace.extend(&rule.label), tag: None });
            return Ok(Ok(label));
        }
        if head.concrete.is_successful() {
            if !has_tail || self.first_solution {
                return Ok(Err(Halt::Solved));
            }
            let head = self.entries.pop().unwrap();
            return Ok(Ok(StepLabel::new(StepKind::Next, &head.trace, &[], &[])));
        }
        let r_q = engine.rules_matching(&head.concrete)?;
        if r_q.is_empty() {
            if !has_tail {
                return Ok(Err(Halt::Failed));
            }
            let r_s = engine.rules_matching(&head.symbolic)?;
            let head = self.entries.pop().unwrap();
            return Ok(Ok(StepLabel::new(StepKind::Backtrack, &head.trace, &[], &r_s)));
        }
        let r_s = engine.rules_matching(&head.symbolic)?;
        let g = gamma(engine, &head.symbolic, &r_q, &r_s)?;
        let head = self.entries.pop().unwrap();
        let label = StepLabel::new(StepKind::Choice, &head.trace, &r_q, &r_s);
        let symbolic = strengthen(&head.symbolic, &g);
        for r in r_q.iter().rev() {
            self.entries.push(DetEntry {
                concrete: head.concrete.clone(),
                symbolic: symbolic.clone(),
                trace: head.trace.clone(),
                tag: Some(r.label.clone()),
            });
        }
        Ok(Ok(label))
    }
}
