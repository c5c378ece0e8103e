//! Standard operational semantics with leftmost selection.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::constraint::State;
use crate::engine::Engine;
use crate::error::Result;

/// A sequence of rule labels.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Trace(pub Vec<Arc<str>>);

impl Trace {
    pub fn empty() -> Self {
        Trace(Vec::new())
    }

    /// `pi.l`
    pub fn extend(&self, label: &Arc<str>) -> Trace {
        let mut v = self.0.clone();
        v.push(label.clone());
        Trace(v)
    }

    pub fn labels(&self) -> &[Arc<str>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_prefix_of(&self, other: &Trace) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl<S: AsRef<str>> FromIterator<S> for Trace {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Trace(iter.into_iter().map(|s| Arc::from(s.as_ref())).collect())
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        write!(f, "{}", self.0.iter().map(|l| l.as_ref()).collect::<Vec<_>>().join("."))
    }
}

impl fmt::Debug for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Trace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|l| l.as_ref()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
    BudgetExhausted,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Success => "success",
            Outcome::Failure => "failure",
            Outcome::BudgetExhausted => "budget_exhausted",
        })
    }
}

#[derive(Clone, Debug)]
pub struct DerivationStep {
    pub before: State,
    pub label: Arc<str>,
    pub after: State,
}

#[derive(Clone, Debug)]
pub struct DerivationRecord {
    pub steps: Vec<DerivationStep>,
    pub trace: Trace,
    pub outcome: Outcome,
}

impl DerivationRecord {
    pub fn final_state<'a>(&'a self, initial: &'a State) -> &'a State {
        self.steps.last().map(|s| &s.after).unwrap_or(initial)
    }
}

struct Frame<'p> {
    state: State,
    steps: Vec<DerivationStep>,
    trace: Trace,
    rules: Vec<&'p crate::program::Rule>,
    next: usize,
}

/// All finished derivations from `q0`, depth first in program order.
/// At most `budget` derivation steps are taken; the derivation in progress
/// when the budget runs out is reported as [`Outcome::BudgetExhausted`].
pub fn run_standard<'p>(engine: &Engine<'p>, q0: &State, budget: usize) -> Result<Vec<DerivationRecord>> {
    let mut out = Vec::new();
    if !engine.is_sat(&q0.constraint)? {
        return Ok(out);
    }
    let mut used = 0;
    let mut stack: Vec<Frame<'p>> = Vec::new();
    let open = |state: State, steps: Vec<DerivationStep>, trace: Trace, stack: &mut Vec<Frame<'p>>, out: &mut Vec<DerivationRecord>| -> Result<()> {
        if state.is_successful() {
            out.push(DerivationRecord { steps, trace, outcome: Outcome::Success });
            return Ok(());
        }
        let rules = engine.rules_matching(&state)?;
        if rules.is_empty() {
            out.push(DerivationRecord { steps, trace, outcome: Outcome::Failure });
            return Ok(());
        }
        stack.push(Frame { state, steps, trace, rules, next: 0 });
        Ok(())
    };
    open(q0.clone(), Vec::new(), Trace::empty(), &mut stack, &mut out)?;
    while let Some(top) = stack.last_mut() {
        if top.next == top.rules.len() {
            stack.pop();
            continue;
        }
        if used >= budget {
            let top = stack.pop().unwrap();
            out.push(DerivationRecord { steps: top.steps, trace: top.trace, outcome: Outcome::BudgetExhausted });
            break;
        }
        let rule = top.rules[top.next];
        top.next += 1;
        used += 1;
        let after = engine.resolve(&top.state, rule)?;
        let mut steps = top.steps.clone();
        steps.push(DerivationStep { before: top.state.clone(), label: rule.label.clone(), after: after.clone() });
        let trace = top.trace.extend(&rule.label);
        open(after, steps, trace, &mut stack, &mut out)?;
    }
    Ok(out)
}
