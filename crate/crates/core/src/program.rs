//! Rules and programs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::constraint::{Constraint, ConstraintAtom, Namer};
use crate::error::{Error, Result};
use crate::solver::solve;
use crate::term::{Atom, FreshSupply, Signature, Var};

/// A labelled rule `H <- c /\ B`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub label: Arc<str>,
    pub head: Atom,
    pub guard: Constraint,
    pub body: Vec<Atom>,
    /// Source line, or 0 for rules built in code.
    pub line: usize,
}

impl Rule {
    pub fn new(label: &str, head: Atom, guard: Constraint, body: Vec<Atom>) -> Self {
        Rule { label: Arc::from(label), head, guard, body, line: 0 }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.guard.all_vars(&mut out);
        self.head.collect_vars(&mut out);
        self.body.iter().for_each(|a| a.collect_vars(&mut out));
        out
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Rule {
        Rule {
            label: self.label.clone(),
            head: self.head.rename(map),
            guard: self.guard.rename(map),
            body: self.body.iter().map(|a| a.rename(map)).collect(),
            line: self.line,
        }
    }

    /// A variant whose variables all come from `supply`.
    pub fn fresh_copy(&self, supply: &FreshSupply) -> Rule {
        let map = self.vars().iter().map(|v| (v.clone(), supply.fresh_like(v))).collect();
        self.rename(&map)
    }

    /// A variant sharing no variable with `avoid`. Ground rules come back unchanged.
    pub fn rename_apart(&self, avoid: &BTreeSet<Var>) -> Rule {
        let vars = self.vars();
        if vars.is_disjoint(avoid) {
            return self.clone();
        }
        let supply = FreshSupply::above(vars.iter().chain(avoid.iter()));
        self.fresh_copy(&supply)
    }

    /// `<c | H>`.
    pub fn c_atom(&self) -> ConstraintAtom {
        ConstraintAtom::new(self.guard.clone(), self.head.clone())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let namer = Namer::for_vars(&self.vars());
        write!(f, "{}: {} :- {{{}}}", self.label, namer.atom(&self.head), namer.constraint(&self.guard))?;
        for a in &self.body {
            write!(f, ", {}", namer.atom(a))?;
        }
        write!(f, ".")
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub signature: Signature,
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn new(signature: Signature, rules: Vec<Rule>) -> Self {
        Program { signature, rules }
    }

    pub fn rule(&self, label: &str) -> Result<&Rule> {
        self.rules.iter().find(|r| r.label.as_ref() == label).ok_or_else(|| Error::UnknownRule(label.into()))
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.label.as_ref() == label)
    }

    /// Every variable occurring in some rule.
    pub fn vars(&self) -> BTreeSet<Var> {
        self.rules.iter().flat_map(Rule::vars).collect()
    }

    pub fn check_guards(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for r in &self.rules {
            if !seen.insert(r.label.clone()) {
                return Err(Error::DuplicateLabel(r.label.to_string()));
            }
            if !solve(&r.guard, &self.signature)?.is_sat() {
                return Err(Error::UnsatGuard(r.line));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
