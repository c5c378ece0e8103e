//! A session over one program: fresh variables, solver access and resolution.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::constraint::{unification_formula, Constraint, ConstraintAtom, State};
use crate::error::{Error, Result};
use crate::program::{Program, Rule};
use crate::solver::{solve, Verdict};
use crate::term::{mgu, Domain, FreshSupply, Var};

/// Called once per solver query with the formula and its verdict.
pub type QueryLog = Arc<dyn Fn(&Constraint, Verdict) + Send + Sync>;

pub struct Engine<'p> {
    program: &'p Program,
    supply: FreshSupply,
    log: Option<QueryLog>,
    queries: AtomicU64,
}

impl<'p> Engine<'p> {
    pub fn new(program: &'p Program) -> Self {
        Engine { program, supply: FreshSupply::above(program.vars().iter()), log: None, queries: AtomicU64::new(0) }
    }

    pub fn with_log(mut self, log: QueryLog) -> Self {
        self.log = Some(log);
        self
    }

    pub fn log(&self) -> Option<QueryLog> {
        self.log.clone()
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    pub fn supply(&self) -> &FreshSupply {
        &self.supply
    }

    /// Make sure later fresh variables avoid everything in `vars`.
    pub fn reserve<'a>(&self, vars: impl IntoIterator<Item = &'a Var>) {
        self.supply.bump_above(vars);
    }

    pub fn reserve_state(&self, q: &State) {
        let mut vars = BTreeSet::new();
        q.constraint.all_vars(&mut vars);
        q.goal.iter().for_each(|a| a.collect_vars(&mut vars));
        self.reserve(&vars);
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn solve(&self, c: &Constraint) -> Result<Verdict> {
        let v = solve(c, &self.program.signature)?;
        self.queries.fetch_add(1, Ordering::Relaxed);
        if let Some(log) = &self.log {
            log(c, v);
        }
        Ok(v)
    }

    pub fn is_sat(&self, c: &Constraint) -> Result<bool> {
        Ok(self.solve(c)?.is_sat())
    }

    /// Whether two variable-disjoint constraint atoms unify.
    pub fn unifies(&self, c1: &ConstraintAtom, c2: &ConstraintAtom) -> Result<bool> {
        if c1.atom.key() != c2.atom.key() {
            return Ok(false);
        }
        let domain = self.program.signature.domain;
        if domain == Domain::Term && mgu(c1.atom.args.iter().cloned().zip(c2.atom.args.iter().cloned())).is_none() {
            return Ok(false);
        }
        self.is_sat(&unification_formula(domain, c1, c2)?)
    }

    pub fn fresh_rule(&self, r: &Rule) -> Rule {
        r.fresh_copy(&self.supply)
    }

    /// Rules whose fresh copy unifies with the selected constraint atom of `q`,
    /// in program order.
    pub fn rules_matching(&self, q: &State) -> Result<Vec<&'p Rule>> {
        let selected = q.c_atom()?;
        self.reserve_state(q);
        let mut out = Vec::new();
        for r in &self.program.rules {
            if r.head.key() != selected.atom.key() {
                continue;
            }
            if self.unifies(&selected, &self.fresh_rule(r).c_atom())? {
                out.push(r);
            }
        }
        Ok(out)
    }

    /// One resolution step against a fresh copy of `r`, without checking
    /// that the result is satisfiable.
    pub fn resolve(&self, q: &State, r: &Rule) -> Result<State> {
        let (selected, rest) = q.goal.split_first().ok_or(Error::NoSelectedAtom)?;
        if selected.key() != r.head.key() {
            return Err(Error::RuleDoesNotMatch);
        }
        self.reserve_state(q);
        let copy = self.fresh_rule(r);
        let eqs = Constraint::equations(self.program.signature.domain, &copy.head.args, &selected.args)?;
        let mut parts = vec![eqs];
        if copy.guard != Constraint::True {
            parts.push(copy.guard);
        }
        parts.push(q.constraint.clone());
        let mut goal = copy.body;
        goal.extend(rest.iter().cloned());
        Ok(State::new(Constraint::conj(parts), goal))
    }

    /// `q ->_r q'`; fails when `r` does not match `q`.
    pub fn derive_step(&self, q: &State, r: &Rule) -> Result<State> {
        let next = self.resolve(q, r)?;
        if !self.is_sat(&next.constraint)? {
            return Err(Error::RuleDoesNotMatch);
        }
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_state};

    const SUCC: &str = "#domain term.\n#functors a/0, b/0, s/1.\np(X) :- {X = a}.\np(s(Y)) :- {true}, q(Y).\nq(W) :- {W = a}.\n";

    fn labels(rs: &[&Rule]) -> Vec<String> {
        rs.iter().map(|r| r.label.to_string()).collect()
    }

    #[test]
    fn matching_rules() {
        let p = parse_program(SUCC).unwrap();
        let e = Engine::new(&p);
        let q = parse_state("{X = s(a)} p(X)", &p.signature).unwrap();
        assert_eq!(labels(&e.rules_matching(&q).unwrap()), ["l2"]);
        let q = parse_state("{true} p(N)", &p.signature).unwrap();
        assert_eq!(labels(&e.rules_matching(&q).unwrap()), ["l1", "l2"]);
        let q = parse_state("{N = a /\\ forall([Y], N \\= s(Y)) /\\ N \\= a} p(N)", &p.signature).unwrap();
        assert!(e.rules_matching(&q).unwrap().is_empty());
    }

    #[test]
    fn derivation_steps() {
        let p = parse_program(SUCC).unwrap();
        let e = Engine::new(&p);
        let q = parse_state("{X = s(a)} p(X)", &p.signature).unwrap();
        let q1 = e.derive_step(&q, &p.rules[1]).unwrap();
        assert_eq!(q1.to_string(), "{s(Y) = X /\\ X = s(a)} q(Y)");
        let q2 = e.derive_step(&q1, &p.rules[2]).unwrap();
        assert!(q2.is_successful());
        assert_eq!(q2.to_string(), "{W = Y /\\ W = a /\\ s(Y) = X /\\ X = s(a)} []");
        assert!(matches!(e.derive_step(&q, &p.rules[0]), Err(Error::RuleDoesNotMatch)));
        assert!(matches!(e.derive_step(&q2, &p.rules[0]), Err(Error::NoSelectedAtom)));
    }
}
