//! Satisfiability of constraints over finite trees and over the naturals,
//! plus a bounded brute-force oracle used as independent ground truth.

pub mod linear;
pub mod oracle;
pub mod tree;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::constraint::{Constraint, LinRel};
use crate::error::SolverError;
use crate::normalize::nnf;
use crate::term::{Domain, FreshSupply, Signature, Term, Var};

pub use oracle::{oracle_member, oracle_sat, set_of, sufficient_bound, GroundUniverse};

/// Search nodes a single query may expand before giving up.
pub const DEFAULT_NODE_BUDGET: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    Sat,
    Unsat,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Verdict {
        if b {
            Verdict::Sat
        } else {
            Verdict::Unsat
        }
    }

    pub fn is_sat(self) -> bool {
        self == Verdict::Sat
    }
}

/// Decides satisfiability of the existential closure of `c`.
pub fn solve(c: &Constraint, sig: &Signature) -> Result<Verdict, SolverError> {
    match sig.domain {
        Domain::Term => tree::solve(c, sig),
        Domain::Nat => linear::solve(c),
    }
}

/// Negation normal form with every binder renamed to a fresh variable.
pub(crate) fn fresh_nnf(c: &Constraint, supply: &FreshSupply) -> Constraint {
    rename_binders(&nnf(c), supply, &BTreeMap::new())
}

fn rename_binders(c: &Constraint, supply: &FreshSupply, map: &BTreeMap<Var, Var>) -> Constraint {
    match c {
        Constraint::True | Constraint::False => c.clone(),
        Constraint::Tree(..) | Constraint::Lin(..) => c.rename(map),
        Constraint::And(cs) => Constraint::And(cs.iter().map(|c| rename_binders(c, supply, map)).collect()),
        Constraint::Or(cs) => Constraint::Or(cs.iter().map(|c| rename_binders(c, supply, map)).collect()),
        Constraint::Not(b) => Constraint::Not(Box::new(rename_binders(b, supply, map))),
        Constraint::Forall(vs, b) | Constraint::Exists(vs, b) => {
            let mut inner = map.clone();
            let fresh: Vec<Var> = vs
                .iter()
                .map(|v| {
                    let w = supply.fresh_like(v);
                    inner.insert(v.clone(), w.clone());
                    w
                })
                .collect();
            let body = Box::new(rename_binders(b, supply, &inner));
            match c {
                Constraint::Forall(..) => Constraint::Forall(fresh, body),
                _ => Constraint::Exists(fresh, body),
            }
        }
    }
}

/// Variables of a constraint (free and bound) for seeding a fresh supply.
pub(crate) fn supply_for(c: &Constraint) -> FreshSupply {
    let mut vars = BTreeSet::new();
    c.all_vars(&mut vars);
    FreshSupply::above(vars.iter())
}

/// A conjunction of literals with its existential variables.
#[derive(Clone, Debug, Default)]
pub(crate) struct Conj {
    pub vars: Vec<Var>,
    pub lits: Vec<Constraint>,
}

/// Disjunctive normal form of an NNF formula whose binders are fresh.
/// Universal subformulas stay literals; natural-number disequations split.
pub(crate) fn dnf(c: &Constraint) -> Vec<Conj> {
    match c {
        Constraint::True => vec![Conj::default()],
        Constraint::False => Vec::new(),
        Constraint::Lin(l, LinRel::Neq, r) => vec![
            Conj { vars: Vec::new(), lits: vec![Constraint::Lin(l.clone(), LinRel::Lt, r.clone())] },
            Conj { vars: Vec::new(), lits: vec![Constraint::Lin(r.clone(), LinRel::Lt, l.clone())] },
        ],
        Constraint::Or(cs) => cs.iter().flat_map(dnf).collect(),
        Constraint::And(cs) => {
            let mut acc = vec![Conj::default()];
            for part in cs {
                let alts = dnf(part);
                let mut next = Vec::with_capacity(acc.len() * alts.len());
                for a in &acc {
                    for b in &alts {
                        let mut vars = a.vars.clone();
                        vars.extend(b.vars.iter().cloned());
                        let mut lits = a.lits.clone();
                        lits.extend(b.lits.iter().cloned());
                        next.push(Conj { vars, lits });
                    }
                }
                acc = next;
            }
            acc
        }
        Constraint::Exists(vs, b) => dnf(b)
            .into_iter()
            .map(|mut d| {
                d.vars.extend(vs.iter().cloned());
                d
            })
            .collect(),
        Constraint::Not(b) => dnf(&nnf(&Constraint::Not(b.clone()))),
        other => vec![Conj { vars: Vec::new(), lits: vec![other.clone()] }],
    }
}

/// Negation of an NNF literal list as an NNF disjunction, with fresh binders.
pub(crate) fn negate_lits(lits: &[Constraint], supply: &FreshSupply) -> Constraint {
    let parts = lits.iter().map(|l| fresh_nnf(&Constraint::Not(Box::new(l.clone())), supply)).collect();
    Constraint::disj(parts)
}

pub(crate) fn term_eq(s: &Term, t: &Term) -> Constraint {
    Constraint::Tree(s.clone(), crate::constraint::TreeRel::Eq, t.clone())
}
