//! Brute-force evaluation over a bounded ground universe.
//!
//! Free variables range over the universe itself. Quantified variables range
//! over a wider set derived from the formula, so that values built from the
//! free variables and the formula's own terms stay in range. A universal
//! whose body contains a disequation `V \= t` with `t` already determined is
//! instantiated with `t` directly.

use std::collections::BTreeSet;

use serde::Serialize;

use super::Verdict;
use crate::constraint::{Constraint, ConstraintAtom, LinExpr, LinRel, State, TreeRel};
use crate::term::{ground_terms, Atom, Domain, Signature, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GroundUniverse {
    pub domain: Domain,
    /// Maximum term depth for finite trees, largest value for the naturals.
    pub bound: usize,
}

impl GroundUniverse {
    pub fn term(depth: usize) -> Self {
        GroundUniverse { domain: Domain::Term, bound: depth }
    }

    pub fn nat(max: usize) -> Self {
        GroundUniverse { domain: Domain::Nat, bound: max }
    }

    /// The universe's own ground values, in enumeration order.
    pub fn values(&self, sig: &Signature) -> Vec<Term> {
        match self.domain {
            Domain::Term => ground_terms(sig, self.bound),
            Domain::Nat => (0..=self.bound as u64).map(Term::num).collect(),
        }
    }
}

/// A bound at which the oracle's unsatisfiability verdicts are trusted.
/// Equations can chain variables, so depths and scaled constants add up.
pub fn sufficient_bound(c: &Constraint, domain: Domain) -> usize {
    match domain {
        Domain::Term => c.term_depth_sum() + c.disequation_count(),
        Domain::Nat => {
            let links = c.free_vars().len().saturating_sub(1) as u32;
            let mass = c.max_coefficient_mass().max(1) as usize;
            (c.numerals_sum() as usize + c.atom_count()).saturating_mul(mass.saturating_pow(links))
        }
    }
}

#[derive(Clone)]
struct Val {
    term: Term,
    num: u64,
}

impl Val {
    fn of(t: Term) -> Val {
        let num = t.as_num().unwrap_or(0);
        Val { term: t, num }
    }
}

struct Evaluator {
    quant: Vec<Val>,
    env: Vec<(Var, Val)>,
}

impl Evaluator {
    fn new(sig: &Signature, u: &GroundUniverse, formula: &Constraint, extra_depth: usize) -> Evaluator {
        let quant = match u.domain {
            Domain::Term => {
                let depth = if sig.is_finite() { 0 } else { u.bound + formula.max_term_depth().max(extra_depth) };
                ground_terms(sig, depth)
            }
            Domain::Nat => {
                let mass = formula.max_coefficient_mass().max(1) as usize;
                let top = (mass + 1) * u.bound + formula.numerals_sum() as usize + 1;
                (0..=top as u64).map(Term::num).collect()
            }
        };
        Evaluator { quant: quant.into_iter().map(Val::of).collect(), env: Vec::new() }
    }

    fn lookup(&self, v: &Var) -> &Val {
        &self.env.iter().rev().find(|(w, _)| w == v).unwrap_or_else(|| panic!("unbound variable {v:?} during evaluation")).1
    }

    fn is_bound(&self, v: &Var) -> bool {
        self.env.iter().any(|(w, _)| w == v)
    }

    fn inst(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.lookup(v).term.clone(),
            Term::App(f, args) if f.as_ref() == "+" && args.len() == 2 => {
                let l = self.inst(&args[0]).as_num().unwrap_or(0);
                let r = self.inst(&args[1]).as_num().unwrap_or(0);
                Term::num(l + r)
            }
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| self.inst(a)).collect()),
        }
    }

    fn lin(&self, e: &LinExpr) -> u64 {
        e.coeffs.iter().fold(e.constant, |acc, (v, c)| acc + c * self.lookup(v).num)
    }

    fn eval(&mut self, c: &Constraint) -> bool {
        match c {
            Constraint::True => true,
            Constraint::False => false,
            Constraint::Tree(s, r, t) => (self.inst(s) == self.inst(t)) == (*r == TreeRel::Eq),
            Constraint::Lin(l, r, e) => r.holds(self.lin(l), self.lin(e)),
            Constraint::And(cs) => cs.iter().all(|c| self.eval(c)),
            Constraint::Or(cs) => cs.iter().any(|c| self.eval(c)),
            Constraint::Not(b) => !self.eval(b),
            Constraint::Forall(vs, b) => self.quantify(vs, b, true),
            Constraint::Exists(vs, b) => self.quantify(vs, b, false),
        }
    }

    fn quantify(&mut self, vs: &[Var], body: &Constraint, universal: bool) -> bool {
        let Some((first, rest)) = vs.split_first() else { return self.eval(body) };
        if universal {
            if let Some(val) = self.determined(first, rest, body) {
                self.env.push((first.clone(), val));
                let out = self.quantify(rest, body, true);
                self.env.pop();
                return out;
            }
        }
        for i in 0..self.quant.len() {
            let val = self.quant[i].clone();
            self.env.push((first.clone(), val));
            let out = self.quantify(rest, body, universal);
            self.env.pop();
            if out != universal {
                return out;
            }
        }
        universal
    }

    /// The only value of `v` for which a disjunct `v \= t` of the body fails.
    fn determined(&self, v: &Var, later: &[Var], body: &Constraint) -> Option<Val> {
        let Constraint::Or(ds) = body else { return None };
        let ready = |t: &Term| t.vars().iter().all(|w| w != v && !later.contains(w) && self.is_bound(w));
        for d in ds {
            match d {
                Constraint::Tree(s, TreeRel::Neq, t) => {
                    for (x, other) in [(s, t), (t, s)] {
                        if x.as_var() == Some(v) && ready(other) {
                            return Some(Val::of(self.inst(other)));
                        }
                    }
                }
                Constraint::Lin(l, LinRel::Neq, r) => {
                    for (x, other) in [(l, r), (r, l)] {
                        if x.constant == 0 && x.coeffs.len() == 1 && x.coeffs.get(v) == Some(&1) {
                            let t = other.to_term();
                            if ready(&t) {
                                return Some(Val::of(Term::num(self.lin(other))));
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        None
    }

    /// Enumerates `vars` over `range`, stopping when `f` returns true.
    fn search(&mut self, vars: &[Var], range: &[Val], f: &mut dyn FnMut(&mut Evaluator) -> bool) -> bool {
        let Some((first, rest)) = vars.split_first() else { return f(self) };
        for val in range {
            self.env.push((first.clone(), val.clone()));
            let hit = self.search(rest, range, f);
            self.env.pop();
            if hit {
                return true;
            }
        }
        false
    }
}

/// Satisfiability of `c` with free variables drawn from the universe.
pub fn oracle_sat(c: &Constraint, sig: &Signature, u: &GroundUniverse) -> Verdict {
    Verdict::from_bool(oracle_witness(c, sig, u).is_some())
}

/// The first satisfying assignment in enumeration order.
pub fn oracle_witness(c: &Constraint, sig: &Signature, u: &GroundUniverse) -> Option<Vec<(Var, Term)>> {
    let vars = c.free_vars_ordered();
    let range: Vec<Val> = u.values(sig).into_iter().map(Val::of).collect();
    let mut ev = Evaluator::new(sig, u, c, 0);
    let mut found = None;
    ev.search(&vars, &range, &mut |ev| {
        if ev.eval(c) {
            found = Some(ev.env.iter().map(|(v, val)| (v.clone(), val.term.clone())).collect());
            true
        } else {
            false
        }
    });
    found
}

/// Exact satisfiability when the signature has only constants.
pub fn finite_sat(c: &Constraint, sig: &Signature) -> Verdict {
    oracle_sat(c, sig, &GroundUniverse::term(0))
}

/// Whether the ground atom `g` lies in `Set(h)`. Variables of `h` range
/// over `u` widened to the formula's own sufficient bound, so membership
/// does not depend on how `g` was enumerated.
pub fn oracle_member(h: &ConstraintAtom, g: &Atom, sig: &Signature, u: &GroundUniverse) -> bool {
    if h.atom.key() != g.key() {
        return false;
    }
    let Ok(eqs) = Constraint::equations(sig.domain, &h.atom.args, &g.args) else { return false };
    let f = Constraint::conj(vec![eqs, h.constraint.clone()]);
    let bound = u.bound.max(sufficient_bound(&f, sig.domain));
    oracle_sat(&f, sig, &GroundUniverse { domain: u.domain, bound }).is_sat()
}

/// Ground goal instances of `q`: goal variables over the universe, other free
/// variables existentially over a wider range, quantifiers wider still.
pub fn set_of(q: &State, sig: &Signature, u: &GroundUniverse) -> BTreeSet<Vec<Atom>> {
    let mut goal_vars = Vec::new();
    q.goal.iter().for_each(|a| a.collect_vars_ordered(&mut goal_vars));
    let hidden: Vec<Var> = q.constraint.free_vars_ordered().into_iter().filter(|v| !goal_vars.contains(v)).collect();
    let range: Vec<Val> = u.values(sig).into_iter().map(Val::of).collect();
    let goal_depth = q.goal.iter().flat_map(|a| a.args.iter()).map(Term::depth).max().unwrap_or(0);
    let hidden_range = Evaluator::new(sig, u, &q.constraint, goal_depth).quant;
    let hidden_top = match u.domain {
        Domain::Term => hidden_range.iter().map(|v| v.term.depth()).max().unwrap_or(0),
        Domain::Nat => hidden_range.iter().map(|v| v.num as usize).max().unwrap_or(0),
    };
    let mut ev = Evaluator::new(sig, &GroundUniverse { domain: u.domain, bound: hidden_top }, &q.constraint, goal_depth);
    let mut out = BTreeSet::new();
    ev.search(&goal_vars, &range, &mut |ev| {
        let ok = ev.search(&hidden, &hidden_range, &mut |ev| ev.eval(&q.constraint));
        if ok {
            out.insert(q.goal.iter().map(|a| Atom { predicate: a.predicate.clone(), args: a.args.iter().map(|t| ev.inst(t)).collect() }).collect());
        }
        false
    });
    out
}
