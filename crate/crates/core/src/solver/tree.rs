//! Equations and disequations over finite trees.
//!
//! Positive equations are kept in solved form. Every universal or negative
//! literal becomes a block `not exists V. body`; blocks are reduced against
//! the current solution until only parameter disequations remain, splitting
//! on the top functor of a parameter when a quantified pattern could cover it.

use std::collections::BTreeSet;

use super::{dnf, fresh_nnf, negate_lits, oracle, supply_for, term_eq, Verdict, DEFAULT_NODE_BUDGET};
use crate::constraint::{Constraint, TreeRel};
use crate::error::SolverError;
use crate::term::{mgu, mgu_with, FreshSupply, Signature, Subst, Term, Var};

pub fn solve(c: &Constraint, sig: &Signature) -> Result<Verdict, SolverError> {
    if sig.is_finite() {
        return Ok(oracle::finite_sat(c, sig));
    }
    let supply = supply_for(c);
    let root = fresh_nnf(c, &supply);
    let mut solver = TreeSolver { sig, supply, nodes: 0 };
    solver.search(Subst::new(), vec![root], Vec::new()).map(Verdict::from_bool)
}

/// `not exists vars. /\ lits`
#[derive(Clone, Debug)]
struct Block {
    vars: Vec<Var>,
    lits: Vec<Constraint>,
}

enum Reduced {
    Satisfied,
    Fail,
    Replace(Constraint),
    Clause { open: bool, split: Var },
}

struct TreeSolver<'a> {
    sig: &'a Signature,
    supply: FreshSupply,
    nodes: usize,
}

fn compose(sigma: &Subst, m: &Subst) -> Subst {
    let mut out: Subst = sigma.iter().map(|(v, t)| (v.clone(), t.apply(m))).collect();
    out.extend(m.iter().map(|(v, t)| (v.clone(), t.clone())));
    out
}

fn mentions(c: &Constraint, vars: &BTreeSet<Var>) -> bool {
    c.free_vars().iter().any(|v| vars.contains(v))
}

impl TreeSolver<'_> {
    fn tick(&mut self) -> Result<(), SolverError> {
        self.nodes += 1;
        if self.nodes > DEFAULT_NODE_BUDGET {
            return Err(SolverError::Budget(format!("finite-tree search exceeded {DEFAULT_NODE_BUDGET} nodes")));
        }
        Ok(())
    }

    fn blocks_of(&self, vars: &[Var], body: &Constraint) -> Vec<Block> {
        dnf(body)
            .into_iter()
            .map(|d| {
                let mut vs = vars.to_vec();
                vs.extend(d.vars);
                Block { vars: vs, lits: d.lits }
            })
            .collect()
    }

    fn search(&mut self, mut sigma: Subst, mut pending: Vec<Constraint>, mut blocks: Vec<Block>) -> Result<bool, SolverError> {
        self.tick()?;
        while let Some(c) = pending.pop() {
            match c {
                Constraint::True => {}
                Constraint::False => return Ok(false),
                Constraint::Tree(s, TreeRel::Eq, t) => match mgu([(s.apply(&sigma), t.apply(&sigma))]) {
                    Some(m) => sigma = compose(&sigma, &m),
                    None => return Ok(false),
                },
                Constraint::Tree(s, TreeRel::Neq, t) => blocks.push(Block { vars: Vec::new(), lits: vec![term_eq(&s, &t)] }),
                Constraint::Lin(..) => return Err(SolverError::Unsupported("linear atom over finite trees".into())),
                Constraint::And(cs) => pending.extend(cs),
                Constraint::Or(cs) => {
                    for d in cs {
                        let mut branch = pending.clone();
                        branch.push(d);
                        if self.search(sigma.clone(), branch, blocks.clone())? {
                            return Ok(true);
                        }
                    }
                    return Ok(false);
                }
                Constraint::Exists(_, b) => pending.push(*b),
                Constraint::Forall(vs, b) => {
                    let neg = fresh_nnf(&Constraint::Not(b), &self.supply);
                    blocks.extend(self.blocks_of(&vs, &neg));
                }
                Constraint::Not(b) => pending.push(fresh_nnf(&Constraint::Not(b), &self.supply)),
            }
        }

        let mut split: Option<Var> = None;
        for (i, b) in blocks.iter().enumerate() {
            let lits: Vec<Constraint> = b.lits.iter().map(|l| l.apply(&sigma)).collect();
            match self.reduce(&b.vars, &lits)? {
                Reduced::Satisfied => {}
                Reduced::Fail => return Ok(false),
                Reduced::Replace(f) => {
                    let mut rest = blocks.clone();
                    rest.remove(i);
                    return self.search(sigma, vec![f], rest);
                }
                Reduced::Clause { open, split: x } => {
                    if open && split.is_none() {
                        split = Some(x);
                    }
                }
            }
        }
        let Some(x) = split else { return Ok(true) };
        let functors: Vec<(std::sync::Arc<str>, usize)> = self.sig.functors.iter().cloned().collect();
        for (f, n) in functors {
            let args: Vec<Term> = (0..n).map(|_| Term::Var(self.supply.fresh_like(&x))).collect();
            let m: Subst = [(x.clone(), Term::App(f, args))].into_iter().collect();
            if self.search(compose(&sigma, &m), Vec::new(), blocks.clone())? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn reduce(&mut self, vars: &[Var], lits: &[Constraint]) -> Result<Reduced, SolverError> {
        let bound: BTreeSet<Var> = vars.iter().cloned().collect();
        let mut eqs = Vec::new();
        let mut others = Vec::new();
        for l in lits {
            match l {
                Constraint::Tree(s, TreeRel::Eq, t) => eqs.push((s.clone(), t.clone())),
                Constraint::True => {}
                Constraint::False => return Ok(Reduced::Satisfied),
                Constraint::Lin(..) => return Err(SolverError::Unsupported("linear atom over finite trees".into())),
                other => others.push(other.clone()),
            }
        }
        let Some(theta) = mgu_with(eqs, |v| bound.contains(v)) else { return Ok(Reduced::Satisfied) };
        let params: Vec<(Var, Term)> = theta.iter().filter(|(v, _)| !bound.contains(*v)).map(|(v, t)| (v.clone(), t.clone())).collect();
        let open_vars: BTreeSet<Var> = bound.iter().filter(|v| !theta.contains_key(*v)).cloned().collect();

        let mut residual = Vec::new();
        for l in &others {
            match l.apply(&theta) {
                Constraint::Tree(s, TreeRel::Neq, t) => {
                    if s == t {
                        return Ok(Reduced::Satisfied);
                    }
                    if mgu([(s.clone(), t.clone())]).is_some() {
                        residual.push(Constraint::Tree(s, TreeRel::Neq, t));
                    }
                }
                other => residual.push(other),
            }
        }

        let eq_open: BTreeSet<Var> = params.iter().flat_map(|(_, t)| t.vars()).filter(|v| open_vars.contains(v)).collect();
        let (local, free): (Vec<Constraint>, Vec<Constraint>) = residual.into_iter().partition(|l| mentions(l, &open_vars));

        let mut forced: Vec<Vec<(Var, Term)>> = Vec::new();
        for l in &local {
            if mentions(l, &eq_open) {
                let x = params.iter().find(|(_, t)| t.vars().iter().any(|v| eq_open.contains(v))).map(|(x, _)| x.clone()).unwrap();
                return Ok(Reduced::Clause { open: true, split: x });
            }
            match l {
                Constraint::Tree(s, TreeRel::Neq, t) => {
                    let mu = mgu_with([(s.clone(), t.clone())], |v| open_vars.contains(v)).expect("unifiable residual");
                    let escapes = mu.iter().any(|(v, t)| open_vars.contains(v) || t.vars().iter().any(|w| open_vars.contains(w)));
                    if !escapes {
                        forced.push(mu.into_iter().collect());
                    }
                }
                _ => return Err(SolverError::Unsupported("universal quantifier over local variables inside a negative block".into())),
            }
        }

        if params.is_empty() && free.is_empty() && forced.is_empty() {
            return Ok(Reduced::Fail);
        }
        if free.is_empty() && forced.is_empty() {
            let open = !eq_open.is_empty();
            let split = params.iter().find(|(_, t)| t.vars().iter().any(|v| eq_open.contains(v))).map(|(x, _)| x.clone());
            return Ok(Reduced::Clause { open, split: split.unwrap_or_else(|| params[0].0.clone()) });
        }
        let mut parts = Vec::new();
        if !params.is_empty() {
            let diseqs = params.iter().map(|(x, t)| Constraint::Tree(Term::Var(x.clone()), TreeRel::Neq, t.clone())).collect();
            parts.push(Constraint::forall(eq_open.into_iter().collect(), Constraint::disj(diseqs)));
        }
        parts.push(negate_lits(&free, &self.supply));
        for f in forced {
            parts.push(Constraint::conj(f.iter().map(|(x, t)| term_eq(&Term::Var(x.clone()), t)).collect()));
        }
        Ok(Reduced::Replace(Constraint::disj(parts)))
    }
}
