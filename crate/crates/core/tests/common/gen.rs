//! Random instances for the property suites.

use std::collections::BTreeMap;

use clpct_core::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vars(prefix: &str, n: usize) -> Vec<Var> {
    (0..n).map(|i| Var::new(&format!("{prefix}{i}"))).collect()
}

pub struct Shape {
    pub domain: Domain,
    pub max_depth: usize,
    pub max_coeff: u64,
    pub max_const: u64,
}

impl Shape {
    pub fn term() -> Self {
        Shape { domain: Domain::Term, max_depth: 3, max_coeff: 1, max_const: 0 }
    }

    pub fn nat() -> Self {
        Shape { domain: Domain::Nat, max_depth: 0, max_coeff: 10, max_const: 6 }
    }

    pub fn sig(&self) -> Signature {
        match self.domain {
            Domain::Term => Signature::term([("a", 0), ("b", 0), ("s", 1)]),
            Domain::Nat => Signature::nat(),
        }
    }

    pub fn tree_term(&self, r: &mut Rng8, vs: &[Var], depth: usize) -> Term {
        let roll = r.gen_range(0..10);
        if depth == 0 || roll < 6 {
            if !vs.is_empty() && roll < 4 {
                return Term::Var(vs.choose(r).unwrap().clone());
            }
            return Term::constant(if r.gen_bool(0.5) { "a" } else { "b" });
        }
        Term::app("s", vec![self.tree_term(r, vs, depth - 1)])
    }

    /// Mostly unit coefficients; larger ones up to `max_coeff` now and then.
    fn coeff(&self, r: &mut Rng8) -> u64 {
        if r.gen_bool(0.8) {
            1
        } else {
            r.gen_range(2..=self.max_coeff.max(2))
        }
    }

    pub fn lin_expr(&self, r: &mut Rng8, vs: &[Var]) -> LinExpr {
        let mut coeffs = BTreeMap::new();
        let n = if vs.is_empty() { 0 } else { r.gen_range(0..=2.min(vs.len())) };
        for v in vs.choose_multiple(r, n) {
            coeffs.insert(v.clone(), self.coeff(r));
        }
        let constant = if coeffs.is_empty() || r.gen_bool(0.4) { r.gen_range(0..=self.max_const) } else { 0 };
        LinExpr { constant, coeffs }
    }

    pub fn literal(&self, r: &mut Rng8, vs: &[Var]) -> Constraint {
        match self.domain {
            Domain::Term => {
                let rel = if r.gen_bool(0.6) { TreeRel::Eq } else { TreeRel::Neq };
                let d = self.max_depth;
                Constraint::Tree(self.tree_term(r, vs, d), rel, self.tree_term(r, vs, d))
            }
            Domain::Nat => {
                let rel = *[LinRel::Eq, LinRel::Neq, LinRel::Le, LinRel::Lt, LinRel::Ge, LinRel::Gt].choose(r).unwrap();
                Constraint::Lin(self.lin_expr(r, vs), rel, self.lin_expr(r, vs))
            }
        }
    }

    /// A conjunction of up to `max_atoms` literals, sometimes with a disjunction.
    pub fn constraint(&self, r: &mut Rng8, vs: &[Var], max_atoms: usize) -> Constraint {
        let n = r.gen_range(0..=max_atoms);
        let mut parts = Vec::new();
        let mut used = 0;
        while used < n {
            if n - used >= 2 && r.gen_bool(0.2) {
                parts.push(Constraint::Or(vec![self.literal(r, vs), self.literal(r, vs)]));
                used += 2;
            } else {
                parts.push(self.literal(r, vs));
                used += 1;
            }
        }
        Constraint::conj(parts)
    }

    /// An argument of a goal atom: usually a variable, sometimes a small term.
    pub fn arg(&self, r: &mut Rng8, vs: &[Var]) -> Term {
        match self.domain {
            Domain::Term => {
                if r.gen_bool(0.6) {
                    Term::Var(vs.choose(r).unwrap().clone())
                } else {
                    self.tree_term(r, vs, 2)
                }
            }
            Domain::Nat => match r.gen_range(0..10) {
                0..=5 => Term::Var(vs.choose(r).unwrap().clone()),
                6..=7 => Term::app("+", vec![Term::Var(vs.choose(r).unwrap().clone()), Term::num(r.gen_range(1..=3))]),
                _ => Term::num(r.gen_range(0..=self.max_const)),
            },
        }
    }

    /// `<c | p(t1, ..., tn)>` over variables named with `prefix`.
    pub fn c_atom(&self, r: &mut Rng8, prefix: &str, pred: &str, arity: usize, max_atoms: usize) -> ConstraintAtom {
        let vs = vars(prefix, 2);
        let args = (0..arity).map(|_| self.arg(r, &vs)).collect();
        ConstraintAtom::new(self.constraint(r, &vs, max_atoms), Atom::new(pred, args))
    }

    /// A constraint atom used as a rule head or as an element of `H`. Over
    /// the naturals, variables that occur only in the constraint keep unit
    /// coefficients, so the negative constraint built from it can be reduced.
    pub fn head(&self, r: &mut Rng8, prefix: &str, pred: &str, arity: usize, max_atoms: usize) -> ConstraintAtom {
        let h = self.c_atom(r, prefix, pred, arity, max_atoms);
        if self.domain == Domain::Term {
            return h;
        }
        let hidden: Vec<Var> = h.constraint.free_vars().difference(&h.atom.vars()).cloned().collect();
        ConstraintAtom::new(unit_coefficients(&h.constraint, &hidden), h.atom)
    }
}

/// Coefficients of `vs` reset to one.

fn unit_coefficients(c: &Constraint, vs: &[Var]) -> Constraint {
    let fix = |e: &LinExpr| {
        let mut e = e.clone();
        for v in vs {
            if let Some(k) = e.coeffs.get_mut(v) {
                *k = 1;
            }
        }
        e
    };
    match c {
        Constraint::Lin(l, rel, r) => Constraint::Lin(fix(l), *rel, fix(r)),
        Constraint::And(cs) => Constraint::And(cs.iter().map(|c| unit_coefficients(c, vs)).collect()),
        Constraint::Or(cs) => Constraint::Or(cs.iter().map(|c| unit_coefficients(c, vs)).collect()),
        Constraint::Not(b) => Constraint::Not(Box::new(unit_coefficients(b, vs))),
        other => other.clone(),
    }
}

/// Source text of a small program over `p/1`, `q/1` and `r/1`. Calls go
/// from `p` to `q` to `r`, with an occasional recursive `q` rule, so most
/// derivation trees are finite.
pub fn program_text(r: &mut Rng8, shape: &Shape) -> String {
    let mut out = String::new();
    match shape.domain {
        Domain::Term => out.push_str("#domain term.\n#functors a/0, b/0, s/1.\n"),
        Domain::Nat => out.push_str("#domain nat.\n"),
    }
    let n_rules = r.gen_range(2..=5);
    let preds = ["p", "q", "r"];
    for i in 0..n_rules {
        let level = if i == 0 { 0 } else { r.gen_range(0..3) };
        let head_pred = preds[level];
        let vs = vars("V", 2);
        let namer = Namer::for_vars(&vs);
        let head = shape.arg(r, &vs);
        let hidden: Vec<Var> = vs.iter().filter(|v| !head.contains_var(v)).cloned().collect();
        let guard = loop {
            let g = unit_coefficients(&shape.constraint(r, &vs, 2), &hidden);
            if solve(&g, &shape.sig()).map(|v| v.is_sat()).unwrap_or(false) {
                break g;
            }
        };
        let mut body = Vec::new();
        let n_body = if level == 2 { 0 } else { r.gen_range(0..=2) };
        for _ in 0..n_body {
            let callee = if level == 1 && r.gen_bool(0.15) { 1 } else { r.gen_range(level + 1..3) };
            body.push(format!("{}({})", preds[callee], namer.term(&shape.arg(r, &vs))));
        }
        let mut line = format!("l{}: {}({}) :- {{{}}}", i + 1, head_pred, namer.term(&head), namer.constraint(&guard));
        for b in body {
            line.push_str(", ");
            line.push_str(&b);
        }
        line.push_str(".\n");
        out.push_str(&line);
    }
    out
}
