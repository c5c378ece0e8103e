//! Linear constraints over the naturals.
//!
//! Boolean structure is searched as for finite trees. Negative blocks are
//! reduced by eliminating their bound variables: through equations where the
//! variable has a unit coefficient, or by Fourier-Motzkin when every
//! occurrence has a unit coefficient. Feasibility of the final conjunction is
//! decided by Fourier-Motzkin over the rationals with branch and bound.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_rational::Ratio;

use super::{dnf, fresh_nnf, supply_for, Verdict, DEFAULT_NODE_BUDGET};
use crate::constraint::{Constraint, LinExpr, LinRel};
use crate::error::SolverError;
use crate::term::{FreshSupply, Var};

type Q = Ratio<i128>;

const MAX_ROWS: usize = 20_000;

/// `sum(coeffs * x) + constant <= 0`, or `= 0` when `eq` holds.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct LinCon {
    pub coeffs: BTreeMap<Var, i128>,
    pub constant: i128,
    pub eq: bool,
}

impl LinCon {
    fn from_atom(l: &LinExpr, rel: LinRel, r: &LinExpr) -> Option<LinCon> {
        let mut coeffs: BTreeMap<Var, i128> = BTreeMap::new();
        for (v, c) in &l.coeffs {
            *coeffs.entry(v.clone()).or_insert(0) += *c as i128;
        }
        for (v, c) in &r.coeffs {
            *coeffs.entry(v.clone()).or_insert(0) -= *c as i128;
        }
        coeffs.retain(|_, c| *c != 0);
        let diff = LinCon { coeffs, constant: l.constant as i128 - r.constant as i128, eq: false };
        Some(match rel {
            LinRel::Le => diff,
            LinRel::Lt => diff.shifted(1),
            LinRel::Ge => diff.negated(),
            LinRel::Gt => diff.negated().shifted(1),
            LinRel::Eq => LinCon { eq: true, ..diff },
            LinRel::Neq => return None,
        })
    }

    fn shifted(mut self, k: i128) -> LinCon {
        self.constant += k;
        self
    }

    fn negated(mut self) -> LinCon {
        self.coeffs.values_mut().for_each(|c| *c = -*c);
        self.constant = -self.constant;
        self
    }

    fn nonneg(v: &Var) -> LinCon {
        LinCon { coeffs: [(v.clone(), -1)].into_iter().collect(), constant: 0, eq: false }
    }

    fn coeff(&self, v: &Var) -> i128 {
        self.coeffs.get(v).copied().unwrap_or(0)
    }

    /// Replaces `v` by `expr` where `expr` is given as a constraint body.
    fn substitute(&self, v: &Var, coeffs: &BTreeMap<Var, i128>, constant: i128) -> LinCon {
        let k = self.coeff(v);
        if k == 0 {
            return self.clone();
        }
        let mut out = self.clone();
        out.coeffs.remove(v);
        for (w, c) in coeffs {
            *out.coeffs.entry(w.clone()).or_insert(0) += k * c;
        }
        out.coeffs.retain(|_, c| *c != 0);
        out.constant += k * constant;
        out
    }

    /// Divides through by the coefficient gcd, rounding the constant for
    /// inequalities. A constant constraint reports its truth value as `Err`.
    fn tightened(mut self) -> Result<LinCon, bool> {
        if self.coeffs.is_empty() {
            return Err(if self.eq { self.constant == 0 } else { self.constant <= 0 });
        }
        let g = self.coeffs.values().fold(0i128, |g, c| g.gcd(c));
        if g > 1 {
            if self.eq {
                if self.constant % g != 0 {
                    return Err(false);
                }
                self.constant /= g;
            } else {
                self.constant = Integer::div_ceil(&self.constant, &g);
            }
            self.coeffs.values_mut().for_each(|c| *c /= g);
        }
        Ok(self)
    }

    /// Back to a constraint with natural coefficients on both sides.
    fn to_constraint(&self) -> Constraint {
        let mut l = LinExpr::default();
        let mut r = LinExpr::default();
        for (v, &c) in &self.coeffs {
            if c > 0 {
                l.coeffs.insert(v.clone(), c as u64);
            } else {
                r.coeffs.insert(v.clone(), (-c) as u64);
            }
        }
        if self.constant > 0 {
            l.constant = self.constant as u64;
        } else {
            r.constant = (-self.constant) as u64;
        }
        Constraint::Lin(l, if self.eq { LinRel::Eq } else { LinRel::Le }, r)
    }

    /// The complement as a disjunction.
    fn negation(&self) -> Constraint {
        if self.eq {
            let le = LinCon { eq: false, ..self.clone() };
            Constraint::Or(vec![le.clone().shifted(1).to_constraint(), le.negated().shifted(1).to_constraint()])
        } else {
            self.clone().negated().shifted(1).to_constraint()
        }
    }
}

pub fn solve(c: &Constraint) -> Result<Verdict, SolverError> {
    let supply = supply_for(c);
    let root = fresh_nnf(c, &supply);
    let mut solver = LinearSolver { supply, nodes: 0 };
    solver.search(vec![root], Vec::new(), Vec::new()).map(Verdict::from_bool)
}

#[derive(Clone, Debug)]
struct Block {
    vars: Vec<Var>,
    lits: Vec<Constraint>,
}

enum Reduced {
    Satisfied,
    Fail,
    Replace(Constraint),
}

struct LinearSolver {
    supply: FreshSupply,
    nodes: usize,
}

impl LinearSolver {
    fn tick(&mut self) -> Result<(), SolverError> {
        self.nodes += 1;
        if self.nodes > DEFAULT_NODE_BUDGET {
            return Err(SolverError::Budget(format!("linear search exceeded {DEFAULT_NODE_BUDGET} nodes")));
        }
        Ok(())
    }

    fn search(&mut self, mut pending: Vec<Constraint>, mut cons: Vec<LinCon>, mut blocks: Vec<Block>) -> Result<bool, SolverError> {
        self.tick()?;
        while let Some(c) = pending.pop() {
            match c {
                Constraint::True => {}
                Constraint::False => return Ok(false),
                Constraint::Lin(l, LinRel::Neq, r) => pending.push(Constraint::Or(vec![
                    Constraint::Lin(l.clone(), LinRel::Lt, r.clone()),
                    Constraint::Lin(l, LinRel::Gt, r),
                ])),
                Constraint::Lin(l, rel, r) => match LinCon::from_atom(&l, rel, &r).unwrap().tightened() {
                    Ok(con) => cons.push(con),
                    Err(true) => {}
                    Err(false) => return Ok(false),
                },
                Constraint::Tree(..) => return Err(SolverError::Unsupported("tree atom over the naturals".into())),
                Constraint::And(cs) => pending.extend(cs),
                Constraint::Or(cs) => {
                    for d in cs {
                        let mut branch = pending.clone();
                        branch.push(d);
                        if self.search(branch, cons.clone(), blocks.clone())? {
                            return Ok(true);
                        }
                    }
                    return Ok(false);
                }
                Constraint::Exists(_, b) => pending.push(*b),
                Constraint::Forall(vs, b) => {
                    let neg = fresh_nnf(&Constraint::Not(b), &self.supply);
                    for d in dnf(&neg) {
                        let mut vars = vs.clone();
                        vars.extend(d.vars);
                        blocks.push(Block { vars, lits: d.lits });
                    }
                }
                Constraint::Not(b) => pending.push(fresh_nnf(&Constraint::Not(b), &self.supply)),
            }
        }
        for i in 0..blocks.len() {
            match self.reduce(&blocks[i])? {
                Reduced::Satisfied => {}
                Reduced::Fail => return Ok(false),
                Reduced::Replace(f) => {
                    let mut rest = blocks.clone();
                    rest.remove(i);
                    return self.search(vec![f], cons, rest);
                }
            }
        }
        integer_feasible(&cons, &mut self.nodes)
    }

    fn reduce(&mut self, block: &Block) -> Result<Reduced, SolverError> {
        let bound: BTreeSet<Var> = block.vars.iter().cloned().collect();
        let mut cons = Vec::new();
        let mut others = Vec::new();
        for l in &block.lits {
            match l {
                Constraint::True => {}
                Constraint::False => return Ok(Reduced::Satisfied),
                Constraint::Lin(a, rel, b) => match LinCon::from_atom(a, *rel, b) {
                    Some(c) => cons.push(c),
                    None => return Err(SolverError::Unsupported("disequation left inside a negative block".into())),
                },
                Constraint::Tree(..) => return Err(SolverError::Unsupported("tree atom over the naturals".into())),
                other => {
                    if other.free_vars().iter().any(|v| bound.contains(v)) {
                        return Err(SolverError::Unsupported("nested quantifier over block variables".into()));
                    }
                    others.push(other.clone());
                }
            }
        }
        let Some(cons) = eliminate(cons, &bound)? else { return Ok(Reduced::Satisfied) };
        if cons.is_empty() && others.is_empty() {
            return Ok(Reduced::Fail);
        }
        let mut parts: Vec<Constraint> = cons.iter().map(LinCon::negation).collect();
        parts.extend(others.iter().map(|o| fresh_nnf(&Constraint::Not(Box::new(o.clone())), &self.supply)));
        Ok(Reduced::Replace(Constraint::disj(parts)))
    }
}

/// Projects `bound` out of a conjunction over the naturals. `None` when the
/// conjunction is unsatisfiable for every value of the remaining variables.
fn eliminate(cons: Vec<LinCon>, bound: &BTreeSet<Var>) -> Result<Option<Vec<LinCon>>, SolverError> {
    let mut cons = merge_opposites(cons);
    for v in bound {
        if !cons.iter().any(|c| c.coeff(v) != 0) {
            continue;
        }
        if let Some(i) = cons.iter().position(|c| c.eq && c.coeff(v).abs() == 1) {
            let pivot = cons.remove(i);
            let k = pivot.coeff(v);
            let mut expr: BTreeMap<Var, i128> = pivot.coeffs.iter().filter(|(w, _)| *w != v).map(|(w, c)| (w.clone(), -c * k)).collect();
            expr.retain(|_, c| *c != 0);
            let constant = -pivot.constant * k;
            cons = cons.iter().map(|c| c.substitute(v, &expr, constant)).collect();
            cons.push(LinCon { coeffs: expr.iter().map(|(w, c)| (w.clone(), -c)).collect(), constant: -constant, eq: false });
        } else if cons.iter().all(|c| !c.eq || c.coeff(v) == 0) && cons.iter().all(|c| c.coeff(v).abs() <= 1) {
            cons.push(LinCon::nonneg(v));
            cons = fm_step(&cons, v)?;
        } else {
            return Err(SolverError::Unsupported(format!("cannot eliminate bound variable {v:?} with non-unit coefficients")));
        }
        let mut kept = Vec::new();
        for c in cons {
            match c.tightened() {
                Ok(c) => {
                    if !kept.contains(&c) {
                        kept.push(c)
                    }
                }
                Err(true) => {}
                Err(false) => return Ok(None),
            }
        }
        cons = kept;
    }
    Ok(Some(cons))
}

/// `a <= 0` together with `-a <= 0` becomes `a = 0`.
fn merge_opposites(cons: Vec<LinCon>) -> Vec<LinCon> {
    let mut out: Vec<LinCon> = Vec::with_capacity(cons.len());
    for c in cons {
        let opposite = c.clone().negated();
        match out.iter().position(|o| !c.eq && !o.eq && *o == opposite) {
            Some(i) => out[i].eq = true,
            None => out.push(c),
        }
    }
    out
}

/// One Fourier-Motzkin elimination over inequalities.
fn fm_step(cons: &[LinCon], v: &Var) -> Result<Vec<LinCon>, SolverError> {
    let (mut pos, mut neg, mut out) = (Vec::new(), Vec::new(), Vec::new());
    for c in cons {
        match c.coeff(v).signum() {
            1 => pos.push(c),
            -1 => neg.push(c),
            _ => out.push(c.clone()),
        }
    }
    for p in &pos {
        for n in &neg {
            let (a, b) = (p.coeff(v), -n.coeff(v));
            let mut coeffs: BTreeMap<Var, i128> = BTreeMap::new();
            for (w, c) in &p.coeffs {
                *coeffs.entry(w.clone()).or_insert(0) += c.checked_mul(b).ok_or_else(overflow)?;
            }
            for (w, c) in &n.coeffs {
                *coeffs.entry(w.clone()).or_insert(0) += c.checked_mul(a).ok_or_else(overflow)?;
            }
            coeffs.retain(|_, c| *c != 0);
            let constant = p.constant.checked_mul(b).and_then(|x| x.checked_add(n.constant.checked_mul(a)?)).ok_or_else(overflow)?;
            let mut row = LinCon { coeffs, constant, eq: false };
            let g = row.coeffs.values().fold(row.constant, |g, c| g.gcd(c));
            if g > 1 {
                row.coeffs.values_mut().for_each(|c| *c /= g);
                row.constant /= g;
            }
            if !out.contains(&row) {
                out.push(row);
            }
            if out.len() > MAX_ROWS {
                return Err(SolverError::Budget("Fourier-Motzkin row limit".into()));
            }
        }
    }
    Ok(out)
}

fn overflow() -> SolverError {
    SolverError::Budget("coefficient overflow".into())
}

/// Whether the conjunction has a solution in the naturals.
pub(crate) fn integer_feasible(cons: &[LinCon], nodes: &mut usize) -> Result<bool, SolverError> {
    let mut cons: Vec<LinCon> = cons.to_vec();
    loop {
        let Some((i, v)) = cons.iter().enumerate().find_map(|(i, c)| {
            if c.eq {
                c.coeffs.iter().find(|(_, k)| k.abs() == 1).map(|(v, _)| (i, v.clone()))
            } else {
                None
            }
        }) else {
            break;
        };
        let pivot = cons.remove(i);
        let k = pivot.coeff(&v);
        let expr: BTreeMap<Var, i128> = pivot.coeffs.iter().filter(|(w, _)| **w != v).map(|(w, c)| (w.clone(), -c * k)).collect();
        let constant = -pivot.constant * k;
        let mut next = Vec::new();
        for c in cons.iter().map(|c| c.substitute(&v, &expr, constant)).chain(std::iter::once(LinCon {
            coeffs: expr.iter().map(|(w, c)| (w.clone(), -c)).collect(),
            constant: -constant,
            eq: false,
        })) {
            match c.tightened() {
                Ok(c) => next.push(c),
                Err(true) => {}
                Err(false) => return Ok(false),
            }
        }
        cons = next;
    }
    let mut rows: Vec<LinCon> = Vec::new();
    for c in cons {
        match c.clone().tightened() {
            Ok(c) if c.eq => {
                rows.push(LinCon { eq: false, ..c.clone() });
                rows.push(c.negated().tightened().map_err(|_| overflow())?);
            }
            Ok(c) => rows.push(c),
            Err(true) => {}
            Err(false) => return Ok(false),
        }
    }
    let vars: Vec<Var> = rows.iter().flat_map(|c| c.coeffs.keys().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
    for v in &vars {
        rows.push(LinCon::nonneg(v));
    }
    branch_and_bound(rows, &vars, nodes)
}

fn branch_and_bound(rows: Vec<LinCon>, vars: &[Var], nodes: &mut usize) -> Result<bool, SolverError> {
    *nodes += 1;
    if *nodes > DEFAULT_NODE_BUDGET {
        return Err(SolverError::Budget(format!("branch and bound exceeded {DEFAULT_NODE_BUDGET} nodes")));
    }
    let Some(point) = rational_point(&rows, vars)? else { return Ok(false) };
    let Some((v, x)) = vars.iter().zip(&point).find(|(_, x)| !x.is_integer()) else { return Ok(true) };
    let lo = x.floor().to_integer();
    let mut below = rows.clone();
    below.push(LinCon { coeffs: [(v.clone(), 1)].into_iter().collect(), constant: -lo, eq: false });
    if branch_and_bound(below, vars, nodes)? {
        return Ok(true);
    }
    let mut above = rows;
    above.push(LinCon { coeffs: [(v.clone(), -1)].into_iter().collect(), constant: lo + 1, eq: false });
    branch_and_bound(above, vars, nodes)
}

/// A rational solution, preferring small integers coordinate by coordinate.
fn rational_point(rows: &[LinCon], vars: &[Var]) -> Result<Option<Vec<Q>>, SolverError> {
    let mut levels: Vec<Vec<LinCon>> = vec![rows.to_vec()];
    for v in vars.iter().rev() {
        let next = fm_step(levels.last().unwrap(), v)?;
        levels.push(next);
    }
    if levels.last().unwrap().iter().any(|c| c.constant > 0) {
        return Ok(None);
    }
    let mut point: BTreeMap<Var, Q> = BTreeMap::new();
    for (i, v) in vars.iter().enumerate() {
        let level = &levels[vars.len() - 1 - i];
        let mut lo: Option<Q> = None;
        let mut hi: Option<Q> = None;
        for c in level {
            let a = c.coeff(v);
            if a == 0 {
                continue;
            }
            let mut rest = Q::from_integer(c.constant);
            for (w, k) in &c.coeffs {
                if w != v {
                    rest += point[w] * Q::from_integer(*k);
                }
            }
            let bound = -rest / Q::from_integer(a);
            if a > 0 {
                hi = Some(hi.map_or(bound, |h| h.min(bound)));
            } else {
                lo = Some(lo.map_or(bound, |l| l.max(bound)));
            }
        }
        let lo = lo.unwrap_or_else(|| Q::from_integer(0));
        let mut x = lo.ceil();
        if let Some(h) = hi {
            if x > h {
                x = lo;
            }
        }
        point.insert(v.clone(), x);
    }
    Ok(Some(vars.iter().map(|v| point[v]).collect()))
}
