//! Structural simplification of constraints and canonical keys for states.

use std::collections::{BTreeMap, BTreeSet};

use crate::constraint::{Constraint, ConstraintAtom, LinExpr, LinRel, Namer, State, TreeRel};
use crate::term::{Term, Var};

/// Negation normal form. Natural-number disequations stay atomic.
pub fn nnf(c: &Constraint) -> Constraint {
    push_not(c, false)
}

fn push_not(c: &Constraint, neg: bool) -> Constraint {
    match c {
        Constraint::True => if neg { Constraint::False } else { Constraint::True },
        Constraint::False => if neg { Constraint::True } else { Constraint::False },
        Constraint::Tree(s, r, t) => {
            let r = match (r, neg) {
                (TreeRel::Eq, true) => TreeRel::Neq,
                (TreeRel::Neq, true) => TreeRel::Eq,
                (r, false) => *r,
            };
            Constraint::Tree(s.clone(), r, t.clone())
        }
        Constraint::Lin(l, r, e) => Constraint::Lin(l.clone(), if neg { r.negate() } else { *r }, e.clone()),
        Constraint::And(cs) => {
            let parts = cs.iter().map(|c| push_not(c, neg)).collect();
            if neg { Constraint::Or(parts) } else { Constraint::And(parts) }
        }
        Constraint::Or(cs) => {
            let parts = cs.iter().map(|c| push_not(c, neg)).collect();
            if neg { Constraint::And(parts) } else { Constraint::Or(parts) }
        }
        Constraint::Not(inner) => push_not(inner, !neg),
        Constraint::Forall(vs, b) => {
            let body = Box::new(push_not(b, neg));
            if neg { Constraint::Exists(vs.clone(), body) } else { Constraint::Forall(vs.clone(), body) }
        }
        Constraint::Exists(vs, b) => {
            let body = Box::new(push_not(b, neg));
            if neg { Constraint::Forall(vs.clone(), body) } else { Constraint::Exists(vs.clone(), body) }
        }
    }
}

/// Simplifies `c`, treating every free variable as existentially closed and
/// therefore eliminable through equations.
pub fn normalize(c: &Constraint) -> Constraint {
    simplify(c, &BTreeSet::new(), false)
}

/// Simplifies `c` without eliminating the variables in `keep`.
pub fn normalize_keeping(c: &Constraint, keep: &BTreeSet<Var>) -> Constraint {
    simplify(c, keep, true)
}

fn simplify(c: &Constraint, keep: &BTreeSet<Var>, drop_local: bool) -> Constraint {
    let elim: BTreeSet<Var> = c.free_vars().difference(keep).cloned().collect();
    let mut cur = nnf(c);
    for _ in 0..16 {
        let next = pass(&cur, &elim, drop_local);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

fn simp_fixpoint(c: Constraint, elim: &BTreeSet<Var>) -> Constraint {
    let mut cur = c;
    for _ in 0..64 {
        let next = simp(&cur, elim);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

fn pass(c: &Constraint, elim: &BTreeSet<Var>, drop_local: bool) -> Constraint {
    let cur = simp_fixpoint(c.clone(), elim);
    let expanded = expand_nat_neq(&cur);
    let cur = if expanded == cur { cur } else { simp_fixpoint(expanded, elim) };
    merge_intervals(cur, elim, drop_local)
}

const MAX_INTERVAL_SCAN: u64 = 4096;

/// Rewrites the conjuncts that constrain a single natural variable, and
/// nothing else, as a union of intervals when that is no larger. A
/// satisfiable group over a variable of `elim` found nowhere else goes away
/// when `drop_local` is set.
fn merge_intervals(c: Constraint, elim: &BTreeSet<Var>, drop_local: bool) -> Constraint {
    let parts = match c {
        Constraint::And(cs) => cs,
        other => vec![other],
    };
    let mut groups: BTreeMap<Var, Vec<usize>> = BTreeMap::new();
    for (i, p) in parts.iter().enumerate() {
        if let Some(v) = lone_nat_var(p) {
            groups.entry(v).or_default().push(i);
        }
    }
    let mut replaced: BTreeMap<usize, Option<Constraint>> = BTreeMap::new();
    for (v, idx) in groups {
        let group: Vec<&Constraint> = idx.iter().map(|&i| &parts[i]).collect();
        let Some(mut merged) = intervals(&v, &group) else { continue };
        let local = drop_local && elim.contains(&v) && parts.iter().filter(|p| p.free_vars().contains(&v)).count() == idx.len();
        if local && merged != Constraint::False {
            merged = Constraint::True;
        }
        if merged != Constraint::False && merged != Constraint::True && merged.atom_count() >= group.iter().map(|c| c.atom_count()).sum() {
            continue;
        }
        if merged == Constraint::False {
            return Constraint::False;
        }
        replaced.insert(idx[0], Some(merged));
        idx[1..].iter().for_each(|&i| {
            replaced.insert(i, None);
        });
    }
    let out = parts
        .into_iter()
        .enumerate()
        .filter_map(|(i, p)| match replaced.remove(&i) {
            Some(r) => r,
            None => Some(p),
        })
        .filter(|p| *p != Constraint::True)
        .collect();
    Constraint::conj(out)
}

/// The variable of a quantifier-free arithmetic constraint over one variable.
fn lone_nat_var(c: &Constraint) -> Option<Var> {
    fn walk(c: &Constraint, out: &mut BTreeSet<Var>) -> bool {
        match c {
            Constraint::Lin(l, _, r) => {
                out.extend(l.vars().chain(r.vars()).cloned());
                true
            }
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().all(|c| walk(c, out)),
            _ => false,
        }
    }
    let mut vars = BTreeSet::new();
    if walk(c, &mut vars) && vars.len() == 1 {
        vars.into_iter().next()
    } else {
        None
    }
}

fn eval_at(c: &Constraint, x: u64) -> bool {
    match c {
        Constraint::Lin(l, rel, r) => {
            let val = |_: &Var| Some(x);
            match (l.eval(&val), r.eval(&val)) {
                (Some(a), Some(b)) => rel.holds(a, b),
                _ => false,
            }
        }
        Constraint::And(cs) => cs.iter().all(|c| eval_at(c, x)),
        Constraint::Or(cs) => cs.iter().any(|c| eval_at(c, x)),
        Constraint::True => true,
        _ => false,
    }
}

fn max_constant(c: &Constraint) -> u64 {
    match c {
        Constraint::Lin(l, _, r) => l.constant.max(r.constant),
        Constraint::And(cs) | Constraint::Or(cs) => cs.iter().map(max_constant).max().unwrap_or(0),
        _ => 0,
    }
}

/// Past the largest constant every linear atom over one variable has a
/// fixed truth value, so the values up to one beyond it decide the set.
fn intervals(v: &Var, group: &[&Constraint]) -> Option<Constraint> {
    let top = group.iter().map(|c| max_constant(c)).max().unwrap_or(0) + 1;
    if top > MAX_INTERVAL_SCAN {
        return None;
    }
    let holds = |x: u64| group.iter().all(|c| eval_at(c, x));
    let mut runs: Vec<(u64, Option<u64>)> = Vec::new();
    let mut start = None;
    for x in 0..=top {
        match (holds(x), start) {
            (true, None) => start = Some(x),
            (false, Some(s)) => {
                runs.push((s, Some(x - 1)));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, None));
    }
    let x = LinExpr::var(v.clone());
    let k = LinExpr::constant;
    let disjuncts = runs
        .into_iter()
        .map(|(lo, hi)| {
            let mut parts = Vec::new();
            if hi == Some(lo) {
                return Constraint::Lin(x.clone(), LinRel::Eq, k(lo));
            }
            if lo > 0 {
                parts.push(Constraint::Lin(k(lo), LinRel::Le, x.clone()));
            }
            if let Some(hi) = hi {
                parts.push(Constraint::Lin(x.clone(), LinRel::Lt, k(hi + 1)));
            }
            Constraint::conj(parts)
        })
        .collect();
    Some(Constraint::disj(disjuncts))
}

fn expand_nat_neq(c: &Constraint) -> Constraint {
    match c {
        Constraint::Lin(l, LinRel::Neq, r) => Constraint::Or(vec![
            Constraint::Lin(l.clone(), LinRel::Lt, r.clone()),
            Constraint::Lin(r.clone(), LinRel::Lt, l.clone()),
        ]),
        Constraint::And(cs) => Constraint::And(cs.iter().map(expand_nat_neq).collect()),
        Constraint::Or(cs) => Constraint::Or(cs.iter().map(expand_nat_neq).collect()),
        Constraint::Not(b) => Constraint::Not(Box::new(expand_nat_neq(b))),
        Constraint::Forall(vs, b) => Constraint::Forall(vs.clone(), Box::new(expand_nat_neq(b))),
        Constraint::Exists(vs, b) => Constraint::Exists(vs.clone(), Box::new(expand_nat_neq(b))),
        other => other.clone(),
    }
}

fn simp(c: &Constraint, elim: &BTreeSet<Var>) -> Constraint {
    match c {
        Constraint::Tree(s, r, t) => drop_solved(simp_tree(s, *r, t), elim),
        Constraint::Lin(l, r, e) => drop_solved(simp_lin(l, *r, e), elim),
        Constraint::And(cs) => simp_and(cs.clone(), elim),
        Constraint::Or(cs) => simp_or(cs, elim),
        Constraint::Not(b) => simp(&push_not(b, true), elim),
        Constraint::Forall(vs, b) => simp_forall(vs, b, elim),
        Constraint::Exists(vs, b) => simp_exists(vs, b, elim),
        other => other.clone(),
    }
}

fn drop_solved(c: Constraint, elim: &BTreeSet<Var>) -> Constraint {
    if binding(&c, LinRel::Eq, elim).is_some() {
        Constraint::True
    } else {
        c
    }
}

fn simp_tree(s: &Term, rel: TreeRel, t: &Term) -> Constraint {
    let positive = rel == TreeRel::Eq;
    let verdict = |holds: bool| if holds == positive { Constraint::True } else { Constraint::False };
    if s == t {
        return verdict(true);
    }
    match (s, t) {
        (Term::App(f, xs), Term::App(g, ys)) => {
            if f != g || xs.len() != ys.len() {
                return verdict(false);
            }
            let parts = xs.iter().zip(ys).map(|(x, y)| simp_tree(x, rel, y)).collect();
            if positive { Constraint::And(parts) } else { Constraint::Or(parts) }
        }
        (Term::Var(v), other) | (other, Term::Var(v)) if other.contains_var(v) => verdict(false),
        _ => Constraint::Tree(s.clone(), rel, t.clone()),
    }
}

fn simp_lin(l: &LinExpr, rel: LinRel, r: &LinExpr) -> Constraint {
    let (mut l, mut rel, mut r) = (l.clone(), rel, r.clone());
    if matches!(rel, LinRel::Ge | LinRel::Gt) {
        std::mem::swap(&mut l, &mut r);
        rel = if rel == LinRel::Ge { LinRel::Le } else { LinRel::Lt };
    }
    let common = l.constant.min(r.constant);
    l.constant -= common;
    r.constant -= common;
    let shared: Vec<Var> = l.coeffs.keys().filter(|v| r.coeffs.contains_key(*v)).cloned().collect();
    for v in shared {
        let m = l.coeffs[&v].min(r.coeffs[&v]);
        for side in [&mut l, &mut r] {
            let e = side.coeffs.get_mut(&v).unwrap();
            *e -= m;
            if *e == 0 {
                side.coeffs.remove(&v);
            }
        }
    }
    if l.is_constant() && r.is_constant() {
        return if rel.holds(l.constant, r.constant) { Constraint::True } else { Constraint::False };
    }
    let l_zero = l.is_constant() && l.constant == 0;
    let r_zero = r.is_constant() && r.constant == 0;
    match rel {
        LinRel::Le if l_zero => return Constraint::True,
        LinRel::Lt if r_zero => return Constraint::False,
        LinRel::Eq | LinRel::Neq if (l_zero && r.constant > 0) || (r_zero && l.constant > 0) => {
            return if rel == LinRel::Eq { Constraint::False } else { Constraint::True };
        }
        _ => {}
    }
    if matches!(rel, LinRel::Eq | LinRel::Neq) && l.is_constant() {
        std::mem::swap(&mut l, &mut r);
    }
    Constraint::Lin(l, rel, r)
}

fn push_unique(out: &mut Vec<Constraint>, c: Constraint) {
    if !out.contains(&c) {
        out.push(c);
    }
}

/// `X = t` with `X` drawn from `vars` and not occurring in `t`. A bare
/// variable on the right is preferred as the eliminated side.
fn binding(c: &Constraint, rel: LinRel, vars: &BTreeSet<Var>) -> Option<(Var, Term)> {
    let single = |e: &LinExpr| -> Option<Var> {
        if e.constant == 0 && e.coeffs.len() == 1 {
            let (v, &k) = e.coeffs.iter().next()?;
            (k == 1).then(|| v.clone())
        } else {
            None
        }
    };
    match c {
        Constraint::Tree(s, r, t) if (*r == TreeRel::Eq) == (rel == LinRel::Eq) => {
            for (x, other) in [(t, s), (s, t)] {
                if let Term::Var(v) = x {
                    if vars.contains(v) && !other.contains_var(v) {
                        return Some((v.clone(), other.clone()));
                    }
                }
            }
            None
        }
        Constraint::Lin(l, r, e) if *r == rel => {
            for (x, other) in [(e, l), (l, e)] {
                if let Some(v) = single(x) {
                    if vars.contains(&v) && !other.coeffs.contains_key(&v) {
                        return Some((v, other.to_term()));
                    }
                }
            }
            None
        }
        _ => None,
    }
}

fn substitute(c: &Constraint, v: &Var, t: &Term) -> Constraint {
    let sub = [(v.clone(), t.clone())].into_iter().collect();
    c.apply(&sub)
}

fn simp_and(cs: Vec<Constraint>, elim: &BTreeSet<Var>) -> Constraint {
    let mut cs = cs;
    loop {
        if let Some((i, (v, t))) = cs.iter().enumerate().find_map(|(i, c)| binding(c, LinRel::Eq, elim).map(|b| (i, b))) {
            cs.remove(i);
            cs = cs.iter().map(|c| substitute(c, &v, &t)).collect();
            continue;
        }
        let free: Vec<BTreeSet<Var>> = cs.iter().map(Constraint::free_vars).collect();
        let mut out: Vec<Constraint> = Vec::new();
        for (i, c) in cs.iter().enumerate() {
            let local: BTreeSet<Var> =
                elim.iter().filter(|v| !free.iter().enumerate().any(|(j, f)| j != i && f.contains(*v))).cloned().collect();
            match simp(c, &local) {
                Constraint::True => {}
                Constraint::False => return Constraint::False,
                Constraint::And(inner) => inner.into_iter().for_each(|x| push_unique(&mut out, x)),
                other => push_unique(&mut out, other),
            }
        }
        let found = out.iter().enumerate().find_map(|(i, c)| binding(c, LinRel::Eq, elim).map(|b| (i, b)));
        match found {
            Some((i, (v, t))) => {
                out.remove(i);
                cs = out.iter().map(|c| substitute(c, &v, &t)).collect();
            }
            None => return Constraint::conj(out),
        }
    }
}

fn simp_or(cs: &[Constraint], elim: &BTreeSet<Var>) -> Constraint {
    let mut out = Vec::new();
    for c in cs {
        match simp(c, elim) {
            Constraint::False => {}
            Constraint::True => return Constraint::True,
            Constraint::Or(inner) => inner.into_iter().for_each(|x| push_unique(&mut out, x)),
            other => push_unique(&mut out, other),
        }
    }
    Constraint::disj(out)
}

fn simp_forall(vs: &[Var], body: &Constraint, _elim: &BTreeSet<Var>) -> Constraint {
    let mut vars: Vec<Var> = vs.to_vec();
    let mut body = body.clone();
    while let Constraint::Forall(inner, b) = body {
        vars.extend(inner.into_iter().filter(|v| !vs.contains(v)));
        body = *b;
    }
    let mut body = simp(&body, &BTreeSet::new());
    loop {
        let bound: BTreeSet<Var> = vars.iter().cloned().collect();
        let disjuncts: Vec<Constraint> = match &body {
            Constraint::Or(ds) => ds.clone(),
            other => vec![other.clone()],
        };
        let found = disjuncts.iter().enumerate().find_map(|(i, d)| binding(d, LinRel::Neq, &bound).map(|b| (i, b)));
        let Some((i, (v, t))) = found else { break };
        let rest: Vec<Constraint> = disjuncts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, d)| substitute(d, &v, &t)).collect();
        vars.retain(|w| w != &v);
        body = simp(&Constraint::disj(rest), &BTreeSet::new());
    }
    let free = body.free_vars();
    vars.retain(|v| free.contains(v));
    if vars.is_empty() {
        return body;
    }
    match body {
        Constraint::True | Constraint::False => body,
        Constraint::And(cs) => Constraint::And(cs.into_iter().map(|c| wrap_forall(&vars, c)).collect()),
        Constraint::Or(cs) => {
            let (inside, outside): (Vec<_>, Vec<_>) = cs.into_iter().partition(|c| mentions(c, &vars));
            if outside.is_empty() {
                Constraint::Forall(vars, Box::new(Constraint::Or(inside)))
            } else {
                let mut parts = outside;
                parts.insert(0, wrap_forall(&vars, Constraint::disj(inside)));
                Constraint::Or(parts)
            }
        }
        other => Constraint::Forall(vars, Box::new(other)),
    }
}

fn simp_exists(vs: &[Var], body: &Constraint, elim: &BTreeSet<Var>) -> Constraint {
    let mut vars: Vec<Var> = vs.to_vec();
    let mut body = body.clone();
    while let Constraint::Exists(inner, b) = body {
        vars.extend(inner.into_iter().filter(|v| !vs.contains(v)));
        body = *b;
    }
    let mut inner_elim = elim.clone();
    inner_elim.extend(vars.iter().cloned());
    let body = simp(&body, &inner_elim);
    let free = body.free_vars();
    vars.retain(|v| free.contains(v));
    if vars.is_empty() {
        return body;
    }
    match body {
        Constraint::True | Constraint::False => body,
        Constraint::Or(cs) => Constraint::Or(cs.into_iter().map(|c| wrap_exists(&vars, c)).collect()),
        Constraint::And(cs) => {
            let (inside, outside): (Vec<_>, Vec<_>) = cs.into_iter().partition(|c| mentions(c, &vars));
            if outside.is_empty() {
                Constraint::Exists(vars, Box::new(Constraint::And(inside)))
            } else {
                let mut parts = outside;
                parts.push(wrap_exists(&vars, Constraint::conj(inside)));
                Constraint::And(parts)
            }
        }
        other => Constraint::Exists(vars, Box::new(other)),
    }
}

fn mentions(c: &Constraint, vars: &[Var]) -> bool {
    let free = c.free_vars();
    vars.iter().any(|v| free.contains(v))
}

fn wrap_forall(vars: &[Var], c: Constraint) -> Constraint {
    let free = c.free_vars();
    let used: Vec<Var> = vars.iter().filter(|v| free.contains(*v)).cloned().collect();
    Constraint::forall(used, c)
}

fn wrap_exists(vars: &[Var], c: Constraint) -> Constraint {
    let free = c.free_vars();
    let used: Vec<Var> = vars.iter().filter(|v| free.contains(*v)).cloned().collect();
    Constraint::exists(used, c)
}

/// Canonical text of a state: normalized keeping the goal variables, with
/// commutative children sorted and variables numbered depth first.
pub fn canonical_key(state: &State) -> String {
    let keep = state.goal_vars();
    let c = normalize_keeping(&state.constraint, &keep);
    let c = sort_children(&c);
    let mut order: Vec<Var> = Vec::new();
    for a in &state.goal {
        a.collect_vars_ordered(&mut order);
    }
    collect_all_ordered(&c, &mut order);
    let map: BTreeMap<Var, Var> = order.iter().enumerate().map(|(i, v)| (v.clone(), Var::new(&format!("V{i}")))).collect();
    let renamed = State::new(c.rename(&map), state.goal.iter().map(|a| a.rename(&map)).collect());
    let namer = Namer::default();
    format!("{{{}}} {}", namer.constraint(&renamed.constraint), renamed.goal_text(&namer))
}

pub fn canonical_atom_key(c: &ConstraintAtom) -> String {
    canonical_key(&c.as_state())
}

fn collect_all_ordered(c: &Constraint, out: &mut Vec<Var>) {
    let push = |v: &Var, out: &mut Vec<Var>| {
        if !out.contains(v) {
            out.push(v.clone());
        }
    };
    match c {
        Constraint::True | Constraint::False => {}
        Constraint::Tree(s, _, t) => {
            let mut vs = Vec::new();
            s.collect_vars_ordered(&mut vs);
            t.collect_vars_ordered(&mut vs);
            vs.iter().for_each(|v| push(v, out));
        }
        Constraint::Lin(l, _, r) => l.vars().chain(r.vars()).for_each(|v| push(v, out)),
        Constraint::And(cs) | Constraint::Or(cs) => cs.iter().for_each(|c| collect_all_ordered(c, out)),
        Constraint::Not(b) => collect_all_ordered(b, out),
        Constraint::Forall(vs, b) | Constraint::Exists(vs, b) => {
            collect_all_ordered(b, out);
            vs.iter().for_each(|v| push(v, out));
        }
    }
}

/// Sorts children of commutative connectives by a name-blind rendering.
fn sort_children(c: &Constraint) -> Constraint {
    match c {
        Constraint::And(cs) | Constraint::Or(cs) => {
            let mut parts: Vec<(String, Constraint)> = cs
                .iter()
                .map(|c| {
                    let s = sort_children(c);
                    (shape_key(&s), s)
                })
                .collect();
            parts.sort_by(|a, b| a.0.cmp(&b.0));
            let parts = parts.into_iter().map(|(_, c)| c).collect();
            if matches!(c, Constraint::And(_)) { Constraint::And(parts) } else { Constraint::Or(parts) }
        }
        Constraint::Not(b) => Constraint::Not(Box::new(sort_children(b))),
        Constraint::Forall(vs, b) => Constraint::Forall(vs.clone(), Box::new(sort_children(b))),
        Constraint::Exists(vs, b) => Constraint::Exists(vs.clone(), Box::new(sort_children(b))),
        other => other.clone(),
    }
}

fn shape_key(c: &Constraint) -> String {
    let mut vars = BTreeSet::new();
    c.all_vars(&mut vars);
    let map: BTreeMap<Var, Var> = vars.into_iter().map(|v| (v, Var::new("_"))).collect();
    format!("{:?}", c.rename(&map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    fn neq(s: Term, t: Term) -> Constraint {
        Constraint::Tree(s, TreeRel::Neq, t)
    }

    fn eq(s: Term, t: Term) -> Constraint {
        Constraint::Tree(s, TreeRel::Eq, t)
    }

    fn lin(s: Term, r: LinRel, t: Term) -> Constraint {
        Constraint::Lin(LinExpr::from_term(&s).unwrap(), r, LinExpr::from_term(&t).unwrap())
    }

    #[test]
    fn eliminates_bound_equation() {
        let m = Var::new("M");
        let c = Constraint::And(vec![
            eq(v("W"), v("N")),
            Constraint::forall(vec![m.clone()], neq(v("N"), Term::app("s", vec![Term::Var(m.clone())]))),
        ]);
        let expected = Constraint::forall(vec![m.clone()], neq(v("W"), Term::app("s", vec![Term::Var(m)])));
        assert_eq!(normalize(&c), expected);
    }

    #[test]
    fn universal_disequation_instantiates() {
        let t = Var::new("T");
        let c = Constraint::forall(
            vec![t.clone()],
            Constraint::Or(vec![lin(v("X"), LinRel::Neq, Term::Var(t.clone())), lin(Term::num(5), LinRel::Le, Term::Var(t))]),
        );
        assert_eq!(normalize(&c), lin(Term::num(5), LinRel::Le, v("X")));
    }

    #[test]
    fn true_is_a_unit() {
        let c = neq(v("X"), Term::constant("a"));
        assert_eq!(normalize(&c.clone().and(Constraint::True)), normalize(&c));
    }

    #[test]
    fn keeps_requested_variables() {
        let c = eq(v("X"), Term::constant("a"));
        let keep = [Var::new("X")].into_iter().collect();
        assert_eq!(normalize_keeping(&c, &keep), c);
        assert_eq!(normalize(&c), Constraint::True);
    }

    #[test]
    fn elimination_respects_sibling_occurrences() {
        let c = Constraint::And(vec![
            Constraint::Or(vec![
                Constraint::And(vec![eq(v("X"), Term::constant("a")), neq(v("Y"), v("X"))]),
                eq(v("Y"), Term::constant("b")),
            ]),
            neq(v("X"), Term::constant("b")),
        ]);
        let keep = [Var::new("Y")].into_iter().collect();
        let n = normalize_keeping(&c, &keep);
        assert!(n.free_vars().contains(&Var::new("X")), "{n:?}");
    }

    #[test]
    fn decomposition_and_clash() {
        let c = eq(Term::app("s", vec![v("X")]), Term::app("s", vec![Term::constant("a")]));
        let keep = [Var::new("X")].into_iter().collect();
        assert_eq!(normalize_keeping(&c, &keep), eq(v("X"), Term::constant("a")));
        assert_eq!(normalize(&eq(Term::constant("a"), Term::constant("b"))), Constraint::False);
        assert_eq!(normalize(&eq(v("X"), Term::app("s", vec![v("X")]))), Constraint::False);
    }

    #[test]
    fn nat_disequation_expands() {
        let c = lin(v("X"), LinRel::Neq, Term::num(3));
        let keep = [Var::new("X")].into_iter().collect();
        assert_eq!(
            normalize_keeping(&c, &keep),
            Constraint::Or(vec![lin(v("X"), LinRel::Lt, Term::num(3)), lin(Term::num(3), LinRel::Lt, v("X"))])
        );
    }

    #[test]
    fn canonical_key_ignores_names_and_order() {
        let a = State::new(
            Constraint::And(vec![neq(v("X"), Term::constant("a")), neq(v("X"), Term::constant("b"))]),
            vec![crate::term::Atom::new("p", vec![v("X")])],
        );
        let b = State::new(
            Constraint::And(vec![neq(v("Z"), Term::constant("b")), neq(v("Z"), Term::constant("a"))]),
            vec![crate::term::Atom::new("p", vec![v("Z")])],
        );
        assert_eq!(canonical_key(&a), canonical_key(&b));
    }
}
