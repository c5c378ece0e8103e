//! Constraint formulas, states and constraint atoms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::term::{Atom, Domain, FreshSupply, Subst, Term, Var};

/// Relation of a finite-tree atomic constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TreeRel {
    Eq,
    Neq,
}

/// Relation of a linear atomic constraint over the naturals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinRel {
    Lt,
    Le,
    Eq,
    Neq,
    Ge,
    Gt,
}

impl LinRel {
    pub fn negate(self) -> LinRel {
        match self {
            LinRel::Lt => LinRel::Ge,
            LinRel::Le => LinRel::Gt,
            LinRel::Eq => LinRel::Neq,
            LinRel::Neq => LinRel::Eq,
            LinRel::Ge => LinRel::Lt,
            LinRel::Gt => LinRel::Le,
        }
    }

    pub fn holds(self, a: u64, b: u64) -> bool {
        match self {
            LinRel::Lt => a < b,
            LinRel::Le => a <= b,
            LinRel::Eq => a == b,
            LinRel::Neq => a != b,
            LinRel::Ge => a >= b,
            LinRel::Gt => a > b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            LinRel::Lt => "<",
            LinRel::Le => "=<",
            LinRel::Eq => "=",
            LinRel::Neq => "\\=",
            LinRel::Ge => ">=",
            LinRel::Gt => ">",
        }
    }
}

/// `c0 + c1*X1 + ... + cn*Xn` with natural constant and positive coefficients.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LinExpr {
    pub constant: u64,
    pub coeffs: BTreeMap<Var, u64>,
}

impl LinExpr {
    pub fn constant(c: u64) -> Self {
        LinExpr { constant: c, coeffs: BTreeMap::new() }
    }

    pub fn var(v: Var) -> Self {
        LinExpr { constant: 0, coeffs: [(v, 1)].into_iter().collect() }
    }

    /// Flattens a natural-number term (numerals, variables and `+`).
    pub fn from_term(t: &Term) -> Option<LinExpr> {
        match t {
            Term::Var(v) => Some(LinExpr::var(v.clone())),
            Term::App(f, args) if f.as_ref() == "+" && args.len() == 2 => {
                Some(LinExpr::from_term(&args[0])?.add(&LinExpr::from_term(&args[1])?))
            }
            Term::App(_, args) if args.is_empty() => t.as_num().map(LinExpr::constant),
            _ => None,
        }
    }

    /// Back to a term built from numerals and `+`.
    pub fn to_term(&self) -> Term {
        let mut parts: Vec<Term> = Vec::new();
        for (v, &c) in &self.coeffs {
            for _ in 0..c {
                parts.push(Term::Var(v.clone()));
            }
        }
        if self.constant > 0 || parts.is_empty() {
            parts.push(Term::num(self.constant));
        }
        let mut it = parts.into_iter();
        let first = it.next().expect("nonempty");
        it.fold(first, |acc, t| Term::app("+", vec![acc, t]))
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.constant += other.constant;
        for (v, c) in &other.coeffs {
            *out.coeffs.entry(v.clone()).or_insert(0) += c;
        }
        out
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.keys()
    }

    pub fn eval(&self, val: &impl Fn(&Var) -> Option<u64>) -> Option<u64> {
        let mut total = self.constant;
        for (v, c) in &self.coeffs {
            total = total.checked_add(c.checked_mul(val(v)?)?)?;
        }
        Some(total)
    }

    pub fn apply(&self, subst: &Subst) -> LinExpr {
        let mut out = LinExpr::constant(self.constant);
        for (v, &c) in &self.coeffs {
            let part = match subst.get(v) {
                Some(t) => LinExpr::from_term(t).expect("substituted natural-number term"),
                None => LinExpr::var(v.clone()),
            };
            out.constant += c * part.constant;
            for (w, d) in part.coeffs {
                *out.coeffs.entry(w).or_insert(0) += c * d;
            }
        }
        out
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> LinExpr {
        let mut out = LinExpr::constant(self.constant);
        for (v, &c) in &self.coeffs {
            let w = map.get(v).cloned().unwrap_or_else(|| v.clone());
            *out.coeffs.entry(w).or_insert(0) += c;
        }
        out
    }

    pub fn numerals_sum(&self) -> u64 {
        self.constant
    }
}

impl fmt::Debug for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// A first-order constraint formula.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    True,
    False,
    Tree(Term, TreeRel, Term),
    Lin(LinExpr, LinRel, LinExpr),
    And(Vec<Constraint>),
    Or(Vec<Constraint>),
    Not(Box<Constraint>),
    Forall(Vec<Var>, Box<Constraint>),
    Exists(Vec<Var>, Box<Constraint>),
}

impl Constraint {
    /// The equation `s = t` in the given domain.
    pub fn equation(domain: Domain, s: &Term, t: &Term) -> Result<Constraint> {
        Constraint::relation(domain, s, LinRel::Eq, t)
    }

    pub fn disequation(domain: Domain, s: &Term, t: &Term) -> Result<Constraint> {
        Constraint::relation(domain, s, LinRel::Neq, t)
    }

    /// An atomic constraint; order relations are only valid over the naturals.
    pub fn relation(domain: Domain, s: &Term, rel: LinRel, t: &Term) -> Result<Constraint> {
        match domain {
            Domain::Term => match rel {
                LinRel::Eq => Ok(Constraint::Tree(s.clone(), TreeRel::Eq, t.clone())),
                LinRel::Neq => Ok(Constraint::Tree(s.clone(), TreeRel::Neq, t.clone())),
                _ => Err(Error::Domain(format!("relation `{}` is not available over finite trees", rel.symbol()))),
            },
            Domain::Nat => {
                let l = LinExpr::from_term(s).ok_or_else(|| Error::Domain(format!("`{s}` is not a natural-number expression")))?;
                let r = LinExpr::from_term(t).ok_or_else(|| Error::Domain(format!("`{t}` is not a natural-number expression")))?;
                Ok(Constraint::Lin(l, rel, r))
            }
        }
    }

    /// Conjunction of pairwise equations `s1 = t1 /\ ... /\ sn = tn`.
    pub fn equations(domain: Domain, s: &[Term], t: &[Term]) -> Result<Constraint> {
        let eqs = s.iter().zip(t).map(|(a, b)| Constraint::equation(domain, a, b)).collect::<Result<Vec<_>>>()?;
        Ok(Constraint::conj(eqs))
    }

    /// Conjunction with the single-element and empty cases collapsed.
    pub fn conj(mut parts: Vec<Constraint>) -> Constraint {
        match parts.len() {
            0 => Constraint::True,
            1 => parts.pop().unwrap(),
            _ => Constraint::And(parts),
        }
    }

    pub fn disj(mut parts: Vec<Constraint>) -> Constraint {
        match parts.len() {
            0 => Constraint::False,
            1 => parts.pop().unwrap(),
            _ => Constraint::Or(parts),
        }
    }

    pub fn and(self, other: Constraint) -> Constraint {
        Constraint::And(vec![self, other])
    }

    pub fn negate(self) -> Constraint {
        Constraint::Not(Box::new(self))
    }

    pub fn forall(vars: Vec<Var>, body: Constraint) -> Constraint {
        if vars.is_empty() {
            body
        } else {
            Constraint::Forall(vars, Box::new(body))
        }
    }

    pub fn exists(vars: Vec<Var>, body: Constraint) -> Constraint {
        if vars.is_empty() {
            body
        } else {
            Constraint::Exists(vars, Box::new(body))
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Constraint::True | Constraint::False | Constraint::Tree(..) | Constraint::Lin(..))
    }

    /// Free variables, in a set.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = Vec::new();
        self.collect_free_ordered(&mut Vec::new(), &mut out);
        out.into_iter().collect()
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars_ordered(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_free_ordered(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_ordered(&self, bound: &mut Vec<Var>, out: &mut Vec<Var>) {
        let mut push = |v: &Var, bound: &Vec<Var>| {
            if !bound.contains(v) && !out.contains(v) {
                out.push(v.clone());
            }
        };
        match self {
            Constraint::True | Constraint::False => {}
            Constraint::Tree(s, _, t) => {
                let mut vs = Vec::new();
                s.collect_vars_ordered(&mut vs);
                t.collect_vars_ordered(&mut vs);
                vs.iter().for_each(|v| push(v, bound));
            }
            Constraint::Lin(l, _, r) => {
                l.vars().chain(r.vars()).for_each(|v| push(v, bound));
            }
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().for_each(|c| c.collect_free_ordered(bound, out)),
            Constraint::Not(c) => c.collect_free_ordered(bound, out),
            Constraint::Forall(vs, body) | Constraint::Exists(vs, body) => {
                let n = bound.len();
                bound.extend(vs.iter().cloned());
                body.collect_free_ordered(bound, out);
                bound.truncate(n);
            }
        }
    }

    /// Every variable occurring anywhere, bound or free.
    pub fn all_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Constraint::True | Constraint::False => {}
            Constraint::Tree(s, _, t) => {
                s.collect_vars(out);
                t.collect_vars(out);
            }
            Constraint::Lin(l, _, r) => out.extend(l.vars().chain(r.vars()).cloned()),
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().for_each(|c| c.all_vars(out)),
            Constraint::Not(c) => c.all_vars(out),
            Constraint::Forall(vs, body) | Constraint::Exists(vs, body) => {
                out.extend(vs.iter().cloned());
                body.all_vars(out);
            }
        }
    }

    /// Bijective renaming of every occurrence (bound variables included).
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Constraint {
        let rv = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
        match self {
            Constraint::True => Constraint::True,
            Constraint::False => Constraint::False,
            Constraint::Tree(s, r, t) => Constraint::Tree(s.rename(map), *r, t.rename(map)),
            Constraint::Lin(l, r, e) => Constraint::Lin(l.rename(map), *r, e.rename(map)),
            Constraint::And(cs) => Constraint::And(cs.iter().map(|c| c.rename(map)).collect()),
            Constraint::Or(cs) => Constraint::Or(cs.iter().map(|c| c.rename(map)).collect()),
            Constraint::Not(c) => Constraint::Not(Box::new(c.rename(map))),
            Constraint::Forall(vs, b) => Constraint::Forall(vs.iter().map(rv).collect(), Box::new(b.rename(map))),
            Constraint::Exists(vs, b) => Constraint::Exists(vs.iter().map(rv).collect(), Box::new(b.rename(map))),
        }
    }

    /// Capture-avoiding substitution of free variables.
    pub fn apply(&self, subst: &Subst) -> Constraint {
        if subst.is_empty() {
            return self.clone();
        }
        let mut vars = BTreeSet::new();
        self.all_vars(&mut vars);
        for t in subst.values() {
            t.collect_vars(&mut vars);
        }
        let supply = FreshSupply::above(vars.iter());
        self.apply_with(subst, &supply)
    }

    fn apply_with(&self, subst: &Subst, supply: &FreshSupply) -> Constraint {
        match self {
            Constraint::True => Constraint::True,
            Constraint::False => Constraint::False,
            Constraint::Tree(s, r, t) => Constraint::Tree(s.apply(subst), *r, t.apply(subst)),
            Constraint::Lin(l, r, e) => Constraint::Lin(l.apply(subst), *r, e.apply(subst)),
            Constraint::And(cs) => Constraint::And(cs.iter().map(|c| c.apply_with(subst, supply)).collect()),
            Constraint::Or(cs) => Constraint::Or(cs.iter().map(|c| c.apply_with(subst, supply)).collect()),
            Constraint::Not(c) => Constraint::Not(Box::new(c.apply_with(subst, supply))),
            Constraint::Forall(vs, b) | Constraint::Exists(vs, b) => {
                let free = b.free_vars();
                let inner: Subst =
                    subst.iter().filter(|(v, _)| !vs.contains(v) && free.contains(v)).map(|(v, t)| (v.clone(), t.clone())).collect();
                let captured: BTreeSet<Var> = inner.values().flat_map(|t| t.vars()).collect();
                let mut renaming = BTreeMap::new();
                let new_vs: Vec<Var> = vs
                    .iter()
                    .map(|v| {
                        if captured.contains(v) {
                            let w = supply.fresh_like(v);
                            renaming.insert(v.clone(), w.clone());
                            w
                        } else {
                            v.clone()
                        }
                    })
                    .collect();
                let mut body = (**b).clone();
                if !renaming.is_empty() {
                    let sub: Subst = renaming.iter().map(|(v, w)| (v.clone(), Term::Var(w.clone()))).collect();
                    body = body.apply_with(&sub, supply);
                }
                let body = Box::new(body.apply_with(&inner, supply));
                match self {
                    Constraint::Forall(..) => Constraint::Forall(new_vs, body),
                    _ => Constraint::Exists(new_vs, body),
                }
            }
        }
    }

    /// Deepest term occurring in the formula.
    pub fn max_term_depth(&self) -> usize {
        match self {
            Constraint::Tree(s, _, t) => s.depth().max(t.depth()),
            Constraint::Lin(..) | Constraint::True | Constraint::False => 0,
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().map(Constraint::max_term_depth).max().unwrap_or(0),
            Constraint::Not(c) | Constraint::Forall(_, c) | Constraint::Exists(_, c) => c.max_term_depth(),
        }
    }

    /// Sum over tree atoms of the deeper side.
    pub fn term_depth_sum(&self) -> usize {
        match self {
            Constraint::Tree(s, _, t) => s.depth().max(t.depth()),
            Constraint::Lin(..) | Constraint::True | Constraint::False => 0,
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().map(Constraint::term_depth_sum).sum(),
            Constraint::Not(c) | Constraint::Forall(_, c) | Constraint::Exists(_, c) => c.term_depth_sum(),
        }
    }

    /// Number of atomic constraints.
    pub fn atom_count(&self) -> usize {
        match self {
            Constraint::Tree(..) | Constraint::Lin(..) => 1,
            Constraint::True | Constraint::False => 0,
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().map(Constraint::atom_count).sum(),
            Constraint::Not(c) | Constraint::Forall(_, c) | Constraint::Exists(_, c) => c.atom_count(),
        }
    }

    /// Sum of all numerals in linear atoms.
    pub fn numerals_sum(&self) -> u64 {
        match self {
            Constraint::Lin(l, _, r) => l.numerals_sum() + r.numerals_sum(),
            Constraint::Tree(..) | Constraint::True | Constraint::False => 0,
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().map(Constraint::numerals_sum).sum(),
            Constraint::Not(c) | Constraint::Forall(_, c) | Constraint::Exists(_, c) => c.numerals_sum(),
        }
    }

    /// Largest sum of coefficients on one side of a linear atom.
    pub fn max_coefficient_mass(&self) -> u64 {
        match self {
            Constraint::Lin(l, _, r) => l.coeffs.values().sum::<u64>().max(r.coeffs.values().sum()),
            Constraint::Tree(..) | Constraint::True | Constraint::False => 0,
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().map(Constraint::max_coefficient_mass).max().unwrap_or(0),
            Constraint::Not(c) | Constraint::Forall(_, c) | Constraint::Exists(_, c) => c.max_coefficient_mass(),
        }
    }

    /// Number of disequations, counting each quantified negative block once.
    pub fn disequation_count(&self) -> usize {
        self.diseq_count(true)
    }

    fn diseq_count(&self, positive: bool) -> usize {
        match self {
            Constraint::Tree(_, TreeRel::Neq, _) | Constraint::Lin(_, LinRel::Neq, _) if positive => 1,
            Constraint::Tree(_, TreeRel::Eq, _) | Constraint::Lin(_, LinRel::Eq, _) if !positive => 1,
            Constraint::Tree(..) | Constraint::Lin(..) | Constraint::True | Constraint::False => 0,
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().map(|c| c.diseq_count(positive)).sum(),
            Constraint::Not(c) => c.diseq_count(!positive),
            Constraint::Forall(_, c) => 1 + c.diseq_count(positive),
            Constraint::Exists(_, c) => c.diseq_count(positive),
        }
    }
}

/// Assigns printable names to variables: the bare source name where it is
/// unambiguous, otherwise the name with its generation suffix.
#[derive(Clone, Debug, Default)]
pub struct Namer {
    names: BTreeMap<Var, String>,
}

impl Namer {
    pub fn for_vars<'a>(vars: impl IntoIterator<Item = &'a Var>) -> Namer {
        let vars: BTreeSet<&Var> = vars.into_iter().collect();
        let mut by_name: BTreeMap<&str, Vec<&Var>> = BTreeMap::new();
        for v in &vars {
            by_name.entry(v.name()).or_default().push(v);
        }
        let mut names = BTreeMap::new();
        for (name, vs) in by_name {
            if vs.len() == 1 {
                names.insert(vs[0].clone(), name.to_string());
            } else {
                for v in vs {
                    names.insert(v.clone(), format!("{v:?}"));
                }
            }
        }
        Namer { names }
    }

    pub fn name(&self, v: &Var) -> String {
        self.names.get(v).cloned().unwrap_or_else(|| format!("{v:?}"))
    }

    pub fn term(&self, t: &Term) -> String {
        match t {
            Term::Var(v) => self.name(v),
            Term::App(f, args) if f.as_ref() == "+" && args.len() == 2 => {
                format!("{} + {}", self.term(&args[0]), self.term(&args[1]))
            }
            Term::App(f, args) if args.is_empty() => f.to_string(),
            Term::App(f, args) => {
                format!("{f}({})", args.iter().map(|a| self.term(a)).collect::<Vec<_>>().join(", "))
            }
        }
    }

    pub fn atom(&self, a: &Atom) -> String {
        self.term(&Term::App(a.predicate.clone(), a.args.clone()))
    }

    pub fn lin(&self, e: &LinExpr) -> String {
        let mut parts = Vec::new();
        for (v, &c) in &e.coeffs {
            for _ in 0..c {
                parts.push(self.name(v));
            }
        }
        if e.constant > 0 || parts.is_empty() {
            parts.push(e.constant.to_string());
        }
        parts.join(" + ")
    }

    /// Canonical text: infix atoms, `/\`, `\/`, `~`, `forall([Vs], B)`, `exists([Vs], B)`.
    pub fn constraint(&self, c: &Constraint) -> String {
        match c {
            Constraint::True => "true".into(),
            Constraint::False => "false".into(),
            Constraint::Tree(s, TreeRel::Eq, t) => format!("{} = {}", self.term(s), self.term(t)),
            Constraint::Tree(s, TreeRel::Neq, t) => format!("{} \\= {}", self.term(s), self.term(t)),
            Constraint::Lin(l, r, e) => format!("{} {} {}", self.lin(l), r.symbol(), self.lin(e)),
            Constraint::And(cs) => {
                if cs.is_empty() {
                    return "true".into();
                }
                cs.iter()
                    .map(|c| match c {
                        Constraint::Or(_) => format!("({})", self.constraint(c)),
                        _ => self.constraint(c),
                    })
                    .collect::<Vec<_>>()
                    .join(" /\\ ")
            }
            Constraint::Or(cs) => {
                if cs.is_empty() {
                    return "false".into();
                }
                cs.iter().map(|c| self.constraint(c)).collect::<Vec<_>>().join(" \\/ ")
            }
            Constraint::Not(inner) => {
                if inner.is_atomic() || matches!(**inner, Constraint::Forall(..) | Constraint::Exists(..) | Constraint::Not(_)) {
                    format!("~{}", self.constraint(inner))
                } else {
                    format!("~({})", self.constraint(inner))
                }
            }
            Constraint::Forall(vs, b) => format!("forall([{}], {})", self.var_list(vs), self.constraint(b)),
            Constraint::Exists(vs, b) => format!("exists([{}], {})", self.var_list(vs), self.constraint(b)),
        }
    }

    fn var_list(&self, vs: &[Var]) -> String {
        vs.iter().map(|v| self.name(v)).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Namer::default().constraint(self))
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut vars = BTreeSet::new();
        self.all_vars(&mut vars);
        write!(f, "{}", Namer::for_vars(&vars).constraint(self))
    }
}

/// A state `<d | B1, ..., Bn>`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub constraint: Constraint,
    pub goal: Vec<Atom>,
}

impl State {
    pub fn new(constraint: Constraint, goal: Vec<Atom>) -> Self {
        State { constraint, goal }
    }

    pub fn is_successful(&self) -> bool {
        self.goal.is_empty()
    }

    /// `Q /\ d`: the goal is unchanged and the constraint gains a conjunct.
    pub fn conjoin(&self, d: Constraint) -> State {
        State { constraint: self.constraint.clone().and(d), goal: self.goal.clone() }
    }

    /// The leftmost atom together with the constraint.
    pub fn c_atom(&self) -> Result<ConstraintAtom> {
        let atom = self.goal.first().ok_or(Error::NoSelectedAtom)?;
        Ok(ConstraintAtom { constraint: self.constraint.clone(), atom: atom.clone() })
    }

    /// Free variables of the constraint and the goal.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.constraint.free_vars();
        self.goal.iter().for_each(|a| a.collect_vars(&mut out));
        out
    }

    pub fn goal_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.goal.iter().for_each(|a| a.collect_vars(&mut out));
        out
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> State {
        State { constraint: self.constraint.rename(map), goal: self.goal.iter().map(|a| a.rename(map)).collect() }
    }

    pub fn namer(&self) -> Namer {
        let mut vars = BTreeSet::new();
        self.constraint.all_vars(&mut vars);
        self.goal.iter().for_each(|a| a.collect_vars(&mut vars));
        Namer::for_vars(&vars)
    }

    pub fn goal_text(&self, namer: &Namer) -> String {
        if self.goal.is_empty() {
            "[]".into()
        } else {
            self.goal.iter().map(|a| namer.atom(a)).collect::<Vec<_>>().join(", ")
        }
    }
}

impl From<ConstraintAtom> for State {
    fn from(c: ConstraintAtom) -> State {
        State { constraint: c.constraint, goal: vec![c.atom] }
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let namer = Namer::default();
        write!(f, "{{{}}} {}", namer.constraint(&self.constraint), self.goal_text(&namer))
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let namer = self.namer();
        write!(f, "{{{}}} {}", namer.constraint(&self.constraint), self.goal_text(&namer))
    }
}

/// A state with exactly one atom.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ConstraintAtom {
    pub constraint: Constraint,
    pub atom: Atom,
}

impl ConstraintAtom {
    pub fn new(constraint: Constraint, atom: Atom) -> Self {
        ConstraintAtom { constraint, atom }
    }

    pub fn conjoin(&self, d: Constraint) -> ConstraintAtom {
        ConstraintAtom { constraint: self.constraint.clone().and(d), atom: self.atom.clone() }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.constraint.free_vars();
        self.atom.collect_vars(&mut out);
        out
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> ConstraintAtom {
        ConstraintAtom { constraint: self.constraint.rename(map), atom: self.atom.rename(map) }
    }

    /// A variant whose variables (free and bound) are all fresh.
    pub fn fresh_copy(&self, supply: &FreshSupply) -> ConstraintAtom {
        let mut vars = BTreeSet::new();
        self.constraint.all_vars(&mut vars);
        self.atom.collect_vars(&mut vars);
        let map: BTreeMap<Var, Var> = vars.iter().map(|v| (v.clone(), supply.fresh_like(v))).collect();
        self.rename(&map)
    }

    pub fn as_state(&self) -> State {
        State { constraint: self.constraint.clone(), goal: vec![self.atom.clone()] }
    }
}

impl fmt::Debug for ConstraintAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.as_state(), f)
    }
}

impl fmt::Display for ConstraintAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.as_state(), f)
    }
}

/// `C ≈ C'`: argument equations conjoined with both constraints, or `false`
/// when the predicates differ. The atoms must be variable disjoint.
pub fn unification_formula(domain: Domain, c1: &ConstraintAtom, c2: &ConstraintAtom) -> Result<Constraint> {
    if c1.atom.key() != c2.atom.key() {
        return Ok(Constraint::False);
    }
    let eqs = Constraint::equations(domain, &c1.atom.args, &c2.atom.args)?;
    Ok(Constraint::And(vec![eqs, c1.constraint.clone(), c2.constraint.clone()]))
}
