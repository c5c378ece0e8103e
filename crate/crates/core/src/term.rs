//! Terms, atoms, variables, signatures and substitutions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

/// A logic variable.
///
/// Identity is the pair (source name, rename generation). Parsed variables
/// have generation 0; every fresh variable handed out by a [`FreshSupply`]
/// carries a generation that is strictly positive.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    name: Arc<str>,
    index: u32,
}

impl Var {
    pub fn new(name: &str) -> Self {
        Var { name: Arc::from(name), index: 0 }
    }

    pub fn with_index(name: &str, index: u32) -> Self {
        Var { name: Arc::from(name), index }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn index(&self) -> u32 {
        self.index
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index == 0 {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}_{}", self.name, self.index)
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Source of fresh variables.
///
/// Generations only ever increase, so two calls never return the same
/// variable and no fresh variable collides with a parsed one.
#[derive(Debug)]
pub struct FreshSupply {
    next: AtomicU32,
}

impl Default for FreshSupply {
    fn default() -> Self {
        FreshSupply::starting_at(1)
    }
}

impl FreshSupply {
    pub fn starting_at(first: u32) -> Self {
        FreshSupply { next: AtomicU32::new(first.max(1)) }
    }

    /// A supply whose variables are all newer than any variable in `vars`.
    pub fn above<'a>(vars: impl IntoIterator<Item = &'a Var>) -> Self {
        let max = vars.into_iter().map(|v| v.index).max().unwrap_or(0);
        FreshSupply::starting_at(max + 1)
    }

    pub fn fresh(&self, base: &str) -> Var {
        let index = self.next.fetch_add(1, Ordering::Relaxed);
        Var { name: Arc::from(base), index }
    }

    pub fn fresh_like(&self, v: &Var) -> Var {
        let index = self.next.fetch_add(1, Ordering::Relaxed);
        Var { name: v.name.clone(), index }
    }

    /// Raise the counter so later variables are newer than everything in `vars`.
    pub fn bump_above<'a>(&self, vars: impl IntoIterator<Item = &'a Var>) {
        let max = vars.into_iter().map(|v| v.index).max().unwrap_or(0);
        self.next.fetch_max(max + 1, Ordering::Relaxed);
    }
}

/// A first-order term. Constants are applications with no arguments.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    App(Arc<str>, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::new(name))
    }

    pub fn constant(name: &str) -> Term {
        Term::App(Arc::from(name), Vec::new())
    }

    pub fn app(functor: &str, args: Vec<Term>) -> Term {
        Term::App(Arc::from(functor), args)
    }

    pub fn num(n: u64) -> Term {
        Term::App(Arc::from(n.to_string().as_str()), Vec::new())
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::App(..) => None,
        }
    }

    /// The value of a numeral constant.
    pub fn as_num(&self) -> Option<u64> {
        match self {
            Term::App(f, args) if args.is_empty() => f.parse().ok(),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Height of the term tree; variables and constants have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => args.iter().map(|a| a.depth() + 1).max().unwrap_or(0),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Variables in order of first occurrence (depth-first, left to right).
    pub fn collect_vars_ordered(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars_ordered(out)),
        }
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::App(_, args) => args.iter().any(|a| a.contains_var(v)),
        }
    }

    pub fn apply(&self, subst: &Subst) -> Term {
        match self {
            Term::Var(v) => match subst.get(v) {
                Some(t) => t.clone(),
                None => self.clone(),
            },
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.apply(subst)).collect()),
        }
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Term {
        match self {
            Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.rename(map)).collect()),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(name, args) if name.as_ref() == "+" && args.len() == 2 => {
                write!(f, "{} + {}", args[0], args[1])
            }
            Term::App(name, args) => {
                write!(f, "{name}")?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

/// A program atom `p(t1, ..., tn)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: Arc<str>,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Atom { predicate: Arc::from(predicate), args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn key(&self) -> (Arc<str>, usize) {
        (self.predicate.clone(), self.args.len())
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        self.args.iter().for_each(|a| a.collect_vars(out));
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars_ordered(&self, out: &mut Vec<Var>) {
        self.args.iter().for_each(|a| a.collect_vars_ordered(out));
    }

    pub fn apply(&self, subst: &Subst) -> Atom {
        Atom { predicate: self.predicate.clone(), args: self.args.iter().map(|a| a.apply(subst)).collect() }
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Atom {
        Atom { predicate: self.predicate.clone(), args: self.args.iter().map(|a| a.rename(map)).collect() }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Term::App(self.predicate.clone(), self.args.clone()))
    }
}

/// The constraint domain a program computes over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Finite trees over a declared functor set.
    Term,
    /// Natural numbers with numerals and binary `+`.
    Nat,
}

/// Declared function symbols and program predicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub domain: Domain,
    /// `(symbol, arity)` pairs; empty for the naturals, whose numerals and `+` are implicit.
    pub functors: BTreeSet<(Arc<str>, usize)>,
    pub predicates: BTreeSet<(Arc<str>, usize)>,
}

impl Signature {
    pub fn term<'a>(functors: impl IntoIterator<Item = (&'a str, usize)>) -> Self {
        Signature {
            domain: Domain::Term,
            functors: functors.into_iter().map(|(f, n)| (Arc::from(f), n)).collect(),
            predicates: BTreeSet::new(),
        }
    }

    pub fn nat() -> Self {
        Signature { domain: Domain::Nat, functors: BTreeSet::new(), predicates: BTreeSet::new() }
    }

    pub fn with_predicates<'a>(mut self, preds: impl IntoIterator<Item = (&'a str, usize)>) -> Self {
        self.predicates.extend(preds.into_iter().map(|(p, n)| (Arc::from(p), n)));
        self
    }

    pub fn has_functor(&self, name: &str, arity: usize) -> bool {
        match self.domain {
            Domain::Term => self.functors.iter().any(|(f, n)| f.as_ref() == name && *n == arity),
            Domain::Nat => (name == "+" && arity == 2) || (arity == 0 && name.parse::<u64>().is_ok()),
        }
    }

    pub fn constants(&self) -> impl Iterator<Item = &Arc<str>> {
        self.functors.iter().filter(|(_, n)| *n == 0).map(|(f, _)| f)
    }

    /// Whether the Herbrand universe is finite (only constants declared).
    pub fn is_finite(&self) -> bool {
        self.domain == Domain::Term && self.functors.iter().all(|(_, n)| *n == 0)
    }

    /// Checks every functor in `t` against the signature.
    pub fn check_term(&self, t: &Term) -> Result<(), (String, usize)> {
        match t {
            Term::Var(_) => Ok(()),
            Term::App(f, args) => {
                if !self.has_functor(f, args.len()) {
                    return Err((f.to_string(), args.len()));
                }
                args.iter().try_for_each(|a| self.check_term(a))
            }
        }
    }
}

/// An idempotent substitution.
pub type Subst = BTreeMap<Var, Term>;

/// Most general unifier of a list of equations, with occurs check.
///
/// `prefer_bind` decides orientation of variable-variable equations: when
/// exactly one side satisfies it, that side gets bound. The result is
/// idempotent: no bound variable occurs in any right-hand side.
pub fn mgu_with<F>(eqs: impl IntoIterator<Item = (Term, Term)>, prefer_bind: F) -> Option<Subst>
where
    F: Fn(&Var) -> bool,
{
    let mut subst = Subst::new();
    let mut work: Vec<(Term, Term)> = eqs.into_iter().collect();
    work.reverse();
    while let Some((s, t)) = work.pop() {
        let s = s.apply(&subst);
        let t = t.apply(&subst);
        match (s, t) {
            (Term::Var(a), Term::Var(b)) if a == b => {}
            (Term::Var(a), Term::Var(b)) => {
                if prefer_bind(&b) && !prefer_bind(&a) {
                    bind(&mut subst, b, Term::Var(a));
                } else {
                    bind(&mut subst, a, Term::Var(b));
                }
            }
            (Term::Var(v), t) | (t, Term::Var(v)) => {
                if t.contains_var(&v) {
                    return None;
                }
                bind(&mut subst, v, t);
            }
            (Term::App(f, fa), Term::App(g, ga)) => {
                if f != g || fa.len() != ga.len() {
                    return None;
                }
                work.extend(fa.into_iter().zip(ga).rev());
            }
        }
    }
    Some(subst)
}

pub fn mgu(eqs: impl IntoIterator<Item = (Term, Term)>) -> Option<Subst> {
    mgu_with(eqs, |_| false)
}

fn bind(subst: &mut Subst, v: Var, t: Term) {
    let single: Subst = std::iter::once((v.clone(), t.clone())).collect();
    for rhs in subst.values_mut() {
        if rhs.contains_var(&v) {
            *rhs = rhs.apply(&single);
        }
    }
    subst.insert(v, t);
}

/// Ground terms of the signature up to `max_depth`, in a deterministic order:
/// by depth, then by functor order, then lexicographically by arguments.
pub fn ground_terms(sig: &Signature, max_depth: usize) -> Vec<Term> {
    let mut by_depth: Vec<Vec<Term>> = Vec::new();
    let constants: Vec<Term> = sig.constants().map(|c| Term::App(c.clone(), Vec::new())).collect();
    by_depth.push(constants);
    for d in 1..=max_depth {
        let upto: Vec<Term> = by_depth.iter().flatten().cloned().collect();
        let mut level = Vec::new();
        for (f, n) in sig.functors.iter().filter(|(_, n)| *n > 0) {
            for args in tuples(&upto, *n) {
                if args.iter().any(|a| a.depth() == d - 1) {
                    level.push(Term::App(f.clone(), args));
                }
            }
        }
        by_depth.push(level);
    }
    by_depth.into_iter().flatten().collect()
}

fn tuples(pool: &[Term], n: usize) -> Vec<Vec<Term>> {
    let mut out: Vec<Vec<Term>> = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                pool.iter().map(move |t| {
                    let mut next = prefix.clone();
                    next.push(t.clone());
                    next
                })
            })
            .collect();
    }
    out
}
