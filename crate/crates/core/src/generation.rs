//! Alternative test cases and the constraint selective unification problem.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::concolic::neg_constr;
use crate::constraint::{unification_formula, Constraint, ConstraintAtom, State};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::normalize::{canonical_atom_key, normalize_keeping};
use crate::solver::{oracle_member, oracle_sat, set_of, sufficient_bound, GroundUniverse, Verdict};
use crate::term::{Atom, Signature, Var};

/// Largest `H_S` for which every subset is tried.
pub const MAX_ALTS_HEADS: usize = 20;

/// `alts(I, C, H_Q, H_S)`. `H_Q` must be a subset of `H_S`.
#[derive(Clone, Debug)]
pub struct AltsRequest {
    pub initial: ConstraintAtom,
    pub current: ConstraintAtom,
    pub matched_concrete: Vec<ConstraintAtom>,
    pub matched_symbolic: Vec<ConstraintAtom>,
}

/// One admissible split of `H_S`.
#[derive(Clone, Debug)]
pub struct AltsCandidate {
    /// Indices into `H_S`.
    pub plus: Vec<usize>,
    pub result: Option<ConstraintAtom>,
}

/// Subsets of `0..n`, largest first, lexicographic within a size.
pub fn subsets_by_size(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for k in (0..=n).rev() {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            out.push(comb.clone());
            let Some(i) = (0..k).rev().find(|&i| comb[i] < n - k + i) else { break };
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
        }
    }
    out
}

/// Every subset `H+` of `H_S` other than `H_Q`, with the test case it yields
/// (if any) before normalization and deduplication.
pub fn alts_candidates(engine: &Engine<'_>, req: &AltsRequest) -> Result<Vec<AltsCandidate>> {
    let hs = &req.matched_symbolic;
    if hs.len() > MAX_ALTS_HEADS {
        return Err(Error::Input(format!("{} matching heads exceed the limit of {MAX_ALTS_HEADS}", hs.len())));
    }
    let in_q: Vec<bool> = hs.iter().map(|h| req.matched_concrete.contains(h)).collect();
    let domain = engine.program().signature.domain;
    let mut out = Vec::new();
    for plus in subsets_by_size(hs.len()) {
        if (0..hs.len()).all(|i| plus.contains(&i) == in_q[i]) {
            continue;
        }
        let minus: Vec<ConstraintAtom> = (0..hs.len()).filter(|i| !plus.contains(i)).map(|i| hs[i].clone()).collect();
        let g = neg_constr(domain, &req.current, &minus)?;
        let result = if feasible(engine, &req.current, &g, plus.iter().map(|&i| &hs[i]))? {
            let fresh: Vec<ConstraintAtom> = minus.iter().map(|h| h.fresh_copy(engine.supply())).collect();
            let g2 = neg_constr(domain, &req.current, &fresh)?;
            let mut parts = vec![req.initial.constraint.clone(), req.current.constraint.clone()];
            if g2 != Constraint::True {
                parts.push(g2);
            }
            Some(ConstraintAtom::new(Constraint::conj(parts), req.initial.atom.clone()))
        } else {
            None
        };
        out.push(AltsCandidate { plus, result });
    }
    Ok(out)
}

/// `c /\ gamma` satisfiable and `C /\ gamma` unifying with every element of `plus`.
fn feasible<'a>(engine: &Engine<'_>, c: &ConstraintAtom, g: &Constraint, plus: impl Iterator<Item = &'a ConstraintAtom>) -> Result<bool> {
    let cg = c.conjoin(g.clone());
    if !engine.is_sat(&cg.constraint)? {
        return Ok(false);
    }
    for h in plus {
        if !engine.unifies(&cg, h)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The alternative test cases, normalized and without duplicates, in
/// candidate order.
pub fn alts(engine: &Engine<'_>, req: &AltsRequest) -> Result<Vec<ConstraintAtom>> {
    let keep = req.initial.atom.vars();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for cand in alts_candidates(engine, req)? {
        let Some(r) = cand.result else { continue };
        let r = ConstraintAtom::new(normalize_keeping(&r.constraint, &keep), r.atom);
        if seen.insert(canonical_atom_key(&r)) {
            out.push(r);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct CsupInstance {
    pub c_atom: ConstraintAtom,
    pub h_plus: Vec<ConstraintAtom>,
    pub h_minus: Vec<ConstraintAtom>,
}

impl CsupInstance {
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for c in std::iter::once(&self.c_atom).chain(&self.h_plus).chain(&self.h_minus) {
            c.constraint.all_vars(&mut out);
            c.atom.collect_vars(&mut out);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "witness", rename_all = "lowercase")]
pub enum CsupVerdict {
    Nonempty(String),
    Empty,
}

/// Decides whether `P(C, H+, H-)` is empty. A nonempty answer carries the
/// witness `C /\ gamma'` with the variables of `H-` renamed fresh.
pub fn csup_decide(engine: &Engine<'_>, inst: &CsupInstance) -> Result<(CsupVerdict, Option<ConstraintAtom>)> {
    let domain = engine.program().signature.domain;
    let g = neg_constr(domain, &inst.c_atom, &inst.h_minus)?;
    let cg = inst.c_atom.conjoin(g);
    for h in &inst.h_plus {
        if !engine.unifies(&cg, h)? {
            return Ok((CsupVerdict::Empty, None));
        }
    }
    if !engine.is_sat(&cg.constraint)? {
        return Ok((CsupVerdict::Empty, None));
    }
    let fresh: Vec<ConstraintAtom> = inst.h_minus.iter().map(|h| h.fresh_copy(engine.supply())).collect();
    let witness = inst.c_atom.conjoin(neg_constr(domain, &inst.c_atom, &fresh)?);
    Ok((CsupVerdict::Nonempty(witness.to_string()), Some(witness)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    /// Ground instances of `C` that unify with no element of `H-`.
    Nonempty(BTreeSet<Vec<Atom>>),
    Empty,
    Unknown,
}

/// Brute-force check over a bounded universe. A candidate `d` pins the
/// variables of `C` to a set of ground values; `C /\ d` then unifies with `H`
/// exactly when one of those instances lies in `Set(H)`. Such a `d` exists
/// iff the instances of `C` outside every `Set(H-)` meet every `Set(H+)`,
/// and the union of all such `d` is that set of instances.
pub fn csup_oracle(inst: &CsupInstance, sig: &Signature, u: &GroundUniverse) -> OracleVerdict {
    let mut allowed = set_of(&inst.c_atom.as_state(), sig, u);
    allowed.retain(|g| !inst.h_minus.iter().any(|h| oracle_member(h, &g[0], sig, u)));
    let reaches_all = inst.h_plus.iter().all(|h| allowed.iter().any(|g| oracle_member(h, &g[0], sig, u)));
    if reaches_all && !allowed.is_empty() && oracle_sat(&inst.c_atom.constraint, sig, u).is_sat() {
        return OracleVerdict::Nonempty(allowed);
    }
    if u.bound >= csup_sufficient_bound(inst, sig) {
        OracleVerdict::Empty
    } else {
        OracleVerdict::Unknown
    }
}

/// The bound from which an empty oracle answer is trusted: the largest
/// sufficient bound over `c` and the unification formulas with each head.
pub fn csup_sufficient_bound(inst: &CsupInstance, sig: &Signature) -> usize {
    let mut parts = vec![inst.c_atom.constraint.clone()];
    for h in inst.h_plus.iter().chain(&inst.h_minus) {
        if let Ok(f) = unification_formula(sig.domain, &inst.c_atom, h) {
            parts.push(f);
        }
    }
    sufficient_bound(&Constraint::conj(parts), sig.domain)
}

/// `Set(C /\ gamma)` restricted to `u`, for comparison with the oracle.
pub fn csup_gamma_set(inst: &CsupInstance, sig: &Signature, u: &GroundUniverse) -> Result<BTreeSet<Vec<Atom>>> {
    let g = neg_constr(sig.domain, &inst.c_atom, &inst.h_minus)?;
    Ok(set_of(&inst.c_atom.conjoin(g).as_state(), sig, u))
}

/// A keyed view of alts results for reporting.
pub fn alts_report(results: &[ConstraintAtom]) -> Vec<BTreeMap<&'static str, String>> {
    results
        .iter()
        .map(|r| {
            let s: State = r.as_state();
            let namer = s.namer();
            BTreeMap::from([("constraint", namer.constraint(&s.constraint)), ("atom", s.goal_text(&namer))])
        })
        .collect()
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Sat => "sat",
            Verdict::Unsat => "unsat",
        }
    }
}
