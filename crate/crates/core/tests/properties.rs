mod common;

use std::collections::{BTreeMap, BTreeSet};

use clpct_core::concolic::gamma;
use clpct_core::driver::TestingOptions;
use clpct_core::solver::oracle::sufficient_bound;
use clpct_core::*;
use common::checks::{self, bound_cap, universe};
use common::gen::{self, Shape};
use proptest::prelude::*;
use rand::Rng;

fn shape_of(nat: bool) -> Shape {
    if nat {
        Shape::nat()
    } else {
        Shape::term()
    }
}

fn random_constraint(seed: u64, shape: &Shape) -> Constraint {
    let mut r = gen::rng(seed);
    checks::fragment_formula(&mut r, shape)
}

fn goal_over(vs: &BTreeSet<Var>) -> Vec<Atom> {
    vec![Atom::new("g", vs.iter().cloned().map(Term::Var).collect())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent(seed in any::<u64>(), nat in any::<bool>()) {
        let c = random_constraint(seed, &shape_of(nat));
        let once = normalize(&c);
        prop_assert_eq!(normalize(&once), once);
    }

    #[test]
    fn normalize_preserves_satisfiability(seed in any::<u64>(), nat in any::<bool>()) {
        let shape = shape_of(nat);
        let c = random_constraint(seed, &shape);
        let n = normalize(&c);
        let bound = sufficient_bound(&c, shape.domain).max(sufficient_bound(&n, shape.domain)).max(1);
        prop_assume!(bound <= bound_cap(shape.domain));
        let u = universe(shape.domain, bound);
        prop_assert_eq!(oracle_sat(&c, &shape.sig(), &u), oracle_sat(&n, &shape.sig(), &u), "{} became {}", c, n);
    }

    #[test]
    fn normalize_keeping_preserves_solutions(seed in any::<u64>(), nat in any::<bool>()) {
        let shape = shape_of(nat);
        let c = random_constraint(seed, &shape);
        let keep: BTreeSet<Var> = c.free_vars().into_iter().take(1).collect();
        let n = normalize_keeping(&c, &keep);
        let u = universe(shape.domain, if nat { 6 } else { 2 });
        let a = set_of(&State::new(c.clone(), goal_over(&keep)), &shape.sig(), &u);
        let b = set_of(&State::new(n.clone(), goal_over(&keep)), &shape.sig(), &u);
        prop_assert_eq!(a, b, "{} became {}", c, n);
    }

    #[test]
    fn fresh_variables_are_distinct(names in prop::collection::vec("[A-Z][a-z]?", 1..6), idx in prop::collection::vec(0u32..50, 1..6), n in 1usize..40) {
        let taken: BTreeSet<Var> = names.iter().zip(idx.iter().cycle()).map(|(s, &i)| Var::with_index(s, i)).collect();
        let supply = FreshSupply::above(taken.iter());
        let mut seen = BTreeSet::new();
        for i in 0..n {
            let v = if i % 2 == 0 { supply.fresh(&names[i % names.len()]) } else { supply.fresh_like(taken.iter().next().unwrap()) };
            prop_assert!(!taken.contains(&v));
            prop_assert!(seen.insert(v));
        }
    }
}

fn ordered_vars(r: &Rule) -> Vec<Var> {
    let mut out = Vec::new();
    r.head.collect_vars_ordered(&mut out);
    for v in r.guard.free_vars_ordered() {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    r.body.iter().for_each(|a| a.collect_vars_ordered(&mut out));
    let mut seen = BTreeSet::new();
    out.retain(|v| seen.insert(v.clone()));
    out
}

#[test]
fn rename_apart_gives_a_variant() {
    for seed in 0..200 {
        let mut r = gen::rng(seed);
        let shape = shape_of(seed % 2 == 1);
        let p = parse_program(&gen::program_text(&mut r, &shape)).unwrap();
        for rule in &p.rules {
            let avoid: BTreeSet<Var> = rule.vars().into_iter().chain([Var::new("Z")]).collect();
            let copy = rule.rename_apart(&avoid);
            assert!(copy.vars().is_disjoint(&avoid), "{seed}: {rule:?}");
            let (from, to) = (ordered_vars(rule), ordered_vars(&copy));
            assert_eq!(from.len(), to.len());
            let map: BTreeMap<Var, Var> = from.into_iter().zip(to).collect();
            assert_eq!(map.values().collect::<BTreeSet<_>>().len(), map.len());
            let back = rule.rename(&map);
            assert_eq!((&back.head, &back.guard, &back.body), (&copy.head, &copy.guard, &copy.body), "{seed}");
        }
    }
}

/// A random program over `p`, `q`, `r` and a concrete state for `p`.
fn program_and_state(r: &mut gen::Rng8, shape: &Shape) -> (Program, ConstraintAtom) {
    let p = parse_program(&gen::program_text(r, shape)).unwrap();
    let c = shape.c_atom(r, "X", "p", 1, 2);
    (p, c)
}

/// `<c' /\ S = t | p(S)>` for `<c | p(t)>`, with `c'` some of the
/// conjuncts of `c`, so the concrete state is an instance of it.
fn generalise(r: &mut gen::Rng8, shape: &Shape, q: &ConstraintAtom) -> Result<State> {
    let s = Term::var("S");
    let kept = match &q.constraint {
        Constraint::And(cs) => cs.iter().filter(|_| r.gen_bool(0.5)).cloned().collect(),
        c if r.gen_bool(0.5) => vec![c.clone()],
        _ => Vec::new(),
    };
    let mut parts = vec![Constraint::equation(shape.domain, &s, &q.atom.args[0])?];
    parts.extend(kept);
    Ok(State::new(Constraint::conj(parts), vec![Atom::new("p", vec![s])]))
}

fn labels(rs: &[&Rule]) -> Vec<String> {
    rs.iter().map(|r| r.label.to_string()).collect()
}

#[test]
fn stronger_constraints_match_fewer_rules() {
    for shape in checks::all_shapes() {
        for seed in 0..150 {
            let mut r = gen::rng(seed);
            let (p, q) = program_and_state(&mut r, &shape);
            let e = Engine::new(&p);
            let vs = gen::vars("X", 2);
            let d = shape.constraint(&mut r, &vs, 2);
            let weak = q.as_state();
            let strong = weak.conjoin(d);
            let (Ok(ws), Ok(ss)) = (e.rules_matching(&weak), e.rules_matching(&strong)) else { panic!("seed {seed}") };
            let ws = labels(&ws);
            for l in labels(&ss) {
                assert!(ws.contains(&l), "seed {seed}: {strong} matches {l}, {weak} does not");
            }
        }
    }
}

#[test]
fn gamma_restricts_symbolic_matches_to_concrete_ones() {
    for shape in checks::all_shapes() {
        let mut checked = 0;
        for seed in 0..300 {
            let mut r = gen::rng(1000 + seed);
            let (p, q) = program_and_state(&mut r, &shape);
            let e = Engine::new(&p);
            if !e.is_sat(&q.constraint).unwrap() {
                continue;
            }
            let s = generalise(&mut r, &shape, &q).unwrap();
            e.reserve_state(&q.as_state());
            e.reserve_state(&s);
            let r_q = e.rules_matching(&q.as_state()).unwrap();
            let r_s = e.rules_matching(&s).unwrap();
            let (lq, ls) = (labels(&r_q), labels(&r_s));
            assert!(lq.iter().all(|l| ls.contains(l)), "seed {seed}: {lq:?} not within {ls:?}");
            let g = gamma(&e, &s, &r_q, &r_s).unwrap();
            let strengthened = s.conjoin(g);
            assert_eq!(labels(&e.rules_matching(&strengthened).unwrap()), lq, "seed {seed}: {strengthened}");
            checked += 1;
        }
        assert!(checked >= 100, "{checked}");
    }
}

/// The goal of `s` as one atom over all of its arguments, with variables
/// outside the goal eliminated where equations allow.
fn flat(s: &State) -> ConstraintAtom {
    let args = s.goal.iter().flat_map(|a| a.args.iter().cloned()).collect();
    ConstraintAtom::new(normalize_keeping(&s.constraint, &s.goal_vars()), Atom::new("goal", args))
}

fn instances(s: &State, sig: &Signature, u: &GroundUniverse) -> BTreeSet<Vec<Atom>> {
    set_of(&flat(s).as_state(), sig, u)
}

#[test]
fn concolic_pairs_stay_well_formed() {
    for shape in checks::all_shapes() {
        let sig = shape.sig();
        let u = universe(shape.domain, if shape.domain == Domain::Term { 2 } else { 5 });
        let mut pairs = 0;
        for seed in 0..120 {
            let mut r = gen::rng(2000 + seed);
            let (p, q) = program_and_state(&mut r, &shape);
            let e = Engine::new(&p);
            if !e.is_sat(&q.constraint).unwrap() {
                continue;
            }
            let s = generalise(&mut r, &shape, &q).unwrap();
            e.reserve_state(&q.as_state());
            e.reserve_state(&s);
            let runs = explore_nd(&e, &ConcolicPair::new(q.as_state(), s), 60).unwrap();
            if runs.iter().any(|r| r.outcome == Outcome::BudgetExhausted) {
                continue;
            }
            for run in &runs {
                for pair in &run.pairs {
                    assert_eq!(pair.concrete.goal.len(), pair.symbolic.goal.len(), "seed {seed}");
                    let symbolic = flat(&pair.symbolic);
                    if sufficient_bound(&symbolic.constraint, shape.domain) > bound_cap(shape.domain) {
                        continue;
                    }
                    pairs += 1;
                    for g in instances(&pair.concrete, &sig, &u).iter().take(24) {
                        assert!(oracle_member(&symbolic, &g[0], &sig, &u), "seed {seed}: {pair} at {}", g[0]);
                    }
                }
            }
        }
        assert!(pairs >= 200, "{pairs}");
    }
}

#[test]
fn unification_means_a_shared_instance() {
    for shape in checks::all_shapes() {
        let sig = shape.sig();
        let e_prog = Program::new(sig.clone(), Vec::new());
        let e = Engine::new(&e_prog);
        let mut checked = 0;
        for seed in 0..400 {
            let mut r = gen::rng(3000 + seed);
            let a = shape.head(&mut r, "A", "q", 1, 2);
            let b = shape.head(&mut r, "B", "q", 1, 2);
            let f = unification_formula(shape.domain, &a, &b).unwrap();
            let bound = sufficient_bound(&f, shape.domain).max(1);
            if bound > bound_cap(shape.domain) {
                continue;
            }
            let u = universe(shape.domain, bound);
            let shared = set_of(&a.as_state(), &sig, &u).iter().any(|g| oracle_member(&b, &g[0], &sig, &u));
            let unifies = e.unifies(&a, &b).unwrap();
            if shared {
                assert!(unifies, "seed {seed}: {a} and {b} share an instance");
            }
            if unifies && !shared {
                assert!(oracle_sat(&f, &sig, &u).is_sat(), "seed {seed}: {a} and {b}");
            }
            checked += 1;
        }
        assert!(checked >= 150, "{checked}");
    }
}

#[test]
fn testing_random_programs() {
    for shape in checks::all_shapes() {
        for seed in 0..60 {
            let mut r = gen::rng(4000 + seed);
            let p = parse_program(&gen::program_text(&mut r, &shape)).unwrap();
            let e = Engine::new(&p);
            let seed_atom = driver::default_seed("p", 1);
            let mut options = TestingOptions::default();
            options.budget.max_steps = 100;
            options.budget.max_restarts = 15;
            options.budget.replay_steps = 100;
            let report = run_concolic_testing(&e, ("p", 1), &seed_atom, &options).unwrap_or_else(|err| panic!("seed {seed}: {err}\n{p:?}"));
            let mut keys = BTreeSet::new();
            for tc in &report.test_cases {
                assert!(e.is_sat(&tc.test_case.constraint).unwrap(), "seed {seed}: {}", tc.test_case);
                assert!(keys.insert(canonical_atom_key(&tc.test_case)), "seed {seed}: duplicate {}", tc.test_case);
            }
        }
    }
}

#[test]
fn negative_constraints_small() {
    for shape in checks::all_shapes() {
        let t = checks::neg_constr_props(&shape, 40, 11);
        assert!(t.ok(), "{t}\n{:#?}", t.violations);
    }
}

#[test]
fn semantics_small() {
    for shape in checks::all_shapes() {
        let t = checks::semantics_agreement(&shape, 20, 12);
        assert!(t.ok(), "{t}\n{:#?}", t.violations);
    }
}

#[test]
fn selective_unification_small() {
    for shape in checks::all_shapes() {
        let t = checks::csup_agreement(&shape, 30, 13);
        assert!(t.ok(), "{t}\n{:#?}", t.violations);
    }
}

#[test]
fn solver_small() {
    for shape in checks::all_shapes() {
        let t = checks::solver_agreement(&shape, 150, 14);
        assert!(t.ok(), "{t}\n{:#?}", t.violations);
    }
}
