//! Concolic testing for constraint logic programs.
//!
//! Concrete and symbolic states are executed in lockstep; alternative test
//! cases are produced from negative constraints until every reachable trace
//! has been exercised or a budget runs out.

pub mod concolic;
pub mod constraint;
pub mod driver;
pub mod engine;
pub mod error;
pub mod generation;
pub mod normalize;
pub mod parser;
pub mod program;
pub mod semantics;
pub mod solver;
pub mod term;

pub use constraint::{unification_formula, Constraint, ConstraintAtom, LinExpr, LinRel, Namer, State, TreeRel};
pub use error::{Error, Result, SolverError};
pub use normalize::{canonical_atom_key, canonical_key, normalize, normalize_keeping};
pub use term::{mgu, Atom, Domain, FreshSupply, Signature, Subst, Term, Var};
pub use solver::{oracle_member, oracle_sat, set_of, solve, GroundUniverse, Verdict};
pub use concolic::{concolic_step_nd, explore_nd, neg_constr, ConcolicPair, DetConcolicState, DetEntry, Halt, StepKind, StepLabel};
pub use driver::{run_concolic_testing, Budget, Configuration, CoverageReport, TestCaseReport};
pub use engine::{Engine, QueryLog};
pub use generation::{alts, csup_decide, csup_oracle, AltsRequest, CsupInstance, CsupVerdict, OracleVerdict};
pub use parser::{parse_constraint, parse_constraint_atom, parse_instance, parse_program, parse_state};
pub use program::{Program, Rule};
pub use semantics::{run_standard, DerivationRecord, Outcome, Trace};
