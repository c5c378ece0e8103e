use thiserror::Error;

/// Failures reported by the constraint backends.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("unsupported-formula: {0}")]
    Unsupported(String),
    #[error("solver budget exhausted: {0}")]
    Budget(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("arity mismatch at line {line}: {name} used with arity {found}, declared {expected}")]
    Arity { line: usize, name: String, expected: usize, found: usize },
    #[error("undeclared functor {name}/{arity} at line {line}")]
    UndeclaredFunctor { line: usize, name: String, arity: usize },
    #[error("rule guard unsatisfiable at line {0}")]
    UnsatGuard(usize),
    #[error("duplicate rule label `{0}`")]
    DuplicateLabel(String),
    #[error("{0}")]
    Domain(String),
    #[error("no selected atom")]
    NoSelectedAtom,
    #[error("rule does not match")]
    RuleDoesNotMatch,
    #[error("predicate mismatch: {0} vs {1}")]
    PredicateMismatch(String, String),
    #[error("unknown rule label `{0}`")]
    UnknownRule(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
