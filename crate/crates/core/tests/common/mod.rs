#![allow(dead_code)]

pub mod checks;
pub mod gen;

use std::path::PathBuf;

use clpct_core::*;

pub fn programs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs")
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(programs_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn program(name: &str) -> Program {
    parse_program(&read(name)).unwrap()
}

pub fn term_sig() -> Signature {
    Signature::term([("a", 0), ("b", 0), ("s", 1)])
}

pub fn state(src: &str, sig: &Signature) -> State {
    parse_state(src, sig).unwrap()
}

pub fn catom(src: &str, sig: &Signature) -> ConstraintAtom {
    parse_constraint_atom(src, sig).unwrap()
}

/// Equal ground instances at the given universe.
pub fn same_set(a: &State, b: &State, sig: &Signature, u: &GroundUniverse) -> bool {
    set_of(a, sig, u) == set_of(b, sig, u)
}
