//! Benchmark fixtures.

use clpct_core::generation::CsupInstance;
use clpct_core::parser::parse_instance;
use clpct_core::{parse_program, ConstraintAtom, Program};

pub const SUCC: &str = include_str!("../../../programs/succ.clp");
pub const BOUNDS: &str = include_str!("../../../programs/bounds.clp");
pub const SUCC_CSUP: &str = include_str!("../../../programs/succ.csup");

/// A chain of `depth` rules over the naturals: `c0` calls `c1` and so on,
/// each with two alternatives.
pub fn chain(depth: usize) -> String {
    let mut out = String::from("#domain nat.\n");
    for i in 0..depth {
        let next = if i + 1 < depth { format!(", c{}(X)", i + 1) } else { String::new() };
        out.push_str(&format!("c{i}(X) :- {{X =< {}}}{next}.\n", 10 + i));
        out.push_str(&format!("c{i}(X) :- {{X > {}}}{next}.\n", 20 + i));
    }
    out
}

pub fn program(src: &str) -> Program {
    parse_program(src).expect("fixture programs parse")
}

pub fn csup(src: &str) -> CsupInstance {
    let inst = parse_instance(src, &[]).expect("fixture instances parse");
    let one = |name: &str| -> Vec<ConstraintAtom> { inst.section(name).iter().map(|(_, c)| c.clone()).collect() };
    CsupInstance { c_atom: one("C").remove(0), h_plus: one("H+"), h_minus: one("H-") }
}
