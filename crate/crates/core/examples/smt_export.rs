//! Print the solver query for each candidate of a program.
use clockrace::lang::load;
use clockrace::phi::PhiTable;
use clockrace::race::{build_disproof, emit_smtlib, race_candidates};

fn main() {
    let p = load(include_str!("../corpus/gauss_seidel.cx10")).unwrap();
    let phi = PhiTable::build(&p, 40);
    for c in race_candidates(&p) {
        println!(";; candidate {}\n{}", c.index, emit_smtlib(&build_disproof(&p, &c, &phi)));
    }
}
