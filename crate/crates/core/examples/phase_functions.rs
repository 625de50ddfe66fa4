//! Closed-form phase counts and their brute-force validation.
use clockrace::lang::load;
use clockrace::phi::{entry_label, PhiTable};

fn main() {
    for src in [include_str!("../corpus/jacobi.cx10"), include_str!("../corpus/gauss_seidel.cx10")] {
        let p = load(src).unwrap();
        let t = p.table();
        for e in PhiTable::build(&p, 40).entries.values() {
            let poly = e.poly.as_ref().map(|q| q.to_string()).unwrap_or_else(|| "-".into());
            println!(
                "phi[{} @ F{}] = {poly}   ({} samples, ok = {})",
                entry_label(&t, e.node),
                e.clock,
                e.validation.samples,
                e.validation.passed
            );
        }
        println!();
    }
}
