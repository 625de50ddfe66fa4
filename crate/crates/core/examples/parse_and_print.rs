//! Parse a program, list its statements and print it back.
use clockrace::lang::{load, print_program};

fn main() {
    let p = load(include_str!("../corpus/jacobi.cx10")).expect("valid program");
    let t = p.table();
    for s in t.all() {
        println!("{:>3} {:<10} iterators {:?}", s.id, t.label(s.id), t.enclosing_iterators(s.id));
    }
    println!("\n{}", print_program(&p));
    match load("param N >= 1; array A[1]; for (i = 0 : N) { advance; }") {
        Ok(_) => unreachable!(),
        Err(e) => println!("rejected: {e}"),
    }
}
