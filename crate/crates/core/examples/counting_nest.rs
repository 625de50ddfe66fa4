//! Generate a loop nest that advances a clock exactly Q(x, y) times.
use clockrace::gen::{counting_nest_source, generate_counting_nest, PolynomialSpec};
use clockrace::semantics::{explore, Limits};
use std::collections::BTreeMap;

fn main() {
    let q = PolynomialSpec::parse("x^2+x*y+y^2").unwrap();
    println!("{}", counting_nest_source(&q).unwrap());
    let p = generate_counting_nest(&q).unwrap();
    for (x, y) in [(0, 0), (1, 2), (2, 3), (4, 1)] {
        let env = BTreeMap::from([("x".to_string(), x), ("y".to_string(), y)]);
        let f = explore(&p, &env, Limits::default()).unwrap();
        println!("x={x} y={y}: Q={} advances={}", q.eval(&env), f.advances);
    }
}
