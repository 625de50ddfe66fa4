//! Turn a polynomial equation into a race question and answer it.
use clockrace::driver::{analyze_source, AnalyzeConfig};
use clockrace::gen::{race_test_source, PolynomialSpec};

fn main() {
    for (p1, p2) in [("x", "x+1"), ("x", "y"), ("x^2", "2*y")] {
        let a = PolynomialSpec::parse(p1).unwrap();
        let b = PolynomialSpec::parse_with(p2, &a.variables).unwrap();
        let a = a.extend_variables(&b.variables);
        let r = analyze_source("gen", &race_test_source(&a, &b).unwrap(), &AnalyzeConfig::default()).unwrap();
        for c in &r.candidates {
            println!("{p1} = {p2}: {}", c.verdict);
        }
    }
}
