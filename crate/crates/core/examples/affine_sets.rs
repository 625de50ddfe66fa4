//! Build, subtract and test integer sets.
use clockrace::affine::{AffineExpr, AffineSet, Constraint};
use std::collections::BTreeMap;

fn main() {
    let (i, j, n) = (AffineExpr::var("i"), AffineExpr::var("j"), AffineExpr::var("N"));
    let vars = vec!["i".to_string(), "j".to_string()];
    let square = AffineSet::from_conjunction(
        vars.clone(),
        vec![
            Constraint::ge(&i, &AffineExpr::constant(0)),
            Constraint::le(&i, &n),
            Constraint::ge(&j, &AffineExpr::constant(0)),
            Constraint::le(&j, &n),
        ],
    );
    let below = AffineSet::from_conjunction(vars, vec![Constraint::lt(&j, &i)]);
    let upper = square.subtract(&below).simplify();
    println!("square minus strict lower triangle: {upper}");
    println!("emptiness: {:?}", upper.is_empty());
    let bounds = BTreeMap::from([("i".to_string(), (0, 3)), ("j".to_string(), (0, 3))]);
    let pts = upper.partial_eval(&BTreeMap::from([("N".to_string(), 3)])).enumerate(&bounds).unwrap();
    println!("points at N=3: {}", pts.len());
    let empty = upper.intersect(&below);
    println!("intersected with its complement: {:?}", empty.is_empty());
}
