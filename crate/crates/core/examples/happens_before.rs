//! Static ordering between two statements, with and without clocks.
use clockrace::hb::{clocked_for_pair, hb_unclocked, path_vector};
use clockrace::lang::load;
use clockrace::phi::PhiTable;
use std::collections::BTreeMap;

fn main() {
    let p = load(include_str!("../corpus/jacobi.cx10")).unwrap();
    let t = p.table();
    let basics: Vec<_> = t.basics().iter().map(|s| s.id).collect();
    let (s1, s2) = (basics[0], basics[1]);
    println!("{}: {}", t.label(s1), path_vector(&p, s1).unwrap());
    println!("{}: {}", t.label(s2), path_vector(&p, s2).unwrap());
    let base = hb_unclocked(&p, s1, s2).unwrap();
    println!("unclocked: {}", base.relation);
    let phi = PhiTable::build(&p, 40);
    let hb = clocked_for_pair(&p, &phi, s1, s2);
    let env = |kv: &[(&str, i64)]| kv.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>();
    let params = env(&[("N", 4), ("T", 2)]);
    let (u, v) = (env(&[("t", 0), ("i", 1)]), env(&[("t", 0), ("i", 2)]));
    println!(
        "{}<t=0,i=1> before {}<t=0,i=2>: unclocked {} clocked {}",
        t.label(s1),
        t.label(s2),
        base.holds(&u, &v, &params),
        hb.holds(&u, &v, &params)
    );
}
