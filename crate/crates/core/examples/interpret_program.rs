//! Explore every interleaving of a program at fixed parameters.
use clockrace::lang::load;
use clockrace::semantics::{dynamic_races, explore, Limits};
use std::collections::BTreeMap;

fn main() {
    for name in ["jacobi", "jacobi_no_second_advance"] {
        let src = std::fs::read_to_string(format!("{}/corpus/{name}.cx10", env!("CARGO_MANIFEST_DIR"))).unwrap();
        let p = load(&src).unwrap();
        let params = BTreeMap::from([("N".to_string(), 3), ("T".to_string(), 1)]);
        let facts = explore(&p, &params, Limits::default()).unwrap();
        let races = dynamic_races(&p, &params, &facts);
        println!(
            "{name}: {} instances, {} states, {} traces, {} ordered pairs, {} races",
            facts.instances.len(),
            facts.states,
            facts.trace_count,
            facts.hb_pair_count(),
            races.len()
        );
        for r in races.iter().take(3) {
            println!("  {r}");
        }
    }
}
