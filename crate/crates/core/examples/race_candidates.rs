//! Enumerate read/write and write/write candidates with their conditions.
use clockrace::lang::load;
use clockrace::race::race_candidates;

fn main() {
    let p = load(include_str!("../corpus/qr.cx10")).unwrap();
    for c in race_candidates(&p) {
        println!("#{} {:?} emptiness {:?}\n    {}", c.index, c.kind, c.emptiness, c.description);
    }
}
