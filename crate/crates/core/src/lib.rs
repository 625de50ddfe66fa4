pub mod affine;
pub mod lang;
pub mod poly;
pub mod semantics;
pub mod hb;
pub mod phi;
pub mod race;
pub mod gen;
pub mod driver;
