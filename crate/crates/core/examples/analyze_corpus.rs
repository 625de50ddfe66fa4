//! Run the full analysis over every corpus program.
//!
//! Set CLOCKRACE_SOLVER_CMD (e.g. "z3 -in") to enable the solver tier.
use clockrace::driver::{analyze_file, AnalyzeConfig};

fn main() {
    let config = AnalyzeConfig { solver_cmd: std::env::var("CLOCKRACE_SOLVER_CMD").ok(), ..AnalyzeConfig::default() };
    let mut files: Vec<_> = std::fs::read_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for f in files {
        let r = analyze_file(&f, &config).unwrap();
        let name = f.file_stem().unwrap().to_string_lossy();
        println!("{name:<26} {:?} ({} candidates, {:.1} ms)", r.status, r.candidates.len(), r.timings.total_ms);
    }
}
