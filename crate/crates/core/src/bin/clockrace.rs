use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::exit;

use clap::{Parser, Subcommand};

use clockrace::driver::{analyze_file, interpret_source, AnalyzeConfig};
use clockrace::gen::{counting_nest_source, race_test_source, sign_variants, PolynomialSpec};
use clockrace::semantics::Limits;

#[derive(Parser)]
#[command(name = "clockrace", about = "Static race detection for clocked async/finish programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Find race candidates and try to disprove them
    Analyze {
        file: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        emit_smt: Option<PathBuf>,
        /// Shell command reading SMT-LIB on stdin, e.g. "z3 -in"
        #[arg(long)]
        solver_cmd: Option<String>,
        #[arg(long, default_value_t = 8)]
        bound: i64,
    },
    /// Explore every interleaving at fixed parameters
    Interpret {
        file: PathBuf,
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, i64)>,
        #[arg(long, default_value_t = 1_000_000)]
        max_states: usize,
    },
    /// Print a loop nest executing Q advances
    GenCount {
        #[arg(long)]
        poly: String,
    },
    /// Print a program racing exactly at the roots of p1 - p2
    GenRace {
        #[arg(long)]
        p1: String,
        #[arg(long)]
        p2: String,
        #[arg(long)]
        all_orthants: bool,
    },
}

fn parse_kv(s: &str) -> Result<(String, i64), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v = v.trim().parse::<i64>().map_err(|e| e.to_string())?;
    Ok((k.trim().to_string(), v))
}

fn fail(msg: impl std::fmt::Display) -> ! {
    eprintln!("error: {msg}");
    exit(1)
}

fn main() {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Analyze { file, json, emit_smt, solver_cmd, bound } => {
            let config = AnalyzeConfig { solver_cmd, bound, ..AnalyzeConfig::default() };
            let report = analyze_file(&file, &config).unwrap_or_else(|e| fail(e));
            print!("{}", report.summary());
            if let Some(path) = json {
                std::fs::write(&path, report.to_json()).unwrap_or_else(|e| fail(e));
            }
            if let Some(dir) = emit_smt {
                report.write_smt(&dir).unwrap_or_else(|e| fail(e));
            }
            exit(report.status.exit_code());
        }
        Cmd::Interpret { file, params, max_states } => {
            let src = std::fs::read_to_string(&file).unwrap_or_else(|e| fail(e));
            let params: BTreeMap<String, i64> = params.into_iter().collect();
            let limits = Limits { max_states, ..Limits::default() };
            let dump = interpret_source(&src, &params, limits).unwrap_or_else(|e| fail(e));
            println!("{}", serde_json::to_string_pretty(&dump).expect("dump serializes"));
            match dump.status.as_str() {
                "Error" => exit(1),
                _ => exit(dump.exit_code()),
            }
        }
        Cmd::GenCount { poly } => {
            let q = PolynomialSpec::parse(&poly).unwrap_or_else(|e| fail(e));
            print!("{}", counting_nest_source(&q).unwrap_or_else(|e| fail(e)));
        }
        Cmd::GenRace { p1, p2, all_orthants } => {
            let a = PolynomialSpec::parse(&p1).unwrap_or_else(|e| fail(e));
            let b = PolynomialSpec::parse_with(&p2, &a.variables).unwrap_or_else(|e| fail(e));
            let a = a.extend_variables(&b.variables);
            if !all_orthants {
                print!("{}", race_test_source(&a, &b).unwrap_or_else(|e| fail(e)));
                return;
            }
            for (signs, q1, q2) in sign_variants(&a, &b).unwrap_or_else(|e| fail(e)) {
                let s: Vec<String> = a.variables.iter().zip(&signs).map(|(v, e)| format!("{v}:{e:+}")).collect();
                println!("// orthant {}", s.join(" "));
                print!("{}", race_test_source(&q1, &q2).unwrap_or_else(|e| fail(e)));
                println!();
            }
        }
    }
}
