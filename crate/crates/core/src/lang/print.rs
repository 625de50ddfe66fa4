use std::fmt::Write;

use super::ast::*;

/// Canonical source text; `parse(print(p))` reproduces `p`.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for prm in &p.params {
        let _ = writeln!(out, "param {} >= {};", prm.name, prm.min);
    }
    for a in &p.arrays {
        let _ = writeln!(out, "array {}[{}];", a.name, a.dims);
    }
    print_stmt(&p.root, 0, &mut out);
    out.push('\n');
    out
}

pub fn print_stmt_string(s: &Stmt) -> String {
    let mut out = String::new();
    print_stmt(s, 0, &mut out);
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn print_stmt(s: &Stmt, level: usize, out: &mut String) {
    match &s.kind {
        StmtKind::Basic(b) => {
            let reads: Vec<String> = b.reads.iter().map(|r| r.to_string()).collect();
            let _ = write!(out, "{} = {}({});", b.write, b.label, reads.join(", "));
        }
        StmtKind::Advance => out.push_str("advance;"),
        StmtKind::Seq(items) => {
            out.push('{');
            for it in items {
                out.push('\n');
                indent(out, level + 1);
                print_stmt(it, level + 1, out);
            }
            out.push('\n');
            indent(out, level);
            out.push('}');
        }
        StmtKind::For { iter, lo, hi, body } => {
            let _ = write!(out, "for ({iter} = {lo} : {hi}) ");
            print_stmt(body, level, out);
        }
        StmtKind::If { conds, body } => {
            let cs: Vec<String> = conds.iter().map(|c| c.to_string()).collect();
            let _ = write!(out, "if ({}) ", cs.join(" && "));
            print_stmt(body, level, out);
        }
        StmtKind::Async { clocked, body } => {
            out.push_str(if *clocked { "clocked async " } else { "async " });
            print_stmt(body, level, out);
        }
        StmtKind::Finish { clocked, body } => {
            out.push_str(if *clocked { "clocked finish " } else { "finish " });
            print_stmt(body, level, out);
        }
    }
}
