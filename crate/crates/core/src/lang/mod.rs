//! Mini-X10 frontend: syntax tree, parser, canonical printer and clock-rule checks.

mod ast;
mod parse;
mod print;
mod validate;

pub use ast::*;
pub use parse::{iterator_names, parse, ParseError, ParseErrorKind};
pub use print::{print_program, print_stmt_string};
pub use validate::{classify, governing_clocked_finish, validate_clock_rules, ClockRule, Diagnostic, SyncClass};
pub(crate) use validate::governing_in;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LangError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("clock rule violations:\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

/// Parse and validate in one go.
pub fn load(src: &str) -> Result<Program, LangError> {
    let p = parse(src)?;
    let diags = validate_clock_rules(&p);
    if diags.is_empty() {
        Ok(p)
    } else {
        Err(LangError::Invalid(diags))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const JACOBI: &str = "
param N >= 2;
param T >= 0;
array A[1];
array B[1];
clocked finish {
  for (i = 1 : N - 1) clocked async {
    for (t = 0 : T) {
      B[i] = S0(A[i-1], A[i], A[i+1]);
      advance;
      A[i] = S1(B[i-1], B[i], B[i+1]);
      advance;
    }
  }
}
";

    #[test]
    fn parses_jacobi() {
        let p = load(JACOBI).unwrap();
        let t = p.table();
        assert_eq!(t.basics().len(), 2);
        assert_eq!(t.advances().len(), 2);
        assert_eq!(p.root.id, NodeId(0));
        let adv = t.advances()[0].id;
        assert_eq!(governing_clocked_finish(&p, adv).unwrap(), Some(NodeId(0)));
    }

    #[test]
    fn round_trip() {
        let p = parse(JACOBI).unwrap();
        let text = print_program(&p);
        assert_eq!(parse(&text).unwrap(), p);
    }

    #[test]
    fn errors_carry_position() {
        let e = parse("param N >= 1;\narray A[1];\nfor (i = 0 : N) for (j = 0 : N) A[i*j] = f();").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::NonAffine(_)));
        assert_eq!(e.line, 3);
        let e = parse("array A[1];\nA[k] = f();").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("k".into()));
        assert_eq!((e.line, e.col), (2, 3));
        let e = parse("array A[2];\nA[0] = f();").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::DimensionMismatch { .. }));
        let e = parse("param N >= 1; array A[1]; for (i = 0 : N) for (i = 0 : N) A[i] = f();").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Shadowing("i".into()));
        assert!(matches!(parse("advance").unwrap_err().kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn clock_rules() {
        let p = parse("advance;").unwrap();
        let d = validate_clock_rules(&p);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].rule, ClockRule::AdvanceEnclosed);

        let p = parse("clocked finish { async { advance; } }").unwrap();
        let d = validate_clock_rules(&p);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].rule, ClockRule::AdvanceNotInUnclockedAsync);

        let p = parse("array A[0]; clocked async A = f();").unwrap();
        assert_eq!(validate_clock_rules(&p)[0].rule, ClockRule::ClockedAsyncEnclosed);

        let p = parse("array A[0]; clocked finish finish clocked async A = f();").unwrap();
        assert_eq!(validate_clock_rules(&p)[0].rule, ClockRule::NoUnclockedBetween);
    }

    #[test]
    fn classification() {
        let p = parse("array A[0]; { async A = f(); A = g(); }").unwrap();
        let StmtKind::Seq(items) = &p.root.kind else { panic!() };
        assert_eq!(classify(&items[0]), SyncClass::Async);
        assert_eq!(classify(&items[1]), SyncClass::Sync);
        assert_eq!(classify(&p.root), SyncClass::Sync);
        let p = parse("clocked finish advance;").unwrap();
        let StmtKind::Finish { body, .. } = &p.root.kind else { panic!() };
        assert_eq!(classify(body), SyncClass::Sync);
        let p = parse("param N >= 1; array A[1]; for (i = 1 : N) async A[i] = f();").unwrap();
        assert_eq!(classify(&p.root), SyncClass::Async);
    }

    #[test]
    fn bracket_forms_agree() {
        let a = parse("array M[2]; M[0][1] = f(M[1, 0]);").unwrap();
        let b = parse("array M[2]; M[0, 1] = f(M[1][0]);").unwrap();
        assert_eq!(a, b);
    }
}
