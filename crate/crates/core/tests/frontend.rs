mod common;

use clockrace::lang::{load, parse, print_program, LangError, ParseErrorKind};
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let (_, p) = fuzz_programs(1, seed).pop().unwrap();
        let text = print_program(&p);
        let q = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&q, &p);
        prop_assert_eq!(print_program(&q), text);
    }
}

#[test]
fn corpus_round_trips() {
    for (name, p) in corpus() {
        let again = load(&print_program(&p)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(again, p, "{name}");
    }
}

#[test]
fn rejects_bad_programs() {
    let cases = [
        ("param N >= 1; array A[1]; A[i] = S();", "unknown"),
        ("param N >= 1; array A[1]; A[N*N] = S();", "non-affine"),
        ("param N >= 1; array A[2]; A[1] = S();", "dimension"),
        ("param N >= 1; array A[1]; for (N = 0 : 1) A[N] = S();", "shadow"),
        ("array A[1]; array A[1]; A[0] = S();", "duplicate"),
        ("array A[1]; A[0] = S()", "syntax"),
    ];
    for (src, what) in cases {
        let Err(LangError::Parse(e)) = load(src) else { panic!("{what}: accepted {src}") };
        let ok = matches!(
            (&e.kind, what),
            (ParseErrorKind::UnknownIdentifier(_), "unknown")
                | (ParseErrorKind::NonAffine(_), "non-affine")
                | (ParseErrorKind::DimensionMismatch { .. }, "dimension")
                | (ParseErrorKind::Shadowing(_), "shadow")
                | (ParseErrorKind::Duplicate(_), "duplicate")
                | (ParseErrorKind::Syntax(_), "syntax")
        );
        assert!(ok, "{what}: got {e}");
        assert!(e.line >= 1 && e.col >= 1);
    }
}

#[test]
fn clock_rule_violations_are_reported() {
    let cases = [
        "array A[0]; finish { clocked async A = S(); }",
        "array A[0]; advance;",
        "array A[0]; clocked finish { async { advance; } }",
    ];
    for src in cases {
        assert!(matches!(load(src), Err(LangError::Invalid(_))), "accepted {src}");
    }
}
