use obata_core::expr::{BinOp, Func};
use obata_core::{parse, Expr};
use proptest::prelude::*;

struct Case {
    input: String,
    canonical: String,
    value: f64,
    slope: f64,
}

fn golden() -> Vec<Case> {
    include_str!("data/parser_golden.txt")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split(" | ").collect();
            Case {
                input: cols[0].into(),
                canonical: cols[1].into(),
                value: cols[2].parse().unwrap(),
                slope: cols[3].parse().unwrap(),
            }
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Richardson-extrapolated central difference.
fn fd(e: &Expr, s: f64, h: f64) -> f64 {
    let d = |h: f64| (e.eval(s + h).unwrap() - e.eval(s - h).unwrap()) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

#[test]
fn golden_corpus_has_fifty_cases() {
    assert_eq!(golden().len(), 50);
}

#[test]
fn golden_canonical_forms_round_trip() {
    for c in golden() {
        let e = parse(&c.input).unwrap();
        assert_eq!(e.to_string(), c.canonical, "{}", c.input);
        let back = parse(&c.canonical).unwrap();
        assert_eq!(back, e, "{}", c.input);
        assert_eq!(back.to_string(), c.canonical);
    }
}

#[test]
fn golden_values_and_derivatives() {
    for c in golden() {
        let e = parse(&c.input).unwrap();
        let v = e.eval(0.7).unwrap();
        assert!(rel(v, c.value) < 1e-13, "{}: {v} vs {}", c.input, c.value);
        let d = e.differentiate().eval(0.7).unwrap();
        assert!(rel(d, c.slope) < 1e-12, "{}: {d} vs {}", c.input, c.slope);
        let f = fd(&e, 0.7, 1e-3);
        assert!(rel(d, f) < 1e-6, "{}: symbolic {d}, differences {f}", c.input);
    }
}

#[test]
fn syntax_errors_carry_offsets() {
    // an unclosed bracket is reported where it opens
    for (text, offset, kind) in [
        ("s^3 - ", 6, "UnexpectedEnd"),
        ("cos(s", 3, "UnbalancedParen"),
        ("2 * foo(s)", 4, "UnknownIdentifier"),
        ("s + )", 4, "UnbalancedParen"),
    ] {
        let e = parse(text).unwrap_err();
        assert_eq!(e.offset, offset, "{text}: {e}");
        assert!(e.to_string().starts_with(kind), "{text}: {e}");
    }
}

/// Smooth trees with bounded values on [-1, 1].
fn smooth_tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Var),
        (-2.0f64..2.0).prop_map(|c| Expr::num((c * 100.0).round() / 100.0)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinOp::Sub, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinOp::Mul, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(
                BinOp::Div,
                a,
                Expr::binary(BinOp::Add, Expr::num(2.5), Expr::call(Func::Cos, b))
            )),
            (inner.clone(), 2u8..4).prop_map(|(a, k)| Expr::binary(BinOp::Pow, a, Expr::num(k as f64))),
            inner.clone().prop_map(|a| Expr::call(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Cos, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Tanh, a)),
            inner
                .clone()
                .prop_map(|a| Expr::call(Func::Exp, Expr::call(Func::Sin, a))),
            inner.prop_map(|a| Expr::Neg(Box::new(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn printing_round_trips(e in smooth_tree(), s in -1.0f64..1.0) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(back.to_string(), text.clone());
        let (a, b) = (e.eval(s), back.eval(s));
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!(a == b || (a.is_nan() && b.is_nan()), "{text}: {a} vs {b}");
        }
    }

    #[test]
    fn symbolic_derivative_matches_differences(e in smooth_tree(), s in -1.0f64..1.0) {
        let v = e.eval(s);
        prop_assume!(v.is_ok_and(|v| v.abs() < 1e6));
        let d = e.differentiate().eval(s).unwrap();
        let f = fd(&e, s, 1e-3);
        prop_assert!(rel(d, f) < 1e-6, "{e}: symbolic {d}, differences {f}");
    }

    #[test]
    fn differentiation_is_linear(f in smooth_tree(), g in smooth_tree(), a in -3.0f64..3.0, b in -3.0f64..3.0, s in -1.0f64..1.0) {
        let combo = Expr::binary(
            BinOp::Add,
            Expr::binary(BinOp::Mul, Expr::num(a), f.clone()),
            Expr::binary(BinOp::Mul, Expr::num(b), g.clone()),
        );
        let lhs = combo.differentiate().eval(s).unwrap();
        let rhs = a * f.differentiate().eval(s).unwrap() + b * g.differentiate().eval(s).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));
    }
}
