use affint_core::symexpr::{eval_at, is_zero, parse, q, Expr, ZeroTestConfig, ZeroVerdict, Q};
use proptest::prelude::*;

const PREC: u32 = 256;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::x()),
        Just(Expr::y()),
        (-4i64..=4).prop_map(Expr::int),
        (-4i64..=4, 1i64..=3).prop_map(|(n, d)| Expr::ratio(n, d)),
    ]
}

fn rational_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), 1i64..=3).prop_map(|(a, k)| a.powi(k)),
            // denominators kept away from zero on the sample square
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (b.powi(2) + Expr::int(1))),
            inner.prop_map(|a| -a),
        ]
    })
}

fn elementary_expr() -> impl Strategy<Value = Expr> {
    rational_expr().prop_recursive(2, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| (a / Expr::int(8)).exp()),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner).prop_map(|(a, b)| a + b),
        ]
    })
}

fn point() -> impl Strategy<Value = (Q, Q)> {
    ((-30i64..=30, 1i64..=7), (-30i64..=30, 1i64..=7)).prop_map(|((a, b), (c, d))| (q(a, 10 * b), q(c, 10 * d)))
}

/// True when both enclosures exist and overlap; points where either side
/// is singular are skipped.
fn agree_at(a: &Expr, b: &Expr, x: &Q, y: &Q) -> bool {
    match (eval_at(a, x, y, PREC), eval_at(b, x, y, PREC)) {
        (Ok(u), Ok(v)) => u.sub(&v, PREC).contains_zero(),
        _ => true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivatives_commute(e in elementary_expr()) {
        let xy = e.differentiate("X").and_then(|d| d.differentiate("Y"));
        let yx = e.differentiate("Y").and_then(|d| d.differentiate("X"));
        if let (Ok(xy), Ok(yx)) = (xy, yx) {
            prop_assert_eq!(xy.canonical_string().unwrap(), yx.canonical_string().unwrap());
        }
    }

    #[test]
    fn normalize_is_idempotent_and_value_preserving(
        e in elementary_expr(),
        pts in proptest::collection::vec(point(), 8),
    ) {
        let Ok(n1) = e.normalize() else { return Ok(()) };
        let n2 = n1.normalize().unwrap();
        prop_assert_eq!(n1.canonical_string().unwrap(), n2.canonical_string().unwrap());
        for (x, y) in &pts {
            prop_assert!(agree_at(&e, &n1, x, y), "normalize changed the value of {} at ({}, {})", e, x, y);
        }
    }

    #[test]
    fn print_parse_round_trip(e in elementary_expr()) {
        let printed = e.to_string();
        let back = parse(&printed).unwrap();
        if let Ok(c) = e.canonical_string() {
            prop_assert_eq!(c, back.canonical_string().unwrap());
        }
    }

    #[test]
    fn proven_zero_is_sound(e in elementary_expr(), pts in proptest::collection::vec(point(), 4)) {
        let cfg = ZeroTestConfig::default();
        if let Ok(ZeroVerdict::ProvenZero { .. }) = is_zero(&e, &cfg) {
            for (x, y) in &pts {
                if let Ok(v) = eval_at(&e, x, y, PREC) {
                    prop_assert!(v.contains_zero(), "{} declared zero but {} at ({}, {})", e, v, x, y);
                }
            }
        }
    }

    #[test]
    fn difference_with_itself_is_zero(e in elementary_expr()) {
        let cfg = ZeroTestConfig::default();
        if let Ok(v) = is_zero(&(e.clone() - e), &cfg) {
            prop_assert!(v.is_zero());
        }
    }

    #[test]
    fn substitution_of_coordinates_is_identity(e in rational_expr()) {
        let map = [("X".to_string(), Expr::x()), ("Y".to_string(), Expr::y())].into_iter().collect();
        let s = e.substitute(&map);
        if let Ok(c) = e.canonical_string() {
            prop_assert_eq!(c, s.canonical_string().unwrap());
        }
    }
}

#[test]
fn difference_of_squares_under_linear_substitution() {
    let e = parse("X^2 - Y^2").unwrap();
    let map = [("X".to_string(), parse("u + v").unwrap()), ("Y".to_string(), parse("u - v").unwrap())]
        .into_iter()
        .collect();
    let got = e.substitute(&map).canonical_string().unwrap();
    assert_eq!(got, parse("4*u*v").unwrap().canonical_string().unwrap());
}
