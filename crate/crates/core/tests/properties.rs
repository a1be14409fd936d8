//! Property tests for the expression layer: printing, normalization,
//! substitution and verdict behavior on randomized inputs.

use num::rational::BigRational;
use paracr_core::expr::{
    is_zero, parse, simplify, substitute, Expr, Point, Sym, ZeroConfig, ZeroError, ZeroVerdict,
};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn coord_names() -> Vec<&'static str> {
    vec!["x", "y", "z", "p", "r"]
}

fn arb_leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-20i64..=20, 1i64..=9).prop_map(|(n, d)| Expr::rat(n, d)),
        proptest::sample::select(coord_names()).prop_map(Expr::var),
        proptest::sample::select(coord_names())
            .prop_flat_map(|v| (0u32..=3).prop_map(move |k| Expr::func("f", k, Expr::var(v)))),
    ]
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    arb_leaf().prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..3).prop_map(Expr::add),
            proptest::collection::vec(inner.clone(), 2..3).prop_map(Expr::mul),
            (inner.clone(), -2i64..=3).prop_map(|(b, e)| Expr::pow(b, e)),
            (inner.clone(), inner).prop_map(|(n, d)| {
                if d.is_zero_literal() {
                    n
                } else {
                    Expr::div(n, d)
                }
            }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    /// print ∘ parse is structurally the identity on normalized trees.
    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let text = e.to_string();
        let back = parse(&text).unwrap_or_else(|err| panic!("reparsing {text:?}: {err}"));
        prop_assert_eq!(&back, &e, "{}", text);
    }

    /// simplify preserves semantics: the difference has a zero verdict.
    #[test]
    fn simplify_preserves_semantics(e in arb_expr()) {
        let s = simplify(&e);
        let cfg = ZeroConfig { samples: 4, ..ZeroConfig::with_seed(5) };
        match is_zero(&(&e - &s), &cfg) {
            Ok(v) => prop_assert!(v.is_zero(), "simplify changed {e} into {s}"),
            // Everywhere-singular expressions cannot be sampled.
            Err(ZeroError::Exhausted { .. }) => {}
            Err(other) => return Err(TestCaseError::fail(other.to_string())),
        }
    }

    /// Substitution of constants commutes with evaluation.
    #[test]
    fn substitution_evaluation_commutes(e in arb_expr(), n in -9i64..=9, d in 1i64..=9) {
        let val = BigRational::new(n.into(), d.into());
        let mut bindings = BTreeMap::new();
        bindings.insert(Sym::new("p"), Expr::rat_value(val.clone()));
        let substituted = substitute(&e, &bindings);

        let mut pt = Point::new()
            .with_coord_int("x", 2)
            .with_coord_int("y", 3)
            .with_coord_int("z", 5)
            .with_coord_int("r", 7);
        pt.functions.insert(
            Sym::new("f"),
            vec![
                BigRational::new(1.into(), 2.into()),
                BigRational::from_integer(3.into()),
                BigRational::from_integer(2.into()),
                BigRational::from_integer(1.into()),
            ],
        );
        let mut full = pt.clone();
        full.coords.insert(Sym::new("p"), val);
        // p stays bound on the substituted side too: substitution only
        // replaced the variable, other occurrences cannot remain, but the
        // evaluation point may carry the binding harmlessly.
        let lhs = substituted.eval(&full);
        let rhs = e.eval(&full);
        match (lhs, rhs) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            // Singular points: both routes must agree that evaluation fails.
            (Err(_), Err(_)) => {}
            (a, b) => return Err(TestCaseError::fail(format!("one side failed: {a:?} vs {b:?}"))),
        }
    }

    /// Nonzero verdicts re-evaluate to the stored value at the stored witness.
    #[test]
    fn nonzero_witnesses_reproduce(e in arb_expr()) {
        let cfg = ZeroConfig { samples: 4, ..ZeroConfig::with_seed(17) };
        if let Ok(ZeroVerdict::Nonzero { witness, value }) = is_zero(&e, &cfg) {
            prop_assert_eq!(e.eval(&witness).unwrap(), value);
        }
    }
}

#[test]
fn spec_round_trip_examples() {
    for text in [
        "p^2/4",
        "-r^2*f'''(p)/f''(p)",
        "x + 0",
        "2*f'''(p) + f''(p)*(-2*f'''(p)/f''(p))",
        "40*g'''(p)^3 - 45*g''(p)*g'''(p)*D[g,4](p) + 9*g''(p)^2*D[g,5](p)",
    ] {
        let e = parse(text).unwrap();
        assert_eq!(parse(&e.to_string()).unwrap(), e, "{text}");
    }
}
