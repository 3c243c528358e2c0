//! Property tests of the expression layer: exact partials against central
//! finite differences, and print/parse round trips.

use proptest::prelude::*;

use kildual::expr::{ScalarField, Var};

/// Expression source strings built from total, everywhere-smooth pieces so
/// that interior sample points are always in the domain.
fn smooth_expr() -> impl Strategy<Value = String> {
    let coef = -2.0..2.0f64;
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        coef.clone().prop_map(|c| format!("({c})")),
    ];
    leaf.prop_recursive(3, 24, 3, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}+{b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}-{b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}*{b})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("tanh({a})")),
            inner.clone().prop_map(|a| format!("atan({a})")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1+({a})^2)")),
            inner.prop_map(|a| format!("1/(2+sin({a})^2)")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 100,
        ..ProptestConfig::default()
    })]

    #[test]
    fn symbolic_partials_match_central_differences(
        src in smooth_expr(),
        x in -2.0..2.0f64,
        y in -2.0..2.0f64,
    ) {
        let f = ScalarField::parse(&src).unwrap();
        let h = 1e-5;
        for var in [Var::X, Var::Y] {
            let df = f.differentiate(var);
            let sym = df.eval(x, y).unwrap();
            let fd = match var {
                Var::X => (f.eval(x + h, y).unwrap() - f.eval(x - h, y).unwrap()) / (2.0 * h),
                Var::Y => (f.eval(x, y + h).unwrap() - f.eval(x, y - h).unwrap()) / (2.0 * h),
            };
            let rel = (sym - fd).abs() / (1.0 + sym.abs());
            prop_assert!(rel < 1e-6, "{src}: ∂ = {sym} vs fd {fd}");
        }
    }

    #[test]
    fn print_parse_roundtrip_preserves_evaluation(
        src in smooth_expr(),
        x in -3.0..3.0f64,
        y in -3.0..3.0f64,
    ) {
        let f = ScalarField::parse(&src).unwrap();
        let printed = f.to_string();
        let g = ScalarField::parse(&printed).unwrap();
        let a = f.eval(x, y).unwrap();
        let b = g.eval(x, y).unwrap();
        prop_assert!(
            (a - b).abs() <= 1e-15 * (1.0 + a.abs()),
            "{src} → {printed}: {a} vs {b}"
        );
    }

    #[test]
    fn mixed_partials_commute(
        src in smooth_expr(),
        x in -1.5..1.5f64,
        y in -1.5..1.5f64,
    ) {
        let f = ScalarField::parse(&src).unwrap();
        let fxy = f.differentiate(Var::X).differentiate(Var::Y);
        let fyx = f.differentiate(Var::Y).differentiate(Var::X);
        let a = fxy.eval(x, y).unwrap();
        let b = fyx.eval(x, y).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{src}: {a} vs {b}");
    }
}
