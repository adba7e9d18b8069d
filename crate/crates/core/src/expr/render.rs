use std::fmt;

use super::{Expr, Pattern};

/// Displays an expression with parameter values substituted for `t_k`.
pub struct RenderWith<'a> {
    pub expr: &'a Expr,
    pub params: &'a [f64],
}

impl fmt::Display for RenderWith<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, Some(self.params))
    }
}

// negative numbers are parenthesized so `((-2) ^ x0)` reparses as written
pub(crate) fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.is_sign_negative() && v != 0.0 {
        write!(f, "({v})")
    } else {
        write!(f, "{}", v.abs())
    }
}

pub(crate) fn write_expr(
    f: &mut fmt::Formatter<'_>,
    e: &Expr,
    params: Option<&[f64]>,
) -> fmt::Result {
    match e {
        Expr::Var(i) => write!(f, "x{i}"),
        Expr::Param(k) => match params.and_then(|p| p.get(*k as usize)) {
            Some(v) => write_number(f, *v),
            None => write!(f, "t{k}"),
        },
        Expr::Const(c) => write_number(f, *c),
        Expr::Un(op, a) => {
            write!(f, "{}(", op.name())?;
            write_expr(f, a, params)?;
            f.write_str(")")
        }
        Expr::Bin(op, a, b) => {
            f.write_str("(")?;
            write_expr(f, a, params)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, b, params)?;
            f.write_str(")")
        }
    }
}

pub(crate) fn write_pattern(f: &mut fmt::Formatter<'_>, p: &Pattern) -> fmt::Result {
    match p {
        Pattern::Hole(i) => write!(f, "v{i}"),
        Pattern::Var(i) => write!(f, "x{i}"),
        Pattern::Param(k) => write!(f, "t{k}"),
        Pattern::Const(c) => write_number(f, *c),
        Pattern::Un(op, a) => {
            write!(f, "{}(", op.name())?;
            write_pattern(f, a)?;
            f.write_str(")")
        }
        Pattern::Bin(op, a, b) => {
            f.write_str("(")?;
            write_pattern(f, a)?;
            write!(f, " {} ", op.symbol())?;
            write_pattern(f, b)?;
            f.write_str(")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, parse_pattern, BinOp, Dialect, UnOp};
    use proptest::prelude::*;

    #[test]
    fn table_style_rendering() {
        let e = Expr::bin(BinOp::Div, Expr::Param(0), Expr::Var(3));
        assert_eq!(e.to_string(), "(t0 / x3)");
        assert_eq!(Expr::Var(0).to_string(), "x0");
        let e = Expr::bin(BinOp::Mul, Expr::un(UnOp::Log, Expr::Var(3)), Expr::Param(0));
        assert_eq!(e.to_string(), "(log(x3) * t0)");
        let shown = RenderWith {
            expr: &e,
            params: &[-1563.021],
        };
        assert_eq!(shown.to_string(), "(log(x3) * (-1563.021))");
    }

    #[test]
    fn pattern_rendering() {
        let p = parse_pattern("v0 + sin(t0 + x0)").unwrap();
        assert_eq!(p.to_string(), "(v0 + sin((t0 + x0)))");
        assert_eq!(parse_pattern(&p.to_string()).unwrap(), p);
    }

    pub(crate) fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..5).prop_map(Expr::Var),
            (0u32..4).prop_map(Expr::Param),
            (-1e6f64..1e6).prop_map(Expr::Const),
            Just(Expr::Const(1e-12)),
        ];
        leaf.prop_recursive(6, 40, 2, |inner| {
            prop_oneof![
                (prop::sample::select(UnOp::ALL.to_vec()), inner.clone())
                    .prop_map(|(op, a)| Expr::un(op, a)),
                (prop::sample::select(BinOp::ALL.to_vec()), inner.clone(), inner)
                    .prop_map(|(op, a, b)| Expr::bin(op, a, b)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn render_parse_round_trip(e in arb_expr()) {
            let text = e.to_string();
            let back = parse_expression(&text, &Dialect::GENERIC, false).unwrap();
            prop_assert_eq!(back.expr, e);
        }

        #[test]
        fn literal_extraction_preserves_values(e in arb_expr(), xs in prop::collection::vec(-3.0f64..3.0, 5)) {
            // substitute every parameter with a literal, then extract literals again
            let theta = [0.5, -1.25, 2.0, 3.5];
            let text = RenderWith { expr: &e, params: &theta }.to_string();
            let parsed = parse_expression(&text, &Dialect::GENERIC, true).unwrap();
            let want = e.eval(&xs, &theta);
            let got = parsed.expr.eval(&xs, &parsed.params);
            prop_assert!(want.to_bits() == got.to_bits() || (want.is_nan() && got.is_nan()),
                "{} vs {}", want, got);
        }
    }
}
