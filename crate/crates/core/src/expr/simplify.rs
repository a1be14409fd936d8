//! Normalization to a canonical rational form.

use super::poly::{build_table, ratfunc_to_expr, to_ratfunc};
use super::{Expr, ExprKind};

/// Rewrites `e` into its rational normal form: sums and products flattened,
/// constants folded, identical terms collected, and common factors between a
/// polynomial numerator and denominator canceled (monomial content always;
/// full factors by exact trial division and by univariate GCD). The result is
/// semantically equal to the input.
///
/// Subtrees whose denominator normalizes to the zero polynomial (an undefined
/// quotient like `1/(p - p)`) are left in their original shape; evaluation
/// reports them as division by zero.
pub fn simplify(e: &Expr) -> Expr {
    let table = build_table(e);
    match to_ratfunc(e, &table) {
        Ok(rf) => ratfunc_to_expr(&rf, &table),
        Err(_) => fallback(e),
    }
}

/// Recursive light rebuild for trees the rational normalizer rejects: each
/// child is simplified independently and the node is reassembled.
fn fallback(e: &Expr) -> Expr {
    match e.kind() {
        ExprKind::Rat(_) | ExprKind::Var(_) | ExprKind::Partial { .. } => e.clone(),
        ExprKind::Func { name, order, arg } => {
            Expr::func(name.clone(), *order, simplify(arg))
        }
        ExprKind::Sum(terms) => Expr::add(terms.iter().map(simplify).collect()),
        ExprKind::Product(factors) => Expr::mul(factors.iter().map(simplify).collect()),
        ExprKind::Pow { base, exp } => Expr::pow(simplify(base), *exp),
        ExprKind::Quot { num, den } => {
            let n = simplify(num);
            let d = simplify(den);
            if d.is_zero_literal() {
                // Undefined quotient: preserve the node rather than panic.
                Expr::from_kind(ExprKind::Quot {
                    num: n,
                    den: den.clone(),
                })
            } else {
                Expr::div(n, d)
            }
        }
    }
}
