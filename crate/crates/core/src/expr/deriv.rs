//! Partial differentiation and simultaneous substitution.

use super::{Expr, ExprKind, Sym};
use std::collections::BTreeMap;

impl Expr {
    /// Exact partial derivative with respect to the coordinate `v`. Opaque
    /// `f^(k)(u)` differentiates by the chain rule to `f^(k+1)(u) * du/dv`;
    /// partial atoms of multivariate opaque functions pick up one more order
    /// in `v` when `v` is among their declared arguments.
    pub fn diff(&self, v: &Sym) -> Expr {
        match self.kind() {
            ExprKind::Rat(_) => Expr::zero(),
            ExprKind::Var(w) => {
                if w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            ExprKind::Func { name, order, arg } => {
                let inner = arg.diff(v);
                if inner.is_zero_literal() {
                    return Expr::zero();
                }
                Expr::func(name.clone(), order + 1, arg.clone()) * inner
            }
            ExprKind::Partial { name, args, orders } => {
                match args.iter().position(|a| a == v) {
                    None => Expr::zero(),
                    Some(i) => {
                        let mut orders = orders.clone();
                        match orders.iter_mut().find(|(j, _)| *j == i) {
                            Some((_, k)) => *k += 1,
                            None => {
                                orders.push((i, 1));
                                orders.sort_unstable();
                            }
                        }
                        Expr::from_kind(ExprKind::Partial {
                            name: name.clone(),
                            args: args.clone(),
                            orders,
                        })
                    }
                }
            }
            ExprKind::Sum(terms) => Expr::add(terms.iter().map(|t| t.diff(v)).collect()),
            ExprKind::Product(factors) => {
                let mut terms = Vec::with_capacity(factors.len());
                for (i, fi) in factors.iter().enumerate() {
                    let dfi = fi.diff(v);
                    if dfi.is_zero_literal() {
                        continue;
                    }
                    let mut fs: Vec<Expr> = Vec::with_capacity(factors.len());
                    fs.push(dfi);
                    for (j, fj) in factors.iter().enumerate() {
                        if j != i {
                            fs.push(fj.clone());
                        }
                    }
                    terms.push(Expr::mul(fs));
                }
                Expr::add(terms)
            }
            ExprKind::Pow { base, exp } => {
                let db = base.diff(v);
                if db.is_zero_literal() {
                    return Expr::zero();
                }
                Expr::int(*exp) * Expr::pow(base.clone(), exp - 1) * db
            }
            ExprKind::Quot { num, den } => {
                let dn = num.diff(v);
                let dd = den.diff(v);
                if dd.is_zero_literal() {
                    return Expr::div(dn, den.clone());
                }
                let top = dn * den - num * dd;
                Expr::div(top, Expr::pow(den.clone(), 2))
            }
        }
    }

    /// `n`-fold derivative in `v`.
    pub fn diff_n(&self, v: &Sym, n: u32) -> Expr {
        let mut e = self.clone();
        for _ in 0..n {
            e = e.diff(v);
        }
        e
    }
}

/// Simultaneous substitution of coordinates: every occurrence of a bound
/// variable is replaced in one pass, so bindings never substitute into each
/// other's images. Unbound coordinates are left untouched. Partial atoms of
/// multivariate opaque functions are inert (their arguments are the declared
/// coordinates themselves, so rebinding them would need a chain rule, which
/// substitution deliberately does not apply).
pub fn substitute(e: &Expr, bindings: &BTreeMap<Sym, Expr>) -> Expr {
    if bindings.is_empty() {
        return e.clone();
    }
    match e.kind() {
        ExprKind::Rat(_) | ExprKind::Partial { .. } => e.clone(),
        ExprKind::Var(v) => bindings.get(v).cloned().unwrap_or_else(|| e.clone()),
        ExprKind::Func { name, order, arg } => {
            Expr::func(name.clone(), *order, substitute(arg, bindings))
        }
        ExprKind::Sum(terms) => {
            Expr::add(terms.iter().map(|t| substitute(t, bindings)).collect())
        }
        ExprKind::Product(factors) => {
            Expr::mul(factors.iter().map(|t| substitute(t, bindings)).collect())
        }
        ExprKind::Pow { base, exp } => Expr::pow(substitute(base, bindings), *exp),
        ExprKind::Quot { num, den } => {
            let n = substitute(num, bindings);
            let d = substitute(den, bindings);
            if d.is_zero_literal() {
                // Keep the original quotient shape; evaluation will report
                // the division by zero with a concrete point.
                Expr::from_kind(ExprKind::Quot { num: n, den: d })
            } else {
                Expr::div(n, d)
            }
        }
    }
}
