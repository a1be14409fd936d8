//! Exact symbolic expression trees.
//!
//! An [`Expr`] is an immutable tree over named coordinates, arbitrary-precision
//! rationals, and opaque function symbols that carry a formal derivative order
//! (`f'''` is a single node, not three nested operators). Multivariate opaque
//! functions such as `G(x,y,z,p)` are represented through their partial
//! derivatives `G_pp`, whose arguments are fixed to the declared coordinates.
//!
//! Construction goes through the smart constructors on [`Expr`], which flatten
//! nested sums/products and fold rational constants but deliberately do not
//! reorder terms; full normalization lives in [`simplify`].

mod deriv;
mod eval;
mod parse;
pub(crate) mod poly;
mod simplify;
mod zero;

pub use deriv::substitute;
pub use eval::{EvalError, Point};
pub use parse::{parse, parse_with, ParseContext, ParseError};
pub use simplify::simplify;
pub use zero::{is_zero, sampled_zero_check, ZeroConfig, ZeroError, ZeroVerdict};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Interned-ish symbol name. Cheap to clone, ordered by its text.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sym(Arc<str>);

impl Sym {
    pub fn new(name: &str) -> Self {
        Sym(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Sym {
    fn from(s: &str) -> Self {
        Sym::new(s)
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ExprKind {
    /// Rational constant, always in lowest terms.
    Rat(BigRational),
    /// Coordinate (or inert constant) variable.
    Var(Sym),
    /// Opaque single-argument function with a formal derivative order:
    /// `Func { name: f, order: 3, arg }` is `f'''(arg)`.
    Func { name: Sym, order: u32, arg: Expr },
    /// Partial derivative of a declared multivariate opaque function whose
    /// arguments are the listed coordinates themselves. `orders` holds
    /// (argument index, derivative order) pairs, sorted by index.
    Partial {
        name: Sym,
        args: Arc<[Sym]>,
        orders: Vec<(usize, u32)>,
    },
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    /// Integer power; negative exponents allowed.
    Pow { base: Expr, exp: i64 },
    Quot { num: Expr, den: Expr },
}

/// Immutable expression tree. Clones are cheap (`Arc`-backed), structural
/// equality is decidable and used as-is for map keys.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<ExprKind>);

impl Expr {
    pub fn kind(&self) -> &ExprKind {
        &self.0
    }

    pub fn from_kind(kind: ExprKind) -> Self {
        Expr(Arc::new(kind))
    }

    // ---- constructors -------------------------------------------------

    pub fn int(n: i64) -> Self {
        Expr::rat_value(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rat(num: i64, den: i64) -> Self {
        assert!(den != 0, "rational constant with zero denominator");
        Expr::rat_value(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn rat_value(r: BigRational) -> Self {
        Expr::from_kind(ExprKind::Rat(r))
    }

    pub fn zero() -> Self {
        Expr::int(0)
    }

    pub fn one() -> Self {
        Expr::int(1)
    }

    pub fn var(name: impl Into<Sym>) -> Self {
        Expr::from_kind(ExprKind::Var(name.into()))
    }

    /// `f^(order)(arg)`.
    pub fn func(name: impl Into<Sym>, order: u32, arg: Expr) -> Self {
        Expr::from_kind(ExprKind::Func {
            name: name.into(),
            order,
            arg,
        })
    }

    /// Partial-derivative atom of a multivariate opaque function. `orders`
    /// maps argument names to derivative orders; names must occur in `args`.
    pub fn partial(
        name: impl Into<Sym>,
        args: &[Sym],
        orders: &BTreeMap<Sym, u32>,
    ) -> Self {
        let args: Arc<[Sym]> = args.into();
        let mut idx_orders = Vec::new();
        for (sym, &k) in orders {
            if k == 0 {
                continue;
            }
            let i = args
                .iter()
                .position(|a| a == sym)
                .unwrap_or_else(|| panic!("{sym} is not an argument of the opaque function"));
            idx_orders.push((i, k));
        }
        idx_orders.sort_unstable();
        Expr::from_kind(ExprKind::Partial {
            name: name.into(),
            args,
            orders: idx_orders,
        })
    }

    /// Sum with flattening, constant folding and zero dropping.
    pub fn add(terms: Vec<Expr>) -> Self {
        let mut acc = BigRational::zero();
        let mut out: Vec<Expr> = Vec::with_capacity(terms.len());
        let mut stack: Vec<Expr> = terms;
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t.kind() {
                ExprKind::Sum(inner) => {
                    for e in inner.iter().rev() {
                        stack.push(e.clone());
                    }
                }
                ExprKind::Rat(r) => acc += r,
                _ => out.push(t),
            }
        }
        if !acc.is_zero() {
            out.insert(0, Expr::rat_value(acc));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::from_kind(ExprKind::Sum(out)),
        }
    }

    /// Product with flattening and constant folding; a zero factor collapses
    /// the whole product.
    pub fn mul(factors: Vec<Expr>) -> Self {
        let mut acc = BigRational::one();
        let mut out: Vec<Expr> = Vec::with_capacity(factors.len());
        let mut stack: Vec<Expr> = factors;
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t.kind() {
                ExprKind::Product(inner) => {
                    for e in inner.iter().rev() {
                        stack.push(e.clone());
                    }
                }
                ExprKind::Rat(r) => {
                    if r.is_zero() {
                        return Expr::zero();
                    }
                    acc *= r;
                }
                _ => out.push(t),
            }
        }
        if !acc.is_one() {
            out.insert(0, Expr::rat_value(acc));
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => Expr::from_kind(ExprKind::Product(out)),
        }
    }

    pub fn pow(base: Expr, exp: i64) -> Self {
        match exp {
            0 => Expr::one(),
            1 => base,
            _ => match base.kind() {
                ExprKind::Rat(r) if !r.is_zero() => {
                    let p = pow_rational(r, exp);
                    Expr::rat_value(p)
                }
                _ => Expr::from_kind(ExprKind::Pow { base, exp }),
            },
        }
    }

    /// Quotient. Panics if `den` is the literal zero constant (a structural
    /// invariant of the tree); symbolic denominators that happen to vanish
    /// are caught at evaluation time instead.
    pub fn div(num: Expr, den: Expr) -> Self {
        if let ExprKind::Rat(d) = den.kind() {
            assert!(!d.is_zero(), "literal zero denominator");
            if d.is_one() {
                return num;
            }
            if let ExprKind::Rat(n) = num.kind() {
                return Expr::rat_value(n / d);
            }
        }
        if num.is_zero_literal() {
            return Expr::zero();
        }
        Expr::from_kind(ExprKind::Quot { num, den })
    }

    pub fn neg(self) -> Self {
        Expr::mul(vec![Expr::int(-1), self])
    }

    // ---- small queries -------------------------------------------------

    pub fn is_zero_literal(&self) -> bool {
        matches!(self.kind(), ExprKind::Rat(r) if r.is_zero())
    }

    pub fn is_one_literal(&self) -> bool {
        matches!(self.kind(), ExprKind::Rat(r) if r.is_one())
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self.kind() {
            ExprKind::Rat(r) => Some(r),
            _ => None,
        }
    }

    /// Free coordinate variables, opaque function names and partial atoms
    /// occurring in the tree.
    pub fn symbols(&self) -> SymbolSet {
        let mut set = SymbolSet::default();
        self.collect_symbols(&mut set);
        set
    }

    fn collect_symbols(&self, set: &mut SymbolSet) {
        match self.kind() {
            ExprKind::Rat(_) => {}
            ExprKind::Var(v) => {
                set.coordinates.insert(v.clone());
            }
            ExprKind::Func { name, arg, .. } => {
                set.functions.insert(name.clone());
                arg.collect_symbols(set);
            }
            ExprKind::Partial { .. } => {
                set.partial_atoms.insert(self.clone());
            }
            ExprKind::Sum(es) | ExprKind::Product(es) => {
                for e in es {
                    e.collect_symbols(set);
                }
            }
            ExprKind::Pow { base, .. } => base.collect_symbols(set),
            ExprKind::Quot { num, den } => {
                num.collect_symbols(set);
                den.collect_symbols(set);
            }
        }
    }
}

pub(crate) fn pow_rational(r: &BigRational, exp: i64) -> BigRational {
    let mag = r.pow(exp.unsigned_abs().try_into().expect("exponent too large"));
    if exp < 0 {
        mag.recip()
    } else {
        mag
    }
}

/// Symbols collected from an expression.
#[derive(Default, Debug, Clone)]
pub struct SymbolSet {
    pub coordinates: std::collections::BTreeSet<Sym>,
    pub functions: std::collections::BTreeSet<Sym>,
    /// Full `Partial` atom expressions, keyed structurally.
    pub partial_atoms: std::collections::BTreeSet<Expr>,
}

/// Canonical name of a partial atom, e.g. `G_pp`. Used as the witness key
/// when sampling such atoms as independent unknowns.
pub fn partial_atom_key(e: &Expr) -> String {
    match e.kind() {
        ExprKind::Partial { name, args, orders } => {
            let mut s = name.as_str().to_string();
            if !orders.is_empty() {
                s.push('_');
                for &(i, k) in orders {
                    for _ in 0..k {
                        s.push_str(args[i].as_str());
                    }
                }
            }
            s
        }
        _ => panic!("not a partial atom"),
    }
}

// ---- operator overloads --------------------------------------------------

macro_rules! impl_binop {
    ($trait:ident, $method:ident, |$a:ident, $b:ident| $body:expr) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let ($a, $b) = (self, rhs);
                $body
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let ($a, $b) = (self, rhs.clone());
                $body
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let ($a, $b) = (self.clone(), rhs);
                $body
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let ($a, $b) = (self.clone(), rhs.clone());
                $body
            }
        }
    };
}

impl_binop!(Add, add, |a, b| Expr::add(vec![a, b]));
impl_binop!(Sub, sub, |a, b| Expr::add(vec![a, b.neg()]));
impl_binop!(Mul, mul, |a, b| Expr::mul(vec![a, b]));
impl_binop!(Div, div, |a, b| Expr::div(a, b));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.clone().neg()
    }
}

impl std::ops::Mul<Expr> for i64 {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(vec![Expr::int(self), rhs])
    }
}

impl std::ops::Mul<&Expr> for i64 {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(vec![Expr::int(self), rhs.clone()])
    }
}

// ---- display ---------------------------------------------------------------

fn prec(kind: &ExprKind) -> u8 {
    match kind {
        ExprKind::Sum(_) => 1,
        ExprKind::Product(_) | ExprKind::Quot { .. } => 2,
        ExprKind::Pow { .. } => 3,
        ExprKind::Rat(r) => {
            if r.is_negative() {
                1 // forces parens inside products/powers
            } else if !r.is_integer() {
                2
            } else {
                4
            }
        }
        _ => 4,
    }
}

fn fmt_prec(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let needs_parens = prec(e.kind()) < min;
    if needs_parens {
        write!(f, "(")?;
    }
    fmt_expr(e, f)?;
    if needs_parens {
        write!(f, ")")?;
    }
    Ok(())
}

/// Splits off a syntactic leading minus: returns the negated expression if
/// the term starts with a negative constant.
fn strip_neg(e: &Expr) -> Option<Expr> {
    match e.kind() {
        ExprKind::Rat(r) if r.is_negative() => Some(Expr::rat_value(-r)),
        ExprKind::Product(fs) => match fs[0].kind() {
            ExprKind::Rat(r) if r.is_negative() => {
                let mut rest = fs.clone();
                let pos = -r;
                if pos.is_one() {
                    rest.remove(0);
                } else {
                    rest[0] = Expr::rat_value(pos);
                }
                Some(Expr::mul(rest))
            }
            _ => None,
        },
        _ => None,
    }
}

fn fmt_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.kind() {
        ExprKind::Rat(r) => {
            if r.is_integer() {
                write!(f, "{}", r.numer())
            } else {
                write!(f, "{}/{}", r.numer(), r.denom())
            }
        }
        ExprKind::Var(v) => write!(f, "{v}"),
        ExprKind::Func { name, order, arg } => {
            if *order <= 3 {
                write!(f, "{name}")?;
                for _ in 0..*order {
                    write!(f, "'")?;
                }
                write!(f, "({arg})")
            } else {
                write!(f, "D[{name},{order}]({arg})")
            }
        }
        ExprKind::Partial { .. } => write!(f, "{}", partial_atom_key(e)),
        ExprKind::Sum(terms) => {
            for (i, t) in terms.iter().enumerate() {
                if i == 0 {
                    fmt_prec(t, 1, f)?;
                } else if let Some(pos) = strip_neg(t) {
                    write!(f, " - ")?;
                    fmt_prec(&pos, 2, f)?;
                } else {
                    write!(f, " + ")?;
                    fmt_prec(t, 2, f)?;
                }
            }
            Ok(())
        }
        ExprKind::Product(factors) => {
            // Leading -1 prints as a bare sign.
            let mut rest: &[Expr] = factors;
            if let ExprKind::Rat(r) = factors[0].kind() {
                if *r == -BigRational::one() && factors.len() > 1 {
                    write!(f, "-")?;
                    rest = &factors[1..];
                }
            }
            for (i, t) in rest.iter().enumerate() {
                if i > 0 {
                    write!(f, "*")?;
                }
                fmt_prec(t, 3, f)?;
            }
            Ok(())
        }
        ExprKind::Pow { base, exp } => {
            fmt_prec(base, 4, f)?;
            write!(f, "^{exp}")
        }
        ExprKind::Quot { num, den } => {
            fmt_prec(num, 2, f)?;
            write!(f, "/")?;
            fmt_prec(den, 3, f)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, f)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_fold_constants() {
        let e = Expr::add(vec![Expr::int(2), Expr::int(3), Expr::var("x")]);
        assert_eq!(e.to_string(), "5 + x");
        let p = Expr::mul(vec![Expr::int(2), Expr::rat(1, 2), Expr::var("x")]);
        assert_eq!(p, Expr::var("x"));
        assert!(Expr::mul(vec![Expr::zero(), Expr::var("y")]).is_zero_literal());
    }

    #[test]
    fn pow_folding() {
        assert_eq!(Expr::pow(Expr::var("p"), 1), Expr::var("p"));
        assert!(Expr::pow(Expr::var("p"), 0).is_one_literal());
        assert_eq!(Expr::pow(Expr::int(2), -2), Expr::rat(1, 4));
    }

    #[test]
    #[should_panic]
    fn literal_zero_denominator_rejected() {
        let _ = Expr::div(Expr::var("x"), Expr::zero());
    }

    #[test]
    fn display_signs() {
        let e = Expr::var("x") - Expr::var("y");
        assert_eq!(e.to_string(), "x - y");
        let e = Expr::int(-1) * Expr::pow(Expr::var("r"), 2);
        assert_eq!(e.to_string(), "-r^2");
    }

    #[test]
    fn partial_atom_display() {
        let args: Vec<Sym> = ["x", "y", "z", "p"].iter().map(|s| Sym::new(s)).collect();
        let mut orders = BTreeMap::new();
        orders.insert(Sym::new("p"), 2u32);
        let g_pp = Expr::partial("G", &args, &orders);
        assert_eq!(g_pp.to_string(), "G_pp");
    }
}
