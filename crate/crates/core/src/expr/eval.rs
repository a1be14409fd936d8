//! Exact evaluation at rational points.

use super::{partial_atom_key, pow_rational, Expr, ExprKind, Sym};
use num::rational::BigRational;
use num::traits::Zero;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// An evaluation point: exact rational coordinate values, optional polynomial
/// instantiations for single-argument opaque functions (coefficient list,
/// ascending degree), and values for multivariate partial atoms, keyed by
/// their canonical name (`G_pp`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Point {
    pub coords: BTreeMap<Sym, BigRational>,
    pub functions: BTreeMap<Sym, Vec<BigRational>>,
    pub partials: BTreeMap<String, BigRational>,
}

impl Point {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_coord(mut self, name: &str, value: BigRational) -> Self {
        self.coords.insert(Sym::new(name), value);
        self
    }

    pub fn with_coord_int(self, name: &str, value: i64) -> Self {
        self.with_coord(name, BigRational::from_integer(value.into()))
    }

    /// Instantiates an opaque function by the polynomial with the given
    /// ascending coefficients.
    pub fn with_function(mut self, name: &str, coeffs: Vec<BigRational>) -> Self {
        self.functions.insert(Sym::new(name), coeffs);
        self
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Point", 3)?;
        let coords: BTreeMap<String, String> = self
            .coords
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let functions: BTreeMap<String, Vec<String>> = self
            .functions
            .iter()
            .map(|(k, v)| (k.to_string(), v.iter().map(|c| c.to_string()).collect()))
            .collect();
        let partials: BTreeMap<String, String> = self
            .partials
            .iter()
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect();
        st.serialize_field("coords", &coords)?;
        st.serialize_field("functions", &functions)?;
        st.serialize_field("partials", &partials)?;
        st.end()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound coordinate `{0}`")]
    UnboundCoordinate(Sym),
    #[error("opaque function `{0}` has no polynomial instantiation")]
    UninstantiatedFunction(Sym),
    #[error("no value for partial atom `{0}`")]
    UnboundPartial(String),
    #[error("division by zero at the evaluation point")]
    DivisionByZero,
}

/// `k`-th derivative of the polynomial with the given ascending coefficients,
/// evaluated at `x` by Horner's rule.
fn poly_derivative_at(coeffs: &[BigRational], k: u32, x: &BigRational) -> BigRational {
    let mut cs: Vec<BigRational> = coeffs.to_vec();
    for _ in 0..k {
        cs = cs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigRational::from_integer(i.into()))
            .collect();
        if cs.is_empty() {
            return BigRational::zero();
        }
    }
    let mut acc = BigRational::zero();
    for c in cs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

impl Expr {
    /// Exact evaluation. Every coordinate must be bound; opaque functions must
    /// be instantiated; any vanishing denominator (or negative power of zero)
    /// reports [`EvalError::DivisionByZero`] so the caller can resample.
    pub fn eval(&self, pt: &Point) -> Result<BigRational, EvalError> {
        match self.kind() {
            ExprKind::Rat(r) => Ok(r.clone()),
            ExprKind::Var(v) => pt
                .coords
                .get(v)
                .cloned()
                .ok_or_else(|| EvalError::UnboundCoordinate(v.clone())),
            ExprKind::Func { name, order, arg } => {
                let coeffs = pt
                    .functions
                    .get(name)
                    .ok_or_else(|| EvalError::UninstantiatedFunction(name.clone()))?;
                let x = arg.eval(pt)?;
                Ok(poly_derivative_at(coeffs, *order, &x))
            }
            ExprKind::Partial { .. } => {
                let key = partial_atom_key(self);
                pt.partials
                    .get(&key)
                    .cloned()
                    .ok_or(EvalError::UnboundPartial(key))
            }
            ExprKind::Sum(terms) => {
                let mut acc = BigRational::zero();
                for t in terms {
                    acc += t.eval(pt)?;
                }
                Ok(acc)
            }
            ExprKind::Product(factors) => {
                let mut acc = BigRational::from_integer(1.into());
                for t in factors {
                    acc *= t.eval(pt)?;
                }
                Ok(acc)
            }
            ExprKind::Pow { base, exp } => {
                let b = base.eval(pt)?;
                if b.is_zero() && *exp < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(pow_rational(&b, *exp))
            }
            ExprKind::Quot { num, den } => {
                let d = den.eval(pt)?;
                if d.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(num.eval(pt)? / d)
            }
        }
    }
}
