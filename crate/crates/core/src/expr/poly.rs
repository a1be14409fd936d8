//! Distributed multivariate polynomials over expression atoms.
//!
//! An *atom* is a coordinate, an opaque function application `f^(k)(arg)`
//! (keyed by its normalized argument), or a multivariate partial atom such as
//! `G_pp`. Every expression in the rational-function fragment normalizes to a
//! pair of polynomials over these atoms; that normal form powers `simplify`
//! and the structural-zero decisions.

use super::{simplify::simplify, Expr, ExprKind};
use num::rational::BigRational;
use num::traits::{One, Zero};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

/// Sorted `(atom id, exponent)` pairs; the empty vector is the unit monomial.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub(crate) struct Monomial(pub Vec<(u32, u32)>);

impl Monomial {
    fn one() -> Self {
        Monomial(Vec::new())
    }

    fn atom(id: u32) -> Self {
        Monomial(vec![(id, 1)])
    }

    fn total_degree(&self) -> u64 {
        self.0.iter().map(|&(_, e)| e as u64).sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0, self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Exact monomial quotient, if `other` divides `self`.
    fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut i = 0;
        for &(id, e) in &other.0 {
            loop {
                if i >= self.0.len() {
                    return None;
                }
                let (sid, se) = self.0[i];
                if sid < id {
                    out.push((sid, se));
                    i += 1;
                } else if sid == id {
                    if se < e {
                        return None;
                    }
                    if se > e {
                        out.push((sid, se - e));
                    }
                    i += 1;
                    break;
                } else {
                    return None;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        Some(Monomial(out))
    }

    /// Graded-lexicographic order; used to pick leading terms for division.
    fn grlex(&self, other: &Monomial) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| {
                // Compare exponent sequences over merged atom ids; the atom
                // with the smallest id is the "biggest" variable.
                let (mut i, mut j) = (0, 0);
                loop {
                    match (self.0.get(i), other.0.get(j)) {
                        (None, None) => return Ordering::Equal,
                        (Some(_), None) => return Ordering::Greater,
                        (None, Some(_)) => return Ordering::Less,
                        (Some(&(ia, ea)), Some(&(ib, eb))) => match ia.cmp(&ib) {
                            Ordering::Less => return Ordering::Greater,
                            Ordering::Greater => return Ordering::Less,
                            Ordering::Equal => match ea.cmp(&eb) {
                                Ordering::Equal => {
                                    i += 1;
                                    j += 1;
                                }
                                ord => return ord,
                            },
                        },
                    }
                }
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct Poly(pub BTreeMap<Monomial, BigRational>);

impl Poly {
    pub fn zero() -> Self {
        Poly(BTreeMap::new())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(Monomial::one(), c);
        }
        Poly(m)
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn atom(id: u32) -> Self {
        let mut m = BTreeMap::new();
        m.insert(Monomial::atom(id), BigRational::one());
        Poly(m)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        if self.0.is_empty() {
            return Some(BigRational::zero());
        }
        if self.0.len() == 1 {
            if let Some(c) = self.0.get(&Monomial::one()) {
                return Some(c.clone());
            }
        }
        None
    }

    fn insert_term(map: &mut BTreeMap<Monomial, BigRational>, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match map.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.0.clone();
        for (m, c) in &other.0 {
            Poly::insert_term(&mut out, m.clone(), c.clone());
        }
        Poly(out)
    }

    pub fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = BTreeMap::new();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                Poly::insert_term(&mut out, ma.mul(mb), ca * cb);
            }
        }
        Poly(out)
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, k)| (m.clone(), k * c)).collect())
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.0.iter().max_by(|a, b| a.0.grlex(b.0))
    }

    /// Exact division: `Some(q)` with `self = q * other`, or `None`.
    pub fn try_div(&self, other: &Poly) -> Option<Poly> {
        if other.is_zero() {
            return None;
        }
        if let Some(c) = other.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let (lm, lc) = other.leading().unwrap();
        let mut rem = self.clone();
        let mut quot = BTreeMap::new();
        while !rem.is_zero() {
            let (rm, rc) = rem.leading().unwrap();
            let qm = rm.div(lm)?;
            let qc = rc / lc;
            let mut t = BTreeMap::new();
            t.insert(qm.clone(), qc.clone());
            rem = rem.sub(&Poly(t.clone()).mul(other));
            Poly::insert_term(&mut quot, qm, qc);
        }
        Some(Poly(quot))
    }

    /// Componentwise minimum exponent vector over all monomials.
    fn monomial_content(&self) -> Monomial {
        let mut iter = self.0.keys();
        let mut content: Vec<(u32, u32)> = match iter.next() {
            Some(m) => m.0.clone(),
            None => return Monomial::one(),
        };
        for m in iter {
            let mut out = Vec::with_capacity(content.len());
            let (mut i, mut j) = (0, 0);
            while i < content.len() && j < m.0.len() {
                let (ia, ea) = content[i];
                let (ib, eb) = m.0[j];
                match ia.cmp(&ib) {
                    Ordering::Less => i += 1,
                    Ordering::Greater => j += 1,
                    Ordering::Equal => {
                        out.push((ia, ea.min(eb)));
                        i += 1;
                        j += 1;
                    }
                }
            }
            content = out;
            if content.is_empty() {
                break;
            }
        }
        Monomial(content)
    }

    fn div_monomial(&self, m: &Monomial) -> Poly {
        if m.0.is_empty() {
            return self.clone();
        }
        Poly(
            self.0
                .iter()
                .map(|(k, c)| (k.div(m).expect("content division"), c.clone()))
                .collect(),
        )
    }

    /// The single atom id this polynomial depends on, if there is exactly one.
    fn single_atom(&self) -> Option<u32> {
        let mut found = None;
        for m in self.0.keys() {
            for &(id, _) in &m.0 {
                match found {
                    None => found = Some(id),
                    Some(f) if f == id => {}
                    _ => return None,
                }
            }
        }
        found
    }

    fn to_dense(&self, id: u32) -> Vec<BigRational> {
        let deg = self
            .0
            .keys()
            .map(|m| m.0.iter().find(|&&(i, _)| i == id).map_or(0, |&(_, e)| e))
            .max()
            .unwrap_or(0) as usize;
        let mut out = vec![BigRational::zero(); deg + 1];
        for (m, c) in &self.0 {
            let e = m.0.iter().find(|&&(i, _)| i == id).map_or(0, |&(_, e)| e) as usize;
            out[e] += c;
        }
        out
    }

    fn from_dense(coeffs: &[BigRational], id: u32) -> Poly {
        let mut map = BTreeMap::new();
        for (e, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let m = if e == 0 {
                Monomial::one()
            } else {
                Monomial(vec![(id, e as u32)])
            };
            map.insert(m, c.clone());
        }
        Poly(map)
    }
}

fn dense_trim(v: &mut Vec<BigRational>) {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
}

/// Monic Euclidean GCD of dense univariate polynomials over the rationals.
fn dense_gcd(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    dense_trim(&mut a);
    dense_trim(&mut b);
    while !b.is_empty() {
        let rem = dense_rem(&a, &b);
        a = b;
        b = rem;
    }
    if let Some(lead) = a.last().cloned() {
        for c in &mut a {
            *c /= &lead;
        }
    }
    a
}

fn dense_rem(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut rem = a.to_vec();
    dense_trim(&mut rem);
    let db = b.len() - 1;
    let lb = &b[db];
    while rem.len() >= b.len() && !rem.is_empty() {
        let dr = rem.len() - 1;
        let factor = &rem[dr] / lb;
        let shift = dr - db;
        for (i, c) in b.iter().enumerate() {
            let t = &factor * c;
            rem[i + shift] -= t;
        }
        dense_trim(&mut rem);
    }
    rem
}

/// A ratio of polynomials in normal form: numerator zero implies the zero
/// function, denominator never zero, denominator's leading coefficient 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RatFunc {
    pub num: Poly,
    pub den: Poly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NormalizeFailure {
    /// A denominator normalizes to the zero polynomial.
    ZeroDenominator,
    /// An exponent too large to expand.
    TooLarge,
}

impl RatFunc {
    pub fn constant(c: BigRational) -> Self {
        RatFunc {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub fn atom(id: u32) -> Self {
        RatFunc {
            num: Poly::atom(id),
            den: Poly::one(),
        }
    }

    fn canceled(num: Poly, den: Poly) -> Result<Self, NormalizeFailure> {
        if den.is_zero() {
            return Err(NormalizeFailure::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(RatFunc {
                num: Poly::zero(),
                den: Poly::one(),
            });
        }
        let mut num = num;
        let mut den = den;

        // Shared monomial content.
        let cn = num.monomial_content();
        let cd = den.monomial_content();
        let mut common = Vec::new();
        {
            let (mut i, mut j) = (0, 0);
            while i < cn.0.len() && j < cd.0.len() {
                let (ia, ea) = cn.0[i];
                let (ib, eb) = cd.0[j];
                match ia.cmp(&ib) {
                    Ordering::Less => i += 1,
                    Ordering::Greater => j += 1,
                    Ordering::Equal => {
                        common.push((ia, ea.min(eb)));
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
        let common = Monomial(common);
        if !common.0.is_empty() {
            num = num.div_monomial(&common);
            den = den.div_monomial(&common);
        }

        // Exact polynomial cancellations.
        if let Some(q) = num.try_div(&den) {
            num = q;
            den = Poly::one();
        } else if let Some(q) = den.try_div(&num) {
            den = q;
            num = Poly::one();
        } else if let (Some(ia), Some(ib)) = (num.single_atom(), den.single_atom()) {
            if ia == ib {
                let g = dense_gcd(&num.to_dense(ia), &den.to_dense(ia));
                if g.len() > 1 {
                    let gp = Poly::from_dense(&g, ia);
                    num = num.try_div(&gp).expect("gcd divides numerator");
                    den = den.try_div(&gp).expect("gcd divides denominator");
                }
            }
        }

        // Make the denominator's leading coefficient 1.
        let lead = den.leading().expect("nonzero denominator").1.clone();
        if !lead.is_one() {
            let inv = lead.recip();
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        Ok(RatFunc { num, den })
    }

    pub fn add(&self, other: &RatFunc) -> Result<Self, NormalizeFailure> {
        if self.den == other.den {
            return RatFunc::canceled(self.num.add(&other.num), self.den.clone());
        }
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        RatFunc::canceled(num, den)
    }

    pub fn mul(&self, other: &RatFunc) -> Result<Self, NormalizeFailure> {
        RatFunc::canceled(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn div(&self, other: &RatFunc) -> Result<Self, NormalizeFailure> {
        if other.num.is_zero() {
            return Err(NormalizeFailure::ZeroDenominator);
        }
        RatFunc::canceled(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn pow(&self, exp: i64) -> Result<Self, NormalizeFailure> {
        let mag: u32 = exp
            .unsigned_abs()
            .try_into()
            .map_err(|_| NormalizeFailure::TooLarge)?;
        let (num, den) = if exp < 0 {
            if self.num.is_zero() {
                return Err(NormalizeFailure::ZeroDenominator);
            }
            (self.den.pow(mag), self.num.pow(mag))
        } else {
            (self.num.pow(mag), self.den.pow(mag))
        };
        RatFunc::canceled(num, den)
    }
}

/// Atom table built in structural order, so equal expressions normalize to
/// identical polynomials regardless of traversal order.
#[derive(Debug, Default)]
pub(crate) struct AtomTable {
    atoms: Vec<Expr>,
    index: BTreeMap<Expr, u32>,
}

impl AtomTable {
    pub fn atom_expr(&self, id: u32) -> &Expr {
        &self.atoms[id as usize]
    }

    fn id_of(&self, e: &Expr) -> u32 {
        self.index[e]
    }
}

/// The canonical atom for a node: opaque function applications key by their
/// simplified argument.
fn atom_of(e: &Expr) -> Option<Expr> {
    match e.kind() {
        ExprKind::Var(_) | ExprKind::Partial { .. } => Some(e.clone()),
        ExprKind::Func { name, order, arg } => {
            Some(Expr::func(name.clone(), *order, simplify(arg)))
        }
        _ => None,
    }
}

fn collect_atoms(e: &Expr, out: &mut BTreeSet<Expr>) {
    match e.kind() {
        ExprKind::Rat(_) => {}
        ExprKind::Var(_) | ExprKind::Partial { .. } | ExprKind::Func { .. } => {
            out.insert(atom_of(e).unwrap());
        }
        ExprKind::Sum(es) | ExprKind::Product(es) => {
            for t in es {
                collect_atoms(t, out);
            }
        }
        ExprKind::Pow { base, .. } => collect_atoms(base, out),
        ExprKind::Quot { num, den } => {
            collect_atoms(num, out);
            collect_atoms(den, out);
        }
    }
}

pub(crate) fn build_table(e: &Expr) -> AtomTable {
    build_table_many(std::iter::once(e))
}

pub(crate) fn build_table_many<'a>(es: impl Iterator<Item = &'a Expr>) -> AtomTable {
    let mut set = BTreeSet::new();
    for e in es {
        collect_atoms(e, &mut set);
    }
    let atoms: Vec<Expr> = set.into_iter().collect();
    let index = atoms
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i as u32))
        .collect();
    AtomTable { atoms, index }
}

pub(crate) fn to_ratfunc(e: &Expr, table: &AtomTable) -> Result<RatFunc, NormalizeFailure> {
    match e.kind() {
        ExprKind::Rat(r) => Ok(RatFunc::constant(r.clone())),
        ExprKind::Var(_) | ExprKind::Partial { .. } | ExprKind::Func { .. } => {
            Ok(RatFunc::atom(table.id_of(&atom_of(e).unwrap())))
        }
        ExprKind::Sum(terms) => {
            let mut acc = RatFunc::constant(BigRational::zero());
            for t in terms {
                acc = acc.add(&to_ratfunc(t, table)?)?;
            }
            Ok(acc)
        }
        ExprKind::Product(factors) => {
            let mut acc = RatFunc::constant(BigRational::one());
            for t in factors {
                acc = acc.mul(&to_ratfunc(t, table)?)?;
            }
            Ok(acc)
        }
        ExprKind::Pow { base, exp } => to_ratfunc(base, table)?.pow(*exp),
        ExprKind::Quot { num, den } => {
            to_ratfunc(num, table)?.div(&to_ratfunc(den, table)?)
        }
    }
}

pub(crate) fn poly_to_expr(p: &Poly, table: &AtomTable) -> Expr {
    let mut terms: Vec<(&Monomial, &BigRational)> = p.0.iter().collect();
    // Leading terms first, for readable output.
    terms.sort_by(|a, b| b.0.grlex(a.0));
    let mut out = Vec::with_capacity(terms.len());
    for (m, c) in terms {
        let mut factors = Vec::with_capacity(m.0.len() + 1);
        if !c.is_one() || m.0.is_empty() {
            factors.push(Expr::rat_value(c.clone()));
        }
        for &(id, e) in &m.0 {
            factors.push(Expr::pow(table.atom_expr(id).clone(), e as i64));
        }
        out.push(Expr::mul(factors));
    }
    Expr::add(out)
}

pub(crate) fn ratfunc_to_expr(rf: &RatFunc, table: &AtomTable) -> Expr {
    let num = poly_to_expr(&rf.num, table);
    if let Some(c) = rf.den.as_constant() {
        if c.is_one() {
            return num;
        }
        return Expr::div(num, Expr::rat_value(c));
    }
    Expr::div(num, poly_to_expr(&rf.den, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn normal(e: &str) -> Expr {
        let e = parse(e).unwrap();
        let table = build_table(&e);
        let rf = to_ratfunc(&e, &table).unwrap();
        ratfunc_to_expr(&rf, &table)
    }

    #[test]
    fn cancellation() {
        assert!(normal("(p^2 - p^2)/r").is_zero_literal());
        assert!(normal("2*f'''(p) + f''(p)*(-2*f'''(p)/f''(p))").is_zero_literal());
        assert_eq!(normal("(x^2 - 1)/(x - 1)"), normal("x + 1"));
    }

    #[test]
    fn monomial_denominator() {
        let e = normal("(-24*r^2*p)/(12*p^2)");
        assert_eq!(e, normal("-2*r^2/p"));
    }

    #[test]
    fn equal_inputs_equal_normal_forms() {
        assert_eq!(normal("x*(y + z)"), normal("x*y + x*z"));
        assert_eq!(normal("(x + y)^2"), normal("x^2 + 2*x*y + y^2"));
    }
}
