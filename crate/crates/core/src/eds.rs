//! Abstract exterior differential systems: formal 1-form generators,
//! structure equations with named scalar coefficients, and coefficient
//! differentials that may be left unspecified.
//!
//! Unspecified differentials turn into inert `d⟨name⟩` atoms that ride
//! through every computation, so partial consistency checking is possible:
//! a `d²` residual is *identically zero*, *zero modulo unspecified atoms*
//! (every surviving term carries such an atom), or *nonzero*.
//!
//! The bundled systems are shipped as JSON fixtures under `fixtures/` and
//! guarded by checksum tests against silent edits.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Zero};
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EdsError {
    #[error("fixture is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported fixture schema {0}")]
    Schema(u32),
    #[error("undeclared generator `{0}`")]
    UndeclaredGenerator(String),
    #[error("undeclared coefficient `{0}`")]
    UndeclaredCoefficient(String),
    #[error("bad coefficient polynomial `{text}`: {message}")]
    PolyParse { text: String, message: String },
    #[error("connection matrix is not square")]
    DimensionMismatch,
}

// ---- formal polynomials ----------------------------------------------------

/// Monomial in coefficient symbols: sorted `(coefficient id, exponent)`.
type FMono = Vec<(u16, u32)>;

/// Polynomial in the named scalar coefficients with rational constants.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FormalPoly(BTreeMap<FMono, BigRational>);

impl FormalPoly {
    pub fn zero() -> Self {
        FormalPoly(BTreeMap::new())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(Vec::new(), c);
        }
        FormalPoly(m)
    }

    pub fn one() -> Self {
        FormalPoly::constant(BigRational::one())
    }

    fn symbol(id: u16) -> Self {
        let mut m = BTreeMap::new();
        m.insert(vec![(id, 1)], BigRational::one());
        FormalPoly(m)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn insert(map: &mut BTreeMap<FMono, BigRational>, m: FMono, c: BigRational) {
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

    fn add(&self, other: &FormalPoly) -> FormalPoly {
        let mut out = self.0.clone();
        for (m, c) in &other.0 {
            FormalPoly::insert(&mut out, m.clone(), c.clone());
        }
        FormalPoly(out)
    }

    fn neg(&self) -> FormalPoly {
        FormalPoly(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    fn mul(&self, other: &FormalPoly) -> FormalPoly {
        let mut out = BTreeMap::new();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                let mut m = ma.clone();
                for &(id, e) in mb {
                    match m.iter_mut().find(|(i, _)| *i == id) {
                        Some((_, exp)) => *exp += e,
                        None => m.push((id, e)),
                    }
                }
                m.sort_unstable();
                FormalPoly::insert(&mut out, m, ca * cb);
            }
        }
        FormalPoly(out)
    }

    fn pow(&self, n: u32) -> FormalPoly {
        let mut acc = FormalPoly::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Partial derivative with respect to one coefficient symbol.
    fn derivative(&self, id: u16) -> FormalPoly {
        let mut out = BTreeMap::new();
        for (m, c) in &self.0 {
            if let Some(&(_, e)) = m.iter().find(|(i, _)| *i == id) {
                let mut dm: FMono = m
                    .iter()
                    .filter_map(|&(i, exp)| {
                        if i == id {
                            if exp > 1 {
                                Some((i, exp - 1))
                            } else {
                                None
                            }
                        } else {
                            Some((i, exp))
                        }
                    })
                    .collect();
                dm.sort_unstable();
                FormalPoly::insert(&mut out, dm, c * BigRational::from_integer(e.into()));
            }
        }
        FormalPoly(out)
    }

    /// Coefficient ids occurring in the polynomial.
    fn support(&self, out: &mut BTreeSet<u16>) {
        for m in self.0.keys() {
            for &(id, _) in m {
                out.insert(id);
            }
        }
    }

    fn zero_out(&self, zeroed: &BTreeSet<u16>) -> FormalPoly {
        FormalPoly(
            self.0
                .iter()
                .filter(|(m, _)| m.iter().all(|(id, _)| !zeroed.contains(id)))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        )
    }

    fn remap(&self, map: &BTreeMap<u16, u16>) -> FormalPoly {
        FormalPoly(
            self.0
                .iter()
                .map(|(m, c)| {
                    let mut nm: FMono = m.iter().map(|&(id, e)| (map[&id], e)).collect();
                    nm.sort_unstable();
                    (nm, c.clone())
                })
                .collect(),
        )
    }
}

// ---- formal forms -----------------------------------------------------------

/// One slot of a wedge monomial: a declared generator or the inert
/// differential atom of a coefficient whose `d` was left unspecified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BasisEl {
    Gen(u16),
    DAtom(u16),
}

/// A formal k-form: antisymmetrized map from sorted basis tuples to
/// coefficient polynomials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalForm {
    degree: u8,
    terms: BTreeMap<Vec<BasisEl>, FormalPoly>,
}

impl FormalForm {
    pub fn zero(degree: u8) -> Self {
        FormalForm {
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every surviving term carries at least one unspecified
    /// differential atom.
    pub fn is_zero_modulo_atoms(&self) -> bool {
        self.terms
            .keys()
            .all(|t| t.iter().any(|e| matches!(e, BasisEl::DAtom(_))))
    }

    fn insert(&mut self, idx: Vec<BasisEl>, p: FormalPoly) {
        if p.is_zero() {
            return;
        }
        debug_assert_eq!(idx.len(), self.degree as usize);
        match self.terms.entry(idx) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(p);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&p);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &FormalForm) -> FormalForm {
        debug_assert_eq!(self.degree, other.degree);
        let mut out = self.clone();
        for (idx, p) in &other.terms {
            out.insert(idx.clone(), p.clone());
        }
        out
    }

    pub fn neg(&self) -> FormalForm {
        FormalForm {
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(i, p)| (i.clone(), p.neg()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &FormalForm) -> FormalForm {
        self.add(&other.neg())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<BasisEl>, &FormalPoly)> {
        self.terms.iter()
    }
}

/// Sorts a tuple into canonical order; `None` if an element repeats (the term
/// vanishes), otherwise the parity of the permutation.
fn normalize_tuple(mut v: Vec<BasisEl>) -> Option<(Vec<BasisEl>, bool)> {
    let mut swaps = 0usize;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            swaps += 1;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, swaps % 2 == 1))
}

/// Graded wedge of formal forms.
pub fn formal_wedge(a: &FormalForm, b: &FormalForm) -> FormalForm {
    let mut out = FormalForm::zero(a.degree + b.degree);
    for (ia, pa) in &a.terms {
        for (ib, pb) in &b.terms {
            let mut idx = ia.clone();
            idx.extend_from_slice(ib);
            if let Some((idx, odd)) = normalize_tuple(idx) {
                let p = pa.mul(pb);
                out.insert(idx, if odd { p.neg() } else { p });
            }
        }
    }
    out
}

// ---- the system -------------------------------------------------------------

/// Formal EDS: named generators with structure equations, and named scalar
/// coefficients each with a specified differential or marked unspecified.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalSystem {
    generators: Vec<String>,
    coefficients: Vec<String>,
    /// Indexed by coefficient id; `None` marks an unspecified differential.
    differentials: Vec<Option<FormalForm>>,
    /// Indexed by generator id.
    structure: Vec<FormalForm>,
}

impl FormalSystem {
    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn coefficient_names(&self) -> &[String] {
        &self.coefficients
    }

    pub fn generator_id(&self, name: &str) -> Result<u16, EdsError> {
        self.generators
            .iter()
            .position(|g| g == name)
            .map(|i| i as u16)
            .ok_or_else(|| EdsError::UndeclaredGenerator(name.to_string()))
    }

    pub fn structure_equation(&self, name: &str) -> Result<&FormalForm, EdsError> {
        Ok(&self.structure[self.generator_id(name)? as usize])
    }

    pub fn differential_of(&self, name: &str) -> Result<Option<&FormalForm>, EdsError> {
        let id = self
            .coefficients
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| EdsError::UndeclaredCoefficient(name.to_string()))?;
        Ok(self.differentials[id].as_ref())
    }

    /// The generator itself as a 1-form.
    pub fn one_form(&self, name: &str) -> Result<FormalForm, EdsError> {
        let id = self.generator_id(name)?;
        let mut f = FormalForm::zero(1);
        f.insert(vec![BasisEl::Gen(id)], FormalPoly::one());
        Ok(f)
    }

    /// `d` of one basis element: the structure equation for a generator, zero
    /// for a differential atom (`d` of `d⟨name⟩` vanishes).
    fn d_basis(&self, el: BasisEl) -> FormalForm {
        match el {
            BasisEl::Gen(id) => self.structure[id as usize].clone(),
            BasisEl::DAtom(_) => FormalForm::zero(2),
        }
    }

    /// `d` of one coefficient symbol: its specified expansion, or the inert
    /// atom when unspecified.
    fn d_coefficient(&self, id: u16) -> FormalForm {
        match &self.differentials[id as usize] {
            Some(f) => f.clone(),
            None => {
                let mut f = FormalForm::zero(1);
                f.insert(vec![BasisEl::DAtom(id)], FormalPoly::one());
                f
            }
        }
    }

    // ---- rendering ----

    fn coeff_name(&self, id: u16) -> &str {
        &self.coefficients[id as usize]
    }

    fn basis_name(&self, el: BasisEl) -> String {
        match el {
            BasisEl::Gen(id) => self.generators[id as usize].clone(),
            BasisEl::DAtom(id) => format!("d{}", self.coeff_name(id)),
        }
    }

    pub fn render_poly(&self, p: &FormalPoly) -> String {
        if p.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in p.0.iter().enumerate() {
            if i > 0 {
                out.push_str(" + ");
            }
            let mut factors: Vec<String> = Vec::new();
            if !c.is_one() || m.is_empty() {
                factors.push(c.to_string());
            }
            for &(id, e) in m {
                if e == 1 {
                    factors.push(self.coeff_name(id).to_string());
                } else {
                    factors.push(format!("{}^{}", self.coeff_name(id), e));
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }

    /// Canonical name-resolved rendering; equal strings mean equal forms over
    /// equal name sets, independent of internal id layout.
    pub fn render_form(&self, f: &FormalForm) -> String {
        if f.is_zero() {
            return "0".to_string();
        }
        let mut parts: Vec<String> = Vec::new();
        for (idx, p) in &f.terms {
            let names: Vec<String> = idx.iter().map(|&e| self.basis_name(e)).collect();
            let mut s = String::new();
            write!(s, "({}) {}", self.render_poly(p), names.join("^")).unwrap();
            parts.push(s);
        }
        parts.sort();
        parts.join(" + ")
    }

    pub fn render_structure_equation(&self, gen: &str) -> Result<String, EdsError> {
        Ok(self.render_form(self.structure_equation(gen)?))
    }
}

/// Graded Leibniz expansion of `d` using the structure equations and the
/// specified coefficient differentials; unspecified differentials produce
/// symbolic `d⟨name⟩` atoms carried through.
pub fn formal_d(a: &FormalForm, sys: &FormalSystem) -> FormalForm {
    let mut out = FormalForm::zero(a.degree + 1);
    for (idx, p) in &a.terms {
        // dP ∧ e_I
        let mut ids = BTreeSet::new();
        p.support(&mut ids);
        for id in ids {
            let dp = p.derivative(id);
            if dp.is_zero() {
                continue;
            }
            let dc = sys.d_coefficient(id);
            for (cidx, cp) in &dc.terms {
                let mut full = cidx.clone();
                full.extend_from_slice(idx);
                if let Some((full, odd)) = normalize_tuple(full) {
                    let q = dp.mul(cp);
                    out.insert(full, if odd { q.neg() } else { q });
                }
            }
        }
        // P · Σ_j (-1)^(j-1) e_{i1} ∧ … ∧ d(e_ij) ∧ … ∧ e_ik
        for (j, &el) in idx.iter().enumerate() {
            let d_el = sys.d_basis(el);
            if d_el.is_zero() {
                continue;
            }
            let sign_front = j % 2 == 1;
            for (didx, dp) in &d_el.terms {
                let mut full: Vec<BasisEl> = Vec::with_capacity(idx.len() + 1);
                full.extend_from_slice(&idx[..j]);
                full.extend_from_slice(didx);
                full.extend_from_slice(&idx[j + 1..]);
                if let Some((full, odd)) = normalize_tuple(full) {
                    let q = p.mul(dp);
                    out.insert(full, if odd != sign_front { q.neg() } else { q });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualClass {
    IdenticallyZero,
    /// Every surviving term contains at least one unspecified `d⟨name⟩` atom.
    ZeroModuloUnspecified,
    Nonzero,
}

impl std::fmt::Display for ResidualClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResidualClass::IdenticallyZero => write!(f, "identically zero"),
            ResidualClass::ZeroModuloUnspecified => write!(f, "zero modulo unspecified atoms"),
            ResidualClass::Nonzero => write!(f, "nonzero"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// A generator name, or a coefficient name for the `d(d coefficient)`
    /// consistency rows.
    pub target: String,
    pub class: ResidualClass,
    pub residual: FormalForm,
}

fn classify_residual(residual: &FormalForm) -> ResidualClass {
    if residual.is_zero() {
        ResidualClass::IdenticallyZero
    } else if residual.is_zero_modulo_atoms() {
        ResidualClass::ZeroModuloUnspecified
    } else {
        ResidualClass::Nonzero
    }
}

/// `d` of every structure equation and of every specified coefficient
/// differential, reduced with all specified differentials.
pub fn d_squared_residuals(sys: &FormalSystem) -> Vec<ResidualReport> {
    let mut out: Vec<ResidualReport> = sys
        .generators
        .iter()
        .enumerate()
        .map(|(id, name)| {
            let residual = formal_d(&sys.structure[id], sys);
            ResidualReport {
                target: name.clone(),
                class: classify_residual(&residual),
                residual,
            }
        })
        .collect();
    for (id, name) in sys.coefficients.iter().enumerate() {
        if let Some(dc) = &sys.differentials[id] {
            let residual = formal_d(dc, sys);
            out.push(ResidualReport {
                target: name.clone(),
                class: classify_residual(&residual),
                residual,
            });
        }
    }
    out
}

/// Square matrix of formal 1-forms.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMatrix {
    pub dim: usize,
    /// Row-major entries.
    pub entries: Vec<FormalForm>,
}

impl ConnectionMatrix {
    pub fn entry(&self, i: usize, j: usize) -> &FormalForm {
        &self.entries[i * self.dim + j]
    }
}

/// Curvature `K = dω + ω ∧ ω`, entrywise degree 2.
pub fn connection_curvature(
    conn: &ConnectionMatrix,
    sys: &FormalSystem,
) -> Result<Vec<FormalForm>, EdsError> {
    if conn.entries.len() != conn.dim * conn.dim {
        return Err(EdsError::DimensionMismatch);
    }
    let n = conn.dim;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut k = formal_d(conn.entry(i, j), sys);
            for l in 0..n {
                k = k.add(&formal_wedge(conn.entry(i, l), conn.entry(l, j)));
            }
            out.push(k);
        }
    }
    Ok(out)
}

/// Substitutes zero for the named coefficients: their monomials vanish from
/// every polynomial, their differentials are dropped (a vanishing function
/// has vanishing differential), and the remaining coefficients are
/// reindexed.
pub fn flat_specialize(sys: &FormalSystem, zeroed: &BTreeSet<String>) -> FormalSystem {
    let zero_ids: BTreeSet<u16> = sys
        .coefficients
        .iter()
        .enumerate()
        .filter(|(_, n)| zeroed.contains(*n))
        .map(|(i, _)| i as u16)
        .collect();

    let kept: Vec<(u16, String)> = sys
        .coefficients
        .iter()
        .enumerate()
        .filter(|(i, _)| !zero_ids.contains(&(*i as u16)))
        .map(|(i, n)| (i as u16, n.clone()))
        .collect();
    let remap: BTreeMap<u16, u16> = kept
        .iter()
        .enumerate()
        .map(|(new, (old, _))| (*old, new as u16))
        .collect();

    let fix_form = |f: &FormalForm| -> FormalForm {
        let mut out = FormalForm::zero(f.degree);
        for (idx, p) in &f.terms {
            // Tuples with a zeroed differential atom vanish.
            if idx
                .iter()
                .any(|e| matches!(e, BasisEl::DAtom(id) if zero_ids.contains(id)))
            {
                continue;
            }
            let p = p.zero_out(&zero_ids);
            if p.is_zero() {
                continue;
            }
            let idx: Vec<BasisEl> = idx
                .iter()
                .map(|&e| match e {
                    BasisEl::Gen(g) => BasisEl::Gen(g),
                    BasisEl::DAtom(c) => BasisEl::DAtom(remap[&c]),
                })
                .collect();
            out.insert(idx, p.remap(&remap));
        }
        out
    };

    FormalSystem {
        generators: sys.generators.clone(),
        coefficients: kept.iter().map(|(_, n)| n.clone()).collect(),
        differentials: kept
            .iter()
            .map(|(old, _)| sys.differentials[*old as usize].as_ref().map(&fix_form))
            .collect(),
        structure: sys.structure.iter().map(&fix_form).collect(),
    }
}

/// One single-term sign flip of a structure equation.
#[derive(Debug, Clone)]
pub struct Mutation {
    pub description: String,
    pub system: FormalSystem,
}

/// Every system obtained by negating exactly one structure-equation term.
pub fn sign_mutations(sys: &FormalSystem) -> Vec<Mutation> {
    let mut out = Vec::new();
    for (gid, gen) in sys.generators.iter().enumerate() {
        let tuples: Vec<Vec<BasisEl>> = sys.structure[gid].terms.keys().cloned().collect();
        for idx in tuples {
            let mut mutated = sys.clone();
            let term = mutated.structure[gid].terms.get_mut(&idx).unwrap();
            *term = term.neg();
            let names: Vec<String> = idx.iter().map(|&e| sys.basis_name(e)).collect();
            out.push(Mutation {
                description: format!("d{gen}: flip {}", names.join("^")),
                system: mutated,
            });
        }
    }
    out
}

// ---- fixtures ----------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct TermSpec {
    c: String,
    w: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct FixtureSpec {
    schema: u32,
    #[allow(dead_code)]
    name: String,
    generators: Vec<String>,
    structure: BTreeMap<String, Vec<TermSpec>>,
    coefficients: BTreeMap<String, Option<Vec<TermSpec>>>,
    #[serde(default)]
    connection: Option<Vec<Vec<Vec<TermSpec>>>>,
}

/// Loads a fixture: the system plus the optional connection matrix.
pub fn load_fixture(text: &str) -> Result<(FormalSystem, Option<ConnectionMatrix>), EdsError> {
    let spec: FixtureSpec = serde_json::from_str(text)?;
    if spec.schema != 1 {
        return Err(EdsError::Schema(spec.schema));
    }
    let generators = spec.generators.clone();
    let coefficients: Vec<String> = spec.coefficients.keys().cloned().collect();

    let gen_id = |name: &str| -> Result<u16, EdsError> {
        generators
            .iter()
            .position(|g| g == name)
            .map(|i| i as u16)
            .ok_or_else(|| EdsError::UndeclaredGenerator(name.to_string()))
    };
    let coeff_id = |name: &str| -> Result<u16, EdsError> {
        coefficients
            .iter()
            .position(|c| c == name)
            .map(|i| i as u16)
            .ok_or_else(|| EdsError::UndeclaredCoefficient(name.to_string()))
    };

    let build_form = |terms: &[TermSpec], degree: u8| -> Result<FormalForm, EdsError> {
        let mut f = FormalForm::zero(degree);
        for t in terms {
            if t.w.len() != degree as usize {
                return Err(EdsError::PolyParse {
                    text: t.c.clone(),
                    message: format!("wedge slot count {} != degree {degree}", t.w.len()),
                });
            }
            let poly = parse_formal_poly(&t.c, &coeff_id)?;
            let idx: Vec<BasisEl> = t
                .w
                .iter()
                .map(|g| gen_id(g).map(BasisEl::Gen))
                .collect::<Result<_, _>>()?;
            if let Some((idx, odd)) = normalize_tuple(idx) {
                f.insert(idx, if odd { poly.neg() } else { poly });
            }
        }
        Ok(f)
    };

    let mut structure = Vec::with_capacity(generators.len());
    for g in &generators {
        let terms = spec.structure.get(g).ok_or_else(|| EdsError::PolyParse {
            text: g.clone(),
            message: "generator has no structure equation".to_string(),
        })?;
        structure.push(build_form(terms, 2)?);
    }
    for extra in spec.structure.keys() {
        gen_id(extra)?;
    }

    let mut differentials = Vec::with_capacity(coefficients.len());
    for c in &coefficients {
        match &spec.coefficients[c] {
            Some(terms) => differentials.push(Some(build_form(terms, 1)?)),
            None => differentials.push(None),
        }
    }

    let connection = match &spec.connection {
        None => None,
        Some(rows) => {
            let dim = rows.len();
            let mut entries = Vec::with_capacity(dim * dim);
            for row in rows {
                if row.len() != dim {
                    return Err(EdsError::DimensionMismatch);
                }
                for cell in row {
                    entries.push(build_form(cell, 1)?);
                }
            }
            Some(ConnectionMatrix { dim, entries })
        }
    };
    let _ = &build_form;

    let system = FormalSystem {
        generators,
        coefficients,
        differentials,
        structure,
    };

    Ok((system, connection))
}

// Minimal recursive-descent parser for coefficient polynomials: rational
// constants, coefficient names (letters, digits, `|`), `+ - * /` (division by
// integer constants only), integer `^`, parentheses.
fn parse_formal_poly<F>(text: &str, coeff_id: &F) -> Result<FormalPoly, EdsError>
where
    F: Fn(&str) -> Result<u16, EdsError>,
{
    struct P<'a> {
        s: &'a [u8],
        pos: usize,
    }
    impl<'a> P<'a> {
        fn skip_ws(&mut self) {
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
        }
        fn peek(&mut self) -> Option<u8> {
            self.skip_ws();
            self.s.get(self.pos).copied()
        }
        fn bump(&mut self) -> Option<u8> {
            let c = self.peek();
            if c.is_some() {
                self.pos += 1;
            }
            c
        }
    }

    fn err(text: &str, message: &str) -> EdsError {
        EdsError::PolyParse {
            text: text.to_string(),
            message: message.to_string(),
        }
    }

    fn integer(p: &mut P, text: &str) -> Result<BigInt, EdsError> {
        p.skip_ws();
        let start = p.pos;
        while p.pos < p.s.len() && p.s[p.pos].is_ascii_digit() {
            p.pos += 1;
        }
        if start == p.pos {
            return Err(err(text, "expected an integer"));
        }
        Ok(std::str::from_utf8(&p.s[start..p.pos])
            .unwrap()
            .parse()
            .unwrap())
    }

    fn primary<F>(p: &mut P, text: &str, coeff_id: &F) -> Result<FormalPoly, EdsError>
    where
        F: Fn(&str) -> Result<u16, EdsError>,
    {
        match p.peek() {
            Some(b'(') => {
                p.bump();
                let e = expr(p, text, coeff_id)?;
                if p.bump() != Some(b')') {
                    return Err(err(text, "expected `)`"));
                }
                Ok(e)
            }
            Some(b'-') => {
                p.bump();
                Ok(primary(p, text, coeff_id)?.neg())
            }
            Some(c) if c.is_ascii_digit() => {
                let n = integer(p, text)?;
                Ok(FormalPoly::constant(BigRational::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = p.pos;
                while p.pos < p.s.len()
                    && (p.s[p.pos].is_ascii_alphanumeric() || p.s[p.pos] == b'|')
                {
                    p.pos += 1;
                }
                let name = std::str::from_utf8(&p.s[start..p.pos]).unwrap();
                Ok(FormalPoly::symbol(coeff_id(name)?))
            }
            _ => Err(err(text, "expected a factor")),
        }
    }

    fn factor<F>(p: &mut P, text: &str, coeff_id: &F) -> Result<FormalPoly, EdsError>
    where
        F: Fn(&str) -> Result<u16, EdsError>,
    {
        let base = primary(p, text, coeff_id)?;
        if p.peek() == Some(b'^') {
            p.bump();
            let n = integer(p, text)?;
            let n: u32 = n.try_into().map_err(|_| err(text, "exponent too large"))?;
            return Ok(base.pow(n));
        }
        Ok(base)
    }

    fn term<F>(p: &mut P, text: &str, coeff_id: &F) -> Result<FormalPoly, EdsError>
    where
        F: Fn(&str) -> Result<u16, EdsError>,
    {
        let mut acc = factor(p, text, coeff_id)?;
        loop {
            match p.peek() {
                Some(b'*') => {
                    p.bump();
                    acc = acc.mul(&factor(p, text, coeff_id)?);
                }
                Some(b'/') => {
                    p.bump();
                    let n = integer(p, text)?;
                    if n.is_zero() {
                        return Err(err(text, "division by zero"));
                    }
                    acc = acc.mul(&FormalPoly::constant(BigRational::new(BigInt::one(), n)));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn expr<F>(p: &mut P, text: &str, coeff_id: &F) -> Result<FormalPoly, EdsError>
    where
        F: Fn(&str) -> Result<u16, EdsError>,
    {
        let mut acc = term(p, text, coeff_id)?;
        loop {
            match p.peek() {
                Some(b'+') => {
                    p.bump();
                    acc = acc.add(&term(p, text, coeff_id)?);
                }
                Some(b'-') => {
                    p.bump();
                    acc = acc.add(&term(p, text, coeff_id)?.neg());
                }
                _ => return Ok(acc),
            }
        }
    }

    let mut p = P {
        s: text.as_bytes(),
        pos: 0,
    };
    let out = expr(&mut p, text, coeff_id)?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(err(text, "trailing input"));
    }
    Ok(out)
}

// ---- bundled systems ----------------------------------------------------------

pub const FIXTURE_ODE_EDS: &str = include_str!("../fixtures/ode_contact_eds.json");
pub const FIXTURE_REDUCED: &str = include_str!("../fixtures/reduced_pair_eds.json");
pub const FIXTURE_FULL_AS_PRINTED: &str = include_str!("../fixtures/full_pair_eds.json");
pub const FIXTURE_FULL_CORRECTED: &str =
    include_str!("../fixtures/full_pair_eds_corrected.json");

/// The 10-generator contact EDS of a third-order ODE, together with its
/// sp(4)-valued connection matrix.
pub fn ode_contact_system() -> (FormalSystem, ConnectionMatrix) {
    let (sys, conn) = load_fixture(FIXTURE_ODE_EDS).expect("bundled fixture loads");
    (sys, conn.expect("bundled fixture carries a connection"))
}

/// The reduced pair system (mixed invariant already zero): ten generators,
/// coefficients `I1`, `I2` and their coframe derivatives.
pub fn reduced_pair_system() -> FormalSystem {
    load_fixture(FIXTURE_REDUCED)
        .expect("bundled fixture loads")
        .0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FullPairVariant {
    /// Verbatim transcription (one scaling term repeats `pi1`).
    AsPrinted,
    /// The repeated `pi1` read as `pi2`.
    Corrected,
}

/// The full ten-generator pair system with the `I3` tower of coefficient
/// differentials. Two variants ship because the printed `dI3|2` equation
/// contains `-I3|2 pi1 + 2 I3|2 pi1`, an apparent slip for `… + 2 I3|2 pi2`.
pub fn full_pair_system(variant: FullPairVariant) -> FormalSystem {
    let text = match variant {
        FullPairVariant::AsPrinted => FIXTURE_FULL_AS_PRINTED,
        FullPairVariant::Corrected => FIXTURE_FULL_CORRECTED,
    };
    load_fixture(text).expect("bundled fixture loads").0
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY_MC: &str = r#"{
        "schema": 1,
        "name": "toy",
        "generators": ["a", "b"],
        "structure": {
            "a": [],
            "b": [ {"c": "1", "w": ["a", "b"]} ]
        },
        "coefficients": {}
    }"#;

    #[test]
    fn toy_maurer_cartan_d_squared() {
        let (sys, _) = load_fixture(TOY_MC).unwrap();
        // d(db) = da∧b - a∧db = 0 - a∧(a∧b) = 0.
        let db = sys.structure_equation("b").unwrap().clone();
        let ddb = formal_d(&db, &sys);
        assert!(ddb.is_zero(), "{}", sys.render_form(&ddb));
        for r in d_squared_residuals(&sys) {
            assert_eq!(r.class, ResidualClass::IdenticallyZero);
        }
    }

    #[test]
    fn unspecified_atoms_are_carried() {
        let toy = r#"{
            "schema": 1,
            "name": "toy-atoms",
            "generators": ["a", "b", "g"],
            "structure": {
                "a": [ {"c": "J", "w": ["b", "g"]} ],
                "b": [],
                "g": []
            },
            "coefficients": { "J": null }
        }"#;
        let (sys, _) = load_fixture(toy).unwrap();
        let reports = d_squared_residuals(&sys);
        // d²a = dJ ∧ b ∧ g: zero modulo the unspecified atom.
        assert_eq!(reports[0].class, ResidualClass::ZeroModuloUnspecified);
        assert!(sys.render_form(&reports[0].residual).contains("dJ"));
    }

    #[test]
    fn undeclared_names_are_rejected() {
        let bad = r#"{
            "schema": 1,
            "name": "bad",
            "generators": ["a"],
            "structure": { "a": [ {"c": "1", "w": ["a", "q"]} ] },
            "coefficients": {}
        }"#;
        assert!(matches!(
            load_fixture(bad),
            Err(EdsError::UndeclaredGenerator(n)) if n == "q"
        ));
    }

    #[test]
    fn poly_parser_cases() {
        let names = ["I1", "I3|52", "I3"];
        let id = |n: &str| -> Result<u16, EdsError> {
            names
                .iter()
                .position(|x| *x == n)
                .map(|i| i as u16)
                .ok_or_else(|| EdsError::UndeclaredCoefficient(n.to_string()))
        };
        let p = parse_formal_poly("1/8*(2*I1 + I3|52) - I3^2", &id).unwrap();
        let q = parse_formal_poly("I1/4 + I3|52/8 - I3*I3", &id).unwrap();
        assert_eq!(p, q);
        assert!(parse_formal_poly("Nope", &id).is_err());
    }

    #[test]
    fn specialize_drops_coefficients() {
        let toy = r#"{
            "schema": 1,
            "name": "toy-drop",
            "generators": ["a", "b"],
            "structure": {
                "a": [ {"c": "K", "w": ["a", "b"]} ],
                "b": [ {"c": "1", "w": ["a", "b"]}, {"c": "K^2 + L", "w": ["b", "a"]} ]
            },
            "coefficients": { "K": null, "L": null }
        }"#;
        let (sys, _) = load_fixture(toy).unwrap();
        let zeroed: BTreeSet<String> = ["K".to_string()].into();
        let spec = flat_specialize(&sys, &zeroed);
        assert_eq!(spec.coefficient_names(), &["L".to_string()]);
        assert_eq!(spec.render_structure_equation("a").unwrap(), "0");
        // b keeps the constant term and the L term.
        let rendered = spec.render_structure_equation("b").unwrap();
        assert!(rendered.contains('L'), "{rendered}");
        // Zeroing nothing is the identity.
        assert_eq!(flat_specialize(&sys, &BTreeSet::new()), sys);
    }

    #[test]
    fn d_of_a_generator_is_its_structure_equation() {
        let (sys, _) = load_fixture(TOY_MC).unwrap();
        let b = sys.one_form("b").unwrap();
        assert_eq!(formal_d(&b, &sys), *sys.structure_equation("b").unwrap());
    }

    #[test]
    fn zero_connection_has_zero_curvature() {
        let (sys, _) = load_fixture(TOY_MC).unwrap();
        let conn = ConnectionMatrix {
            dim: 2,
            entries: vec![FormalForm::zero(1); 4],
        };
        let curv = connection_curvature(&conn, &sys).unwrap();
        assert!(curv.iter().all(|k| k.is_zero()));
    }

    #[test]
    fn wedge_signs() {
        let (sys, _) = load_fixture(TOY_MC).unwrap();
        let a = sys.one_form("a").unwrap();
        let b = sys.one_form("b").unwrap();
        let ab = formal_wedge(&a, &b);
        let ba = formal_wedge(&b, &a);
        assert_eq!(ab, ba.neg());
        assert!(formal_wedge(&a, &a).is_zero());
    }
}

#[cfg(test)]
mod fixture_checks {
    use super::*;

    #[test]
    fn reduced_system_pure_mc_is_flat() {
        let sys = reduced_pair_system();
        let zeroed: BTreeSet<String> = sys.coefficient_names().iter().cloned().collect();
        let mc = flat_specialize(&sys, &zeroed);
        for r in d_squared_residuals(&mc) {
            assert_eq!(
                r.class,
                ResidualClass::IdenticallyZero,
                "d² of {} left {}",
                r.target,
                mc.render_form(&r.residual)
            );
        }
    }

    #[test]
    fn ode_system_flat_curvature_vanishes() {
        let (sys, conn) = ode_contact_system();
        let zeroed: BTreeSet<String> = sys.coefficient_names().iter().cloned().collect();
        let flat = flat_specialize(&sys, &zeroed);
        for r in d_squared_residuals(&flat) {
            assert_eq!(
                r.class,
                ResidualClass::IdenticallyZero,
                "d² of {} left {}",
                r.target,
                flat.render_form(&r.residual)
            );
        }
        let curv = connection_curvature(&conn, &flat).unwrap();
        for (i, k) in curv.iter().enumerate() {
            assert!(
                k.is_zero(),
                "curvature entry ({}, {}) = {}",
                i / 4,
                i % 4,
                flat.render_form(k)
            );
        }
    }
}

#[cfg(test)]
mod fixture_cross_checks {
    use super::*;

    /// Over the generic ODE system the curvature entries must be pure
    /// invariant-coefficient combinations of base wedges: no Ω∧Ω or Ω∧θ
    /// leftovers and no differential atoms.
    #[test]
    fn generic_curvature_entries_are_invariant_wedges() {
        let (sys, conn) = ode_contact_system();
        let theta_ids: Vec<u16> = (0..5).collect();
        let curv = connection_curvature(&conn, &sys).unwrap();
        for (i, k) in curv.iter().enumerate() {
            for (idx, poly) in k.terms() {
                for el in idx {
                    match el {
                        BasisEl::Gen(id) => assert!(
                            theta_ids.contains(id),
                            "entry ({}, {}) carries a connection generator: {}",
                            i / 4,
                            i % 4,
                            sys.render_form(k)
                        ),
                        BasisEl::DAtom(_) => panic!(
                            "entry ({}, {}) carries a differential atom: {}",
                            i / 4,
                            i % 4,
                            sys.render_form(k)
                        ),
                    }
                }
                // Nonempty base-wedge coefficients must involve at least one
                // named invariant (pure constants would be Lie-algebra
                // leftovers).
                assert!(!poly.is_zero());
                let mut ids = BTreeSet::new();
                poly.support(&mut ids);
                assert!(
                    !ids.is_empty(),
                    "entry ({}, {}) has a constant leftover: {}",
                    i / 4,
                    i % 4,
                    sys.render_form(k)
                );
            }
        }
    }

    /// Zeroing the mixed-invariant tower of the full system must reproduce
    /// the reduced system on the base structure equations and the
    /// differentials of the two surviving invariants.
    #[test]
    fn full_system_specializes_to_reduced() {
        for variant in [FullPairVariant::AsPrinted, FullPairVariant::Corrected] {
            let full = full_pair_system(variant);
            let reduced = reduced_pair_system();
            let zeroed: BTreeSet<String> = full
                .coefficient_names()
                .iter()
                .filter(|n| n.starts_with("I3"))
                .cloned()
                .collect();
            let spec = flat_specialize(&full, &zeroed);
            for gen in ["w1", "w2", "w3", "w4", "w5"] {
                assert_eq!(
                    spec.render_structure_equation(gen).unwrap(),
                    reduced.render_structure_equation(gen).unwrap(),
                    "structure equation for {gen} (variant {variant:?})"
                );
            }
            for inv in ["I1", "I2"] {
                let a = spec.differential_of(inv).unwrap().unwrap();
                let b = reduced.differential_of(inv).unwrap().unwrap();
                assert_eq!(spec.render_form(a), reduced.render_form(b), "d{inv}");
            }
        }
    }

    /// The printed and corrected variants differ precisely in the `dI3|2`
    /// scaling term, and only there.
    #[test]
    fn variants_differ_only_in_one_differential() {
        let printed = full_pair_system(FullPairVariant::AsPrinted);
        let corrected = full_pair_system(FullPairVariant::Corrected);
        for gen in printed.generators() {
            assert_eq!(
                printed.render_structure_equation(gen).unwrap(),
                corrected.render_structure_equation(gen).unwrap()
            );
        }
        let mut differing = Vec::new();
        for name in printed.coefficient_names() {
            let a = printed.differential_of(name).unwrap();
            let b = corrected.differential_of(name).unwrap();
            let ra = a.map(|f| printed.render_form(f));
            let rb = b.map(|f| corrected.render_form(f));
            if ra != rb {
                differing.push(name.clone());
            }
        }
        assert_eq!(differing, vec!["I3|2".to_string()]);
    }
}
