//! Differential forms on a 5-dimensional chart: exterior algebra, the
//! standard coframe of the PDE pair, Levi form extraction, Frobenius and
//! symmetry residuals, and pullback under coordinate changes.
//!
//! Charts are explicit values (the worked coordinate change instantiates a
//! second chart and maps between them); nothing is global.

use crate::expr::{is_zero, simplify, substitute, Expr, Sym, ZeroConfig, ZeroError, ZeroVerdict};
use crate::jet::PdeSystem;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Five ordered coordinates naming a chart; the coordinate differentials
/// inherit this order as the form basis.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Chart(Arc<[Sym; 5]>);

impl Chart {
    pub fn new(coords: [&str; 5]) -> Self {
        Chart(Arc::new(coords.map(Sym::new)))
    }

    pub fn coords(&self) -> &[Sym; 5] {
        &self.0
    }

    pub fn index_of(&self, s: &Sym) -> Option<usize> {
        self.0.iter().position(|c| c == s)
    }
}

/// The jet chart `(x, y, z, p, r)`.
pub fn standard_chart() -> Chart {
    Chart::new(["x", "y", "z", "p", "r"])
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BasisKind {
    /// Coordinate differentials `d(chart[i])`.
    Coordinate,
    /// A declared coframe `ω¹..ω⁵`.
    Coframe,
}

#[derive(Debug, Error, PartialEq)]
pub enum FormsError {
    #[error("forms live in different bases or charts")]
    BasisMismatch,
    #[error("wedge degree exceeds the manifold dimension")]
    DegreeOverflow,
    #[error("operation requires the coordinate-differential basis")]
    CoordinateBasisRequired,
    #[error("coframe transition matrix is singular")]
    SingularTransition,
    #[error("generators are not independent")]
    DependentGenerators,
    #[error("Levi extraction left a remainder outside the span of ω¹")]
    LeviRemainder(String),
    #[error(transparent)]
    Zero(#[from] ZeroError),
}

/// Degree-k differential form with expression coefficients, stored sparsely
/// over strictly increasing index tuples into the 5-element basis.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct KForm {
    chart: Chart,
    basis: BasisKind,
    degree: u8,
    terms: BTreeMap<Vec<u8>, Expr>,
}

impl KForm {
    pub fn zero(chart: Chart, basis: BasisKind, degree: u8) -> Self {
        assert!(degree <= 5);
        KForm {
            chart,
            basis,
            degree,
            terms: BTreeMap::new(),
        }
    }

    /// Degree-0 form (a function).
    pub fn scalar(chart: Chart, basis: BasisKind, value: Expr) -> Self {
        let mut f = KForm::zero(chart, basis, 0);
        f.insert(vec![], value);
        f
    }

    /// The coordinate differential `d(chart[i])`.
    pub fn basis_one_form(chart: Chart, basis: BasisKind, i: usize) -> Self {
        let mut f = KForm::zero(chart, basis, 1);
        f.insert(vec![i as u8], Expr::one());
        f
    }

    pub fn from_terms(
        chart: Chart,
        basis: BasisKind,
        degree: u8,
        terms: impl IntoIterator<Item = (Vec<u8>, Expr)>,
    ) -> Self {
        let mut f = KForm::zero(chart, basis, degree);
        for (idx, c) in terms {
            f.insert(idx, c);
        }
        f
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &Expr)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, idx: &[u8]) -> Expr {
        self.terms.get(idx).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, idx: Vec<u8>, c: Expr) {
        debug_assert_eq!(idx.len(), self.degree as usize);
        debug_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        if c.is_zero_literal() {
            return;
        }
        match self.terms.entry(idx) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + c;
                if sum.is_zero_literal() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &KForm) -> Result<KForm, FormsError> {
        if self.chart != other.chart || self.basis != other.basis || self.degree != other.degree
        {
            return Err(FormsError::BasisMismatch);
        }
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.insert(idx.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &KForm) -> Result<KForm, FormsError> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, factor: &Expr) -> KForm {
        let mut out = KForm::zero(self.chart.clone(), self.basis, self.degree);
        if factor.is_zero_literal() {
            return out;
        }
        for (idx, c) in &self.terms {
            out.insert(idx.clone(), factor * c);
        }
        out
    }

    /// Simplifies every coefficient and drops the ones that normalize to
    /// zero.
    pub fn simplified(&self) -> KForm {
        let mut out = KForm::zero(self.chart.clone(), self.basis, self.degree);
        for (idx, c) in &self.terms {
            out.insert(idx.clone(), simplify(c));
        }
        out
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.simplified().is_empty()
    }

    /// Worst zero verdict across the coefficients: zero only if every
    /// coefficient has a zero verdict; the first nonzero witness wins.
    pub fn zero_verdict(&self, cfg: &ZeroConfig) -> Result<ZeroVerdict, ZeroError> {
        let mut weakest = ZeroVerdict::StructurallyZero;
        for c in self.terms.values() {
            match is_zero(c, cfg)? {
                ZeroVerdict::StructurallyZero => {}
                v @ ZeroVerdict::ProbablyZero { .. } => {
                    if weakest.is_structural() {
                        weakest = v;
                    }
                }
                v @ ZeroVerdict::Nonzero { .. } => return Ok(v),
            }
        }
        Ok(weakest)
    }
}

/// Merges two strictly increasing tuples, counting transpositions; `None`
/// when an index repeats.
fn merge_indices(a: &[u8], b: &[u8]) -> Option<(Vec<u8>, bool)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut swaps = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining entries of a.
            swaps += a.len() - i;
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((out, swaps % 2 == 1))
}

/// Graded-antisymmetric product.
pub fn wedge(a: &KForm, b: &KForm) -> Result<KForm, FormsError> {
    if a.chart != b.chart || a.basis != b.basis {
        return Err(FormsError::BasisMismatch);
    }
    let degree = a.degree + b.degree;
    if degree > 5 {
        return Err(FormsError::DegreeOverflow);
    }
    let mut out = KForm::zero(a.chart.clone(), a.basis, degree);
    for (ia, ca) in &a.terms {
        for (ib, cb) in &b.terms {
            if let Some((idx, odd)) = merge_indices(ia, ib) {
                let c = ca * cb;
                out.insert(idx, if odd { c.neg() } else { c });
            }
        }
    }
    Ok(out)
}

pub fn wedge_all(forms: &[&KForm]) -> Result<KForm, FormsError> {
    let mut iter = forms.iter();
    let first = iter.next().expect("at least one form");
    let mut acc = (*first).clone();
    for f in iter {
        acc = wedge(&acc, f)?;
    }
    Ok(acc)
}

/// `d` on coordinate-basis forms: the differential of each coefficient wedged
/// with its basis monomial. Coframe-basis forms must be converted first (the
/// conversion needs the coframe, which `d` does not take).
pub fn exterior_derivative(a: &KForm) -> Result<KForm, FormsError> {
    if a.basis != BasisKind::Coordinate {
        return Err(FormsError::CoordinateBasisRequired);
    }
    if a.degree == 5 {
        return Ok(KForm::zero(a.chart.clone(), a.basis, 5));
    }
    let mut out = KForm::zero(a.chart.clone(), a.basis, a.degree + 1);
    let coords = a.chart.coords().clone();
    for (idx, c) in &a.terms {
        for (v, coord) in coords.iter().enumerate() {
            let dc = c.diff(coord);
            if dc.is_zero_literal() {
                continue;
            }
            if let Some((merged, odd)) = merge_indices(&[v as u8], idx) {
                out.insert(merged, if odd { dc.neg() } else { dc });
            }
        }
    }
    Ok(out)
}

/// Vector field in the coordinate frame `∂/∂(chart[i])`.
#[derive(Clone, Debug)]
pub struct VectorField {
    chart: Chart,
    components: [Expr; 5],
}

impl VectorField {
    pub fn new(chart: Chart, components: [Expr; 5]) -> Self {
        VectorField { chart, components }
    }

    /// The coordinate field `∂/∂(chart[i])`.
    pub fn coordinate(chart: Chart, i: usize) -> Self {
        let components = std::array::from_fn(|j| if i == j { Expr::one() } else { Expr::zero() });
        VectorField { chart, components }
    }

    pub fn components(&self) -> &[Expr; 5] {
        &self.components
    }
}

/// Contraction in the first slot.
pub fn interior_product(x: &VectorField, a: &KForm) -> Result<KForm, FormsError> {
    if a.basis != BasisKind::Coordinate || x.chart != a.chart {
        return Err(FormsError::CoordinateBasisRequired);
    }
    if a.degree == 0 {
        return Ok(KForm::zero(a.chart.clone(), a.basis, 0));
    }
    let mut out = KForm::zero(a.chart.clone(), a.basis, a.degree - 1);
    for (idx, c) in &a.terms {
        for (slot, &i) in idx.iter().enumerate() {
            let comp = &x.components[i as usize];
            if comp.is_zero_literal() {
                continue;
            }
            let mut rest = idx.clone();
            rest.remove(slot);
            let coeff = comp * c;
            out.insert(rest, if slot % 2 == 1 { coeff.neg() } else { coeff });
        }
    }
    Ok(out)
}

/// Cartan's formula `L_X = i_X ∘ d + d ∘ i_X`.
pub fn lie_derivative(x: &VectorField, a: &KForm) -> Result<KForm, FormsError> {
    let da = exterior_derivative(a)?;
    let ixda = interior_product(x, &da)?;
    let ixa = interior_product(x, a)?;
    let dixa = exterior_derivative(&ixa)?;
    ixda.add(&dixa)
}

/// A coframe: five 1-forms with the cached transition matrix (rows express
/// the coframe in coordinate differentials) and its exact symbolic inverse.
#[derive(Clone, Debug)]
pub struct Coframe {
    chart: Chart,
    forms: [KForm; 5],
    matrix: [[Expr; 5]; 5],
    inverse: [[Expr; 5]; 5],
}

impl Coframe {
    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn forms(&self) -> &[KForm; 5] {
        &self.forms
    }

    pub fn form(&self, i: usize) -> &KForm {
        &self.forms[i]
    }

    pub fn matrix(&self) -> &[[Expr; 5]; 5] {
        &self.matrix
    }

    pub fn inverse(&self) -> &[[Expr; 5]; 5] {
        &self.inverse
    }
}

/// The standard coframe of a system:
///
/// ```text
/// ω¹ = dz - p dx - G dy
/// ω² = dp - r dx - DG dy
/// ω³ = dr - H dx - D²G dy
/// ω⁴ = dx,  ω⁵ = dy
/// ```
///
/// In the ordering `(dz, dp, dr, dx, dy)` the transition matrix is
/// unitriangular, so the inverse is written down directly instead of going
/// through a general determinant.
pub fn standard_coframe(sys: &PdeSystem) -> Coframe {
    let chart = standard_chart();
    // Chart order (x, y, z, p, r): indices x=0, y=1, z=2, p=3, r=4.
    let p = Expr::var("p");
    let g = sys.g().clone();
    let dg = sys.dg().clone();
    let d2g = sys.d2g().clone();
    let h = sys.h().clone();
    let r = Expr::var("r");

    let zero = Expr::zero;
    let one = Expr::one;
    // Rows: coefficients of (dx, dy, dz, dp, dr) in each ωⁱ.
    let matrix: [[Expr; 5]; 5] = [
        [p.clone().neg(), g.clone().neg(), one(), zero(), zero()],
        [r.clone().neg(), dg.clone().neg(), zero(), one(), zero()],
        [h.clone().neg(), d2g.clone().neg(), zero(), zero(), one()],
        [one(), zero(), zero(), zero(), zero()],
        [zero(), one(), zero(), zero(), zero()],
    ];
    // dz = ω¹ + p ω⁴ + G ω⁵, dp = ω² + r ω⁴ + DG ω⁵, dr = ω³ + H ω⁴ + D²G ω⁵,
    // dx = ω⁴, dy = ω⁵. Row i gives d(chart[i]) in the coframe.
    let inverse: [[Expr; 5]; 5] = [
        [zero(), zero(), zero(), one(), zero()],
        [zero(), zero(), zero(), zero(), one()],
        [one(), zero(), zero(), p, g],
        [zero(), one(), zero(), r, dg],
        [zero(), zero(), one(), h, d2g],
    ];
    let forms = std::array::from_fn(|i| {
        KForm::from_terms(
            chart.clone(),
            BasisKind::Coordinate,
            1,
            (0..5).map(|j| (vec![j as u8], matrix[i][j].clone())),
        )
    });
    Coframe {
        chart,
        forms,
        matrix,
        inverse,
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BasisDirection {
    ToCoframe,
    ToCoordinate,
}

/// Rewrites a form between the coordinate and coframe bases through the
/// cached transition matrix. Round trips are exact.
pub fn change_basis(a: &KForm, cf: &Coframe, dir: BasisDirection) -> Result<KForm, FormsError> {
    if a.chart != cf.chart {
        return Err(FormsError::BasisMismatch);
    }
    let (from, to, table) = match dir {
        BasisDirection::ToCoframe => {
            if a.basis != BasisKind::Coordinate {
                return Err(FormsError::BasisMismatch);
            }
            (BasisKind::Coordinate, BasisKind::Coframe, cf.inverse())
        }
        BasisDirection::ToCoordinate => {
            if a.basis != BasisKind::Coframe {
                return Err(FormsError::BasisMismatch);
            }
            (BasisKind::Coframe, BasisKind::Coordinate, cf.matrix())
        }
    };
    let _ = from;
    // Each source basis covector expands as Σ_j table[i][j] (target basis)_j.
    let images: Vec<KForm> = (0..5)
        .map(|i| {
            KForm::from_terms(
                a.chart.clone(),
                to,
                1,
                (0..5).map(|j| (vec![j as u8], table[i][j].clone())),
            )
        })
        .collect();
    let mut out = KForm::zero(a.chart.clone(), to, a.degree);
    for (idx, c) in &a.terms {
        let mut term = KForm::scalar(a.chart.clone(), to, c.clone());
        for &i in idx {
            term = wedge(&term, &images[i as usize])?;
        }
        out = out.add(&term)?;
    }
    Ok(out.simplified())
}

/// The Levi data of a system: `dω¹` expanded in the coframe basis as
/// `Σ L_AB ω^(A+1) ∧ ω^(B+3)` plus a remainder that must lie in the ideal of
/// `ω¹`.
#[derive(Clone, Debug)]
pub struct LeviForm {
    pub matrix: [[Expr; 2]; 2],
    /// The ω¹-divisible part of `dω¹` left after removing the four L-wedges.
    pub remainder: KForm,
}

impl LeviForm {
    pub fn determinant(&self) -> Expr {
        &self.matrix[0][0] * &self.matrix[1][1] - &self.matrix[0][1] * &self.matrix[1][0]
    }
}

/// Extracts the Levi form in the standard-coframe gauge. Errors if `dω¹`
/// contains a term outside both the L-span and the ideal of `ω¹` (an internal
/// consistency failure).
pub fn levi_form(sys: &PdeSystem) -> Result<LeviForm, FormsError> {
    let cf = standard_coframe(sys);
    let d_omega1 = exterior_derivative(cf.form(0))?;
    let in_coframe = change_basis(&d_omega1, &cf, BasisDirection::ToCoframe)?;

    let mut matrix = [[Expr::zero(), Expr::zero()], [Expr::zero(), Expr::zero()]];
    let mut remainder = KForm::zero(cf.chart.clone(), BasisKind::Coframe, 2);
    for (idx, c) in &in_coframe.terms {
        match (idx[0], idx[1]) {
            (1, 3) => matrix[0][0] = c.clone(),
            (1, 4) => matrix[0][1] = c.clone(),
            (2, 3) => matrix[1][0] = c.clone(),
            (2, 4) => matrix[1][1] = c.clone(),
            (0, _) => remainder.insert(idx.clone(), c.clone()),
            _ => {
                let s = simplify(c);
                if !s.is_zero_literal() {
                    return Err(FormsError::LeviRemainder(format!(
                        "coefficient {s} at ω-indices {idx:?}"
                    )));
                }
            }
        }
    }
    Ok(LeviForm { matrix, remainder })
}

/// Frobenius residuals `dθᵃ ∧ θ¹ ∧ … ∧ θᵏ` of a generator list; the spanned
/// distribution is integrable iff all residuals vanish. Errors when the
/// generators fail the independence check (zero top wedge).
pub fn frobenius_residuals(
    generators: &[KForm],
    cfg: &ZeroConfig,
) -> Result<Vec<KForm>, FormsError> {
    let refs: Vec<&KForm> = generators.iter().collect();
    let top = wedge_all(&refs)?;
    if top.zero_verdict(cfg)?.is_zero() {
        return Err(FormsError::DependentGenerators);
    }
    let mut out = Vec::with_capacity(generators.len());
    for theta in generators {
        let d = exterior_derivative(theta)?;
        let mut resid = d;
        for other in generators {
            resid = wedge(&resid, other)?;
        }
        out.push(resid.simplified());
    }
    Ok(out)
}

/// The five symmetry residuals of a vector field:
///
/// ```text
/// (L_X ω¹) ∧ ω¹
/// (L_X ω²) ∧ ω¹ ∧ ω² ∧ ω³,   (L_X ω³) ∧ ω¹ ∧ ω² ∧ ω³
/// (L_X ω⁴) ∧ ω¹ ∧ ω⁴ ∧ ω⁵,   (L_X ω⁵) ∧ ω¹ ∧ ω⁴ ∧ ω⁵
/// ```
///
/// `X` is a symmetry of the structure iff all five vanish.
pub fn symmetry_residuals(
    x: &VectorField,
    sys: &PdeSystem,
) -> Result<[KForm; 5], FormsError> {
    let cf = standard_coframe(sys);
    let [w1, w2, w3, w4, w5] = cf.forms();
    let lie: Vec<KForm> = cf
        .forms()
        .iter()
        .map(|w| lie_derivative(x, w))
        .collect::<Result<_, _>>()?;
    let d1_wedge = wedge(&wedge(w1, w2)?, w3)?;
    let d2_wedge = wedge(&wedge(w1, w4)?, w5)?;
    Ok([
        wedge(&lie[0], w1)?.simplified(),
        wedge(&lie[1], &d1_wedge)?.simplified(),
        wedge(&lie[2], &d1_wedge)?.simplified(),
        wedge(&lie[3], &d2_wedge)?.simplified(),
        wedge(&lie[4], &d2_wedge)?.simplified(),
    ])
}

/// A smooth map between charts, written as the target coordinates expressed
/// in the source coordinates. Pullback moves forms from the target chart to
/// the source chart.
#[derive(Clone, Debug)]
pub struct ChartMap {
    source: Chart,
    target: Chart,
    components: BTreeMap<Sym, Expr>,
}

impl ChartMap {
    pub fn new(source: Chart, target: Chart, components: BTreeMap<Sym, Expr>) -> Self {
        ChartMap {
            source,
            target,
            components,
        }
    }

    pub fn identity(chart: Chart) -> Self {
        let components = chart
            .coords()
            .iter()
            .map(|c| (c.clone(), Expr::var(c.clone())))
            .collect();
        ChartMap {
            source: chart.clone(),
            target: chart,
            components,
        }
    }

    pub fn source(&self) -> &Chart {
        &self.source
    }

    pub fn target(&self) -> &Chart {
        &self.target
    }

    fn component(&self, target_coord: &Sym) -> Expr {
        self.components
            .get(target_coord)
            .cloned()
            .unwrap_or_else(|| Expr::var(target_coord.clone()))
    }

    /// The differential of one target coordinate as a 1-form on the source.
    fn differential(&self, target_coord: &Sym) -> KForm {
        let comp = self.component(target_coord);
        KForm::from_terms(
            self.source.clone(),
            BasisKind::Coordinate,
            1,
            self.source
                .coords()
                .iter()
                .enumerate()
                .map(|(j, v)| (vec![j as u8], comp.diff(v))),
        )
    }
}

/// Substitutes coordinates into the coefficients and replaces each target
/// differential by the differential of its image.
pub fn pullback(a: &KForm, map: &ChartMap) -> Result<KForm, FormsError> {
    if a.basis != BasisKind::Coordinate || *a.chart() != *map.target() {
        return Err(FormsError::CoordinateBasisRequired);
    }
    let differentials: Vec<KForm> = map
        .target
        .coords()
        .iter()
        .map(|c| map.differential(c))
        .collect();
    let mut out = KForm::zero(map.source.clone(), BasisKind::Coordinate, a.degree);
    for (idx, c) in &a.terms {
        let pulled_coeff = substitute(c, &map.components);
        let mut term = KForm::scalar(map.source.clone(), BasisKind::Coordinate, pulled_coeff);
        for &i in idx {
            term = wedge(&term, &differentials[i as usize])?;
        }
        out = out.add(&term)?;
    }
    Ok(out.simplified())
}

impl fmt::Display for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (idx, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for &i in idx {
                match self.basis {
                    BasisKind::Coordinate => {
                        write!(f, " d{}", self.chart.coords()[i as usize])?
                    }
                    BasisKind::Coframe => write!(f, " w{}", i + 1)?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn flat() -> PdeSystem {
        PdeSystem::new(parse("p^2/4").unwrap(), parse("0").unwrap())
    }

    fn dx(i: usize) -> KForm {
        KForm::basis_one_form(standard_chart(), BasisKind::Coordinate, i)
    }

    #[test]
    fn wedge_antisymmetry() {
        // Chart order (x, y, z, p, r): dx has index 0, dy index 1.
        let dxdy = wedge(&dx(0), &dx(1)).unwrap();
        let dydx = wedge(&dx(1), &dx(0)).unwrap();
        assert_eq!(dxdy, dydx.scale(&Expr::int(-1)));
        assert!(wedge(&dx(0), &dx(0)).unwrap().is_empty());
    }

    #[test]
    fn exterior_derivative_basics() {
        assert!(exterior_derivative(&dx(0)).unwrap().is_empty());
        // d(z dx) = dz ∧ dx = -dx ∧ dz
        let zdx = dx(0).scale(&Expr::var("z"));
        let d = exterior_derivative(&zdx).unwrap();
        assert_eq!(d.coefficient(&[0, 2]), Expr::int(-1));
    }

    #[test]
    fn interior_product_signs() {
        let ddx = VectorField::coordinate(standard_chart(), 0);
        let one = interior_product(&ddx, &dx(0)).unwrap();
        assert_eq!(one.coefficient(&[]), Expr::one());
        // i_∂x(dy ∧ dx) = -dy
        let dydx = wedge(&dx(1), &dx(0)).unwrap();
        let res = interior_product(&ddx, &dydx).unwrap();
        assert_eq!(res.coefficient(&[1]), Expr::int(-1));
    }

    #[test]
    fn interior_product_contact_form() {
        let cf = standard_coframe(&flat());
        let ddz = VectorField::coordinate(standard_chart(), 2);
        let res = interior_product(&ddz, cf.form(0)).unwrap();
        assert_eq!(res.coefficient(&[]), Expr::one());
    }

    #[test]
    fn standard_coframe_flat_forms() {
        let cf = standard_coframe(&flat());
        // ω³ = dr - (r²/2) dy on the flat model (D²G = r²/2).
        let w3 = cf.form(2).simplified();
        assert_eq!(w3.coefficient(&[4]), Expr::one());
        assert_eq!(
            simplify(&w3.coefficient(&[1])),
            simplify(&parse("-r^2/2").unwrap())
        );
        // ω⁴ = dx always.
        assert_eq!(cf.form(3), &dx(0));
    }

    #[test]
    fn coframe_inverse_is_exact() {
        for sys in [flat(), PdeSystem::new(parse("f(p)").unwrap(), parse("-r^2*f'''(p)/f''(p)").unwrap())] {
            let cf = standard_coframe(&sys);
            // matrix · inverse = identity, entrywise structurally.
            for i in 0..5 {
                for j in 0..5 {
                    let mut acc = Expr::zero();
                    for k in 0..5 {
                        acc = acc + &cf.matrix()[i][k] * &cf.inverse()[k][j];
                    }
                    let expect = if i == j { Expr::one() } else { Expr::zero() };
                    assert_eq!(simplify(&acc), expect, "entry ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn change_basis_dp() {
        let sys = flat();
        let cf = standard_coframe(&sys);
        // dp = ω² + r ω⁴ + DG ω⁵
        let dp = dx(3);
        let in_cf = change_basis(&dp, &cf, BasisDirection::ToCoframe).unwrap();
        assert_eq!(in_cf.coefficient(&[1]), Expr::one());
        assert_eq!(in_cf.coefficient(&[3]), Expr::var("r"));
        assert_eq!(
            simplify(&in_cf.coefficient(&[4])),
            simplify(&parse("p*r/2").unwrap())
        );
        // dx = ω⁴.
        let in_cf = change_basis(&dx(0), &cf, BasisDirection::ToCoframe).unwrap();
        assert_eq!(in_cf.coefficient(&[3]), Expr::one());
        // Round trip.
        let back = change_basis(&in_cf, &cf, BasisDirection::ToCoordinate).unwrap();
        assert_eq!(back.simplified(), dx(0));
    }

    #[test]
    fn flat_levi_form() {
        let l = levi_form(&flat()).unwrap();
        assert_eq!(simplify(&l.matrix[0][0]), Expr::int(-1));
        assert_eq!(simplify(&l.matrix[0][1]), simplify(&parse("-p/2").unwrap()));
        assert!(simplify(&l.matrix[1][0]).is_zero_literal());
        assert!(simplify(&l.matrix[1][1]).is_zero_literal());
        assert!(simplify(&l.determinant()).is_zero_literal());
    }

    #[test]
    fn levi_determinant_nonzero_when_g_depends_on_r() {
        let sys = PdeSystem::new(parse("r*p").unwrap(), parse("0").unwrap());
        let l = levi_form(&sys).unwrap();
        let det = simplify(&l.determinant());
        let cfg = ZeroConfig::default();
        assert!(is_zero(&det, &cfg).unwrap().is_nonzero());
    }

    #[test]
    fn frobenius_d2_structurally_zero() {
        let sys = flat();
        let cf = standard_coframe(&sys);
        let gens = [cf.form(0).clone(), dx(0), dx(1)];
        let res = frobenius_residuals(&gens, &ZeroConfig::default()).unwrap();
        for r in &res {
            assert!(r.is_empty(), "expected structural zero, got {r}");
        }
    }

    #[test]
    fn frobenius_d1_matches_integrability() {
        let cfg = ZeroConfig::default();
        // Integrable: flat model.
        let sys = flat();
        let cf = standard_coframe(&sys);
        let gens = [cf.form(0).clone(), cf.form(1).clone(), cf.form(2).clone()];
        for r in frobenius_residuals(&gens, &cfg).unwrap() {
            assert!(r.zero_verdict(&cfg).unwrap().is_zero());
        }
        // Non-integrable: residual appears in the ω³ slot.
        let sys = PdeSystem::new(parse("p^2").unwrap(), parse("p").unwrap());
        let cf = standard_coframe(&sys);
        let gens = [cf.form(0).clone(), cf.form(1).clone(), cf.form(2).clone()];
        let res = frobenius_residuals(&gens, &cfg).unwrap();
        assert!(res[2].zero_verdict(&cfg).unwrap().is_nonzero());
    }

    #[test]
    fn symmetry_residuals_flat_translations() {
        let sys = flat();
        for i in [0usize, 2] {
            let x = VectorField::coordinate(standard_chart(), i);
            let res = symmetry_residuals(&x, &sys).unwrap();
            for r in &res {
                assert!(r.is_empty(), "∂_{i} should be a symmetry; residual {r}");
            }
        }
        // z ∂z is not a symmetry of the flat model.
        let x = VectorField::new(
            standard_chart(),
            [
                Expr::zero(),
                Expr::zero(),
                Expr::var("z"),
                Expr::zero(),
                Expr::zero(),
            ],
        );
        let res = symmetry_residuals(&x, &sys).unwrap();
        let cfg = ZeroConfig::default();
        assert!(res
            .iter()
            .any(|r| r.zero_verdict(&cfg).unwrap().is_nonzero()));
    }

    #[test]
    fn pullback_identity() {
        let sys = flat();
        let cf = standard_coframe(&sys);
        let id = ChartMap::identity(standard_chart());
        let back = pullback(cf.form(0), &id).unwrap();
        assert_eq!(back, cf.form(0).simplified());
    }

    #[test]
    fn levi_extraction_satisfies_the_defining_condition() {
        // (dw1 - sum L_AB w^(A+1) ^ w^(B+3)) ^ w1 must vanish.
        let cfg = ZeroConfig::default();
        let family_h = Expr::div(
            Expr::int(-1) * Expr::pow(Expr::var("r"), 2) * Expr::func("f", 3, Expr::var("p")),
            Expr::func("f", 2, Expr::var("p")),
        );
        for sys in [
            flat(),
            PdeSystem::new(Expr::func("f", 0, Expr::var("p")), family_h),
            PdeSystem::new(parse("r*p").unwrap(), parse("0").unwrap()),
        ] {
            let cf = standard_coframe(&sys);
            let l = levi_form(&sys).unwrap();
            let d_omega1 = exterior_derivative(cf.form(0)).unwrap();
            let d1 = change_basis(&d_omega1, &cf, BasisDirection::ToCoframe).unwrap();
            let mut rest = d1;
            for (a, row) in l.matrix.iter().enumerate() {
                for (b, coeff) in row.iter().enumerate() {
                    let wedge_ab = KForm::from_terms(
                        standard_chart(),
                        BasisKind::Coframe,
                        2,
                        [(vec![(a + 1) as u8, (b + 3) as u8], coeff.clone())],
                    );
                    rest = rest.sub(&wedge_ab).unwrap();
                }
            }
            let omega1 = KForm::from_terms(
                standard_chart(),
                BasisKind::Coframe,
                1,
                [(vec![0u8], Expr::one())],
            );
            let residual = wedge(&rest, &omega1).unwrap();
            assert!(
                residual.zero_verdict(&cfg).unwrap().is_zero(),
                "defining condition failed for G = {}",
                sys.g()
            );
        }
    }

    #[test]
    fn levi_determinant_tracks_g_r() {
        // det L vanishes exactly when G_r does, across a small family.
        let cfg = ZeroConfig::default();
        for (g, depends_on_r) in [
            ("p^2/4", false),
            ("p^3 + x*p^2", false),
            ("f(p)", false),
            ("r*p", true),
            ("p^2 + r^2", true),
        ] {
            let sys = PdeSystem::new(parse(g).unwrap(), parse("0").unwrap());
            let l = levi_form(&sys).unwrap();
            let det_zero = is_zero(&l.determinant(), &cfg).unwrap().is_zero();
            assert_eq!(det_zero, !depends_on_r, "G = {g}");
        }
    }

    #[test]
    fn dependent_generators_are_rejected() {
        let two_dx = dx(0).scale(&Expr::int(2));
        let err = frobenius_residuals(&[dx(0), two_dx], &ZeroConfig::default()).unwrap_err();
        assert_eq!(err, FormsError::DependentGenerators);
    }

    #[test]
    fn coframe_wedge_expansion() {
        // w2 ^ w4 on the flat model: dp^dx plus a dy-carrying term.
        let sys = flat();
        let cf = standard_coframe(&sys);
        let w24 = wedge(cf.form(1), cf.form(3)).unwrap().simplified();
        // dp^dx = -dx^dp: coefficient -1 at indices (x, p) = (0, 3).
        assert_eq!(w24.coefficient(&[0, 3]), Expr::int(-1));
        // dy^dx term: DG at (x, y) = (0, 1).
        assert_eq!(
            simplify(&w24.coefficient(&[0, 1])),
            simplify(&parse("p*r/2").unwrap())
        );
    }

    #[test]
    fn dd_is_zero_on_a_messy_form() {
        let c = parse("x*y/(z^2 + 1) + p^3*r").unwrap();
        let form = dx(2).scale(&c);
        let dd = exterior_derivative(&exterior_derivative(&form).unwrap()).unwrap();
        assert!(dd.is_structurally_zero(), "d∘d left {dd}");
    }
}
