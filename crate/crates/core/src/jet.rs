//! Total derivatives on the jet coordinates `(x, y, z, p, r)` and the
//! admissibility checks for the PDE pair `z_y = G`, `z_xxx = H`.
//!
//! With `p = z_x` and `r = z_xx`, differentiation along solutions is encoded
//! by the vector fields
//!
//! ```text
//! D = ∂x + p ∂z + r ∂p + H ∂r
//! Δ = ∂y + G ∂z + DG ∂p + D²G ∂r
//! ```
//!
//! and the pair admits a 3-parameter solution family exactly when
//! `ΔH - D³G` vanishes.

use crate::expr::{is_zero, simplify, Expr, Sym, ZeroConfig, ZeroError, ZeroVerdict};
use serde::Serialize;
use std::sync::{Arc, OnceLock};

pub fn coord(name: &str) -> Sym {
    Sym::new(name)
}

/// The five jet coordinates in their standard order.
pub fn jet_coords() -> [Sym; 5] {
    ["x", "y", "z", "p", "r"].map(Sym::new)
}

#[derive(Debug)]
struct PdeInner {
    g: Expr,
    h: Expr,
    dg: OnceLock<Expr>,
    d2g: OnceLock<Expr>,
    d3g: OnceLock<Expr>,
}

/// The pair `(G, H)` defining a structure. `G` is expected over
/// `(x, y, z, p)` and `H` over `(x, y, z, p, r)`; whether `G` actually avoids
/// `r` is checked (not assumed) by [`PdeSystem::admissibility`].
///
/// Iterated total derivatives of `G` are memoized per system, so `D³G` is
/// computed once however many invariants ask for it.
#[derive(Clone, Debug)]
pub struct PdeSystem(Arc<PdeInner>);

impl PdeSystem {
    pub fn new(g: Expr, h: Expr) -> Self {
        PdeSystem(Arc::new(PdeInner {
            g,
            h,
            dg: OnceLock::new(),
            d2g: OnceLock::new(),
            d3g: OnceLock::new(),
        }))
    }

    pub fn g(&self) -> &Expr {
        &self.0.g
    }

    pub fn h(&self) -> &Expr {
        &self.0.h
    }

    /// `D e = ∂x e + p ∂z e + r ∂p e + H ∂r e`.
    pub fn total_d(&self, e: &Expr) -> Expr {
        let [x, _, z, p, r] = jet_coords();
        e.diff(&x)
            + Expr::var(p.clone()) * e.diff(&z)
            + Expr::var(r.clone()) * e.diff(&p)
            + self.h() * e.diff(&r)
    }

    /// `Δ e = ∂y e + G ∂z e + DG ∂p e + D²G ∂r e`.
    pub fn total_delta(&self, e: &Expr) -> Expr {
        let [_, y, z, p, r] = jet_coords();
        e.diff(&y)
            + self.g() * e.diff(&z)
            + self.dg() * e.diff(&p)
            + self.d2g() * e.diff(&r)
    }

    pub fn dg(&self) -> &Expr {
        self.0.dg.get_or_init(|| simplify(&self.total_d(self.g())))
    }

    pub fn d2g(&self) -> &Expr {
        self.0.d2g.get_or_init(|| simplify(&self.total_d(self.dg())))
    }

    pub fn d3g(&self) -> &Expr {
        self.0.d3g.get_or_init(|| simplify(&self.total_d(self.d2g())))
    }

    /// `ΔH - D³G`; the pair is completely integrable iff this vanishes.
    pub fn integrability_residual(&self) -> Expr {
        self.total_delta(self.h()) - self.d3g()
    }

    /// The three class conditions as verdicts: `G_r ≡ 0` (Levi form
    /// degenerate in one direction), `G_pp ≠ 0` (2-nondegeneracy, reported
    /// with a nonzero witness rather than a global claim), and the vanishing
    /// of the integrability residual.
    pub fn admissibility(&self, cfg: &ZeroConfig) -> Result<AdmissibilityReport, ZeroError> {
        let [_, _, _, p, r] = jet_coords();
        Ok(AdmissibilityReport {
            levi_degenerate: is_zero(&self.g().diff(&r), cfg)?,
            two_nondegenerate: is_zero(&self.g().diff(&p).diff(&p), cfg)?,
            integrable: is_zero(&self.integrability_residual(), cfg)?,
        })
    }
}

/// Verdicts for the three class conditions; never bare booleans, so a failed
/// condition always carries a witness.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct AdmissibilityReport {
    /// Verdict on `G_r` (expected zero).
    pub levi_degenerate: ZeroVerdict,
    /// Verdict on `G_pp` (expected nonzero).
    pub two_nondegenerate: ZeroVerdict,
    /// Verdict on `ΔH - D³G` (expected zero).
    pub integrable: ZeroVerdict,
}

impl AdmissibilityReport {
    pub fn in_class(&self) -> bool {
        self.levi_degenerate.is_zero()
            && self.two_nondegenerate.is_nonzero()
            && self.integrable.is_zero()
    }
}
