//! Scalar differential invariants of the class and the classification they
//! induce.
//!
//! The three primary relative invariants are the Wünschmann expression `W(H)`
//! (1905), the Monge expression `M(G)` (1810) whose vanishing puts the graph
//! of `G(p)` on a conic, and the lowest-order mixed invariant
//! `N = 2 G_ppp + G_pp H_rr`. The Chern invariant `Z = H_rrrr` (1940) governs
//! the contact projective structure on the first-jet space.

use crate::expr::{is_zero, Expr, ZeroConfig, ZeroError, ZeroVerdict};
use crate::jet::{jet_coords, AdmissibilityReport, PdeSystem};
use serde::Serialize;
use thiserror::Error;

/// `W(H) = 9 D²H_r - 27 D H_p - 18 H_r D H_r + 18 H_p H_r + 4 H_r³ + 54 H_z`.
///
/// `D²H_r` reads as `D(D(H_r))`: the partial in `r` is taken first, then the
/// total derivative is applied twice.
pub fn wunschmann(sys: &PdeSystem) -> Expr {
    let [_, _, z, p, r] = jet_coords();
    let h = sys.h();
    let h_r = h.diff(&r);
    let h_p = h.diff(&p);
    let h_z = h.diff(&z);
    let d_h_r = sys.total_d(&h_r);
    let d2_h_r = sys.total_d(&d_h_r);
    let d_h_p = sys.total_d(&h_p);
    9 * d2_h_r - 27 * d_h_p - 18 * &h_r * d_h_r + 18 * &h_p * &h_r
        + 4 * Expr::pow(h_r, 3)
        + 54 * h_z
}

/// `M(G) = 40 G_ppp³ - 45 G_pp G_ppp G_pppp + 9 G_pp² G_ppppp`.
pub fn monge(g: &Expr) -> Expr {
    let p = Sym::new("p");
    let g2 = g.diff_n(&p, 2);
    let g3 = g.diff_n(&p, 3);
    let g4 = g.diff_n(&p, 4);
    let g5 = g.diff_n(&p, 5);
    40 * Expr::pow(g3.clone(), 3) - 45 * &g2 * &g3 * g4 + 9 * Expr::pow(g2, 2) * g5
}

/// `N = 2 G_ppp + G_pp H_rr`, the lowest-order invariant of the pair.
pub fn mixed_invariant(sys: &PdeSystem) -> Expr {
    let [_, _, _, p, r] = jet_coords();
    let g_pp = sys.g().diff_n(&p, 2);
    let g_ppp = sys.g().diff_n(&p, 3);
    let h_rr = sys.h().diff_n(&r, 2);
    2 * g_ppp + g_pp * h_rr
}

/// `Z = H_rrrr`.
pub fn chern(h: &Expr) -> Expr {
    h.diff_n(&Sym::new("r"), 4)
}

use crate::expr::Sym;

/// Invariants of a system together with their zero verdicts. `B = M/(2G_pp³)`
/// and `C = N/G_pp` are reported as quotients without clearing denominators;
/// the verdicts are taken on the numerators `M` and `N`, which is the
/// well-defined vanishing statement.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub wunschmann: String,
    pub wunschmann_verdict: ZeroVerdict,
    pub monge: String,
    pub monge_verdict: ZeroVerdict,
    pub b: String,
    pub mixed: String,
    pub mixed_verdict: ZeroVerdict,
    pub c: String,
    pub chern: String,
    pub chern_verdict: ZeroVerdict,
    /// Set iff `W`, `M` and `N` all have zero verdicts.
    pub flat: bool,
    /// Set iff `N` has a zero verdict: both 3-dimensional quotients then
    /// carry contact projective geometries.
    pub contact_projective_pair: bool,
    #[serde(skip)]
    pub exprs: InvariantExprs,
}

/// The invariant expressions themselves, kept alongside the rendered report.
#[derive(Debug, Clone)]
pub struct InvariantExprs {
    pub wunschmann: Expr,
    pub monge: Expr,
    pub b: Expr,
    pub mixed: Expr,
    pub c: Expr,
    pub chern: Expr,
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("system is not in the class")]
    Inadmissible(AdmissibilityReport),
    #[error(transparent)]
    Zero(#[from] ZeroError),
}

/// Computes all invariants and flags. Errors with the failing
/// [`AdmissibilityReport`] when the system is not in the class.
pub fn classify(sys: &PdeSystem, cfg: &ZeroConfig) -> Result<InvariantReport, ClassifyError> {
    let adm = sys.admissibility(cfg)?;
    if !adm.in_class() {
        return Err(ClassifyError::Inadmissible(adm));
    }

    let p = Sym::new("p");
    let w = crate::expr::simplify(&wunschmann(sys));
    let m = crate::expr::simplify(&monge(sys.g()));
    let n = crate::expr::simplify(&mixed_invariant(sys));
    let z = crate::expr::simplify(&chern(sys.h()));
    let g_pp = sys.g().diff_n(&p, 2);
    let b = crate::expr::simplify(&Expr::div(m.clone(), 2 * Expr::pow(g_pp.clone(), 3)));
    let c = crate::expr::simplify(&Expr::div(n.clone(), g_pp));

    let w_verdict = is_zero(&w, cfg)?;
    let m_verdict = is_zero(&m, cfg)?;
    let n_verdict = is_zero(&n, cfg)?;
    let z_verdict = is_zero(&z, cfg)?;

    let flat = w_verdict.is_zero() && m_verdict.is_zero() && n_verdict.is_zero();
    let contact_projective_pair = n_verdict.is_zero();

    Ok(InvariantReport {
        wunschmann: w.to_string(),
        wunschmann_verdict: w_verdict,
        monge: m.to_string(),
        monge_verdict: m_verdict,
        b: b.to_string(),
        mixed: n.to_string(),
        mixed_verdict: n_verdict,
        c: c.to_string(),
        chern: z.to_string(),
        chern_verdict: z_verdict,
        flat,
        contact_projective_pair,
        exprs: InvariantExprs {
            wunschmann: w,
            monge: m,
            b,
            mixed: n,
            c,
            chern: z,
        },
    })
}
