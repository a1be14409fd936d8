//! End-to-end reproductions of the worked examples: the flat model, the
//! one-function family `z_y = f(z_x)`, the coordinate change to the
//! second-jet picture, and the geodesic/contact-tangency verification on the
//! first-jet space.

use crate::expr::{
    is_zero, simplify, substitute, Expr, Sym, ZeroConfig, ZeroError, ZeroVerdict,
};
use crate::forms::{
    exterior_derivative, pullback, standard_coframe, BasisKind, Chart, ChartMap, FormsError,
    KForm,
};
use crate::invariants::{mixed_invariant, monge, wunschmann};
use crate::jet::{AdmissibilityReport, PdeSystem};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("f'' vanishes identically; the family needs a convex-or-concave f")]
    SecondDerivativeVanishes,
    #[error(transparent)]
    Zero(#[from] ZeroError),
    #[error(transparent)]
    Forms(#[from] FormsError),
}

/// `z_xxx = 0`, `z_y = p²/4`.
pub fn flat_model() -> PdeSystem {
    PdeSystem::new(
        Expr::div(Expr::pow(Expr::var("p"), 2), Expr::int(4)),
        Expr::zero(),
    )
}

/// The generating function of the family: an opaque symbol or a concrete
/// expression in `p`.
#[derive(Debug, Clone)]
pub enum FFamily {
    Opaque(Sym),
    Concrete(Expr),
}

impl FFamily {
    /// `f^(k)` as an expression in the named variable.
    pub fn derivative(&self, k: u32, var: &str) -> Expr {
        match self {
            FFamily::Opaque(name) => Expr::func(name.clone(), k, Expr::var(var)),
            FFamily::Concrete(e) => {
                let d = e.diff_n(&Sym::new("p"), k);
                if var == "p" {
                    d
                } else {
                    let mut b = BTreeMap::new();
                    b.insert(Sym::new("p"), Expr::var(var));
                    substitute(&d, &b)
                }
            }
        }
    }
}

/// `G = f(p)`, `H = -r² f'''(p)/f''(p)`. Concrete `f` must have `f'' ≢ 0`.
pub fn f_family(f: &FFamily, cfg: &ZeroConfig) -> Result<PdeSystem, ScenarioError> {
    let fpp = f.derivative(2, "p");
    if let FFamily::Concrete(_) = f {
        if is_zero(&fpp, cfg)?.is_zero() {
            return Err(ScenarioError::SecondDerivativeVanishes);
        }
    }
    let g = f.derivative(0, "p");
    let h = Expr::div(
        Expr::int(-1) * Expr::pow(Expr::var("r"), 2) * f.derivative(3, "p"),
        fpp,
    );
    Ok(PdeSystem::new(g, simplify(&h)))
}

// ---- the coordinate change to the second-jet picture -----------------------

/// The second-jet chart `(X, Y, P, Q, q)`.
pub fn jet2_chart() -> Chart {
    Chart::new(["X", "Y", "P", "Q", "q"])
}

/// The coordinate change from the jet chart `(x, y, z, p, r)` to
/// `(X, Y, P, Q, q)`:
///
/// ```text
/// x = -P + q f'(X)/f''(X)          p = X
/// y = -q/f''(X)                    r = 1/(q - Q)
/// z = Y - PX + q (X f'(X) - f(X))/f''(X)
/// ```
pub fn jet2_map(f: &FFamily) -> ChartMap {
    let fx = |k: u32| f.derivative(k, "X");
    let (big_x, big_y, big_p, big_q, small_q) = (
        Expr::var("X"),
        Expr::var("Y"),
        Expr::var("P"),
        Expr::var("Q"),
        Expr::var("q"),
    );
    let mut components = BTreeMap::new();
    components.insert(
        Sym::new("x"),
        -&big_p + Expr::div(&small_q * fx(1), fx(2)),
    );
    components.insert(Sym::new("y"), Expr::div(-&small_q, fx(2)));
    components.insert(
        Sym::new("z"),
        &big_y - &big_p * &big_x + Expr::div(&small_q * (&big_x * fx(1) - fx(0)), fx(2)),
    );
    components.insert(Sym::new("p"), big_x);
    components.insert(Sym::new("r"), Expr::div(Expr::one(), &small_q - &big_q));
    ChartMap::new(jet2_chart(), crate::forms::standard_chart(), components)
}

fn one_form(chart: &Chart, coeffs: &[(usize, Expr)]) -> KForm {
    KForm::from_terms(
        chart.clone(),
        BasisKind::Coordinate,
        1,
        coeffs.iter().map(|(i, c)| (vec![*i as u8], c.clone())),
    )
}

/// The transformed coframe straight after the coordinate change, before any
/// rescaling. Chart order `(X, Y, P, Q, q)` gives differential indices
/// `dX=0, dY=1, dP=2, dQ=3, dq=4`.
pub fn jet2_intermediate_coframe(f: &FFamily) -> [KForm; 5] {
    let chart = jet2_chart();
    let fx = |k: u32| f.derivative(k, "X");
    let q_minus = Expr::var("q") - Expr::var("Q");
    let inv = Expr::div(Expr::one(), q_minus.clone());
    let inv2 = Expr::div(Expr::one(), Expr::pow(q_minus, 2));

    let w1 = one_form(&chart, &[(1, Expr::one()), (0, -Expr::var("P"))]);
    let w2 = one_form(&chart, &[(2, inv.clone()), (0, -(Expr::var("Q") * &inv))]);
    let w3 = one_form(
        &chart,
        &[
            (3, inv2.clone()),
            (2, Expr::int(-1) * &inv2 * Expr::div(fx(3), fx(2))),
        ],
    );
    // ω⁴ = -dP + d(q f'/f'')
    let scalar = KForm::scalar(
        chart.clone(),
        BasisKind::Coordinate,
        Expr::div(Expr::var("q") * fx(1), fx(2)),
    );
    let d_scalar = exterior_derivative(&scalar).expect("coordinate basis");
    let w4 = one_form(&chart, &[(2, Expr::int(-1))])
        .add(&d_scalar)
        .expect("same chart");
    let w5 = one_form(
        &chart,
        &[
            (4, Expr::div(Expr::int(-1), fx(2))),
            (0, Expr::div(Expr::var("q") * fx(3), Expr::pow(fx(2), 2))),
        ],
    );
    [
        w1.simplified(),
        w2.simplified(),
        w3.simplified(),
        w4.simplified(),
        w5,
    ]
}

/// The rescaling applied to the transformed coframe; its block pattern is
/// the shape of the structure-group matrices (rows 2,3 touch only columns
/// 1..3, rows 4,5 only columns 1,4,5).
pub fn jet2_rescaling(f: &FFamily) -> [[Expr; 5]; 5] {
    let fx = |k: u32| f.derivative(k, "X");
    let q_minus = Expr::var("q") - Expr::var("Q");
    let zero = Expr::zero;
    [
        [Expr::one(), zero(), zero(), zero(), zero()],
        [zero(), q_minus.clone(), zero(), zero(), zero()],
        [
            zero(),
            &q_minus * Expr::div(fx(3), fx(2)),
            Expr::pow(q_minus, 2),
            zero(),
            zero(),
        ],
        [zero(), zero(), zero(), Expr::int(-1), Expr::int(-1) * fx(1)],
        [zero(), zero(), zero(), zero(), Expr::int(-1) * fx(2)],
    ]
}

/// The final coframe on the second-jet chart:
///
/// ```text
/// dY - P dX,  dP - Q dX,  dQ - Q (f'''/f'') dX,
/// dP - q dX,  dq - q (f'''/f'') dX
/// ```
pub fn jet2_target_coframe(f: &FFamily) -> [KForm; 5] {
    let chart = jet2_chart();
    let fx = |k: u32| f.derivative(k, "X");
    let ratio = Expr::div(fx(3), fx(2));
    [
        one_form(&chart, &[(1, Expr::one()), (0, -Expr::var("P"))]),
        one_form(&chart, &[(2, Expr::one()), (0, -Expr::var("Q"))]),
        one_form(&chart, &[(3, Expr::one()), (0, -(Expr::var("Q") * &ratio))]),
        one_form(&chart, &[(2, Expr::one()), (0, -Expr::var("q"))]),
        one_form(&chart, &[(4, Expr::one()), (0, -(Expr::var("q") * &ratio))]),
    ]
}

/// Pulls the standard coframe back along [`jet2_map`] and applies the
/// rescaling; entry `i` of the result should match entry `i` of
/// [`jet2_target_coframe`].
pub fn jet2_transformed_coframe(
    f: &FFamily,
    cfg: &ZeroConfig,
) -> Result<[KForm; 5], ScenarioError> {
    let sys = f_family(f, cfg)?;
    let cf = standard_coframe(&sys);
    let map = jet2_map(f);
    let pulled: Vec<KForm> = cf
        .forms()
        .iter()
        .map(|w| pullback(w, &map))
        .collect::<Result<_, _>>()?;
    let rescale = jet2_rescaling(f);
    let mut out = Vec::with_capacity(5);
    for row in &rescale {
        let mut acc = KForm::zero(jet2_chart(), BasisKind::Coordinate, 1);
        for (j, c) in row.iter().enumerate() {
            if !c.is_zero_literal() {
                acc = acc.add(&pulled[j].scale(c))?;
            }
        }
        out.push(acc.simplified());
    }
    Ok(out.try_into().expect("five forms"))
}

// ---- geodesics on the first-jet space ---------------------------------------

/// Christoffel symbols `Γⁱ_jk` in the frame `(e₁, e₂, e₃) = (∂_Y, ∂_P,
/// ∂_X + P ∂_Y)`, as functions of `X`.
#[derive(Debug, Clone)]
pub struct Christoffel(pub [[[Expr; 3]; 3]; 3]);

impl Christoffel {
    pub fn zero() -> Self {
        Christoffel(std::array::from_fn(|_| {
            std::array::from_fn(|_| std::array::from_fn(|_| Expr::zero()))
        }))
    }
}

/// The torsion-free connection whose geodesics realize the solution curves:
/// all symbols vanish except `Γ²₂₃ = Γ²₃₂ = -f'''(X)/(2 f''(X))`.
pub fn f_family_connection(f: &FFamily) -> Christoffel {
    let mut conn = Christoffel::zero();
    let gamma = Expr::div(
        Expr::int(-1) * f.derivative(3, "X"),
        2 * f.derivative(2, "X"),
    );
    conn.0[1][1][2] = gamma.clone();
    conn.0[1][2][1] = gamma;
    conn
}

/// `(X(t), Y(t), P(t))` of the general solution with parameters `c`.
pub fn solution_curve(f: &FFamily, c: &[Expr; 3]) -> [Expr; 3] {
    let t = Expr::var("t");
    [
        t.clone(),
        &c[0] * f.derivative(0, "t") + &c[1] * &t + &c[2],
        &c[0] * f.derivative(1, "t") + &c[1],
    ]
}

/// Frame components of the tangent vector of the solution curve in the frame
/// `(e₁, e₂, e₃)`: `γ̇ = a e₁ + b e₂ + c e₃` with `a = Ẏ - P Ẋ`, `b = Ṗ`,
/// `c = Ẋ`.
pub fn solution_tangent_frame(f: &FFamily, c: &[Expr; 3]) -> [Expr; 3] {
    let t = Sym::new("t");
    let [x, y, p] = solution_curve(f, c);
    let xdot = x.diff(&t);
    let ydot = y.diff(&t);
    let pdot = p.diff(&t);
    [ydot - &p * &xdot, pdot, xdot]
}

/// The three components of `dγ̇ⁱ/dt + Σ Γⁱ_jk γ̇ʲ γ̇ᵏ` along the solution
/// curve, as expressions in `t`.
pub fn geodesic_residual(f: &FFamily, c: &[Expr; 3], conn: &Christoffel) -> [Expr; 3] {
    let t = Sym::new("t");
    let tangent = solution_tangent_frame(f, c);
    // The connection coefficients are functions of X; along the curve X = t.
    let mut on_curve = BTreeMap::new();
    on_curve.insert(Sym::new("X"), Expr::var("t"));
    std::array::from_fn(|i| {
        let mut acc = tangent[i].diff(&t);
        for j in 0..3 {
            for k in 0..3 {
                let gamma = &conn.0[i][j][k];
                if gamma.is_zero_literal() {
                    continue;
                }
                acc = acc + substitute(gamma, &on_curve) * &tangent[j] * &tangent[k];
            }
        }
        simplify(&acc)
    })
}

/// Residual of `Y''' = Y'' f'''(X)/f''(X)` along the general solution
/// `Y = c₁ f(X) + c₂ X + c₃`.
pub fn solution_ode_residual(f: &FFamily, c: &[Expr; 3]) -> Expr {
    let x = Sym::new("X");
    let y = &c[0] * f.derivative(0, "X") + &c[1] * Expr::var("X") + &c[2];
    let y2 = y.diff_n(&x, 2);
    let y3 = y.diff_n(&x, 3);
    y3 - Expr::div(y2 * f.derivative(3, "X"), f.derivative(2, "X"))
}

// ---- the full report ---------------------------------------------------------

/// Outcome of the worked-example pipeline for one generating function.
#[derive(Debug, Clone, Serialize)]
pub struct ExampleReport {
    pub admissibility: AdmissibilityReport,
    /// Verdict on the mixed invariant `N`.
    pub mixed_zero: ZeroVerdict,
    /// Verdict on `W - 2 r³ B`.
    pub wunschmann_vs_monge: ZeroVerdict,
    /// Per-form verdicts: rescaled pullback minus the displayed target.
    pub pullback_match: [ZeroVerdict; 5],
    /// `Y''' - Y'' f'''/f''` along the general solution.
    pub solution_residual: ZeroVerdict,
    /// `γ̇ - (c₁ f'' e₂ + e₃)` in the fixed frame.
    pub tangent_frame_residual: ZeroVerdict,
    /// `i_γ̇ (dY - P dX)` along the curve.
    pub contact_tangency: ZeroVerdict,
    /// The geodesic equation with the family's connection.
    pub geodesic_residual: ZeroVerdict,
}

impl ExampleReport {
    /// All checks hold; the Wünschmann invariant itself may well be nonzero.
    pub fn all_verdicts_zero(&self) -> bool {
        self.admissibility.in_class()
            && self.mixed_zero.is_zero()
            && self.wunschmann_vs_monge.is_zero()
            && self.pullback_match.iter().all(|v| v.is_zero())
            && self.solution_residual.is_zero()
            && self.tangent_frame_residual.is_zero()
            && self.contact_tangency.is_zero()
            && self.geodesic_residual.is_zero()
    }
}

fn worst(verdicts: impl IntoIterator<Item = ZeroVerdict>) -> ZeroVerdict {
    let mut out = ZeroVerdict::StructurallyZero;
    for v in verdicts {
        match v {
            ZeroVerdict::StructurallyZero => {}
            ZeroVerdict::ProbablyZero { .. } => {
                if out.is_structural() {
                    out = v;
                }
            }
            ZeroVerdict::Nonzero { .. } => return v,
        }
    }
    out
}

/// Runs the whole pipeline: admissibility, the two invariant identities, the
/// coordinate-change comparison, and the solution-curve checks with symbolic
/// curve parameters.
pub fn run_example_suite(f: &FFamily, cfg: &ZeroConfig) -> Result<ExampleReport, ScenarioError> {
    let sys = f_family(f, cfg)?;
    let admissibility = sys.admissibility(cfg)?;

    let n = mixed_invariant(&sys);
    let mixed_zero = is_zero(&n, cfg)?;

    let p = Sym::new("p");
    let g_pp = sys.g().diff_n(&p, 2);
    let b = Expr::div(monge(sys.g()), 2 * Expr::pow(g_pp, 3));
    let w_vs_m = wunschmann(&sys) - 2 * Expr::pow(Expr::var("r"), 3) * b;
    let wunschmann_vs_monge = is_zero(&w_vs_m, cfg)?;

    let transformed = jet2_transformed_coframe(f, cfg)?;
    let target = jet2_target_coframe(f);
    let mut pullback_match: Vec<ZeroVerdict> = Vec::with_capacity(5);
    for (ours, shown) in transformed.iter().zip(&target) {
        let diff = ours.sub(shown)?;
        pullback_match.push(diff.zero_verdict(cfg)?);
    }

    let c: [Expr; 3] = [Expr::var("c1"), Expr::var("c2"), Expr::var("c3")];
    let solution_residual = is_zero(&solution_ode_residual(f, &c), cfg)?;

    let tangent = solution_tangent_frame(f, &c);
    let expected = [Expr::zero(), &c[0] * f.derivative(2, "t"), Expr::one()];
    let tangent_frame_residual = worst(
        tangent
            .iter()
            .zip(&expected)
            .map(|(a, b)| is_zero(&(a - b), cfg))
            .collect::<Result<Vec<_>, _>>()?,
    );

    // i_γ̇ (dY - P dX) = Ẏ - P Ẋ, the e₁ frame component.
    let contact_tangency = is_zero(&tangent[0], cfg)?;

    let conn = f_family_connection(f);
    let geo = geodesic_residual(f, &c, &conn);
    let geodesic_residual = worst(
        geo.iter()
            .map(|e| is_zero(e, cfg))
            .collect::<Result<Vec<_>, _>>()?,
    );

    Ok(ExampleReport {
        admissibility,
        mixed_zero,
        wunschmann_vs_monge,
        pullback_match: pullback_match.try_into().expect("five verdicts"),
        solution_residual,
        tangent_frame_residual,
        contact_tangency,
        geodesic_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::invariants::{chern, classify};

    fn cfg() -> ZeroConfig {
        ZeroConfig::with_seed(11)
    }

    #[test]
    fn flat_model_is_flat() {
        let rep = classify(&flat_model(), &cfg()).unwrap();
        assert!(rep.flat);
        assert!(rep.contact_projective_pair);
        assert!(simplify(&flat_model().integrability_residual()).is_zero_literal());
        let levi = crate::forms::levi_form(&flat_model()).unwrap();
        assert!(simplify(&levi.determinant()).is_zero_literal());
    }

    #[test]
    fn quadratic_family_reproduces_flat_classification() {
        let f = FFamily::Concrete(parse("p^2/4").unwrap());
        let family = classify(&f_family(&f, &cfg()).unwrap(), &cfg()).unwrap();
        let flat = classify(&flat_model(), &cfg()).unwrap();
        assert_eq!(family.flat, flat.flat);
        assert_eq!(family.contact_projective_pair, flat.contact_projective_pair);
        assert_eq!(family.wunschmann, flat.wunschmann);
        assert_eq!(family.monge, flat.monge);
        assert_eq!(family.mixed, flat.mixed);
        assert_eq!(family.chern, flat.chern);
    }

    #[test]
    fn quadratic_f_reduces_to_flat_h() {
        // f = p²/4 has f''' = 0, so H collapses to zero.
        let f = FFamily::Concrete(parse("p^2/4").unwrap());
        let sys = f_family(&f, &cfg()).unwrap();
        assert!(simplify(sys.h()).is_zero_literal());
        assert_eq!(simplify(sys.g()), simplify(flat_model().g()));
    }

    #[test]
    fn quartic_f_h_value() {
        let f = FFamily::Concrete(parse("p^4").unwrap());
        let sys = f_family(&f, &cfg()).unwrap();
        assert_eq!(simplify(sys.h()), simplify(&parse("-2*r^2/p").unwrap()));
    }

    #[test]
    fn linear_f_rejected() {
        let f = FFamily::Concrete(parse("p").unwrap());
        assert!(matches!(
            f_family(&f, &cfg()),
            Err(ScenarioError::SecondDerivativeVanishes)
        ));
    }

    #[test]
    fn opaque_family_invariants() {
        let f = FFamily::Opaque(Sym::new("f"));
        let sys = f_family(&f, &cfg()).unwrap();
        assert!(simplify(&mixed_invariant(&sys)).is_zero_literal());
        assert!(simplify(&chern(sys.h())).is_zero_literal());
    }

    #[test]
    fn intermediate_coframe_matches_pullback() {
        // The raw pullback (before rescaling) must reproduce the displayed
        // intermediate coframe, form by form.
        let f = FFamily::Opaque(Sym::new("f"));
        let sys = f_family(&f, &cfg()).unwrap();
        let cf = standard_coframe(&sys);
        let map = jet2_map(&f);
        let shown = jet2_intermediate_coframe(&f);
        for (i, w) in cf.forms().iter().enumerate() {
            let pulled = pullback(w, &map).unwrap();
            let diff = pulled.sub(&shown[i]).unwrap();
            let verdict = diff.zero_verdict(&cfg()).unwrap();
            assert!(verdict.is_zero(), "form {} differs: {}", i + 1, diff);
        }
    }

    #[test]
    fn rescaling_block_pattern() {
        let f = FFamily::Opaque(Sym::new("f"));
        let m = jet2_rescaling(&f);
        for row in [1, 2] {
            for col in [3, 4] {
                assert!(m[row][col].is_zero_literal());
                assert!(m[col][row].is_zero_literal());
            }
        }
        // First row touches only the first form.
        for col in 1..5 {
            assert!(m[0][col].is_zero_literal());
        }
    }

    #[test]
    fn geodesic_residual_vanishes_and_detects_corruption() {
        let f = FFamily::Concrete(parse("p^4").unwrap());
        let c = [Expr::int(1), Expr::zero(), Expr::zero()];
        let conn = f_family_connection(&f);
        for r in geodesic_residual(&f, &c, &conn) {
            assert!(r.is_zero_literal(), "residual {r}");
        }
        // Straight lines (c₁ = 0) are geodesics for any f.
        let line = [Expr::zero(), Expr::int(3), Expr::int(5)];
        for r in geodesic_residual(&f, &line, &conn) {
            assert!(r.is_zero_literal());
        }
        // Sign-flipped connection must fail.
        let mut bad = conn.clone();
        bad.0[1][1][2] = simplify(&(Expr::int(-1) * &bad.0[1][1][2]));
        bad.0[1][2][1] = bad.0[1][1][2].clone();
        let res = geodesic_residual(&f, &c, &bad);
        let v = worst(
            res.iter()
                .map(|e| is_zero(e, &cfg()).unwrap())
                .collect::<Vec<_>>(),
        );
        assert!(v.is_nonzero());
    }

    #[test]
    fn suite_quartic() {
        let f = FFamily::Concrete(parse("p^4").unwrap());
        let rep = run_example_suite(&f, &cfg()).unwrap();
        assert!(rep.all_verdicts_zero(), "{rep:#?}");
        // The Wünschmann invariant itself is nonzero here.
        let sys = f_family(&f, &cfg()).unwrap();
        assert!(is_zero(&wunschmann(&sys), &cfg()).unwrap().is_nonzero());
    }

    #[test]
    fn suite_conic_case_is_flat() {
        // f = p^2 kills H entirely; the suite passes and W, M vanish too.
        let f = FFamily::Concrete(parse("p^2").unwrap());
        let rep = run_example_suite(&f, &cfg()).unwrap();
        assert!(rep.all_verdicts_zero(), "{rep:#?}");
        let sys = f_family(&f, &cfg()).unwrap();
        assert!(simplify(&wunschmann(&sys)).is_zero_literal());
        assert!(simplify(&crate::invariants::monge(sys.g())).is_zero_literal());
    }

    #[test]
    fn suite_cubic() {
        let f = FFamily::Concrete(parse("p^3").unwrap());
        let rep = run_example_suite(&f, &cfg()).unwrap();
        assert!(rep.all_verdicts_zero(), "{rep:#?}");
        // The connection coefficient is -f'''/(2 f'') = -6/(12 X) = -1/(2X).
        let conn = f_family_connection(&f);
        assert_eq!(
            simplify(&conn.0[1][1][2]),
            simplify(&parse("-1/(2*X)").unwrap())
        );
    }

    #[test]
    fn suite_opaque() {
        let f = FFamily::Opaque(Sym::new("f"));
        let rep = run_example_suite(&f, &cfg()).unwrap();
        assert!(rep.all_verdicts_zero(), "{rep:#?}");
    }
}
