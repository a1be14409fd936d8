//! Independent oracle for the conic elimination determinant.
//!
//! The implementation computes the 6×6 determinant by fraction-free
//! elimination over polynomial atoms; this oracle recomputes it by plain
//! Laplace cofactor expansion on expression trees and derives the
//! factorization constants `(κ, α)` from scratch. The frozen values in
//! `fixtures/monge_factorization.json` must agree.

use num::rational::BigRational;
use num::traits::One;
use paracr_core::expr::{is_zero, parse, simplify, Expr, Sym, ZeroConfig};
use paracr_core::invariants::monge;
use paracr_core::monge::{
    conic_derivative_matrix, elimination_determinant, factorization_constants,
};

/// Laplace expansion along the first row, entirely on `Expr` values.
fn cofactor_det(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = Expr::zero();
    for (j, entry) in m[0].iter().enumerate() {
        if entry.is_zero_literal() {
            continue;
        }
        let minor: Vec<Vec<Expr>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let term = entry * cofactor_det(&minor);
        acc = if j % 2 == 0 { acc + term } else { acc - term };
    }
    acc
}

fn oracle_determinant(g: &Expr) -> Expr {
    let m = conic_derivative_matrix(g);
    let rows: Vec<Vec<Expr>> = m.iter().map(|r| r.to_vec()).collect();
    simplify(&cofactor_det(&rows))
}

/// Derives `(κ, α)` by exact division of the oracle determinant for an
/// opaque `g(p)`: the determinant over `κ G_pp^α M` must simplify to zero
/// for exactly one small `α` with a constant ratio `κ`.
fn derive_constants() -> (BigRational, u32) {
    let g = parse("g(p)").unwrap();
    let p = Sym::new("p");
    let det = oracle_determinant(&g);
    let m = monge(&g);
    let g_pp = g.diff_n(&p, 2);
    for alpha in 0..4u32 {
        let denom = Expr::pow(g_pp.clone(), alpha as i64) * m.clone();
        let ratio = simplify(&Expr::div(det.clone(), denom));
        if let Some(kappa) = ratio.as_rational() {
            return (kappa.clone(), alpha);
        }
    }
    panic!("determinant does not factor as kappa * G_pp^alpha * M");
}

#[test]
fn frozen_constants_match_the_oracle() {
    let (kappa, alpha) = derive_constants();
    let (frozen_kappa, frozen_alpha) = factorization_constants();
    assert_eq!(&kappa, frozen_kappa, "kappa disagrees with the fixture");
    assert_eq!(alpha, frozen_alpha, "alpha disagrees with the fixture");
    assert_eq!(kappa, BigRational::from_integer(8.into()));
    assert_eq!(alpha, 1);
}

#[test]
fn oracle_agrees_with_the_bareiss_implementation() {
    for g in ["g(p)", "p^5", "1/p", "2*p^2 - 3*p + 1/2"] {
        let g = parse(g).unwrap();
        let a = oracle_determinant(&g);
        let b = simplify(&elimination_determinant(&g));
        assert_eq!(a, b, "determinant routes disagree for {g}");
    }
}

#[test]
fn oracle_determinant_vanishes_on_the_hyperbola() {
    let det = oracle_determinant(&parse("1/p").unwrap());
    assert!(is_zero(&det, &ZeroConfig::default()).unwrap().is_zero());
}

#[test]
fn ratio_is_not_constant_for_wrong_alpha() {
    // A guard that derive_constants really discriminates: with alpha = 0 the
    // ratio det / M is G_pp-dependent for opaque g.
    let g = parse("g(p)").unwrap();
    let det = oracle_determinant(&g);
    let ratio = simplify(&Expr::div(det, monge(&g)));
    assert!(ratio.as_rational().is_none());
    let _ = BigRational::one();
}
