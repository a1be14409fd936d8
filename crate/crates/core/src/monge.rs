//! Conic detection: the elimination determinant behind the 5th-order Monge
//! ODE, and a data-driven conic fit.
//!
//! A function `G(p)` has its graph on the general conic
//! `a₁G² + 2a₂pG + a₃p² + a₄G + a₅p + a₆ = 0` exactly when the six rows of
//! p-derivatives (orders 0..5) of the monomial vector
//! `[G², 2pG, p², G, p, 1]` are linearly dependent. Eliminating the
//! coefficients turns that into the vanishing of a 6×6 determinant, which
//! factors as `κ · G_pp^α · M(G)` with `M` the Monge expression. The pair
//! `(κ, α)` is not asserted by hand: it is computed once by an independent
//! cofactor-expansion oracle in the test suite and frozen into
//! `fixtures/monge_factorization.json`.

use crate::expr::poly::{build_table_many, to_ratfunc, Poly, RatFunc};
use crate::expr::{Expr, Sym};
use crate::invariants::monge;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};
use serde::Deserialize;
use std::sync::OnceLock;
use thiserror::Error;

/// `[G², 2pG, p², G, p, 1]`.
pub fn conic_monomials(g: &Expr) -> [Expr; 6] {
    let p = Expr::var("p");
    [
        Expr::pow(g.clone(), 2),
        2 * &p * g,
        Expr::pow(p.clone(), 2),
        g.clone(),
        p,
        Expr::one(),
    ]
}

/// Row `k` holds the k-th total p-derivative of the six conic monomials;
/// coordinates other than `p` ride along as inert constants.
pub fn conic_derivative_matrix(g: &Expr) -> [[Expr; 6]; 6] {
    let p = Sym::new("p");
    let mut rows: Vec<[Expr; 6]> = Vec::with_capacity(6);
    rows.push(conic_monomials(g));
    for k in 1..6 {
        let prev = &rows[k - 1];
        rows.push(std::array::from_fn(|j| prev[j].diff(&p)));
    }
    rows.try_into().unwrap()
}

/// Exact determinant of [`conic_derivative_matrix`], computed by clearing
/// denominators row-wise and running fraction-free (Bareiss) elimination over
/// the polynomial ring in the expression atoms.
pub fn elimination_determinant(g: &Expr) -> Expr {
    let matrix = conic_derivative_matrix(g);
    let flat: Vec<&Expr> = matrix.iter().flatten().collect();
    let table = build_table_many(flat.into_iter());

    let mut rows: Vec<Vec<Poly>> = Vec::with_capacity(6);
    let mut scale = RatFunc::constant(BigRational::one());
    for row in &matrix {
        let rfs: Vec<RatFunc> = row
            .iter()
            .map(|e| to_ratfunc(e, &table).expect("conic rows are rational functions"))
            .collect();
        let mut common_den = Poly::one();
        for rf in &rfs {
            common_den = common_den.mul(&rf.den);
        }
        let cleared: Vec<Poly> = rfs
            .iter()
            .map(|rf| {
                let others = rfs
                    .iter()
                    .filter(|o| !std::ptr::eq(*o, rf))
                    .fold(Poly::one(), |acc, o| acc.mul(&o.den));
                rf.num.mul(&others)
            })
            .collect();
        scale = scale
            .mul(&RatFunc {
                num: common_den,
                den: Poly::one(),
            })
            .expect("row scale");
        rows.push(cleared);
    }

    let det = bareiss_determinant(rows);
    let result = RatFunc {
        num: det,
        den: Poly::one(),
    }
    .div(&scale)
    .expect("denominator scale is nonzero");
    crate::expr::poly::ratfunc_to_expr(&result, &table)
}

/// Fraction-free determinant of a square polynomial matrix.
fn bareiss_determinant(mut m: Vec<Vec<Poly>>) -> Poly {
    let n = m.len();
    let mut sign = false;
    let mut prev_pivot = Poly::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    sign = !sign;
                }
                None => return Poly::zero(),
            }
        }
        let pivot = m[k][k].clone();
        for i in k + 1..n {
            for j in k + 1..n {
                let t = pivot.mul(&m[i][j]).sub(&m[i][k].mul(&m[k][j]));
                m[i][j] = t
                    .try_div(&prev_pivot)
                    .expect("Bareiss intermediate division is exact");
            }
            m[i][k] = Poly::zero();
        }
        prev_pivot = pivot;
    }
    let det = m[n - 1][n - 1].clone();
    if sign {
        det.neg()
    } else {
        det
    }
}

#[derive(Debug, Deserialize)]
struct FactorizationFixture {
    schema: u32,
    kappa: String,
    alpha: u32,
}

/// The frozen `(κ, α)` with `det = κ · G_pp^α · M(G)`.
pub fn factorization_constants() -> (&'static BigRational, u32) {
    static CONSTS: OnceLock<(BigRational, u32)> = OnceLock::new();
    let (k, a) = CONSTS.get_or_init(|| {
        let raw = include_str!("../fixtures/monge_factorization.json");
        let fx: FactorizationFixture = serde_json::from_str(raw).expect("fixture parses");
        assert_eq!(fx.schema, 1, "unknown fixture schema");
        let kappa: BigInt = fx.kappa.parse().expect("kappa is an integer");
        (BigRational::from_integer(kappa), fx.alpha)
    });
    (k, *a)
}

/// `det - κ · G_pp^α · M(G)`; identically zero by the frozen factorization.
pub fn factorization_residual(g: &Expr) -> Expr {
    let (kappa, alpha) = factorization_constants();
    let p = Sym::new("p");
    let g_pp = g.diff_n(&p, 2);
    elimination_determinant(g)
        - Expr::rat_value(kappa.clone()) * Expr::pow(g_pp, alpha as i64) * monge(g)
}

// ---- conic fitting ---------------------------------------------------------

/// Conic coefficients `(a₁,…,a₆)`, normalized so the largest-magnitude entry
/// is exactly 1 when produced by fitting.
#[derive(Debug, Clone, PartialEq)]
pub enum ConicCoeffs {
    Exact([BigRational; 6]),
    Numeric([f64; 6]),
}

impl ConicCoeffs {
    pub fn to_f64(&self) -> [f64; 6] {
        match self {
            ConicCoeffs::Exact(cs) => {
                std::array::from_fn(|i| cs[i].to_f64().unwrap_or(f64::NAN))
            }
            ConicCoeffs::Numeric(cs) => *cs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicFit {
    pub coeffs: ConicCoeffs,
    /// Root-mean-square of the conic form over the samples.
    pub residual: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConicFitError {
    #[error("need at least 6 samples with distinct p values, got {0}")]
    TooFewSamples(usize),
    #[error("design matrix is rank deficient: the samples determine no unique conic")]
    RankDeficient,
}

/// Samples of the graph `(p, G(p))`.
#[derive(Debug, Clone)]
pub enum ConicSamples {
    Exact(Vec<(BigRational, BigRational)>),
    Numeric(Vec<(f64, f64)>),
}

fn design_row_exact(p: &BigRational, g: &BigRational) -> [BigRational; 6] {
    [
        g * g,
        BigRational::from_integer(2.into()) * p * g,
        p * p,
        g.clone(),
        p.clone(),
        BigRational::one(),
    ]
}

fn design_row_f64(p: f64, g: f64) -> [f64; 6] {
    [g * g, 2.0 * p * g, p * p, g, p, 1.0]
}

/// Least-squares conic through the samples: exact nullspace of the design
/// matrix when the inputs are rational (fraction-free elimination), floating
/// smallest-singular-direction otherwise or when no exact conic exists.
pub fn conic_fit(samples: &ConicSamples) -> Result<ConicFit, ConicFitError> {
    match samples {
        ConicSamples::Exact(points) => {
            check_distinct(points.len(), points.iter().map(|(p, _)| p.clone()))?;
            let rows: Vec<[BigRational; 6]> = points
                .iter()
                .map(|(p, g)| design_row_exact(p, g))
                .collect();
            match exact_nullspace(&rows)? {
                Some(coeffs) => Ok(ConicFit {
                    coeffs: ConicCoeffs::Exact(coeffs),
                    residual: 0.0,
                }),
                None => {
                    let pts: Vec<(f64, f64)> = points
                        .iter()
                        .map(|(p, g)| {
                            (p.to_f64().expect("finite"), g.to_f64().expect("finite"))
                        })
                        .collect();
                    numeric_fit(&pts)
                }
            }
        }
        ConicSamples::Numeric(points) => {
            let distinct: std::collections::BTreeSet<u64> =
                points.iter().map(|(p, _)| p.to_bits()).collect();
            if points.len() < 6 || distinct.len() < 6 {
                return Err(ConicFitError::TooFewSamples(distinct.len().min(points.len())));
            }
            numeric_fit(points)
        }
    }
}

fn check_distinct<I: Iterator<Item = BigRational>>(
    n: usize,
    ps: I,
) -> Result<(), ConicFitError> {
    let distinct: std::collections::BTreeSet<BigRational> = ps.collect();
    if n < 6 || distinct.len() < 6 {
        return Err(ConicFitError::TooFewSamples(distinct.len().min(n)));
    }
    Ok(())
}

/// Exact nullspace of the n×6 design matrix after clearing each row to
/// integers: fraction-free (Bareiss) forward elimination to echelon form,
/// then rational back-substitution. Returns the normalized null vector when
/// the nullspace is 1-dimensional, `None` when trivial, and an error when 2-
/// or-more dimensional (no unique conic).
fn exact_nullspace(
    rows: &[[BigRational; 6]],
) -> Result<Option<[BigRational; 6]>, ConicFitError> {
    let mut m: Vec<[BigInt; 6]> = rows
        .iter()
        .map(|row| {
            let lcm = row
                .iter()
                .fold(BigInt::one(), |acc, c| num::integer::lcm(acc, c.denom().clone()));
            std::array::from_fn(|j| (&row[j] * BigRational::from_integer(lcm.clone())).to_integer())
        })
        .collect();

    let n = m.len();
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut row = 0usize;
    let mut prev = BigInt::one();
    for col in 0..6 {
        let Some(pr) = (row..n).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(row, pr);
        let pivot = m[row][col].clone();
        for i in row + 1..n {
            let factor = m[i][col].clone();
            for j in 0..6 {
                let t = &pivot * &m[i][j] - &factor * &m[row][j];
                debug_assert!((&t % &prev).is_zero());
                m[i][j] = &t / &prev;
            }
        }
        prev = pivot;
        pivot_cols.push(col);
        row += 1;
        if row == n {
            break;
        }
    }

    let rank = pivot_cols.len();
    match 6 - rank {
        0 => Ok(None),
        1 => {
            let free_col = (0..6).find(|c| !pivot_cols.contains(c)).unwrap();
            let mut v: [BigRational; 6] = std::array::from_fn(|_| BigRational::zero());
            v[free_col] = BigRational::one();
            for r in (0..rank).rev() {
                let pc = pivot_cols[r];
                let mut rhs = BigRational::zero();
                for j in pc + 1..6 {
                    rhs += BigRational::from_integer(m[r][j].clone()) * &v[j];
                }
                v[pc] = -rhs / BigRational::from_integer(m[r][pc].clone());
            }
            Ok(Some(normalize_exact(v)))
        }
        _ => Err(ConicFitError::RankDeficient),
    }
}

/// Rescales so the first largest-magnitude coefficient becomes exactly 1.
fn normalize_exact(v: [BigRational; 6]) -> [BigRational; 6] {
    let mut best = 0usize;
    for i in 1..6 {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    let scale = v[best].clone();
    std::array::from_fn(|i| &v[i] / &scale)
}

fn numeric_fit(points: &[(f64, f64)]) -> Result<ConicFit, ConicFitError> {
    let rows: Vec<[f64; 6]> = points.iter().map(|&(p, g)| design_row_f64(p, g)).collect();
    let mut ata = [[0.0f64; 6]; 6];
    for row in &rows {
        for i in 0..6 {
            for j in 0..6 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }

    // Rank detection on the column-equilibrated matrix, so wildly scaled but
    // full-rank monomial columns (a quintic graph, say) are not mistaken for
    // a degenerate sample set.
    let col_norm: [f64; 6] = std::array::from_fn(|i| ata[i][i].sqrt().max(f64::MIN_POSITIVE));
    let mut scaled = [[0.0f64; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            scaled[i][j] = ata[i][j] / (col_norm[i] * col_norm[j]);
        }
    }
    let (_, scaled_eigs) = jacobi_eigen(scaled);
    let near_zero = scaled_eigs.iter().filter(|e| e.abs() < 1e-20).count();
    if near_zero >= 2 {
        return Err(ConicFitError::RankDeficient);
    }

    let (v, eigs) = jacobi_eigen(ata);
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| eigs[a].abs().partial_cmp(&eigs[b].abs()).unwrap());
    let min_idx = order[0];
    let mut coeffs: [f64; 6] = std::array::from_fn(|i| v[i][min_idx]);
    let mut best = 0usize;
    for i in 1..6 {
        if coeffs[i].abs() > coeffs[best].abs() {
            best = i;
        }
    }
    let scale = coeffs[best];
    for c in &mut coeffs {
        *c /= scale;
    }
    let mut ss = 0.0;
    for row in &rows {
        let form: f64 = row.iter().zip(&coeffs).map(|(r, c)| r * c).sum();
        ss += form * form;
    }
    let residual = (ss / rows.len() as f64).sqrt();
    Ok(ConicFit {
        coeffs: ConicCoeffs::Numeric(coeffs),
        residual,
    })
}

/// Cyclic Jacobi eigensolver for a symmetric 6×6 matrix. Returns the column
/// eigenvector matrix and the eigenvalues.
fn jacobi_eigen(mut a: [[f64; 6]; 6]) -> ([[f64; 6]; 6], [f64; 6]) {
    let mut v = [[0.0f64; 6]; 6];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..60 {
        let mut off = 0.0;
        for i in 0..6 {
            for j in i + 1..6 {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-300 {
            break;
        }
        for p in 0..6 {
            for q in p + 1..6 {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..6 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..6 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..6 {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigs = std::array::from_fn(|i| a[i][i]);
    (v, eigs)
}
