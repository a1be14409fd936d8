//! Zero verdicts: structural decisions backed by randomized identity testing.
//!
//! A claim that an expression "vanishes identically" is reported either as a
//! structural fact (its normal form is the zero constant) or as a
//! Schwartz–Zippel style verdict from evaluation at random rational points.
//! Nonzero verdicts always carry a concrete witness point.
//!
//! Sampling is deterministic given `(seed, samples)`: each attempt index gets
//! its own generator stream, so the attempt space can be partitioned across
//! threads without changing any verdict.

use super::{partial_atom_key, Expr, EvalError, Point};
use num::bigint::BigInt;
use num::rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ZeroVerdict {
    /// The simplified expression is the zero constant.
    StructurallyZero,
    /// Zero at every sampled point.
    ProbablyZero { samples: u32, seed: u64 },
    /// A concrete point where the expression evaluates to something nonzero.
    Nonzero { witness: Point, value: BigRational },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::Nonzero { .. })
    }

    pub fn is_nonzero(&self) -> bool {
        !self.is_zero()
    }

    pub fn is_structural(&self) -> bool {
        matches!(self, ZeroVerdict::StructurallyZero)
    }
}

impl Serialize for ZeroVerdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ZeroVerdict::StructurallyZero => {
                let mut st = s.serialize_struct("ZeroVerdict", 1)?;
                st.serialize_field("status", "structurally_zero")?;
                st.end()
            }
            ZeroVerdict::ProbablyZero { samples, seed } => {
                let mut st = s.serialize_struct("ZeroVerdict", 3)?;
                st.serialize_field("status", "probably_zero")?;
                st.serialize_field("samples", samples)?;
                st.serialize_field("seed", seed)?;
                st.end()
            }
            ZeroVerdict::Nonzero { witness, value } => {
                let mut st = s.serialize_struct("ZeroVerdict", 3)?;
                st.serialize_field("status", "nonzero")?;
                st.serialize_field("value", &value.to_string())?;
                st.serialize_field("witness", witness)?;
                st.end()
            }
        }
    }
}

/// Sampling parameters for identity testing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroConfig {
    pub samples: u32,
    pub seed: u64,
    /// Degree of the random polynomial instantiating each opaque function.
    pub instantiation_degree: u32,
    /// Numerators and denominators are drawn from `[-range, range]`.
    pub coefficient_range: i64,
}

impl Default for ZeroConfig {
    fn default() -> Self {
        ZeroConfig {
            samples: 32,
            seed: 0,
            instantiation_degree: 6,
            coefficient_range: 10_000,
        }
    }
}

impl ZeroConfig {
    pub fn with_seed(seed: u64) -> Self {
        ZeroConfig {
            seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ZeroError {
    #[error("singular-point rejection exhausted after {attempts} attempts")]
    Exhausted { attempts: u64 },
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("sample count must be at least 1")]
    NoSamples,
}

fn random_rational(rng: &mut ChaCha8Rng, range: i64) -> BigRational {
    let num = rng.gen_range(-range..=range);
    let den = rng.gen_range(1..=range);
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn sample_point(e: &Expr, rng: &mut ChaCha8Rng, cfg: &ZeroConfig) -> Point {
    let symbols = e.symbols();
    let mut pt = Point::new();
    for c in &symbols.coordinates {
        pt.coords
            .insert(c.clone(), random_rational(rng, cfg.coefficient_range));
    }
    for f in &symbols.functions {
        let coeffs = (0..=cfg.instantiation_degree)
            .map(|_| random_rational(rng, cfg.coefficient_range))
            .collect();
        pt.functions.insert(f.clone(), coeffs);
    }
    for atom in &symbols.partial_atoms {
        pt.partials.insert(
            partial_atom_key(atom),
            random_rational(rng, cfg.coefficient_range),
        );
    }
    pt
}

fn sample_loop(e: &Expr, cfg: &ZeroConfig) -> Result<ZeroVerdict, ZeroError> {
    if cfg.samples == 0 {
        return Err(ZeroError::NoSamples);
    }
    let max_attempts = 100 * cfg.samples as u64;
    let mut successes = 0u32;
    for attempt in 0..max_attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(attempt);
        let pt = sample_point(e, &mut rng, cfg);
        match e.eval(&pt) {
            Ok(v) if v == BigRational::from_integer(0.into()) => {
                successes += 1;
                if successes == cfg.samples {
                    return Ok(ZeroVerdict::ProbablyZero {
                        samples: cfg.samples,
                        seed: cfg.seed,
                    });
                }
            }
            Ok(v) => {
                return Ok(ZeroVerdict::Nonzero {
                    witness: pt,
                    value: v,
                })
            }
            Err(EvalError::DivisionByZero) => continue,
            Err(other) => return Err(ZeroError::Eval(other)),
        }
    }
    Err(ZeroError::Exhausted {
        attempts: max_attempts,
    })
}

/// Decides whether `e` vanishes identically: structurally zero if the normal
/// form is the zero constant, otherwise sampled at `cfg.samples` random
/// rational points with singular points rejected and resampled.
pub fn is_zero(e: &Expr, cfg: &ZeroConfig) -> Result<ZeroVerdict, ZeroError> {
    let s = super::simplify(e);
    if s.is_zero_literal() {
        return Ok(ZeroVerdict::StructurallyZero);
    }
    sample_loop(e, cfg)
}

/// Pure sampling check without the structural shortcut; every verdict comes
/// from actual evaluations. Used where a count of random evaluations is the
/// requirement itself.
pub fn sampled_zero_check(e: &Expr, cfg: &ZeroConfig) -> Result<ZeroVerdict, ZeroError> {
    sample_loop(e, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn constant_nonzero_has_witness() {
        let v = is_zero(&parse("12").unwrap(), &ZeroConfig::default()).unwrap();
        match v {
            ZeroVerdict::Nonzero { witness, value } => {
                assert_eq!(value, BigRational::from_integer(12.into()));
                // Witness reproduces the stored value.
                assert_eq!(parse("12").unwrap().eval(&witness).unwrap(), value);
            }
            other => panic!("expected nonzero, got {other:?}"),
        }
    }

    #[test]
    fn structural_zero() {
        let v = is_zero(&parse("(p^2 - p^2)/r").unwrap(), &ZeroConfig::default()).unwrap();
        assert_eq!(v, ZeroVerdict::StructurallyZero);
    }

    #[test]
    fn witness_reproducibility() {
        let e = parse("x*y - 3").unwrap();
        let v = is_zero(&e, &ZeroConfig::default()).unwrap();
        match v {
            ZeroVerdict::Nonzero { witness, value } => {
                assert_eq!(e.eval(&witness).unwrap(), value);
            }
            other => panic!("expected nonzero, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let e = parse("x^2 - y").unwrap();
        let cfg = ZeroConfig::with_seed(7);
        assert_eq!(is_zero(&e, &cfg).unwrap(), is_zero(&e, &cfg).unwrap());
    }

    #[test]
    fn opaque_identity_sampled() {
        // (f(p))' = f'(p) checked through instantiation only.
        let e = parse("f'(p) - f'(p)").unwrap();
        let v = sampled_zero_check(&e, &ZeroConfig::default()).unwrap();
        assert!(matches!(v, ZeroVerdict::ProbablyZero { .. }));
    }

    #[test]
    fn exhaustion_on_everywhere_singular() {
        let e = parse("1/(p - p)").unwrap();
        let err = is_zero(&e, &ZeroConfig::default()).unwrap_err();
        assert!(matches!(err, ZeroError::Exhausted { .. }));
    }
}
