//! Symbolic verification toolkit for 5-dimensional para-CR structures
//! presented as PDE pairs `z_y = G(x,y,z,p)`, `z_xxx = H(x,y,z,p,r)`.
//!
//! The crate provides:
//!
//! * exact expression trees with differentiation, substitution, evaluation
//!   and probabilistic identity testing ([`expr`]);
//! * the total-derivative operators and integrability/admissibility checks
//!   on the 5-dimensional jet coordinates ([`jet`]);
//! * the scalar differential invariants (Wünschmann, Monge, mixed, Chern)
//!   and the classification they induce ([`invariants`]);
//! * the conic-elimination determinant and a conic fitting companion
//!   ([`monge`]);
//! * concrete differential forms on the 5-manifold: exterior algebra, the
//!   standard coframe, Levi form, Frobenius and symmetry residuals, and
//!   pullback under coordinate changes ([`forms`]);
//! * abstract exterior differential systems with partially specified
//!   coefficient differentials ([`eds`]);
//! * end-to-end reproductions of the worked examples ([`scenarios`]).

pub mod eds;
pub mod expr;
pub mod forms;
pub mod invariants;
pub mod jet;
pub mod monge;
pub mod scenarios;

pub use expr::{
    is_zero, parse, parse_with, simplify, substitute, Expr, ExprKind, ParseContext,
    ParseError, Point, Sym, ZeroConfig, ZeroError, ZeroVerdict,
};
pub use jet::{AdmissibilityReport, PdeSystem};
