//! Sobolev–Slobodeckij spaces made executable.
//!
//! * [`exponents`] decides, in exact rational arithmetic, whether the
//!   hypotheses of the classical embedding, multiplication, differentiation,
//!   extension and composition theorems hold, and returns a certificate.
//! * [`funcexpr`] parses, differentiates and evaluates the expression language
//!   used for test functions, chart maps and metric components.
//! * [`quadrature`] computes L^p norms, integer order norms and Gagliardo
//!   seminorms on Euclidean boxes.
//! * [`atlas`], [`geometry`], [`manifold_norms`] and [`operators`] carry the
//!   same machinery to compact manifolds through charts, partitions of unity
//!   and the Levi-Civita connection.

pub mod atlas;
pub mod exponents;
pub mod funcexpr;
pub mod geometry;
pub mod manifold_norms;
pub mod operators;
pub mod quadrature;

pub mod linalg;
pub mod sampling;

pub use funcexpr::{diff_expr, eval_expr, parse_expr, Expr};

/// Version tag carried by every serialized report and config.
pub const SCHEMA_VERSION: &str = "v1";
