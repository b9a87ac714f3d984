//! Isotropic geometry of production-function graph surfaces.
//!
//! The graph `z = h(x, y)` of a two-input production function is a Monge
//! surface in isotropic 3-space. Its relative curvature is the Hessian
//! determinant of `h` and its isotropic mean curvature is the Laplacian of
//! `h`. This crate computes both from exact symbolic derivatives, checks them
//! against an independent finite-difference oracle, and classifies product
//! production functions `h = f(x) g(y)` with constant curvature.
//!
//! Modules:
//! - [`expr`]: expression parsing, evaluation, differentiation, simplification
//! - [`geometry`]: fundamental forms, curvatures, i-distance, i-motions
//! - [`models`]: production-function families, homogeneity, returns to scale
//! - [`classify`]: constancy tests and the constant-curvature case taxonomy
//! - [`oracle`]: finite-difference Hessians and curvatures

pub mod expr;

pub use expr::{parse, Env, Expr, ExprError};
pub mod classify;
pub mod geometry;
pub mod models;
pub mod oracle;
