//! Finite-difference oracle for second derivatives and curvatures.
//!
//! Only [`Expr::eval`] is used here; nothing in this module touches the
//! symbolic differentiation path, so disagreements point at real bugs.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::geometry::{Curvatures, Point2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("invalid finite-difference configuration: {0}")]
    Config(String),
    #[error("stencil of half-width {step} at {coord} leaves the positive orthant margin")]
    StencilOutsideDomain { coord: f64, step: f64 },
}

/// Central differences with Richardson extrapolation over the steps
/// `step, step/2, ..., step/2^levels` (each scaled by `max(1, |coordinate|)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdConfig {
    pub step: f64,
    pub richardson_levels: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            step: 1e-2,
            richardson_levels: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdHessian {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

fn richardson(estimates: &[f64]) -> f64 {
    // Row k of the tableau holds estimates at step / 2^k; errors are even
    // powers of the step, so column j cancels the 4^j term.
    let mut row = estimates.to_vec();
    let mut factor = 4.0;
    for _ in 1..estimates.len() {
        row = row
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
        factor *= 4.0;
    }
    row[0]
}

/// Second partials of `h(x, y)` at `p`.
pub fn fd_hessian(h: &Expr, p: Point2, cfg: &FdConfig) -> Result<FdHessian, OracleError> {
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return Err(OracleError::Config(format!("step must be positive, got {}", cfg.step)));
    }
    let [x, y] = p;
    let hx = cfg.step * x.abs().max(1.0);
    let hy = cfg.step * y.abs().max(1.0);
    for (coord, step) in [(x, hx), (y, hy)] {
        if step >= coord / 10.0 {
            return Err(OracleError::StencilOutsideDomain { coord, step });
        }
    }
    let f = |a: f64, b: f64| h.eval(&[("x", a), ("y", b)]);
    let f0 = f(x, y)?;

    let levels = cfg.richardson_levels + 1;
    let mut xx = Vec::with_capacity(levels);
    let mut yy = Vec::with_capacity(levels);
    let mut xy = Vec::with_capacity(levels);
    for k in 0..levels {
        let scale = 0.5f64.powi(k as i32);
        let (dx, dy) = (hx * scale, hy * scale);
        xx.push((f(x + dx, y)? - 2.0 * f0 + f(x - dx, y)?) / (dx * dx));
        yy.push((f(x, y + dy)? - 2.0 * f0 + f(x, y - dy)?) / (dy * dy));
        xy.push(
            (f(x + dx, y + dy)? - f(x + dx, y - dy)? - f(x - dx, y + dy)? + f(x - dx, y - dy)?)
                / (4.0 * dx * dy),
        );
    }
    Ok(FdHessian {
        xx: richardson(&xx),
        xy: richardson(&xy),
        yy: richardson(&yy),
    })
}

/// `K = h_xx h_yy - h_xy^2` and `H = h_xx + h_yy` from [`fd_hessian`].
pub fn fd_curvatures(h: &Expr, p: Point2, cfg: &FdConfig) -> Result<Curvatures, OracleError> {
    let hess = fd_hessian(h, p, cfg)?;
    Ok(Curvatures {
        relative: hess.xx * hess.yy - hess.xy * hess.xy,
        mean: hess.xx + hess.yy,
    })
}
