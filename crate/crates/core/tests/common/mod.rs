//! Shared generators for the integration tests.
#![allow(dead_code)]

use isoprod::expr::Expr;
use isoprod::geometry::{Hessian, MongeSurface, Point2};
use isoprod::oracle::{fd_hessian, FdConfig};
use rand::Rng;

/// Random expression over `x`, `y` of depth at most `depth`, with constants
/// in `[0.5, 2]`.
pub fn random_tree<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return match rng.random_range(0..3) {
            0 => Expr::var("x"),
            1 => Expr::var("y"),
            _ => Expr::constant(round(rng.random_range(0.5..2.0))),
        };
    }
    let op = rng.random_range(0..7);
    let mut sub = || random_tree(rng, depth - 1);
    match op {
        0 => Expr::add(sub(), sub()),
        1 => Expr::sub(sub(), sub()),
        2 => Expr::mul(sub(), sub()),
        3 => Expr::div(sub(), sub()),
        4 => {
            let base = sub();
            let exponent = round(rng.random_range(0.5..2.5));
            Expr::pow(base, Expr::constant(exponent))
        }
        5 => Expr::exp(sub()),
        _ => Expr::log(sub()),
    }
}

// three decimals keep printed trees readable
fn round(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

pub fn uniform_point<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Point2 {
    [rng.random_range(lo..hi), rng.random_range(lo..hi)]
}

/// Why a point was not compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Skip {
    /// Second derivatives negligible next to `h`.
    Degenerate,
    /// The finite-difference estimate changes with the step (a nearby
    /// singularity inside the stencil), so the oracle has no answer here.
    Unresolved,
}

fn relative_gap(a: &Hessian, b: &Hessian, size: f64) -> (f64, f64) {
    let dk = (a.det() - b.det()).abs() / a.det().abs().max(a.det_magnitude()).max(size * size);
    let dh = (a.trace() - b.trace()).abs() / a.trace().abs().max(a.trace_magnitude()).max(size);
    (dk, dh)
}

fn fd(h: &isoprod::Expr, p: Point2, step: f64) -> Option<Hessian> {
    let cfg = FdConfig {
        step,
        ..FdConfig::default()
    };
    let fd = fd_hessian(h, p, &cfg).ok()?;
    Some(Hessian {
        xx: fd.xx,
        xy: fd.xy,
        yy: fd.yy,
    })
}

/// Relative discrepancies `(K, H)` between the symbolic and the
/// finite-difference curvatures at `p`. Each is measured against the
/// magnitude of the terms of the curvature, and at least against the Hessian
/// size for `H` and its square for `K`, which are linear and quadratic in the
/// second derivatives. Returns `None` when an evaluation fails.
pub fn oracle_discrepancy(m: &MongeSurface, p: Point2) -> Option<Result<(f64, f64), Skip>> {
    let sym: Hessian = m.hessian_at(p).ok()?;
    let h = m.value(p).ok()?;
    let step = FdConfig::default().step;
    let coarse = fd(m.height(), p, step)?;
    let fine = fd(m.height(), p, step / 2.0)?;
    let size = sym.xx.abs() + sym.xy.abs() + sym.yy.abs();
    if size < 1e-3 * (1.0 + h.abs()) || !(size * (1.0 + h.abs())).is_finite() {
        return Some(Err(Skip::Degenerate));
    }
    let (sk, sh) = relative_gap(&fine, &coarse, size);
    if sk > 1e-6 || sh > 1e-6 {
        return Some(Err(Skip::Unresolved));
    }
    Some(Ok(relative_gap(&sym, &coarse, size)))
}
