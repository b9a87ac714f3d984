//! Isotropic-space surface invariants.
//!
//! In isotropic 3-space the metric only sees the top view `(x1, x2)`, so the
//! first fundamental form of a parametrized surface is the Euclidean metric
//! of its projected tangent vectors, and the unit normal is always
//! `(0, 0, 1)`. For a graph `z = h(x, y)` the second fundamental form is the
//! Hessian of `h`, which makes the relative curvature `det(Hess h)` and the
//! isotropic mean curvature `trace(Hess h)`.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};

pub type Point2 = [f64; 2];
pub type Point3 = [f64; 3];

/// `det(g)` at or below this value means the tangent plane is isotropic.
pub const ADMISSIBILITY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("surface is not admissible at ({u1}, {u2}): det(g) = {det}")]
    NotAdmissible { u1: f64, u2: f64, det: f64 },
}

/// Relative curvature `K` and isotropic mean curvature `H` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Curvatures {
    #[serde(rename = "K")]
    pub relative: f64,
    #[serde(rename = "H")]
    pub mean: f64,
}

/// First fundamental form (induced isotropic metric).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metric {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl Metric {
    pub fn det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }
}

/// Second fundamental form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondForm {
    pub t11: f64,
    pub t12: f64,
    pub t22: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FundamentalForms {
    pub first: Metric,
    pub second: SecondForm,
}

impl FundamentalForms {
    pub fn curvatures(&self) -> Curvatures {
        let g = &self.first;
        let t = &self.second;
        let det_g = g.det();
        Curvatures {
            relative: (t.t11 * t.t22 - t.t12 * t.t12) / det_g,
            mean: (g.g11 * t.t22 - 2.0 * g.g12 * t.t12 + g.g22 * t.t11) / det_g,
        }
    }
}

/// Second partials of a height function at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hessian {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Hessian {
    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Size of the terms that cancel in [`Hessian::det`].
    pub fn det_magnitude(&self) -> f64 {
        (self.xx * self.yy).abs() + self.xy * self.xy
    }

    /// Size of the terms that cancel in [`Hessian::trace`].
    pub fn trace_magnitude(&self) -> f64 {
        self.xx.abs() + self.yy.abs()
    }

    pub fn curvatures(&self) -> Curvatures {
        Curvatures {
            relative: self.det(),
            mean: self.trace(),
        }
    }
}

fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

fn eval3(exprs: &[Expr; 3], at: &[(&str, f64)]) -> Result<[f64; 3], ExprError> {
    Ok([exprs[0].eval(at)?, exprs[1].eval(at)?, exprs[2].eval(at)?])
}

/// Surface `r(u1, u2) = (r1, r2, r3)`. First and second parameter
/// derivatives are derived symbolically once, at construction.
#[derive(Debug, Clone)]
pub struct ParametricSurface {
    params: [String; 2],
    r: [Expr; 3],
    // r_{u1}, r_{u2}
    tangents: [[Expr; 3]; 2],
    // r_{u1u1}, r_{u1u2}, r_{u2u2}
    second: [[Expr; 3]; 3],
}

impl ParametricSurface {
    /// Surface over parameters `u1`, `u2`.
    pub fn new(r1: Expr, r2: Expr, r3: Expr) -> Self {
        Self::with_params(["u1", "u2"], [r1, r2, r3])
    }

    pub fn with_params(params: [&str; 2], r: [Expr; 3]) -> Self {
        let d = |e: &Expr, v: &str| e.diff(v).simplify();
        let [p1, p2] = params;
        let tangents = [
            [d(&r[0], p1), d(&r[1], p1), d(&r[2], p1)],
            [d(&r[0], p2), d(&r[1], p2), d(&r[2], p2)],
        ];
        let second = [
            [d(&tangents[0][0], p1), d(&tangents[0][1], p1), d(&tangents[0][2], p1)],
            [d(&tangents[0][0], p2), d(&tangents[0][1], p2), d(&tangents[0][2], p2)],
            [d(&tangents[1][0], p2), d(&tangents[1][1], p2), d(&tangents[1][2], p2)],
        ];
        ParametricSurface {
            params: [p1.to_string(), p2.to_string()],
            r,
            tangents,
            second,
        }
    }

    /// The graph `(x, y, h(x, y))` with `x`, `y` as parameters.
    pub fn from_monge(h: &MongeSurface) -> Self {
        let [x, y] = h.vars();
        Self::with_params(
            [x, y],
            [Expr::var(x), Expr::var(y), h.height().clone()],
        )
    }

    pub fn params(&self) -> [&str; 2] {
        [&self.params[0], &self.params[1]]
    }

    pub fn components(&self) -> &[Expr; 3] {
        &self.r
    }

    fn bind(&self, p: Point2) -> [(&str, f64); 2] {
        [(&self.params[0], p[0]), (&self.params[1], p[1])]
    }

    pub fn position(&self, p: Point2) -> Result<Point3, GeometryError> {
        Ok(eval3(&self.r, &self.bind(p))?)
    }

    fn tangent_vectors(&self, p: Point2) -> Result<[[f64; 3]; 2], GeometryError> {
        let at = self.bind(p);
        Ok([eval3(&self.tangents[0], &at)?, eval3(&self.tangents[1], &at)?])
    }

    /// First fundamental form: inner products of the top views of `r_{u1}`
    /// and `r_{u2}`.
    pub fn induced_metric(&self, p: Point2) -> Result<Metric, GeometryError> {
        let [a, b] = self.tangent_vectors(p)?;
        Ok(Metric {
            g11: a[0] * a[0] + a[1] * a[1],
            g12: a[0] * b[0] + a[1] * b[1],
            g22: b[0] * b[0] + b[1] * b[1],
        })
    }

    pub fn is_admissible(&self, p: Point2) -> Result<bool, GeometryError> {
        Ok(self.induced_metric(p)?.det() > ADMISSIBILITY_THRESHOLD)
    }

    /// Both fundamental forms; `t_ij = det(r_{u_i u_j}, r_{u1}, r_{u2}) / sqrt(det g)`.
    pub fn fundamental_forms(&self, p: Point2) -> Result<FundamentalForms, GeometryError> {
        let first = self.induced_metric(p)?;
        let det_g = first.det();
        if det_g <= ADMISSIBILITY_THRESHOLD {
            return Err(GeometryError::NotAdmissible {
                u1: p[0],
                u2: p[1],
                det: det_g,
            });
        }
        let at = self.bind(p);
        let [ru1, ru2] = self.tangent_vectors(p)?;
        let norm = det_g.sqrt();
        let t = |k: usize| -> Result<f64, GeometryError> {
            Ok(det3(eval3(&self.second[k], &at)?, ru1, ru2) / norm)
        };
        Ok(FundamentalForms {
            first,
            second: SecondForm {
                t11: t(0)?,
                t12: t(1)?,
                t22: t(2)?,
            },
        })
    }

    pub fn second_fundamental_form(&self, p: Point2) -> Result<SecondForm, GeometryError> {
        Ok(self.fundamental_forms(p)?.second)
    }

    pub fn curvatures(&self, p: Point2) -> Result<Curvatures, GeometryError> {
        Ok(self.fundamental_forms(p)?.curvatures())
    }
}

/// Graph surface `z = h(x, y)` with its symbolic Hessian cached.
#[derive(Debug, Clone)]
pub struct MongeSurface {
    vars: [String; 2],
    h: Expr,
    // h_xx, h_xy, h_yy
    hessian: [Expr; 3],
}

impl MongeSurface {
    /// Graph of `h` over the variables `x`, `y`.
    pub fn new(h: Expr) -> Self {
        Self::with_vars(h, ["x", "y"])
    }

    pub fn with_vars(h: Expr, vars: [&str; 2]) -> Self {
        let [x, y] = vars;
        let hx = h.diff(x).simplify();
        let hy = h.diff(y).simplify();
        let hessian = [
            hx.diff(x).simplify(),
            hx.diff(y).simplify(),
            hy.diff(y).simplify(),
        ];
        MongeSurface {
            vars: [x.to_string(), y.to_string()],
            h,
            hessian,
        }
    }

    pub fn vars(&self) -> [&str; 2] {
        [&self.vars[0], &self.vars[1]]
    }

    pub fn height(&self) -> &Expr {
        &self.h
    }

    /// Symbolic second partials `(h_xx, h_xy, h_yy)`.
    pub fn hessian_exprs(&self) -> &[Expr; 3] {
        &self.hessian
    }

    fn bind(&self, p: Point2) -> [(&str, f64); 2] {
        [(&self.vars[0], p[0]), (&self.vars[1], p[1])]
    }

    pub fn value(&self, p: Point2) -> Result<f64, ExprError> {
        self.h.eval(&self.bind(p))
    }

    pub fn hessian_at(&self, p: Point2) -> Result<Hessian, ExprError> {
        let [xx, xy, yy] = eval3(&self.hessian, &self.bind(p))?;
        Ok(Hessian { xx, xy, yy })
    }

    /// `K = h_xx h_yy - h_xy^2`, `H = h_xx + h_yy`.
    pub fn curvatures(&self, p: Point2) -> Result<Curvatures, ExprError> {
        Ok(self.hessian_at(p)?.curvatures())
    }
}

pub fn induced_metric(s: &ParametricSurface, p: Point2) -> Result<Metric, GeometryError> {
    s.induced_metric(p)
}

pub fn second_fundamental_form(
    s: &ParametricSurface,
    p: Point2,
) -> Result<SecondForm, GeometryError> {
    s.second_fundamental_form(p)
}

pub fn curvatures_parametric(
    s: &ParametricSurface,
    p: Point2,
) -> Result<Curvatures, GeometryError> {
    s.curvatures(p)
}

pub fn is_admissible(s: &ParametricSurface, p: Point2) -> Result<bool, GeometryError> {
    s.is_admissible(p)
}

/// Curvatures of the graph of `h(x, y)` at `p`. Builds the symbolic Hessian
/// on every call; hold a [`MongeSurface`] for repeated evaluation.
pub fn curvatures_monge(h: &Expr, p: Point2) -> Result<Curvatures, ExprError> {
    MongeSurface::new(h.clone()).curvatures(p)
}

/// Euclidean distance of the top views; the third coordinate is ignored.
pub fn i_distance(p: Point3, q: Point3) -> f64 {
    (q[0] - p[0]).hypot(q[1] - p[1])
}

/// Isotropic congruence: a rotation by `phi` plus translation `(a, b)` in the
/// top view, and the shear `x3 -> c + d x1 + e x2 + x3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IMotion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub phi: f64,
}

impl IMotion {
    pub const IDENTITY: IMotion = IMotion {
        a: 0.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
        e: 0.0,
        phi: 0.0,
    };

    /// Random motion with translation and shear coefficients in `[-2, 2]`
    /// and an angle in `[0, 2π)`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut u = || rng.random_range(-2.0..=2.0);
        IMotion {
            a: u(),
            b: u(),
            c: u(),
            d: u(),
            e: u(),
            phi: rng.random_range(0.0..TAU),
        }
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        let (s, c) = self.phi.sin_cos();
        [
            self.a + p[0] * c - p[1] * s,
            self.b + p[0] * s + p[1] * c,
            self.c + self.d * p[0] + self.e * p[1] + p[2],
        ]
    }

    /// Image of a top-view point.
    pub fn top_view(&self, p: Point2) -> Point2 {
        let [x, y, _] = self.apply([p[0], p[1], 0.0]);
        [x, y]
    }

    /// The moved surface `m ∘ r`, over the same parameters.
    pub fn transform_parametric(&self, s: &ParametricSurface) -> ParametricSurface {
        let [r1, r2, r3] = s.components().clone();
        let (sn, cs) = self.phi.sin_cos();
        let k = Expr::constant;
        let x1 = Expr::add(
            k(self.a),
            Expr::sub(Expr::mul(k(cs), r1.clone()), Expr::mul(k(sn), r2.clone())),
        );
        let x2 = Expr::add(
            k(self.b),
            Expr::add(Expr::mul(k(sn), r1.clone()), Expr::mul(k(cs), r2.clone())),
        );
        let x3 = Expr::add(
            Expr::add(k(self.c), Expr::mul(k(self.d), r1)),
            Expr::add(Expr::mul(k(self.e), r2), r3),
        );
        ParametricSurface::with_params(s.params(), [x1, x2, x3])
    }

    /// The moved graph, written again as a graph over the moved top view:
    /// `h'(x', y') = c + d X + e Y + h(X, Y)` with `(X, Y)` the preimage of
    /// `(x', y')` under the planar motion.
    pub fn transform_monge(&self, m: &MongeSurface) -> MongeSurface {
        let [x, y] = m.vars();
        let (sn, cs) = self.phi.sin_cos();
        let k = Expr::constant;
        let dx = Expr::sub(Expr::var(x), k(self.a));
        let dy = Expr::sub(Expr::var(y), k(self.b));
        let pre_x = Expr::add(Expr::mul(k(cs), dx.clone()), Expr::mul(k(sn), dy.clone()));
        let pre_y = Expr::sub(Expr::mul(k(cs), dy), Expr::mul(k(sn), dx));
        let moved = m.height().map_vars(&|v| {
            if v == x {
                Some(pre_x.clone())
            } else if v == y {
                Some(pre_y.clone())
            } else {
                None
            }
        });
        let h = Expr::add(
            Expr::add(k(self.c), Expr::mul(k(self.d), pre_x.clone())),
            Expr::add(Expr::mul(k(self.e), pre_y.clone()), moved),
        );
        MongeSurface::with_vars(h, [x, y])
    }
}

pub fn apply_i_motion(m: &IMotion, p: Point3) -> Point3 {
    m.apply(p)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn surf(r1: &str, r2: &str, r3: &str) -> ParametricSurface {
        ParametricSurface::new(p(r1), p(r2), p(r3))
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn induced_metric_examples() {
        let monge = surf("u1", "u2", "exp(u1)*u2^2");
        let g = monge.induced_metric([0.3, 1.7]).unwrap();
        assert_eq!((g.g11, g.g12, g.g22), (1.0, 0.0, 1.0));

        let g = surf("2*u1", "u2", "0").induced_metric([1.0, 1.0]).unwrap();
        assert_eq!((g.g11, g.g12, g.g22), (4.0, 0.0, 1.0));

        let g = surf("u1", "u1", "u2").induced_metric([1.0, 1.0]).unwrap();
        assert_eq!(g.det(), 0.0);
    }

    #[test]
    fn second_fundamental_form_examples() {
        let monge = surf("u1", "u2", "u1^3*u2 + exp(u2)");
        let t = monge.second_fundamental_form([1.5, 0.5]).unwrap();
        // Hessian of u1^3 u2 + e^u2: (6 u1 u2, 3 u1^2, e^u2)
        assert!(close(t.t11, 6.0 * 1.5 * 0.5, 1e-14));
        assert!(close(t.t12, 3.0 * 1.5 * 1.5, 1e-14));
        assert!(close(t.t22, 0.5f64.exp(), 1e-14));

        let plane = surf("u1", "u2", "3 + u1 + 2*u2");
        let t = plane.second_fundamental_form([2.0, -1.0]).unwrap();
        assert_eq!((t.t11, t.t12, t.t22), (0.0, 0.0, 0.0));

        // det((0,0,0),(1,0,1),(0,1,1)) etc. by hand at (1, 1):
        // r_u1u2 = (0,0,1), r_u1 = (1,0,1), r_u2 = (0,1,1) -> det = 1
        let saddle = surf("u1", "u2", "u1*u2");
        let t = saddle.second_fundamental_form([1.0, 1.0]).unwrap();
        assert_eq!((t.t11, t.t12, t.t22), (0.0, 1.0, 0.0));
    }

    #[test]
    fn non_admissible_points_are_rejected() {
        let s = surf("u1", "u1", "u2");
        assert!(!s.is_admissible([0.4, 2.0]).unwrap());
        assert!(matches!(
            s.curvatures([0.4, 2.0]),
            Err(GeometryError::NotAdmissible { .. })
        ));
        let s = surf("u1^2", "u2", "0");
        assert!(!s.is_admissible([0.0, 1.0]).unwrap());
        assert!(s.is_admissible([1.0, 1.0]).unwrap());
        assert!(surf("u1", "u2", "u1*u2").is_admissible([-3.0, 0.0]).unwrap());
    }

    #[test]
    fn curvature_examples() {
        let saddle = surf("u1", "u2", "u1*u2");
        for pt in [[0.5, 0.5], [2.0, 5.0], [-1.0, 3.0]] {
            let c = saddle.curvatures(pt).unwrap();
            assert_eq!((c.relative, c.mean), (-1.0, 0.0));
        }
        let c = surf("u1", "u2", "3 + u1 + 2*u2").curvatures([1.0, 2.0]).unwrap();
        assert_eq!((c.relative, c.mean), (0.0, 0.0));

        let c = curvatures_monge(&p("x*y"), [2.0, 5.0]).unwrap();
        assert_eq!((c.relative, c.mean), (-1.0, 0.0));
        let c = curvatures_monge(&p("x^2 + y^2"), [0.7, 3.0]).unwrap();
        assert_eq!((c.relative, c.mean), (4.0, 4.0));

        // sqrt(xy) at (1,1): h_xx = h_yy = -1/4, h_xy = 1/4, checked against
        // a five-point stencil below.
        let c = curvatures_monge(&p("x^0.5*y^0.5"), [1.0, 1.0]).unwrap();
        assert!(c.relative.abs() < 1e-15);
        assert!(close(c.mean, -0.5, 1e-15));
        let f = |x: f64, y: f64| (x * y).sqrt();
        let h = 1e-3;
        let fxx = (f(1.0 + h, 1.0) - 2.0 * f(1.0, 1.0) + f(1.0 - h, 1.0)) / (h * h);
        let fyy = (f(1.0, 1.0 + h) - 2.0 * f(1.0, 1.0) + f(1.0, 1.0 - h)) / (h * h);
        assert!((fxx + fyy - c.mean).abs() < 1e-6);
    }

    #[test]
    fn general_parametrization_of_a_graph() {
        // r(u1,u2) = (2u1, u2, (2u1)^2 + u2^2) is the paraboloid z = x^2 + y^2
        // seen through a stretched chart; K and H are chart-independent.
        let s = surf("2*u1", "u2", "4*u1^2 + u2^2");
        let c = s.curvatures([0.3, -0.8]).unwrap();
        assert!(close(c.relative, 4.0, 1e-13));
        assert!(close(c.mean, 4.0, 1e-13));
    }

    #[test]
    fn i_distance_examples() {
        assert_eq!(i_distance([0.0, 0.0, 0.0], [3.0, 4.0, 7.0]), 5.0);
        assert_eq!(i_distance([1.0, 2.0, 5.0], [1.0, 2.0, 9.0]), 0.0);
    }

    #[test]
    fn i_motion_examples() {
        assert_eq!(IMotion::IDENTITY.apply([1.0, 2.0, 3.0]), [1.0, 2.0, 3.0]);
        let shear = IMotion {
            d: 1.0,
            ..IMotion::IDENTITY
        };
        assert_eq!(shear.apply([1.0, 2.0, 3.0]), [1.0, 2.0, 4.0]);
        let rot = IMotion {
            phi: FRAC_PI_2,
            ..IMotion::IDENTITY
        };
        let q = rot.apply([1.0, 0.0, 0.0]);
        assert!(q[0].abs() < 1e-15 && (q[1] - 1.0).abs() < 1e-15 && q[2] == 0.0);
    }

    #[test]
    fn transformed_graph_passes_through_moved_points() {
        let m = IMotion {
            a: 0.3,
            b: -1.2,
            c: 0.5,
            d: 1.1,
            e: -0.4,
            phi: 0.9,
        };
        let surface = MongeSurface::new(p("x^0.3*y^0.6 + exp(0.2*x)"));
        let moved = m.transform_monge(&surface);
        let pt = [1.3, 2.2];
        let image = m.apply([pt[0], pt[1], surface.value(pt).unwrap()]);
        let z = moved.value([image[0], image[1]]).unwrap();
        assert!(close(z, image[2], 1e-13));
    }
}
