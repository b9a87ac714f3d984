//! Constant-curvature classification of product production surfaces
//! `z = f(x) g(y)`.
//!
//! A product surface has constant relative curvature `K` exactly when it is,
//! up to translations of `x` and `y`, one of:
//!
//! | label  | form                                   | `K`     |
//! |--------|----------------------------------------|---------|
//! | `K_A1` | one factor constant                    | `0`     |
//! | `K_A2` | `A exp(c1 x + c2 y)`                   | `0`     |
//! | `K_A3` | `A x^α1 y^α2` with `α1 + α2 = 1`        | `0`     |
//! | `K_B`  | `c x y`                                | `-c²`   |
//!
//! and constant isotropic mean curvature `H` exactly when it is one of:
//!
//! | label  | form                                   | `H`     |
//! |--------|----------------------------------------|---------|
//! | `H_A`  | `g0 ((H0 / 2g0) x² + d1 x + d2)`       | `H0`    |
//! | `H_B`  | `A x y`                                | `0`     |
//!
//! Classification is numeric: curvatures come from exact symbolic Hessians
//! sampled on a grid, and the case is matched against the closed forms.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::geometry::{Hessian, MongeSurface, Point2};
use crate::models::{ModelError, ProductionModel};

/// Default relative tolerance of the constancy test.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Number of points at which the separation constant is sampled.
pub const LAMBDA_SAMPLES: usize = 11;
/// Admissible spread of the separation-constant estimates.
pub const LAMBDA_TOL: f64 = 1e-6;
/// Per-point curvature values below this multiple of the magnitude of their
/// terms are round-off and read as exactly zero.
pub const NOISE_FLOOR: f64 = 1024.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("evaluation failed at ({x}, {y}): {source}")]
    Domain {
        x: f64,
        y: f64,
        #[source]
        source: ExprError,
    },
    #[error("evaluation of the {var}-factor failed at {var} = {at}: {source}")]
    FactorDomain {
        var: &'static str,
        at: f64,
        #[source]
        source: ExprError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid tolerance {0}")]
    Tolerance(f64),
    #[error("missing or inconsistent parameters for {label}: {detail}")]
    Params { label: CaseLabel, detail: String },
    #[error("classification anomaly: {0}")]
    Anomaly(String),
}

impl ClassifyError {
    pub fn is_anomaly(&self) -> bool {
        matches!(self, ClassifyError::Anomaly(_))
    }
}

/// One axis of a sampling grid: `count` equally spaced values in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self, ClassifyError> {
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
            return Err(ClassifyError::Grid(format!(
                "axis [{lo}, {hi}] must satisfy 0 < lo < hi"
            )));
        }
        if count < 2 {
            return Err(ClassifyError::Grid(format!("axis needs at least 2 points, got {count}")));
        }
        Ok(GridAxis { lo, hi, count })
    }

    pub fn values(&self) -> Vec<f64> {
        spaced(self.lo, self.hi, self.count)
    }
}

fn spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let last = (count - 1).max(1) as f64;
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / last)
        .collect()
}

/// A rectangular grid strictly inside the positive quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x: GridAxis,
    pub y: GridAxis,
}

impl Default for Grid {
    /// 21 × 21 points over `[0.5, 5]²`.
    fn default() -> Self {
        let axis = GridAxis {
            lo: 0.5,
            hi: 5.0,
            count: 21,
        };
        Grid { x: axis, y: axis }
    }
}

impl Grid {
    pub fn new(x: GridAxis, y: GridAxis) -> Result<Self, ClassifyError> {
        let x = GridAxis::new(x.lo, x.hi, x.count)?;
        let y = GridAxis::new(y.lo, y.hi, y.count)?;
        Ok(Grid { x, y })
    }

    pub fn square(lo: f64, hi: f64, count: usize) -> Result<Self, ClassifyError> {
        let axis = GridAxis::new(lo, hi, count)?;
        Ok(Grid { x: axis, y: axis })
    }

    /// Grid points, `x` outer and `y` inner.
    pub fn points(&self) -> Vec<Point2> {
        let ys = self.y.values();
        self.x
            .values()
            .into_iter()
            .flat_map(|x| ys.iter().map(move |&y| [x, y]))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    K,
    H,
}

impl Quantity {
    /// `(value, magnitude)`: the curvature and the sum of absolute values of
    /// its terms, the natural scale for round-off.
    fn sample(self, hess: &Hessian) -> (f64, f64) {
        match self {
            Quantity::K => (hess.det(), hess.det_magnitude()),
            Quantity::H => (hess.trace(), hess.trace_magnitude()),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::K => "K",
            Quantity::H => "H",
        })
    }
}

/// Outcome of sampling `K` or `H` over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstancyVerdict {
    pub quantity: Quantity,
    pub is_constant: bool,
    /// Grid mean, when constant.
    pub value: Option<f64>,
    pub spread: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Largest term magnitude seen on the grid.
    pub scale: f64,
    pub tol: f64,
    pub grid: Grid,
}

impl ConstancyVerdict {
    /// Constant and indistinguishable from zero at the sampled scale.
    pub fn is_zero(&self) -> bool {
        self.is_constant && self.mean.abs() <= self.tol * self.scale
    }
}

fn check_tol(tol: f64) -> Result<(), ClassifyError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(ClassifyError::Tolerance(tol))
    }
}

/// Samples `K` or `H` of the graph of `h(x, y)` over `grid`.
///
/// The quantity is constant iff its spread is at most `tol · (1 + |mean|)`
/// and at most `tol` times the largest term magnitude, so that neither huge
/// nor tiny surfaces are misjudged by an absolute test alone.
pub fn constancy_test(
    h: &Expr,
    quantity: Quantity,
    grid: &Grid,
    tol: f64,
) -> Result<ConstancyVerdict, ClassifyError> {
    check_tol(tol)?;
    let grid = Grid::new(grid.x, grid.y)?;
    if grid.x.count < 5 || grid.y.count < 5 {
        return Err(ClassifyError::Grid("constancy test needs at least 5 × 5 points".into()));
    }
    let surface = MongeSurface::new(h.clone());
    let mut values = Vec::with_capacity(grid.x.count * grid.y.count);
    let mut scale = 0.0f64;
    for [x, y] in grid.points() {
        let hess = surface
            .hessian_at([x, y])
            .map_err(|source| ClassifyError::Domain { x, y, source })?;
        let (mut v, magnitude) = quantity.sample(&hess);
        if v.abs() <= NOISE_FLOOR * magnitude {
            v = 0.0;
        }
        scale = scale.max(magnitude);
        values.push(v);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = max - min;
    let is_constant = spread <= tol * (1.0 + mean.abs()) && spread <= tol * scale;
    Ok(ConstancyVerdict {
        quantity,
        is_constant,
        value: is_constant.then_some(mean),
        spread,
        mean,
        min,
        max,
        scale,
        tol,
        grid,
    })
}

/// The cases of the constant-`K` and constant-`H` classifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    /// One factor constant.
    #[serde(rename = "K_A1")]
    KA1FactorConstant,
    /// `A exp(c1 x + c2 y)`.
    #[serde(rename = "K_A2")]
    KA2Transcendental,
    /// Cobb-Douglas with constant returns to scale.
    #[serde(rename = "K_A3")]
    KA3CobbDouglas,
    /// `c x y`, `K0 = -c²`.
    #[serde(rename = "K_B")]
    KBBilinear,
    /// Quadratic in one input times a constant.
    #[serde(rename = "H_A")]
    HAQuadraticTimesConstant,
    /// `A x y`, isotropic minimal.
    #[serde(rename = "H_B")]
    HBMinimalBilinear,
    #[serde(rename = "none")]
    None,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 7] = [
        CaseLabel::KA1FactorConstant,
        CaseLabel::KA2Transcendental,
        CaseLabel::KA3CobbDouglas,
        CaseLabel::KBBilinear,
        CaseLabel::HAQuadraticTimesConstant,
        CaseLabel::HBMinimalBilinear,
        CaseLabel::None,
    ];

    /// Short code, as used in reports: `K_A1`, ..., `H_B`, `none`.
    pub fn code(self) -> &'static str {
        match self {
            CaseLabel::KA1FactorConstant => "K_A1",
            CaseLabel::KA2Transcendental => "K_A2",
            CaseLabel::KA3CobbDouglas => "K_A3",
            CaseLabel::KBBilinear => "K_B",
            CaseLabel::HAQuadraticTimesConstant => "H_A",
            CaseLabel::HBMinimalBilinear => "H_B",
            CaseLabel::None => "none",
        }
    }

    /// Descriptive name, e.g. `K_A2_transcendental`.
    pub fn name(self) -> &'static str {
        match self {
            CaseLabel::KA1FactorConstant => "K_A1_factor_constant",
            CaseLabel::KA2Transcendental => "K_A2_transcendental",
            CaseLabel::KA3CobbDouglas => "K_A3_cobb_douglas",
            CaseLabel::KBBilinear => "K_B_bilinear",
            CaseLabel::HAQuadraticTimesConstant => "H_A_quadratic_times_constant",
            CaseLabel::HBMinimalBilinear => "H_B_minimal_bilinear",
            CaseLabel::None => "none",
        }
    }

    /// The curvature whose constancy this label describes.
    pub fn quantity(self) -> Option<Quantity> {
        match self {
            CaseLabel::KA1FactorConstant
            | CaseLabel::KA2Transcendental
            | CaseLabel::KA3CobbDouglas
            | CaseLabel::KBBilinear => Some(Quantity::K),
            CaseLabel::HAQuadraticTimesConstant | CaseLabel::HBMinimalBilinear => {
                Some(Quantity::H)
            }
            CaseLabel::None => None,
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for CaseLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseLabel::ALL
            .into_iter()
            .find(|l| l.code() == s || l.name() == s)
            .ok_or_else(|| format!("unknown case label `{s}`"))
    }
}

pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationResult {
    pub label: CaseLabel,
    /// Recovered parameters; keys among `lambda, A, c1, c2, d1, d2, f0, g0,
    /// K0, H0, alpha1, alpha2, shift_x, shift_y`.
    pub params: Params,
    /// A factor is constant or not strictly monotone and positive: a valid
    /// surface, but not a production function.
    pub economically_degenerate: bool,
    /// The constancy verdict behind the label (absent when a constant factor
    /// decides the case).
    pub verdict: Option<ConstancyVerdict>,
}

/// Samples of a single-variable factor and its first three derivatives.
struct FactorSamples {
    at: Vec<f64>,
    v: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl FactorSamples {
    fn new(e: &Expr, var: &'static str, at: Vec<f64>) -> Result<Self, ClassifyError> {
        let d1e = e.diff(var).simplify();
        let d2e = d1e.diff(var).simplify();
        let mut s = FactorSamples {
            at: Vec::with_capacity(at.len()),
            v: vec![],
            d1: vec![],
            d2: vec![],
        };
        for t in at {
            let eval = |x: &Expr| {
                x.eval(&[(var, t)])
                    .map_err(|source| ClassifyError::FactorDomain { var, at: t, source })
            };
            s.v.push(eval(e)?);
            s.d1.push(eval(&d1e)?);
            s.d2.push(eval(&d2e)?);
            s.at.push(t);
        }
        Ok(s)
    }

    fn max_abs(xs: &[f64]) -> f64 {
        xs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn is_constant(&self, tol: f64) -> bool {
        Self::max_abs(&self.d1) <= tol * (1.0 + Self::max_abs(&self.v))
    }

    fn is_affine(&self, tol: f64) -> bool {
        Self::max_abs(&self.d2)
            <= tol * (1.0 + Self::max_abs(&self.v) + Self::max_abs(&self.d1))
    }

    fn mean(xs: impl Iterator<Item = f64>) -> f64 {
        let (sum, n) = xs.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        sum / n as f64
    }

    fn mean_value(&self) -> f64 {
        Self::mean(self.v.iter().copied())
    }

    /// `(slope, intercept)` of the factor read as `slope · t + intercept`.
    fn affine_fit(&self) -> (f64, f64) {
        let c = Self::mean(self.d1.iter().copied());
        let d = Self::mean(self.at.iter().zip(&self.v).map(|(t, v)| v - c * t));
        (c, d)
    }

    /// Least-squares line through `(t, log |v|)`, plus the sign of `v`.
    fn log_linear_fit(&self) -> Result<(f64, f64, f64), String> {
        let sign = self.v[0].signum();
        if self.v.iter().any(|v| v.signum() != sign || *v == 0.0) {
            return Err("exponential factor changes sign".into());
        }
        let n = self.at.len() as f64;
        let logs: Vec<f64> = self.v.iter().map(|v| v.abs().ln()).collect();
        let tm = self.at.iter().sum::<f64>() / n;
        let lm = logs.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (t, l) in self.at.iter().zip(&logs) {
            sxy += (t - tm) * (l - lm);
            sxx += (t - tm) * (t - tm);
        }
        let slope = sxy / sxx;
        Ok((slope, lm - slope * tm, sign))
    }

    fn spread(xs: &[f64]) -> f64 {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

struct ProductParts<'a> {
    f: &'a Expr,
    g: &'a Expr,
    fs: FactorSamples,
    gs: FactorSamples,
    degenerate: bool,
}

impl<'a> ProductParts<'a> {
    fn new(f: &'a Expr, g: &'a Expr, grid: &Grid) -> Result<Self, ClassifyError> {
        let model = ProductionModel::product(f.clone(), g.clone())?;
        let degenerate = model.is_economically_degenerate()?;
        Ok(ProductParts {
            f,
            g,
            fs: FactorSamples::new(f, "x", grid.x.values())?,
            gs: FactorSamples::new(g, "y", grid.y.values())?,
            degenerate,
        })
    }

    fn product(&self) -> Expr {
        Expr::mul(self.f.clone(), self.g.clone())
    }

    fn result(
        &self,
        label: CaseLabel,
        params: Vec<(&str, f64)>,
        verdict: Option<ConstancyVerdict>,
    ) -> ClassificationResult {
        ClassificationResult {
            label,
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            economically_degenerate: self.degenerate,
            verdict,
        }
    }

    fn bilinear_params(&self) -> Vec<(&'static str, f64)> {
        let (c1, d1) = self.fs.affine_fit();
        let (c2, d2) = self.gs.affine_fit();
        vec![("A", c1 * c2), ("shift_x", d1 / c1), ("shift_y", d2 / c2)]
    }
}

/// Classifies `f(x) g(y)` by the constant-`K` taxonomy on the default grid.
pub fn classify_constant_k(f: &Expr, g: &Expr, tol: f64) -> Result<ClassificationResult, ClassifyError> {
    classify_constant_k_on(f, g, &Grid::default(), tol)
}

/// Classifies `f(x) g(y)` by the constant-`H` taxonomy on the default grid.
pub fn classify_constant_h(f: &Expr, g: &Expr, tol: f64) -> Result<ClassificationResult, ClassifyError> {
    classify_constant_h_on(f, g, &Grid::default(), tol)
}

pub fn classify_constant_k_on(
    f: &Expr,
    g: &Expr,
    grid: &Grid,
    tol: f64,
) -> Result<ClassificationResult, ClassifyError> {
    check_tol(tol)?;
    let parts = ProductParts::new(f, g, grid)?;
    if parts.gs.is_constant(tol) {
        let c1 = parts.gs.mean_value();
        return Ok(parts.result(CaseLabel::KA1FactorConstant, vec![("c1", c1)], None));
    }
    if parts.fs.is_constant(tol) {
        let c2 = parts.fs.mean_value();
        return Ok(parts.result(CaseLabel::KA1FactorConstant, vec![("c2", c2)], None));
    }

    let verdict = constancy_test(&parts.product(), Quantity::K, grid, tol)?;
    if !verdict.is_constant {
        return Ok(parts.result(CaseLabel::None, vec![], Some(verdict)));
    }
    if verdict.is_zero() {
        return classify_flat(&parts, grid, verdict);
    }
    let k0 = verdict.mean;
    if k0 > 0.0 {
        return Err(ClassifyError::Anomaly(format!(
            "constant positive relative curvature K0 = {k0} on a product surface"
        )));
    }
    if !(parts.fs.is_affine(tol) && parts.gs.is_affine(tol)) {
        return Err(ClassifyError::Anomaly(format!(
            "constant K0 = {k0} < 0 but the factors are not affine"
        )));
    }
    let mut params = parts.bilinear_params();
    let a = params[0].1;
    if (a * a + k0).abs() > 1e-6 * k0.abs() {
        return Err(ClassifyError::Anomaly(format!(
            "bilinear coefficient {a} inconsistent with K0 = {k0}"
        )));
    }
    params.push(("K0", k0));
    Ok(parts.result(CaseLabel::KBBilinear, params, Some(verdict)))
}

// K = 0 with both factors non-constant: the separation constant decides
// between the exponential and the Cobb-Douglas case.
fn classify_flat(
    parts: &ProductParts<'_>,
    grid: &Grid,
    verdict: ConstancyVerdict,
) -> Result<ClassificationResult, ClassifyError> {
    let fs = FactorSamples::new(parts.f, "x", spaced(grid.x.lo, grid.x.hi, LAMBDA_SAMPLES))?;
    let gs = FactorSamples::new(parts.g, "y", spaced(grid.y.lo, grid.y.hi, LAMBDA_SAMPLES))?;
    let lf: Vec<f64> = (0..fs.at.len())
        .map(|i| fs.v[i] * fs.d2[i] / (fs.d1[i] * fs.d1[i]))
        .collect();
    let lg: Vec<f64> = (0..gs.at.len())
        .map(|i| gs.d1[i] * gs.d1[i] / (gs.v[i] * gs.d2[i]))
        .collect();
    let lambda_f = FactorSamples::mean(lf.iter().copied());
    let lambda_g = FactorSamples::mean(lg.iter().copied());
    let band = LAMBDA_TOL * lambda_f.abs().max(1.0);
    if !(FactorSamples::spread(&lf) <= band
        && FactorSamples::spread(&lg) <= band
        && (lambda_f - lambda_g).abs() <= band)
    {
        return Err(ClassifyError::Anomaly(format!(
            "K = 0 but the separation constant is not constant (x-side {lambda_f}, y-side {lambda_g})"
        )));
    }
    let lambda = lambda_f;

    if (lambda - 1.0).abs() <= LAMBDA_TOL {
        let fit = |s: &FactorSamples| s.log_linear_fit().map_err(ClassifyError::Anomaly);
        let (c1, i1, s1) = fit(&fs)?;
        let (c2, i2, s2) = fit(&gs)?;
        let a = s1 * s2 * (i1 + i2).exp();
        return Ok(parts.result(
            CaseLabel::KA2Transcendental,
            vec![("A", a), ("c1", c1), ("c2", c2), ("K0", 0.0), ("lambda", lambda)],
            Some(verdict),
        ));
    }

    // f = a (x + s)^α1 gives f / f' = (x + s) / α1.
    let alpha1 = 1.0 / (1.0 - lambda);
    let alpha2 = -lambda / (1.0 - lambda);
    let shift = |s: &FactorSamples, alpha: f64| {
        FactorSamples::mean((0..s.at.len()).map(|i| alpha * s.v[i] / s.d1[i] - s.at[i]))
    };
    let (sx, sy) = (shift(&fs, alpha1), shift(&gs, alpha2));
    let coeff = |s: &FactorSamples, alpha: f64, shift: f64| {
        FactorSamples::mean((0..s.at.len()).map(|i| s.v[i] / (s.at[i] + shift).abs().powf(alpha)))
    };
    let a = coeff(&fs, alpha1, sx) * coeff(&gs, alpha2, sy);
    Ok(parts.result(
        CaseLabel::KA3CobbDouglas,
        vec![
            ("A", a),
            ("K0", 0.0),
            ("alpha1", alpha1),
            ("alpha2", alpha2),
            ("lambda", lambda),
            ("shift_x", sx),
            ("shift_y", sy),
        ],
        Some(verdict),
    ))
}

pub fn classify_constant_h_on(
    f: &Expr,
    g: &Expr,
    grid: &Grid,
    tol: f64,
) -> Result<ClassificationResult, ClassifyError> {
    check_tol(tol)?;
    let parts = ProductParts::new(f, g, grid)?;
    let verdict = constancy_test(&parts.product(), Quantity::H, grid, tol)?;
    let g_const = parts.gs.is_constant(tol);
    let f_const = parts.fs.is_constant(tol);
    if !verdict.is_constant {
        return Ok(parts.result(CaseLabel::None, vec![], Some(verdict)));
    }
    let h0 = if verdict.is_zero() { 0.0 } else { verdict.mean };

    if g_const || f_const {
        // h = c0 q(t) with q quadratic: q = (H0 / 2c0) t² + d1 t + d2
        let (c0_key, c0, q) = if g_const {
            ("g0", parts.gs.mean_value(), &parts.fs)
        } else {
            ("f0", parts.fs.mean_value(), &parts.gs)
        };
        if c0 == 0.0 {
            return Err(ClassifyError::Anomaly("constant factor is zero".into()));
        }
        let a = h0 / (2.0 * c0);
        let d1 = FactorSamples::mean((0..q.at.len()).map(|i| q.d1[i] - 2.0 * a * q.at[i]));
        let d2 = FactorSamples::mean(
            (0..q.at.len()).map(|i| q.v[i] - a * q.at[i] * q.at[i] - d1 * q.at[i]),
        );
        return Ok(parts.result(
            CaseLabel::HAQuadraticTimesConstant,
            vec![("H0", h0), (c0_key, c0), ("d1", d1), ("d2", d2)],
            Some(verdict),
        ));
    }

    if !verdict.is_zero() {
        return Err(ClassifyError::Anomaly(format!(
            "constant H0 = {} != 0 with both factors non-constant",
            verdict.mean
        )));
    }
    if !(parts.fs.is_affine(tol) && parts.gs.is_affine(tol)) {
        return Err(ClassifyError::Anomaly(
            "H = 0 with non-affine factors".into(),
        ));
    }
    let mut params = parts.bilinear_params();
    params.push(("H0", 0.0));
    Ok(parts.result(CaseLabel::HBMinimalBilinear, params, Some(verdict)))
}

/// Runs the classifier matching `label`'s curvature.
pub fn classify_for(
    label: CaseLabel,
    f: &Expr,
    g: &Expr,
    tol: f64,
) -> Result<ClassificationResult, ClassifyError> {
    match label.quantity() {
        Some(Quantity::H) => classify_constant_h(f, g, tol),
        _ => classify_constant_k(f, g, tol),
    }
}

fn var_plus(name: &str, shift: f64) -> Expr {
    Expr::add(Expr::var(name), Expr::constant(shift))
}

/// Canonical representative of a case.
///
/// | label  | required         | optional             | representative                    |
/// |--------|------------------|----------------------|-----------------------------------|
/// | `K_A1` | `c1` or `c2`     |                      | `x · c1` or `c2 · y`              |
/// | `K_A2` | `A, c1, c2`      |                      | `exp(c1 x) · A exp(c2 y)`         |
/// | `K_A3` | `A, lambda`      | `shift_x, shift_y`   | `A (x+s)^α1 · (y+t)^α2`           |
/// | `K_B`  | `K0 < 0`         | `shift_x, shift_y`   | `√(−K0) (x+s) · (y+t)`            |
/// | `H_A`  | `H0`, `g0` or `f0` | `d1, d2`           | `((H0/2g0) x² + d1 x + d2) · g0`  |
/// | `H_B`  | `A > 0`          | `shift_x, shift_y`   | `A (x+s) · (y+t)`                 |
pub fn synthesize_case(label: CaseLabel, params: &Params) -> Result<ProductionModel, ClassifyError> {
    let bad = |detail: String| ClassifyError::Params { label, detail };
    let get = |key: &str| -> Result<f64, ClassifyError> {
        match params.get(key) {
            Some(v) if v.is_finite() => Ok(*v),
            Some(v) => Err(bad(format!("`{key}` = {v} is not finite"))),
            None => Err(bad(format!("missing `{key}`"))),
        }
    };
    let opt = |key: &str| -> Result<f64, ClassifyError> {
        if params.contains_key(key) {
            get(key)
        } else {
            Ok(0.0)
        }
    };
    let nonzero = |key: &str| -> Result<f64, ClassifyError> {
        let v = get(key)?;
        if v == 0.0 {
            Err(bad(format!("`{key}` must be nonzero")))
        } else {
            Ok(v)
        }
    };
    let k = Expr::constant;
    let x = || Expr::var("x");
    let y = || Expr::var("y");

    let (f, g) = match label {
        CaseLabel::KA1FactorConstant => {
            if params.contains_key("c1") {
                (x(), k(nonzero("c1")?))
            } else if params.contains_key("c2") {
                (k(nonzero("c2")?), y())
            } else {
                return Err(bad("needs `c1` or `c2`".into()));
            }
        }
        CaseLabel::KA2Transcendental => {
            let (a, c1, c2) = (nonzero("A")?, nonzero("c1")?, nonzero("c2")?);
            (
                Expr::exp(Expr::mul(k(c1), x())),
                Expr::mul(k(a), Expr::exp(Expr::mul(k(c2), y()))),
            )
        }
        CaseLabel::KA3CobbDouglas => {
            let (a, lambda) = (nonzero("A")?, nonzero("lambda")?);
            if lambda == 1.0 {
                return Err(bad("`lambda` = 1 is the exponential case".into()));
            }
            let (alpha1, alpha2) = (1.0 / (1.0 - lambda), -lambda / (1.0 - lambda));
            for (key, want) in [("alpha1", alpha1), ("alpha2", alpha2)] {
                if params.contains_key(key) && (get(key)? - want).abs() > 1e-9 * want.abs().max(1.0) {
                    return Err(bad(format!("`{key}` inconsistent with `lambda`: expected {want}")));
                }
            }
            (
                Expr::mul(k(a), Expr::pow(var_plus("x", opt("shift_x")?), k(alpha1))),
                Expr::pow(var_plus("y", opt("shift_y")?), k(alpha2)),
            )
        }
        CaseLabel::KBBilinear => {
            let k0 = get("K0")?;
            if k0 >= 0.0 {
                return Err(bad(format!("`K0` must be negative, got {k0}")));
            }
            let c = (-k0).sqrt();
            if params.contains_key("A") && (get("A")?.abs() - c).abs() > 1e-9 * c {
                return Err(bad(format!("`A` inconsistent with `K0`: expected ±{c}")));
            }
            (
                Expr::mul(k(c), var_plus("x", opt("shift_x")?)),
                var_plus("y", opt("shift_y")?),
            )
        }
        CaseLabel::HAQuadraticTimesConstant => {
            let h0 = get("H0")?;
            let (d1, d2) = (opt("d1")?, opt("d2")?);
            let quadratic = |t: Expr, c0: f64| {
                Expr::add(
                    Expr::add(
                        Expr::mul(k(h0 / (2.0 * c0)), Expr::pow(t.clone(), k(2.0))),
                        Expr::mul(k(d1), t),
                    ),
                    k(d2),
                )
            };
            if params.contains_key("g0") {
                let g0 = nonzero("g0")?;
                (quadratic(x(), g0), k(g0))
            } else if params.contains_key("f0") {
                let f0 = nonzero("f0")?;
                (k(f0), quadratic(y(), f0))
            } else {
                return Err(bad("needs `g0` or `f0`".into()));
            }
        }
        CaseLabel::HBMinimalBilinear => {
            let a = get("A")?;
            if a <= 0.0 {
                return Err(bad(format!("`A` must be positive, got {a}")));
            }
            (
                Expr::mul(k(a), var_plus("x", opt("shift_x")?)),
                var_plus("y", opt("shift_y")?),
            )
        }
        CaseLabel::None => return Err(bad("no representative for `none`".into())),
    };
    Ok(ProductionModel::product(f, g)?)
}

/// Spillman-Mitscherlich surfaces have neither constant `K` nor constant `H`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corollary34Report {
    #[serde(rename = "K_constant")]
    pub k_constant: bool,
    #[serde(rename = "H_constant")]
    pub h_constant: bool,
    /// Both constancy tests reject.
    pub holds: bool,
    #[serde(rename = "K")]
    pub k: ConstancyVerdict,
    #[serde(rename = "H")]
    pub h: ConstancyVerdict,
}

pub fn check_corollary_34(
    a_scale: f64,
    a: f64,
    b: f64,
    grid: &Grid,
    tol: f64,
) -> Result<Corollary34Report, ClassifyError> {
    let model = ProductionModel::spillman_mitscherlich(a_scale, a, b)?;
    let h = model.to_expr();
    let k = constancy_test(&h, Quantity::K, grid, tol)?;
    let hv = constancy_test(&h, Quantity::H, grid, tol)?;
    Ok(Corollary34Report {
        k_constant: k.is_constant,
        h_constant: hv.is_constant,
        holds: !k.is_constant && !hv.is_constant,
        k,
        h: hv,
    })
}

/// Parameter branches of the transcendental family with special curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TranscendentalBranch {
    /// `a1 = a2 = 0`, `b1, b2 != 0`: `K = 0`.
    A1,
    /// `a1 + a2 = 1`, `b1 = b2 = 0`: `K = 0`.
    A2,
    /// `a1 = a2 = 1`, `b1 = b2 = 0`: `H = 0` (and `K = -A²`).
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corollary35Report {
    /// Branch implied by the parameters alone.
    pub predicted: Option<TranscendentalBranch>,
    /// Branch confirmed by a zero `K` verdict.
    #[serde(rename = "K_zero_case")]
    pub k_zero_case: Option<TranscendentalBranch>,
    #[serde(rename = "H_zero")]
    pub h_zero: bool,
    #[serde(rename = "K")]
    pub k: ConstancyVerdict,
    #[serde(rename = "H")]
    pub h: ConstancyVerdict,
    /// Disagreements between the prediction and the verdicts.
    pub anomalies: Vec<String>,
}

impl Corollary35Report {
    pub fn consistent(&self) -> bool {
        self.anomalies.is_empty()
    }
}

/// Branch of `A x^a1 exp(b1 x) y^a2 exp(b2 y)` implied by its exponents, with
/// equalities decided to within `tol`.
pub fn transcendental_branch(a1: f64, b1: f64, a2: f64, b2: f64, tol: f64) -> Option<TranscendentalBranch> {
    let zero = |v: f64| v.abs() <= tol;
    if zero(b1) && zero(b2) {
        if zero(a1 - 1.0) && zero(a2 - 1.0) {
            Some(TranscendentalBranch::B)
        } else if zero(a1 + a2 - 1.0) {
            Some(TranscendentalBranch::A2)
        } else {
            None
        }
    } else if zero(a1) && zero(a2) && !zero(b1) && !zero(b2) {
        Some(TranscendentalBranch::A1)
    } else {
        None
    }
}

pub fn check_corollary_35(
    a_scale: f64,
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    grid: &Grid,
    tol: f64,
) -> Result<Corollary35Report, ClassifyError> {
    let model = ProductionModel::transcendental(a_scale, a1, b1, a2, b2)?;
    let h = model.to_expr();
    let k = constancy_test(&h, Quantity::K, grid, tol)?;
    let hv = constancy_test(&h, Quantity::H, grid, tol)?;
    let predicted = transcendental_branch(a1, b1, a2, b2, tol);
    let mut anomalies = Vec::new();

    let k_zero = k.is_zero();
    let k_zero_case = match predicted {
        Some(branch @ (TranscendentalBranch::A1 | TranscendentalBranch::A2)) => {
            if !k_zero {
                anomalies.push(format!("branch {branch:?} predicts K = 0, verdict disagrees"));
            }
            k_zero.then_some(branch)
        }
        Some(TranscendentalBranch::B) => {
            let expected = -a_scale * a_scale;
            if !(k.is_constant && (k.mean - expected).abs() <= tol * (1.0 + expected.abs())) {
                anomalies.push(format!("branch B predicts K = {expected}, verdict disagrees"));
            }
            None
        }
        None => {
            if k.is_constant {
                anomalies.push(format!("constant K = {} outside every branch", k.mean));
            }
            None
        }
    };

    let h_zero = hv.is_zero();
    let predicted_b = predicted == Some(TranscendentalBranch::B);
    if predicted_b != h_zero || (hv.is_constant && !predicted_b) {
        anomalies.push(format!(
            "H verdict (constant: {}, mean {}) disagrees with predicted branch {predicted:?}",
            hv.is_constant, hv.mean
        ));
    }
    Ok(Corollary35Report {
        predicted,
        k_zero_case,
        h_zero,
        k,
        h: hv,
        anomalies,
    })
}
