//! Production-function families and returns-to-scale analysis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Bounds, Expr, ExprError, DEFAULT_SEED};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("model is not homogeneous (residual {residual})")]
    NotHomogeneous { residual: f64 },
    #[error("malformed model literal: {0}")]
    Literal(String),
}

/// A production function `h`, positive on the open positive orthant.
///
/// Two-input models are written over `x` and `y`; an `n`-input Cobb-Douglas
/// model with `n != 2` is written over `x1, ..., xn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProductionModel {
    /// `A x1^α1 ... xn^αn`.
    CobbDouglas {
        #[serde(rename = "A")]
        scale: f64,
        alphas: Vec<f64>,
    },
    /// `A (1 - exp(a x)) (1 - exp(b y))` with `a, b < 0`.
    SpillmanMitscherlich {
        #[serde(rename = "A")]
        scale: f64,
        a: f64,
        b: f64,
    },
    /// `A x^a1 exp(b1 x) y^a2 exp(b2 y)`.
    Transcendental {
        #[serde(rename = "A")]
        scale: f64,
        a1: f64,
        b1: f64,
        a2: f64,
        b2: f64,
    },
    /// `f(x) g(y)`.
    Product { f: Expr, g: Expr },
    Custom { h: Expr },
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), ModelError> {
    if cond {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter(msg()))
    }
}

fn only_vars(e: &Expr, allowed: &[&str], what: &str) -> Result<(), ModelError> {
    match e.variables().into_iter().find(|v| !allowed.contains(&v.as_str())) {
        Some(v) => Err(ModelError::InvalidParameter(format!(
            "{what} may only use {allowed:?}, found `{v}`"
        ))),
        None => Ok(()),
    }
}

fn k(v: f64) -> Expr {
    Expr::constant(v)
}

// x^a exp(b x), dropping the trivial factor when a or b vanishes
fn power_exp(var: &str, a: f64, b: f64) -> Expr {
    Expr::mul(
        Expr::pow(Expr::var(var), k(a)),
        Expr::exp(Expr::mul(k(b), Expr::var(var))),
    )
}

// 1 - exp(a x)
fn saturating(var: &str, a: f64) -> Expr {
    Expr::sub(k(1.0), Expr::exp(Expr::mul(k(a), Expr::var(var))))
}

impl ProductionModel {
    pub fn cobb_douglas(scale: f64, alphas: Vec<f64>) -> Result<Self, ModelError> {
        let m = ProductionModel::CobbDouglas { scale, alphas };
        m.validate()?;
        Ok(m)
    }

    pub fn spillman_mitscherlich(scale: f64, a: f64, b: f64) -> Result<Self, ModelError> {
        let m = ProductionModel::SpillmanMitscherlich { scale, a, b };
        m.validate()?;
        Ok(m)
    }

    pub fn transcendental(
        scale: f64,
        a1: f64,
        b1: f64,
        a2: f64,
        b2: f64,
    ) -> Result<Self, ModelError> {
        let m = ProductionModel::Transcendental {
            scale,
            a1,
            b1,
            a2,
            b2,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn product(f: Expr, g: Expr) -> Result<Self, ModelError> {
        let m = ProductionModel::Product { f, g };
        m.validate()?;
        Ok(m)
    }

    pub fn custom(h: Expr) -> Result<Self, ModelError> {
        let m = ProductionModel::Custom { h };
        m.validate()?;
        Ok(m)
    }

    /// Parses and validates a JSON model literal such as
    /// `{"type":"cobb_douglas","A":1,"alphas":[0.5,0.5]}`.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let m: ProductionModel =
            serde_json::from_str(text).map_err(|e| ModelError::Literal(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            ProductionModel::CobbDouglas { scale, alphas } => {
                check(*scale > 0.0 && scale.is_finite(), || format!("A must be > 0, got {scale}"))?;
                check(!alphas.is_empty(), || "alphas must not be empty".into())?;
                for (i, a) in alphas.iter().enumerate() {
                    check(*a > 0.0 && a.is_finite(), || format!("alpha{} must be > 0, got {a}", i + 1))?;
                }
                Ok(())
            }
            ProductionModel::SpillmanMitscherlich { scale, a, b } => {
                check(*scale > 0.0 && scale.is_finite(), || format!("A must be > 0, got {scale}"))?;
                check(*a < 0.0 && a.is_finite(), || format!("a must be < 0, got {a}"))?;
                check(*b < 0.0 && b.is_finite(), || format!("b must be < 0, got {b}"))
            }
            ProductionModel::Transcendental {
                scale,
                a1,
                b1,
                a2,
                b2,
            } => {
                check(*scale > 0.0 && scale.is_finite(), || format!("A must be > 0, got {scale}"))?;
                for v in [a1, b1, a2, b2] {
                    check(v.is_finite(), || format!("parameter {v} is not finite"))?;
                }
                check(a1 * a1 + b1 * b1 != 0.0, || "a1^2 + b1^2 must be nonzero".into())?;
                check(a2 * a2 + b2 * b2 != 0.0, || "a2^2 + b2^2 must be nonzero".into())
            }
            ProductionModel::Product { f, g } => {
                only_vars(f, &["x"], "f")?;
                only_vars(g, &["y"], "g")
            }
            ProductionModel::Custom { h } => only_vars(h, &["x", "y"], "h"),
        }
    }

    /// Input variable names, in order.
    pub fn variables(&self) -> Vec<String> {
        match self {
            ProductionModel::CobbDouglas { alphas, .. } if alphas.len() != 2 => {
                (1..=alphas.len()).map(|i| format!("x{i}")).collect()
            }
            _ => vec!["x".into(), "y".into()],
        }
    }

    /// Closed-form families have exact parameters (as opposed to user
    /// expressions).
    pub fn is_closed_form(&self) -> bool {
        !matches!(
            self,
            ProductionModel::Product { .. } | ProductionModel::Custom { .. }
        )
    }

    /// `h` as an expression over [`ProductionModel::variables`].
    pub fn to_expr(&self) -> Expr {
        match self {
            ProductionModel::CobbDouglas { scale, alphas } => {
                let vars = self.variables();
                vars.iter().zip(alphas).fold(k(*scale), |acc, (v, a)| {
                    Expr::mul(acc, Expr::pow(Expr::var(v.as_str()), k(*a)))
                })
            }
            ProductionModel::Custom { h } => h.clone(),
            _ => {
                let (f, g) = self.factors().expect("two-input product family");
                Expr::mul(f, g)
            }
        }
    }

    /// `(f, g)` with `h = f(x) g(y)`, when the model is a two-input product.
    pub fn factors(&self) -> Option<(Expr, Expr)> {
        match self {
            ProductionModel::CobbDouglas { scale, alphas } if alphas.len() == 2 => Some((
                Expr::mul(k(*scale), Expr::pow(Expr::var("x"), k(alphas[0]))),
                Expr::pow(Expr::var("y"), k(alphas[1])),
            )),
            ProductionModel::SpillmanMitscherlich { scale, a, b } => Some((
                Expr::mul(k(*scale), saturating("x", *a)),
                saturating("y", *b),
            )),
            ProductionModel::Transcendental {
                scale,
                a1,
                b1,
                a2,
                b2,
            } => Some((
                Expr::mul(k(*scale), power_exp("x", *a1, *b1)),
                power_exp("y", *a2, *b2),
            )),
            ProductionModel::Product { f, g } => Some((f.clone(), g.clone())),
            _ => None,
        }
    }

    /// True for product models whose factors are not positive with a
    /// nonvanishing derivative on `[0.5, 5]`: mathematically admissible, but
    /// not a production function.
    pub fn is_economically_degenerate(&self) -> Result<bool, ModelError> {
        match self {
            ProductionModel::Product { f, g } => {
                Ok(factor_degenerate(f, "x")? || factor_degenerate(g, "y")?)
            }
            _ => Ok(false),
        }
    }
}

fn factor_degenerate(f: &Expr, var: &str) -> Result<bool, ModelError> {
    let df = f.diff(var).simplify();
    let mut sign = 0.0;
    for i in 0..=10 {
        let t = 0.5 + 4.5 * i as f64 / 10.0;
        let at = [(var, t)];
        let (v, d) = (f.eval(&at)?, df.eval(&at)?);
        if v <= 0.0 || d.abs() <= 1e-12 * (1.0 + v.abs()) {
            return Ok(true);
        }
        if sign * d < 0.0 {
            return Ok(true);
        }
        sign = d.signum();
    }
    Ok(false)
}

/// Returns-to-scale class of a homogeneous function of degree `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleClass {
    Decreasing,
    Constant,
    Increasing,
    NotHomogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityReport {
    pub is_homogeneous: bool,
    /// Mean of the per-sample degree estimates, when homogeneous.
    pub degree: Option<f64>,
    pub scale_class: ScaleClass,
    /// Largest deviation of a per-sample estimate from their mean.
    pub residual: f64,
    /// Half-width of the band `|p - 1|` classified as constant returns.
    pub constant_band: f64,
}

/// Scale factors tried by [`homogeneity_degree`].
pub const HOMOGENEITY_LAMBDAS: [f64; 3] = [0.5, 2.0, 3.0];
/// Number of base points drawn from `[0.5, 5]^n`.
pub const HOMOGENEITY_BASE_POINTS: u64 = 25;
/// Constant-returns band for closed-form families.
pub const CLOSED_FORM_BAND: f64 = 1e-9;

/// Estimates the homogeneity degree from `log(h(λx)/h(x)) / log λ` at
/// deterministic sample points. The model is homogeneous iff the estimates
/// spread by at most `tol`.
pub fn homogeneity_degree(
    m: &ProductionModel,
    tol: f64,
) -> Result<HomogeneityReport, ModelError> {
    check(tol > 0.0, || format!("tolerance must be positive, got {tol}"))?;
    let h = m.to_expr();
    let vars = m.variables();
    let bounds = Bounds::square(vars.iter().map(String::as_str), 0.5, 5.0)?;
    let band = if m.is_closed_form() { CLOSED_FORM_BAND } else { tol };

    let mut estimates = Vec::new();
    let mut well_defined = true;
    for i in 0..HOMOGENEITY_BASE_POINTS {
        let base = bounds.halton_point(DEFAULT_SEED + 1 + i);
        let h0 = h.eval(base.as_slice())?;
        for lambda in HOMOGENEITY_LAMBDAS {
            let scaled: Vec<(&str, f64)> = base.iter().map(|&(n, v)| (n, lambda * v)).collect();
            let ratio = h.eval(scaled.as_slice())? / h0;
            if ratio > 0.0 && ratio.is_finite() {
                estimates.push(ratio.ln() / lambda.ln());
            } else {
                well_defined = false;
            }
        }
    }
    if !well_defined {
        return Ok(HomogeneityReport {
            is_homogeneous: false,
            degree: None,
            scale_class: ScaleClass::NotHomogeneous,
            residual: f64::INFINITY,
            constant_band: band,
        });
    }
    let lo = estimates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let residual = estimates
        .iter()
        .map(|p| (p - mean).abs())
        .fold(0.0, f64::max);
    let is_homogeneous = hi - lo <= tol;
    Ok(HomogeneityReport {
        is_homogeneous,
        degree: is_homogeneous.then_some(mean),
        scale_class: if is_homogeneous {
            classify_degree(mean, band)
        } else {
            ScaleClass::NotHomogeneous
        },
        residual,
        constant_band: band,
    })
}

/// Decreasing / constant / increasing returns for degree `p`, with
/// `|p - 1| <= band` counted as constant.
pub fn classify_degree(p: f64, band: f64) -> ScaleClass {
    if (p - 1.0).abs() <= band {
        ScaleClass::Constant
    } else if p < 1.0 {
        ScaleClass::Decreasing
    } else {
        ScaleClass::Increasing
    }
}

pub fn returns_to_scale(r: &HomogeneityReport) -> Result<ScaleClass, ModelError> {
    match (r.is_homogeneous, r.degree) {
        (true, Some(p)) => Ok(classify_degree(p, r.constant_band)),
        _ => Err(ModelError::NotHomogeneous {
            residual: r.residual,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, point_equal};

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn same(a: &Expr, b: &str) -> bool {
        let sq = Bounds::square(["x", "y"], 0.1, 10.0).unwrap();
        point_equal(a, &p(b), &sq, 50, 1e-12).unwrap()
    }

    #[test]
    fn to_expr_examples() {
        let cd = ProductionModel::cobb_douglas(1.0, vec![0.5, 0.5]).unwrap();
        assert_eq!(cd.to_expr().to_string(), "x^0.5*y^0.5");
        let sm = ProductionModel::spillman_mitscherlich(2.0, -1.0, -1.0).unwrap();
        assert!(same(&sm.to_expr(), "2*(1-exp(-x))*(1-exp(-y))"));
        let tr = ProductionModel::transcendental(1.0, 1.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(tr.to_expr().to_string(), "x*y");
        let cd3 = ProductionModel::cobb_douglas(2.0, vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(cd3.to_expr().to_string(), "2*x1^0.2*x2^0.3*x3^0.5");
        assert_eq!(cd3.variables(), ["x1", "x2", "x3"]);
    }

    #[test]
    fn transcendental_reads_both_factors_over_their_own_input() {
        let tr = ProductionModel::transcendental(3.0, 0.4, -0.2, 0.7, 0.1).unwrap();
        assert!(same(&tr.to_expr(), "3*x^0.4*exp(-0.2*x)*y^0.7*exp(0.1*y)"));
    }

    #[test]
    fn parameter_validation() {
        assert!(ProductionModel::cobb_douglas(0.0, vec![0.5]).is_err());
        assert!(ProductionModel::cobb_douglas(1.0, vec![0.5, -0.1]).is_err());
        assert!(ProductionModel::cobb_douglas(1.0, vec![]).is_err());
        assert!(ProductionModel::spillman_mitscherlich(1.0, 1.0, -1.0).is_err());
        assert!(ProductionModel::spillman_mitscherlich(1.0, -1.0, 0.0).is_err());
        assert!(ProductionModel::transcendental(1.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(ProductionModel::transcendental(-1.0, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(ProductionModel::product(p("x*y"), p("y")).is_err());
        assert!(ProductionModel::custom(p("x*z")).is_err());
    }

    #[test]
    fn json_literals() {
        let m = ProductionModel::from_json(r#"{"type":"cobb_douglas","A":1,"alphas":[0.5,0.5]}"#)
            .unwrap();
        assert_eq!(m, ProductionModel::cobb_douglas(1.0, vec![0.5, 0.5]).unwrap());
        let m = ProductionModel::from_json(
            r#"{"type":"spillman_mitscherlich","A":2,"a":-1,"b":-0.5}"#,
        )
        .unwrap();
        assert!(matches!(m, ProductionModel::SpillmanMitscherlich { .. }));
        let m = ProductionModel::from_json(r#"{"type":"product","f":"exp(2*x)","g":"3*y"}"#)
            .unwrap();
        assert_eq!(m, ProductionModel::product(p("exp(2*x)"), p("3*y")).unwrap());
        let back = serde_json::to_string(&m).unwrap();
        assert_eq!(back, r#"{"type":"product","f":"exp(2*x)","g":"3*y"}"#);
        assert!(matches!(
            ProductionModel::from_json(r#"{"type":"spillman_mitscherlich","A":2,"a":1,"b":-1}"#),
            Err(ModelError::InvalidParameter(_))
        ));
        assert!(matches!(
            ProductionModel::from_json(r#"{"type":"ces","A":2}"#),
            Err(ModelError::Literal(_))
        ));
    }

    #[test]
    fn homogeneity_examples() {
        let cd = ProductionModel::cobb_douglas(3.0, vec![0.3, 0.4]).unwrap();
        let r = homogeneity_degree(&cd, 1e-8).unwrap();
        assert!(r.is_homogeneous);
        assert!((r.degree.unwrap() - 0.7).abs() < 1e-9);
        assert_eq!(r.scale_class, ScaleClass::Decreasing);

        let r = homogeneity_degree(&ProductionModel::custom(p("x*y")).unwrap(), 1e-8).unwrap();
        assert!((r.degree.unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(r.scale_class, ScaleClass::Increasing);

        let r = homogeneity_degree(&ProductionModel::custom(p("exp(x+y)")).unwrap(), 1e-8)
            .unwrap();
        assert!(!r.is_homogeneous);
        assert_eq!(r.scale_class, ScaleClass::NotHomogeneous);
        assert!(returns_to_scale(&r).is_err());

        let sm = ProductionModel::spillman_mitscherlich(1.0, -1.0, -2.0).unwrap();
        assert!(!homogeneity_degree(&sm, 1e-8).unwrap().is_homogeneous);
        let tr = ProductionModel::transcendental(1.0, 0.5, 0.1, 0.5, 0.0).unwrap();
        assert!(!homogeneity_degree(&tr, 1e-8).unwrap().is_homogeneous);
        let tr = ProductionModel::transcendental(1.0, 0.5, 0.0, 0.5, 0.0).unwrap();
        let r = homogeneity_degree(&tr, 1e-8).unwrap();
        assert_eq!(r.scale_class, ScaleClass::Constant);
    }

    #[test]
    fn returns_to_scale_examples() {
        let report = |p: f64| HomogeneityReport {
            is_homogeneous: true,
            degree: Some(p),
            scale_class: ScaleClass::NotHomogeneous,
            residual: 0.0,
            constant_band: CLOSED_FORM_BAND,
        };
        assert_eq!(returns_to_scale(&report(0.7)).unwrap(), ScaleClass::Decreasing);
        assert_eq!(returns_to_scale(&report(1.0)).unwrap(), ScaleClass::Constant);
        assert_eq!(returns_to_scale(&report(1.2)).unwrap(), ScaleClass::Increasing);
        assert_eq!(returns_to_scale(&report(1.0 + 1e-6)).unwrap(), ScaleClass::Increasing);
    }

    #[test]
    fn degenerate_products_are_flagged() {
        let flag = |f: &str, g: &str| {
            ProductionModel::product(p(f), p(g))
                .unwrap()
                .is_economically_degenerate()
                .unwrap()
        };
        assert!(!flag("exp(2*x)", "3*exp(5*y)"));
        assert!(flag("x^2", "2"));
        assert!(flag("x - 1", "y"));
        assert!((flag("(x - 2)^2 + 1", "y")));
        assert!(!ProductionModel::cobb_douglas(1.0, vec![0.5, 0.5])
            .unwrap()
            .is_economically_degenerate()
            .unwrap());
    }
}
