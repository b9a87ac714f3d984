//! Deterministic sampling of boxes in the positive orthant and numeric
//! equivalence of expressions.

use serde::{Deserialize, Serialize};

use super::{Expr, ExprError};

/// Default offset into the low-discrepancy sequence.
pub const DEFAULT_SEED: u64 = 42;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base` (one coordinate of a Halton point).
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

/// Axis-aligned box strictly inside the positive orthant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bounds {
    axes: Vec<Axis>,
}

impl Bounds {
    pub fn new(axes: Vec<Axis>) -> Result<Self, ExprError> {
        if axes.is_empty() || axes.len() > PRIMES.len() {
            return Err(ExprError::InvalidDomain(format!(
                "expected 1..={} axes, got {}",
                PRIMES.len(),
                axes.len()
            )));
        }
        for a in &axes {
            if !(a.lo > 0.0 && a.lo < a.hi && a.hi.is_finite()) {
                return Err(ExprError::InvalidDomain(format!(
                    "axis `{}` = [{}, {}] must satisfy 0 < lo < hi < inf",
                    a.name, a.lo, a.hi
                )));
            }
        }
        Ok(Bounds { axes })
    }

    pub fn interval(name: &str, lo: f64, hi: f64) -> Result<Self, ExprError> {
        Self::new(vec![Axis {
            name: name.to_string(),
            lo,
            hi,
        }])
    }

    /// The same interval on every named axis.
    pub fn square<'a>(
        names: impl IntoIterator<Item = &'a str>,
        lo: f64,
        hi: f64,
    ) -> Result<Self, ExprError> {
        Self::new(
            names
                .into_iter()
                .map(|n| Axis {
                    name: n.to_string(),
                    lo,
                    hi,
                })
                .collect(),
        )
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// The `i`-th Halton point of the box, as name/value pairs.
    pub fn halton_point(&self, i: u64) -> Vec<(&str, f64)> {
        self.axes
            .iter()
            .zip(PRIMES)
            .map(|(a, base)| (a.name.as_str(), a.lo + (a.hi - a.lo) * halton(i, base)))
            .collect()
    }
}

/// [`point_equal_seeded`] with [`DEFAULT_SEED`].
pub fn point_equal(
    a: &Expr,
    b: &Expr,
    domain: &Bounds,
    samples: usize,
    tol: f64,
) -> Result<bool, ExprError> {
    point_equal_seeded(a, b, domain, samples, tol, DEFAULT_SEED)
}

/// True iff `|a - b| <= tol * (1 + |a|)` at `samples` deterministic
/// low-discrepancy points of `domain`.
pub fn point_equal_seeded(
    a: &Expr,
    b: &Expr,
    domain: &Bounds,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<bool, ExprError> {
    if samples == 0 {
        return Err(ExprError::InvalidDomain("need at least one sample".into()));
    }
    for i in 0..samples as u64 {
        let point = domain.halton_point(seed + 1 + i);
        let (va, vb) = (a.eval(point.as_slice())?, b.eval(point.as_slice())?);
        if (va - vb).abs() > tol * (1.0 + va.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn halton_radical_inverse() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(1, 3) - 1.0 / 3.0).abs() < 1e-15);
        assert!((halton(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn examples() {
        let sq = Bounds::square(["x", "y"], 0.1, 10.0).unwrap();
        assert!(point_equal(&p("(x+1)^2"), &p("x^2+2*x+1"), &sq, 50, 1e-9).unwrap());
        assert!(!point_equal(&p("x*y"), &p("x+y"), &sq, 50, 1e-9).unwrap());
        let line = Bounds::interval("x", 0.1, 10.0).unwrap();
        assert!(point_equal(&p("x^3").diff("x"), &p("3*x^2"), &line, 50, 1e-9).unwrap());
    }

    #[test]
    fn sampling_is_deterministic_and_seed_dependent() {
        let sq = Bounds::square(["x", "y"], 0.5, 5.0).unwrap();
        assert_eq!(sq.halton_point(7), sq.halton_point(7));
        assert_ne!(sq.halton_point(7), sq.halton_point(8));
        for i in 1..200 {
            for (_, v) in sq.halton_point(i) {
                assert!((0.5..5.0).contains(&v));
            }
        }
    }

    #[test]
    fn rejects_bad_domains_and_propagates_eval_errors() {
        assert!(Bounds::square(["x"], 0.0, 1.0).is_err());
        assert!(Bounds::square(["x"], 2.0, 1.0).is_err());
        assert!(Bounds::new(vec![]).is_err());
        let sq = Bounds::square(["x"], 0.5, 2.0).unwrap();
        assert!(point_equal(&p("x"), &p("x"), &sq, 0, 1e-9).is_err());
        assert!(matches!(
            point_equal(&p("log(x - 1)"), &p("log(x - 1)"), &sq, 20, 1e-9),
            Err(ExprError::Domain { .. })
        ));
        assert!(matches!(
            point_equal(&p("x*z"), &p("x"), &sq, 20, 1e-9),
            Err(ExprError::Unbound(_))
        ));
    }
}
