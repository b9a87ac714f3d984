use std::collections::BTreeMap;

use super::{Expr, ExprError};

/// Source of variable values for evaluation.
pub trait Bindings {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Bindings for [(&str, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const N: usize> Bindings for [(&str, f64); N] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.as_slice().lookup(name)
    }
}

impl Bindings for BTreeMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

/// Input bundle of a production function: every value lies in the open
/// positive orthant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Env {
    values: BTreeMap<String, f64>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a str, f64)>,
    ) -> Result<Self, ExprError> {
        pairs
            .into_iter()
            .try_fold(Env::new(), |env, (name, value)| env.with(name, value))
    }

    pub fn with(mut self, name: &str, value: f64) -> Result<Self, ExprError> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(ExprError::NonPositive {
                name: name.to_string(),
                value,
            });
        }
        self.values.insert(name.to_string(), value);
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

impl Bindings for Env {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name)
    }
}

fn domain(op: &'static str, detail: String) -> ExprError {
    ExprError::Domain { op, detail }
}

fn finite(op: &'static str, v: f64) -> Result<f64, ExprError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain(op, format!("result {v} is not finite")))
    }
}

impl Expr {
    /// Evaluates the tree. Partial operations outside their domain, and any
    /// overflow to a non-finite value, are reported as [`ExprError::Domain`].
    pub fn eval<B: Bindings + ?Sized>(&self, env: &B) -> Result<f64, ExprError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(v) => env.lookup(v).ok_or_else(|| ExprError::Unbound(v.clone())),
            Expr::Neg(e) => Ok(-e.eval(env)?),
            Expr::Add(l, r) => finite("addition", l.eval(env)? + r.eval(env)?),
            Expr::Sub(l, r) => finite("subtraction", l.eval(env)? - r.eval(env)?),
            Expr::Mul(l, r) => finite("multiplication", l.eval(env)? * r.eval(env)?),
            Expr::Div(l, r) => {
                let (n, d) = (l.eval(env)?, r.eval(env)?);
                if d == 0.0 {
                    return Err(domain("division", format!("{n} / 0")));
                }
                finite("division", n / d)
            }
            Expr::Pow(b, e) => {
                let (b, e) = (b.eval(env)?, e.eval(env)?);
                if b == 0.0 && e < 0.0 {
                    return Err(domain("power", format!("0 ^ {e}")));
                }
                if b < 0.0 && e.fract() != 0.0 {
                    return Err(domain("power", format!("{b} ^ {e} (negative base)")));
                }
                finite("power", b.powf(e))
            }
            Expr::Exp(e) => finite("exp", e.eval(env)?.exp()),
            Expr::Log(e) => {
                let v = e.eval(env)?;
                if v <= 0.0 {
                    return Err(domain("log", format!("log({v})")));
                }
                Ok(v.ln())
            }
        }
    }
}
