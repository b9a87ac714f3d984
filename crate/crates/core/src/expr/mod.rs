//! Expression language over named real variables.
//!
//! An [`Expr`] is an immutable tree built either by [`parse`] or by the smart
//! constructors on [`Expr`] (which fold constants and drop neutral elements as
//! they build). Evaluation, symbolic differentiation, light simplification and
//! numeric point-equality checks live in the submodules and are re-exported
//! here.

mod diff;
mod eval;
mod parse;
mod sample;
mod simplify;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use eval::{Bindings, Env};
pub use parse::{parse, parse_with_vars};
pub use sample::{halton, point_equal, point_equal_seeded, Axis, Bounds, DEFAULT_SEED};

/// Errors raised while parsing or evaluating expressions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unknown variable `{name}` at offset {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("variable `{0}` is not bound")]
    Unbound(String),
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("binding `{name}` = {value} is outside the positive orthant")]
    NonPositive { name: String, value: f64 },
    #[error("invalid sampling domain: {0}")]
    InvalidDomain(String),
}

/// Expression tree.
///
/// Variants are public for pattern matching; build new trees through the
/// associated constructors (`Expr::add`, `Expr::mul`, ...) so that trivial
/// constants are folded on the way.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
}

fn folded(v: f64) -> Option<Expr> {
    v.is_finite().then_some(Expr::Const(v))
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            e => Expr::Neg(Box::new(e)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(l: Expr, r: Expr) -> Expr {
        match (l.as_const(), r.as_const()) {
            (Some(a), Some(b)) => folded(a + b)
                .unwrap_or_else(|| Expr::Add(Box::new(l), Box::new(r))),
            (Some(0.0), _) => r,
            (_, Some(0.0)) => l,
            _ => Expr::Add(Box::new(l), Box::new(r)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(l: Expr, r: Expr) -> Expr {
        match (l.as_const(), r.as_const()) {
            (Some(a), Some(b)) => folded(a - b)
                .unwrap_or_else(|| Expr::Sub(Box::new(l), Box::new(r))),
            (Some(0.0), _) => Expr::neg(r),
            (_, Some(0.0)) => l,
            _ => Expr::Sub(Box::new(l), Box::new(r)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(l: Expr, r: Expr) -> Expr {
        match (l.as_const(), r.as_const()) {
            (Some(a), Some(b)) => folded(a * b)
                .unwrap_or_else(|| Expr::Mul(Box::new(l), Box::new(r))),
            (Some(a), _) | (_, Some(a)) if a == 0.0 => Expr::Const(0.0),
            (Some(1.0), _) => r,
            (_, Some(1.0)) => l,
            (Some(-1.0), _) => Expr::neg(r),
            (_, Some(-1.0)) => Expr::neg(l),
            _ => Expr::Mul(Box::new(l), Box::new(r)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(l: Expr, r: Expr) -> Expr {
        match (l.as_const(), r.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => folded(a / b)
                .unwrap_or_else(|| Expr::Div(Box::new(l), Box::new(r))),
            (Some(0.0), _) => Expr::Const(0.0),
            (_, Some(1.0)) => l,
            _ => Expr::Div(Box::new(l), Box::new(r)),
        }
    }

    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        match (base.as_const(), exponent.as_const()) {
            (_, Some(1.0)) => base,
            (_, Some(0.0)) => Expr::Const(1.0),
            (Some(b), Some(n)) if b > 0.0 || n.fract() == 0.0 && (b != 0.0 || n > 0.0) => {
                folded(b.powf(n))
                    .unwrap_or_else(|| Expr::Pow(Box::new(base), Box::new(exponent)))
            }
            _ => Expr::Pow(Box::new(base), Box::new(exponent)),
        }
    }

    pub fn exp(e: Expr) -> Expr {
        match e.as_const() {
            Some(c) => folded(c.exp()).unwrap_or_else(|| Expr::Exp(Box::new(e))),
            None => Expr::Exp(Box::new(e)),
        }
    }

    pub fn log(e: Expr) -> Expr {
        match e.as_const() {
            Some(c) if c > 0.0 => Expr::Const(c.ln()),
            _ => Expr::Log(Box::new(e)),
        }
    }

    /// Names of all variables occurring in the tree.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(e) | Expr::Exp(e) | Expr::Log(e) => e.collect_vars(out),
            Expr::Add(l, r)
            | Expr::Sub(l, r)
            | Expr::Mul(l, r)
            | Expr::Div(l, r)
            | Expr::Pow(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => v == var,
            Expr::Neg(e) | Expr::Exp(e) | Expr::Log(e) => e.depends_on(var),
            Expr::Add(l, r)
            | Expr::Sub(l, r)
            | Expr::Mul(l, r)
            | Expr::Div(l, r)
            | Expr::Pow(l, r) => l.depends_on(var) || r.depends_on(var),
        }
    }

    /// Replaces every occurrence of `var` by `with`.
    pub fn substitute(&self, var: &str, with: &Expr) -> Expr {
        self.map_vars(&|name| (name == var).then(|| with.clone()))
    }

    /// Rebuilds the tree, replacing variables for which `f` returns `Some`.
    pub fn map_vars(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        let b = |e: &Expr| Box::new(e.map_vars(f));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) => f(v).unwrap_or_else(|| Expr::Var(v.clone())),
            Expr::Neg(e) => Expr::Neg(b(e)),
            Expr::Exp(e) => Expr::Exp(b(e)),
            Expr::Log(e) => Expr::Log(b(e)),
            Expr::Add(l, r) => Expr::Add(b(l), b(r)),
            Expr::Sub(l, r) => Expr::Sub(b(l), b(r)),
            Expr::Mul(l, r) => Expr::Mul(b(l), b(r)),
            Expr::Div(l, r) => Expr::Div(b(l), b(r)),
            Expr::Pow(l, r) => Expr::Pow(b(l), b(r)),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(e) | Expr::Exp(e) | Expr::Log(e) => 1 + e.size(),
            Expr::Add(l, r)
            | Expr::Sub(l, r)
            | Expr::Mul(l, r)
            | Expr::Div(l, r)
            | Expr::Pow(l, r) => 1 + l.size() + r.size(),
        }
    }

    // Binding strength used by Display; mirrors the grammar levels.
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

struct Wrapped<'a>(&'a Expr, bool);

impl fmt::Display for Wrapped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.precedence();
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(e) => write!(f, "-{}", Wrapped(e, e.precedence() < 3)),
            Expr::Add(l, r) => write!(f, "{} + {}", l, Wrapped(r, r.precedence() <= p)),
            Expr::Sub(l, r) => write!(f, "{} - {}", l, Wrapped(r, r.precedence() <= p)),
            Expr::Mul(l, r) => write!(
                f,
                "{}*{}",
                Wrapped(l, l.precedence() < p),
                Wrapped(r, r.precedence() <= p)
            ),
            Expr::Div(l, r) => write!(
                f,
                "{}/{}",
                Wrapped(l, l.precedence() < p),
                Wrapped(r, r.precedence() <= p)
            ),
            Expr::Pow(b, e) => write!(
                f,
                "{}^{}",
                Wrapped(b, b.precedence() <= p),
                Wrapped(e, e.precedence() < 3)
            ),
            Expr::Exp(e) => write!(f, "exp({e})"),
            Expr::Log(e) => write!(f, "log({e})"),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}
