use super::Expr;

impl Expr {
    /// Bottom-up local rewriting: constant folding, `0*e -> 0`, `1*e -> e`,
    /// `e^1 -> e`, `e + 0 -> e`, `--e -> e` and friends. The result is
    /// point-equal to `self` wherever `self` is defined; no canonical form is
    /// attempted.
    pub fn simplify(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(e) => Expr::neg(e.simplify()),
            Expr::Add(l, r) => Expr::add(l.simplify(), r.simplify()),
            Expr::Sub(l, r) => Expr::sub(l.simplify(), r.simplify()),
            Expr::Mul(l, r) => Expr::mul(l.simplify(), r.simplify()),
            Expr::Div(l, r) => Expr::div(l.simplify(), r.simplify()),
            Expr::Pow(b, e) => Expr::pow(b.simplify(), e.simplify()),
            Expr::Exp(e) => Expr::exp(e.simplify()),
            Expr::Log(e) => Expr::log(e.simplify()),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    fn s(text: &str) -> String {
        parse(text).unwrap().simplify().to_string()
    }

    #[test]
    fn examples() {
        assert_eq!(s("0*x + y"), "y");
        assert_eq!(s("x^1"), "x");
        assert_eq!(s("2*3"), "6");
    }

    #[test]
    fn nested_rewrites() {
        assert_eq!(s("--x"), "x");
        assert_eq!(s("(x + 0)*(1*y)"), "x*y");
        assert_eq!(s("x^(3 - 2)"), "x");
        assert_eq!(s("exp(0)*x"), "x");
        assert_eq!(s("log(1) + x/1"), "x");
        assert_eq!(s("0 - x"), "-x");
        assert_eq!(s("x^0"), "1");
        assert_eq!(s("x*0 + 2*y*0"), "0");
    }

    #[test]
    fn does_not_fold_undefined_constants() {
        assert_eq!(s("log(0 - 1)"), "log(-1)");
        assert_eq!(s("1/(2 - 2)"), "1/0");
        assert_eq!(s("(-8)^0.5"), "(-8)^0.5");
    }
}
