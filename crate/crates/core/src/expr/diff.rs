use super::Expr;

impl Expr {
    /// Exact partial derivative with respect to `var`.
    ///
    /// Powers whose exponent depends on `var` are differentiated as
    /// `exp(exponent * log(base))`, which is valid for positive bases.
    pub fn diff(&self, var: &str) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if v == var { 1.0 } else { 0.0 }),
            Expr::Neg(e) => Expr::neg(e.diff(var)),
            Expr::Add(l, r) => Expr::add(l.diff(var), r.diff(var)),
            Expr::Sub(l, r) => Expr::sub(l.diff(var), r.diff(var)),
            Expr::Mul(l, r) => Expr::add(
                Expr::mul(l.diff(var), (**r).clone()),
                Expr::mul((**l).clone(), r.diff(var)),
            ),
            Expr::Div(l, r) => {
                let num = Expr::sub(
                    Expr::mul(l.diff(var), (**r).clone()),
                    Expr::mul((**l).clone(), r.diff(var)),
                );
                Expr::div(num, Expr::pow((**r).clone(), Expr::Const(2.0)))
            }
            Expr::Pow(base, exponent) if !exponent.depends_on(var) => {
                // d(b^c) = c * b^(c-1) * b'
                let db = base.diff(var);
                if db.as_const() == Some(0.0) {
                    return Expr::Const(0.0);
                }
                let lowered = Expr::sub((**exponent).clone(), Expr::Const(1.0));
                Expr::mul(
                    Expr::mul((**exponent).clone(), Expr::pow((**base).clone(), lowered)),
                    db,
                )
            }
            Expr::Pow(base, exponent) => {
                // d(b^c) = b^c * (c' * log(b) + c * b' / b)
                let inner = Expr::add(
                    Expr::mul(exponent.diff(var), Expr::log((**base).clone())),
                    Expr::div(
                        Expr::mul((**exponent).clone(), base.diff(var)),
                        (**base).clone(),
                    ),
                );
                Expr::mul(self.clone(), inner)
            }
            Expr::Exp(e) => Expr::mul(e.diff(var), self.clone()),
            Expr::Log(e) => Expr::div(e.diff(var), (**e).clone()),
        }
    }

    /// Second partial derivative `d²/(d a d b)`.
    pub fn diff2(&self, a: &str, b: &str) -> Expr {
        self.diff(a).diff(b)
    }
}
