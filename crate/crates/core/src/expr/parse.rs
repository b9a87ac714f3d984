//! Recursive-descent parser.
//!
//! ```text
//! expr  := term (("+"|"-") term)*
//! term  := unary (("*"|"/") unary)*
//! unary := "-" unary | power
//! power := atom ("^" unary)?
//! atom  := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//! ```
//!
//! A minus sign applied directly to a numeric literal yields a negative
//! constant rather than a negation node, so that displayed trees re-parse to
//! themselves.

use super::{Expr, ExprError};

/// Parses `text` with no restriction on variable names.
pub fn parse(text: &str) -> Result<Expr, ExprError> {
    Parser::new(text, None).parse_all()
}

/// Parses `text`, rejecting identifiers outside `vars`.
pub fn parse_with_vars(text: &str, vars: &[&str]) -> Result<Expr, ExprError> {
    Parser::new(text, Some(vars)).parse_all()
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    vars: Option<&'a [&'a str]>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, vars: Option<&'a [&'a str]>) -> Self {
        Parser { src, pos: 0, vars }
    }

    fn parse_all(mut self) -> Result<Expr, ExprError> {
        let e = self.expr()?;
        self.skip_ws();
        if let Some(c) = self.peek() {
            return Err(self.syntax(format!("unexpected `{c}`")));
        }
        Ok(e)
    }

    fn syntax(&self, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    // Next significant character; U+2212 is accepted as a minus sign.
    fn peek_op(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek().map(|c| if c == '\u{2212}' { '-' } else { c })
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek() {
            self.pos += c.len_utf8();
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.bump();
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.bump();
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek_op() == Some('-') {
            self.bump();
            if self.peek_op() == Some('-') {
                return Ok(Expr::Neg(Box::new(self.unary()?)));
            }
            return Ok(match self.power()? {
                Expr::Const(c) => Expr::Const(-c),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek_op() {
            None => Err(self.syntax("unexpected end of input")),
            Some('(') => {
                self.bump();
                let e = self.expr()?;
                if self.peek_op() != Some(')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.bump();
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.ident(),
            Some(c) => Err(self.syntax(format!("unexpected `{c}`"))),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - s
        };
        let mut p = self.pos;
        let mut n = digits(&mut p);
        if p < bytes.len() && bytes[p] == b'.' {
            p += 1;
            n += digits(&mut p);
        }
        if n == 0 {
            return Err(self.syntax("malformed number"));
        }
        if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
            let mut q = p + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) == 0 {
                self.pos = q;
                return Err(self.syntax("malformed exponent"));
            }
            p = q;
        }
        self.pos = p;
        let value: f64 = self.src[start..p].parse().map_err(|_| ExprError::Syntax {
            offset: start,
            message: "malformed number".into(),
        })?;
        if !value.is_finite() {
            return Err(ExprError::Syntax {
                offset: start,
                message: "number out of range".into(),
            });
        }
        Ok(Expr::Const(value))
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut p = self.pos;
        while p < bytes.len() && (bytes[p].is_ascii_alphanumeric() || bytes[p] == b'_') {
            p += 1;
        }
        self.pos = p;
        let name = &self.src[start..p];
        if self.peek_op() == Some('(') {
            let func: fn(Box<Expr>) -> Expr = match name {
                "exp" => Expr::Exp,
                "log" => Expr::Log,
                _ => {
                    return Err(ExprError::UnknownFunction {
                        name: name.to_string(),
                        offset: start,
                    })
                }
            };
            self.bump();
            let arg = self.expr()?;
            if self.peek_op() != Some(')') {
                return Err(self.syntax("expected `)`"));
            }
            self.bump();
            return Ok(func(Box::new(arg)));
        }
        if let Some(vars) = self.vars {
            if !vars.contains(&name) {
                return Err(ExprError::UnknownVariable {
                    name: name.to_string(),
                    offset: start,
                });
            }
        }
        Ok(Expr::Var(name.to_string()))
    }
}
