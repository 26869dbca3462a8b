//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := unary (("*" | "/") unary)*
//! unary := "-" unary | power
//! power := atom ("^" unary)?
//! atom  := integer | ident | func "(" expr ")" | "(" expr ")"
//! ```

use num_bigint::BigInt;

use super::expr::{Expr, Func};
use super::{SymError, Q};

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    params: Option<&'a [&'a str]>,
}

/// Parses an expression; every identifier other than a function name is
/// accepted as a variable or parameter.
pub fn parse(text: &str) -> Result<Expr, SymError> {
    Parser { src: text, pos: 0, params: None }.run()
}

/// Parses an expression admitting only `X`, `Y` and the listed parameters.
pub fn parse_with_params(text: &str, params: &[&str]) -> Result<Expr, SymError> {
    Parser { src: text, pos: 0, params: Some(params) }.run()
}

impl<'a> Parser<'a> {
    fn run(mut self) -> Result<Expr, SymError> {
        let e = self.expr()?;
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(e)
    }

    fn err(&self, msg: &str) -> SymError {
        SymError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, SymError> {
        let mut items = vec![self.term()?];
        loop {
            if self.eat('+') {
                items.push(self.term()?);
            } else if self.eat('-') {
                items.push(-self.term()?);
            } else {
                break;
            }
        }
        Ok(Expr::sum(items))
    }

    fn term(&mut self) -> Result<Expr, SymError> {
        let mut items = vec![self.unary()?];
        loop {
            if self.eat('*') {
                items.push(self.unary()?);
            } else if self.eat('/') {
                let d = self.unary()?;
                items.push(d.powi(-1));
            } else {
                break;
            }
        }
        Ok(fold_literals(items))
    }

    fn unary(&mut self) -> Result<Expr, SymError> {
        if self.eat('-') {
            let inner = self.unary()?;
            return Ok(match inner.node() {
                super::Node::Num(q) => Expr::num(-q),
                _ => -inner,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, SymError> {
        let base = self.atom()?;
        if self.eat('^') {
            let e = self.unary()?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, SymError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.src[self.pos..].starts_with(|c: char| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let n: BigInt = self.src[start..self.pos].parse().expect("digits");
                Ok(Expr::num(Q::from_integer(n)))
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.src[self.pos..].starts_with(|c: char| c.is_alphanumeric() || c == '_') {
                    self.pos += self.src[self.pos..].chars().next().unwrap().len_utf8();
                }
                let name = &self.src[start..self.pos];
                let is_call = self.peek() == Some('(');
                match (Func::from_name(name), is_call) {
                    (Some(f), true) => {
                        self.pos += 1;
                        let arg = self.expr()?;
                        if !self.eat(')') {
                            return Err(self.err("expected `)`"));
                        }
                        Ok(Expr::call(f, arg))
                    }
                    (Some(_), false) => Err(SymError::Syntax {
                        pos: self.pos,
                        msg: format!("function `{name}` needs a parenthesized argument"),
                    }),
                    (None, true) => Err(SymError::UnknownIdentifier { name: name.to_string(), pos: start }),
                    (None, false) => {
                        let known = name == "X"
                            || name == "Y"
                            || self.params.is_none_or(|ps| ps.contains(&name));
                        if !known {
                            return Err(SymError::UnknownIdentifier { name: name.to_string(), pos: start });
                        }
                        Ok(Expr::var(name))
                    }
                }
            }
            Some(c) => Err(self.err(&format!("unexpected character `{c}`"))),
        }
    }
}

/// `p/q` with integer literals becomes a single rational constant.
fn fold_literals(items: Vec<Expr>) -> Expr {
    use super::Node;
    if items.len() == 2 {
        if let (Node::Num(p), Node::Pow(d, e)) = (items[0].node(), items[1].node()) {
            if let (Node::Num(q), Node::Num(k)) = (d.node(), e.node()) {
                if *k == -Q::from_integer(1.into()) && !num_traits::Zero::is_zero(q) {
                    return Expr::num(p / q);
                }
            }
        }
    }
    Expr::product(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_unary_minus() {
        let e = parse("-X^2 + 2*X*Y - 1/2").unwrap();
        assert_eq!(e.canonical_string().unwrap(), "-X^2 + 2*X*Y - (1/2)");
    }

    #[test]
    fn rational_literal() {
        assert_eq!(parse("3/6").unwrap().to_string(), "(1/2)");
        assert_eq!(parse("0").unwrap().to_string(), "0");
    }

    #[test]
    fn errors_carry_position() {
        match parse("X + * Y") {
            Err(SymError::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        match parse("foo(X)") {
            Err(SymError::UnknownIdentifier { name, pos }) => {
                assert_eq!(name, "foo");
                assert_eq!(pos, 0);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_with_params("c*X + d", &["c"]), Err(SymError::UnknownIdentifier { .. })));
        assert!(matches!(parse("(X+Y"), Err(SymError::Syntax { .. })));
    }

    #[test]
    fn functions() {
        let e = parse("sqrt(X)*sqrt(X) - exp(ln(X))").unwrap();
        assert_eq!(e.canonical_string().unwrap(), "0");
    }
}
