//! The immutable expression tree and its bridge to [`RatFun`].
//!
//! Conversion to a rational function applies a fixed rewrite set: trig parity
//! and multiple angles up to 8, `tan`/`cot` as quotients, `exp`/`ln` inversion
//! on syntactic matches, `exp` of a polynomial split term by term, integer
//! parts of rational powers split off and nested powers merged.

use std::collections::HashMap;
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::{binomial, Integer};
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::{Mono, Poly};
use super::ratfun::RatFun;
use super::symbol::{Kernel, Sym, SymKind};
use super::{SymError, Q};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Cot,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Cot => "cot",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "cot" => Func::Cot,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Num(Q),
    Var(String),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Call(Func, Expr),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(q: Q) -> Expr {
        Expr(Arc::new(Node::Num(q)))
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(Q::from_integer(n.into()))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::num(Q::new(n.into(), d.into()))
    }

    pub fn var(name: &str) -> Expr {
        Expr(Arc::new(Node::Var(name.to_string())))
    }

    pub fn x() -> Expr {
        Expr::var("X")
    }

    pub fn y() -> Expr {
        Expr::var("Y")
    }

    pub fn sum(items: Vec<Expr>) -> Expr {
        match items.len() {
            0 => Expr::int(0),
            1 => items.into_iter().next().unwrap(),
            _ => Expr(Arc::new(Node::Add(items))),
        }
    }

    pub fn product(items: Vec<Expr>) -> Expr {
        match items.len() {
            0 => Expr::int(1),
            1 => items.into_iter().next().unwrap(),
            _ => Expr(Arc::new(Node::Mul(items))),
        }
    }

    pub fn pow(&self, e: Expr) -> Expr {
        Expr(Arc::new(Node::Pow(self.clone(), e)))
    }

    pub fn powi(&self, e: i64) -> Expr {
        self.pow(Expr::int(e))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr(Arc::new(Node::Call(f, arg)))
    }

    pub fn sin(&self) -> Expr {
        Expr::call(Func::Sin, self.clone())
    }
    pub fn cos(&self) -> Expr {
        Expr::call(Func::Cos, self.clone())
    }
    pub fn tan(&self) -> Expr {
        Expr::call(Func::Tan, self.clone())
    }
    pub fn cot(&self) -> Expr {
        Expr::call(Func::Cot, self.clone())
    }
    pub fn exp(&self) -> Expr {
        Expr::call(Func::Exp, self.clone())
    }
    pub fn ln(&self) -> Expr {
        Expr::call(Func::Ln, self.clone())
    }
    pub fn sqrt(&self) -> Expr {
        Expr::call(Func::Sqrt, self.clone())
    }

    /// True when the tree has no function calls and only integer exponents.
    pub fn is_rational(&self) -> bool {
        match self.node() {
            Node::Num(_) | Node::Var(_) => true,
            Node::Add(v) | Node::Mul(v) => v.iter().all(Expr::is_rational),
            Node::Pow(b, e) => b.is_rational() && matches!(e.node(), Node::Num(q) if q.is_integer()),
            Node::Call(..) => false,
        }
    }

    pub fn as_rational_constant(&self) -> Option<Q> {
        self.to_ratfun().ok()?.constant_value()
    }

    /// Simultaneous substitution of variables by expressions.
    pub fn substitute(&self, map: &HashMap<String, Expr>) -> Expr {
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Node::Add(v) => Expr::sum(v.iter().map(|e| e.substitute(map)).collect()),
            Node::Mul(v) => Expr::product(v.iter().map(|e| e.substitute(map)).collect()),
            Node::Pow(b, e) => b.substitute(map).pow(e.substitute(map)),
            Node::Call(f, a) => Expr::call(*f, a.substitute(map)),
        }
    }

    pub fn differentiate(&self, v: &str) -> Result<Expr, SymError> {
        Ok(Expr::from_ratfun(&self.to_ratfun()?.diff(Sym::var(v))))
    }

    pub fn normalize(&self) -> Result<Expr, SymError> {
        Ok(Expr::from_ratfun(&self.to_ratfun()?))
    }

    /// Canonical printed form, `p` or `(p)/(q)`.
    pub fn canonical_string(&self) -> Result<String, SymError> {
        Ok(self.to_ratfun()?.canonical_string())
    }

    pub fn to_ratfun(&self) -> Result<RatFun, SymError> {
        Ok(match self.node() {
            Node::Num(q) => RatFun::constant(q.clone()),
            Node::Var(v) => RatFun::from_sym(Sym::var(v)),
            Node::Add(items) => {
                let mut acc = RatFun::zero();
                for e in items {
                    acc = acc.add(&e.to_ratfun()?);
                }
                acc
            }
            Node::Mul(items) => {
                let mut acc = RatFun::one();
                for e in items {
                    acc = acc.mul(&e.to_ratfun()?);
                    if acc.is_zero() {
                        return Ok(acc);
                    }
                }
                fold_radicals(&acc)?
            }
            Node::Pow(b, e) => fold_radicals(&power(&b.to_ratfun()?, &e.to_ratfun()?)?)?,
            Node::Call(f, a) => apply(*f, &a.to_ratfun()?)?,
        })
    }

    pub fn from_ratfun(r: &RatFun) -> Expr {
        let (p, q) = r.canonical();
        let num = poly_expr(&p);
        if q.constant_value().is_some_and(|c| c.is_one()) {
            num
        } else {
            Expr::product(vec![num, poly_expr(&q).powi(-1)])
        }
    }
}

fn sym_expr(s: Sym) -> Expr {
    match &s.info().kind {
        SymKind::Var(name) => Expr::var(name),
        SymKind::Kernel(k) => match k {
            Kernel::Sin(u) => Expr::from_ratfun(u).sin(),
            Kernel::Cos(u) => Expr::from_ratfun(u).cos(),
            Kernel::Exp(u) => Expr::from_ratfun(u).exp(),
            Kernel::Ln(u) => Expr::from_ratfun(u).ln(),
            Kernel::Pow(u, r) => Expr::from_ratfun(u).pow(Expr::num(r.clone())),
        },
    }
}

fn poly_expr(p: &Poly) -> Expr {
    let terms = p
        .display_terms()
        .into_iter()
        .map(|(m, c)| {
            let mut vars: Vec<_> = m.iter().collect();
            vars.sort_by(|a, b| Sym::display_cmp(a.0, b.0));
            let mut factors = Vec::new();
            if !c.is_one() || vars.is_empty() {
                factors.push(Expr::num(c));
            }
            for (s, e) in vars {
                let base = sym_expr(s);
                factors.push(if e == 1 { base } else { base.powi(e as i64) });
            }
            Expr::product(factors)
        })
        .collect();
    Expr::sum(terms)
}

fn kernel(k: Kernel) -> RatFun {
    RatFun::from_sym(Sym::kernel(k))
}

/// `(cos w + i sin w)^n`, returned as (real part, imaginary part).
fn multiple_angle(w: &RatFun, n: u32) -> (RatFun, RatFun) {
    let c = kernel(Kernel::Cos(w.clone()));
    let s = kernel(Kernel::Sin(w.clone()));
    let mut re = RatFun::zero();
    let mut im = RatFun::zero();
    for k in 0..=n {
        let b = Q::from_integer(binomial(BigInt::from(n), BigInt::from(k)));
        let t = c.powi((n - k) as i64).unwrap().mul(&s.powi(k as i64).unwrap()).scale(&b);
        let sign = if (k / 2) % 2 == 0 { Q::one() } else { -Q::one() };
        if k % 2 == 0 {
            re = re.add(&t.scale(&sign));
        } else {
            im = im.add(&t.scale(&sign));
        }
    }
    (re, im)
}

fn apply(f: Func, u: &RatFun) -> Result<RatFun, SymError> {
    match f {
        Func::Sin | Func::Cos => {
            if u.is_zero() {
                return Ok(if f == Func::Sin { RatFun::zero() } else { RatFun::one() });
            }
            let (flip, w) = if u.leading_sign_negative() { (true, u.neg()) } else { (false, u.clone()) };
            let value = match w.integer_multiple() {
                Some((n, base)) if n <= 8 => {
                    let (re, im) = multiple_angle(&base, n);
                    if f == Func::Sin {
                        im
                    } else {
                        re
                    }
                }
                _ => kernel(if f == Func::Sin { Kernel::Sin(w) } else { Kernel::Cos(w) }),
            };
            Ok(if flip && f == Func::Sin { value.neg() } else { value })
        }
        Func::Tan => apply(Func::Sin, u)?.div(&apply(Func::Cos, u)?),
        Func::Cot => apply(Func::Cos, u)?.div(&apply(Func::Sin, u)?),
        Func::Exp => exp_of(u),
        Func::Ln => ln_of(u),
        Func::Sqrt => power(u, &RatFun::ratio(1, 2)),
    }
}

/// Single symbol with coefficient one, raised to `e`.
fn as_symbol_power(u: &RatFun) -> Option<(Sym, u32)> {
    if !u.is_polynomial() {
        return None;
    }
    let p = u.numerator();
    if p.len() != 1 {
        return None;
    }
    let (m, c) = &p.terms()[0];
    if !c.is_one() {
        return None;
    }
    let v: Vec<_> = m.iter().collect();
    match v.as_slice() {
        [(s, e)] => Some((*s, *e)),
        _ => None,
    }
}

fn exp_of(u: &RatFun) -> Result<RatFun, SymError> {
    if u.is_zero() {
        return Ok(RatFun::one());
    }
    if !u.is_polynomial() {
        if u.leading_sign_negative() {
            return kernel(Kernel::Exp(u.neg())).inv();
        }
        return Ok(kernel(Kernel::Exp(u.clone())));
    }
    let mut acc = RatFun::one();
    for (m, c) in u.numerator().terms() {
        if let Some(w) = ln_argument(m, c) {
            acc = acc.mul(&w?);
            continue;
        }
        // exp(c m) = exp(m / den)^(numer)
        let den = Q::from_integer(c.denom().clone());
        let base = RatFun::from_poly(Poly::term(m.clone(), den.recip()));
        let k = c.numer().to_i64().ok_or_else(|| SymError::Domain("exponent too large".into()))?;
        acc = acc.mul(&kernel(Kernel::Exp(base)).powi(k)?);
    }
    Ok(acc)
}

/// `exp(c * ln(w))` when the term is a scaled logarithm kernel.
fn ln_argument(m: &Mono, c: &Q) -> Option<Result<RatFun, SymError>> {
    let v: Vec<_> = m.iter().collect();
    let [(s, 1)] = v.as_slice() else { return None };
    match s.kernel_def()? {
        Kernel::Ln(w) => Some(power(&w, &RatFun::constant(c.clone()))),
        _ => None,
    }
}

fn ln_of(u: &RatFun) -> Result<RatFun, SymError> {
    if let Some(c) = u.constant_value() {
        if c.is_one() {
            return Ok(RatFun::zero());
        }
        if !c.is_positive() {
            return Err(SymError::Domain(format!("ln of {c}")));
        }
    }
    if let Some((s, e)) = as_symbol_power(u) {
        let k = Q::from_integer(e.into());
        match s.kernel_def() {
            Some(Kernel::Exp(w)) => return Ok(w.scale(&k)),
            Some(Kernel::Pow(b, r)) => return Ok(ln_of(&b)?.scale(&(r * k))),
            _ => {}
        }
    }
    Ok(kernel(Kernel::Ln(u.clone())))
}

fn exact_root(n: &BigInt, k: u32) -> Option<BigInt> {
    let r = n.nth_root(k);
    (r.pow(k) == *n).then_some(r)
}

/// `base^e`, with `e` a constant or not.
fn power(base: &RatFun, e: &RatFun) -> Result<RatFun, SymError> {
    let Some(r) = e.constant_value() else {
        return exp_of(&e.mul(&ln_of(base)?));
    };
    if r.is_integer() {
        let k = r.to_integer().to_i64().ok_or_else(|| SymError::Domain("exponent too large".into()))?;
        return base.powi(k);
    }
    let k = r.floor();
    let f = &r - &k;
    let int_part = base.powi(k.to_integer().to_i64().unwrap_or(0))?;
    Ok(int_part.mul(&frac_power(base, &f)?))
}

/// `base^f` with `0 < f < 1`.
fn frac_power(base: &RatFun, f: &Q) -> Result<RatFun, SymError> {
    if let Some(c) = base.constant_value() {
        if c.is_zero() {
            return Ok(RatFun::zero());
        }
        if c.is_negative() {
            return Err(SymError::Domain(format!("fractional power of {c}")));
        }
        let b = f.denom().to_u32().unwrap_or(0);
        if b > 0 {
            if let (Some(n), Some(d)) = (exact_root(c.numer(), b), exact_root(c.denom(), b)) {
                return RatFun::constant(Q::new(n, d)).powi(f.numer().to_i64().unwrap_or(1));
            }
        }
        return Ok(kernel(Kernel::Pow(base.clone(), f.clone())));
    }
    if let Some((s, e)) = as_symbol_power(base) {
        let k = Q::from_integer(e.into()) * f;
        match s.kernel_def() {
            Some(Kernel::Pow(b, r)) => return power(&b, &RatFun::constant(r * k)),
            Some(Kernel::Exp(w)) => return exp_of(&w.scale(&k)),
            _ => {}
        }
    }
    Ok(kernel(Kernel::Pow(base.clone(), f.clone())))
}

/// Rewrites `t^e` with `t = u^(a/b)` and `e >= b` as `t^(e mod b) u^(a (e div b))`.
fn fold_radicals(r: &RatFun) -> Result<RatFun, SymError> {
    let radicals: Vec<(Sym, RatFun, Q)> = r
        .numerator()
        .symbols()
        .into_iter()
        .filter_map(|s| match s.kernel_def() {
            Some(Kernel::Pow(u, q)) => Some((s, u, q)),
            _ => None,
        })
        .collect();
    let needs = radicals.iter().any(|(s, _, q)| {
        let b = q.denom().to_u32().unwrap_or(u32::MAX);
        r.numerator().degree_in(*s) >= b
    });
    if !needs {
        return Ok(r.clone());
    }
    let mut num = RatFun::zero();
    for (m, c) in r.numerator().terms() {
        let mut t = RatFun::constant(c.clone());
        for (s, e) in m.iter() {
            let hit = radicals.iter().find(|(k, _, _)| *k == s);
            match hit {
                Some((_, u, q)) => {
                    let b = q.denom().to_u32().unwrap();
                    let (div, rem) = e.div_rem(&b);
                    let a = q.numer().to_i64().unwrap();
                    t = t
                        .mul(&RatFun::from_sym(s).powi(rem as i64)?)
                        .mul(&u.powi(a * div as i64)?);
                }
                None => t = t.mul(&RatFun::from_sym(s).powi(e as i64)?),
            }
        }
        num = num.add(&t);
    }
    Ok(num.mul(&r.den_inverse()))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Num(q) => {
                if q.is_integer() && !q.is_negative() {
                    write!(f, "{}", q.numer())
                } else if q.is_integer() {
                    write!(f, "({})", q.numer())
                } else {
                    write!(f, "({}/{})", q.numer(), q.denom())
                }
            }
            Node::Var(v) => write!(f, "{v}"),
            Node::Add(items) | Node::Mul(items) => {
                let op = if matches!(self.node(), Node::Add(_)) { "+" } else { "*" };
                write!(f, "(")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{op}")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            Node::Pow(b, e) => write!(f, "({b}^{e})"),
            Node::Call(func, a) => {
                let inner = a.to_string();
                if inner.starts_with('(') {
                    write!(f, "{}{inner}", func.name())
                } else {
                    write!(f, "{}({inner})", func.name())
                }
            }
        }
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        Expr::sum(vec![self, o])
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        Expr::sum(vec![self, Expr::product(vec![Expr::int(-1), o])])
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        Expr::product(vec![self, o])
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, o: Expr) -> Expr {
        Expr::product(vec![self, o.powi(-1)])
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product(vec![Expr::int(-1), self])
    }
}
