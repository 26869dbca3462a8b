//! Point evaluation: rigorous enclosures and a compiled `f64` evaluator.

use std::collections::HashMap;

use num_traits::ToPrimitive;
use smallvec::SmallVec;

use super::ball::Real;
use super::expr::Expr;
use super::poly::Poly;
use super::ratfun::RatFun;
use super::symbol::{Kernel, Sym, X, Y};
use super::{SymError, Q};

fn eval_poly(
    p: &Poly,
    prec: u32,
    value: &mut impl FnMut(Sym) -> Result<Real, SymError>,
) -> Result<Real, SymError> {
    let mut cache: HashMap<Sym, Real> = HashMap::new();
    let mut acc = Real::exact(Q::from_integer(0.into()));
    for (m, c) in p.terms() {
        let mut t = Real::exact(c.clone());
        for (s, e) in m.iter() {
            let v = match cache.get(&s) {
                Some(v) => v.clone(),
                None => {
                    let v = value(s)?;
                    cache.insert(s, v.clone());
                    v
                }
            };
            t = t.mul(&v.powi(e as i64, prec)?, prec);
        }
        acc = acc.add(&t, prec);
    }
    Ok(acc)
}

fn eval_sym(s: Sym, x: &Q, y: &Q, prec: u32, cache: &mut HashMap<Sym, Real>) -> Result<Real, SymError> {
    if s == X {
        return Ok(Real::exact(x.clone()));
    }
    if s == Y {
        return Ok(Real::exact(y.clone()));
    }
    if let Some(v) = cache.get(&s) {
        return Ok(v.clone());
    }
    let v = match s.kernel_def() {
        None => return Err(SymError::UnboundParameter(s.name())),
        Some(k) => {
            let a = eval_inner(k.arg(), x, y, prec, cache)?;
            match &k {
                Kernel::Sin(_) => a.sin(prec)?,
                Kernel::Cos(_) => a.cos(prec)?,
                Kernel::Exp(_) => a.exp(prec)?,
                Kernel::Ln(_) => a.ln(prec)?,
                Kernel::Pow(_, r) => a.pow_q(r, prec)?,
            }
        }
    };
    cache.insert(s, v.clone());
    Ok(v)
}

fn eval_inner(r: &RatFun, x: &Q, y: &Q, prec: u32, cache: &mut HashMap<Sym, Real>) -> Result<Real, SymError> {
    let mut value = |s: Sym| eval_sym(s, x, y, prec, cache);
    let num = eval_poly(r.numerator(), prec, &mut value)?;
    let mut den = Real::exact(Q::from_integer(1.into()));
    for (f, e) in r.den_factors() {
        let v = eval_poly(&f, prec, &mut value)?;
        if v.contains_zero() {
            return Err(SymError::Pole(format!("({x}, {y})")));
        }
        den = den.mul(&v.powi(e as i64, prec)?, prec);
    }
    Ok(num.mul(&den.inv(prec)?, prec))
}

/// Enclosure of `r` at the rational point `(x, y)`.
pub fn eval_ratfun(r: &RatFun, x: &Q, y: &Q, prec: u32) -> Result<Real, SymError> {
    let mut cache = HashMap::new();
    eval_inner(r, x, y, prec, &mut cache)
}

/// Enclosure of `e` at `(x, y)`; exact for rational `e`.
pub fn eval_at(e: &Expr, x: &Q, y: &Q, prec: u32) -> Result<Real, SymError> {
    eval_ratfun(&e.to_ratfun()?, x, y, prec)
}

#[derive(Clone, Debug)]
struct CPoly(Vec<(f64, SmallVec<[(u32, u32); 4]>)>);

#[derive(Clone, Debug)]
struct CRat {
    num: CPoly,
    den: Vec<(CPoly, i32)>,
}

#[derive(Clone, Debug)]
enum Slot {
    X,
    Y,
    Sin(CRat),
    Cos(CRat),
    Exp(CRat),
    Ln(CRat),
    Pow(CRat, f64),
}

/// A batch of rational functions compiled for fast `f64` evaluation. Shared
/// kernels are evaluated once per point.
#[derive(Clone, Debug)]
pub struct CompiledSet {
    slots: Vec<Slot>,
    outputs: Vec<CRat>,
}

struct Builder {
    slots: Vec<Slot>,
    index: HashMap<Sym, u32>,
}

impl Builder {
    fn slot(&mut self, s: Sym) -> Result<u32, SymError> {
        if let Some(i) = self.index.get(&s) {
            return Ok(*i);
        }
        let slot = if s == X {
            Slot::X
        } else if s == Y {
            Slot::Y
        } else {
            match s.kernel_def() {
                None => return Err(SymError::UnboundParameter(s.name())),
                Some(k) => {
                    let a = self.rat(k.arg())?;
                    match &k {
                        Kernel::Sin(_) => Slot::Sin(a),
                        Kernel::Cos(_) => Slot::Cos(a),
                        Kernel::Exp(_) => Slot::Exp(a),
                        Kernel::Ln(_) => Slot::Ln(a),
                        Kernel::Pow(_, r) => Slot::Pow(a, r.to_f64().unwrap_or(f64::NAN)),
                    }
                }
            }
        };
        let i = self.slots.len() as u32;
        self.slots.push(slot);
        self.index.insert(s, i);
        Ok(i)
    }

    fn poly(&mut self, p: &Poly) -> Result<CPoly, SymError> {
        let mut out = Vec::with_capacity(p.len());
        for (m, c) in p.terms() {
            let mut vars = SmallVec::new();
            for (s, e) in m.iter() {
                vars.push((self.slot(s)?, e));
            }
            out.push((c.to_f64().unwrap_or(f64::NAN), vars));
        }
        Ok(CPoly(out))
    }

    fn rat(&mut self, r: &RatFun) -> Result<CRat, SymError> {
        let num = self.poly(r.numerator())?;
        let mut den = Vec::new();
        for (f, e) in r.den_factors() {
            den.push((self.poly(&f)?, e as i32));
        }
        Ok(CRat { num, den })
    }
}

fn eval_cpoly(p: &CPoly, vals: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (c, vars) in &p.0 {
        let mut t = *c;
        for &(i, e) in vars {
            t *= vals[i as usize].powi(e as i32);
        }
        acc += t;
    }
    acc
}

fn eval_crat(r: &CRat, vals: &[f64]) -> f64 {
    let mut v = eval_cpoly(&r.num, vals);
    for (f, e) in &r.den {
        v /= eval_cpoly(f, vals).powi(*e);
    }
    v
}

impl CompiledSet {
    pub fn new(fns: &[RatFun]) -> Result<CompiledSet, SymError> {
        let mut b = Builder { slots: Vec::new(), index: HashMap::new() };
        let outputs = fns.iter().map(|r| b.rat(r)).collect::<Result<Vec<_>, _>>()?;
        Ok(CompiledSet { slots: b.slots, outputs })
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Writes every output at `(x, y)` into `out`. Poles give non-finite values.
    pub fn eval_into(&self, x: f64, y: f64, out: &mut [f64]) {
        let mut vals = vec![0.0; self.slots.len()];
        for (i, s) in self.slots.iter().enumerate() {
            vals[i] = match s {
                Slot::X => x,
                Slot::Y => y,
                Slot::Sin(a) => eval_crat(a, &vals).sin(),
                Slot::Cos(a) => eval_crat(a, &vals).cos(),
                Slot::Exp(a) => eval_crat(a, &vals).exp(),
                Slot::Ln(a) => eval_crat(a, &vals).ln(),
                Slot::Pow(a, r) => eval_crat(a, &vals).powf(*r),
            };
        }
        for (o, r) in out.iter_mut().zip(&self.outputs) {
            *o = eval_crat(r, &vals);
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_into(x, y, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    #[test]
    fn exact_rational_evaluation() {
        let e = parse("X+Y").unwrap();
        let v = eval_at(&e, &q(1, 2), &q(1, 2), 128).unwrap();
        assert_eq!(v.as_exact(), Some(&q(1, 1)));
        let v = eval_at(&parse("ln(Y)").unwrap(), &q(0, 1), &q(1, 1), 128).unwrap();
        assert_eq!(v.as_exact(), Some(&q(0, 1)));
        assert!(matches!(eval_at(&parse("1/(X-Y)").unwrap(), &q(1, 1), &q(1, 1), 128), Err(SymError::Pole(_))));
    }

    #[test]
    fn compiled_matches_direct() {
        let e = parse("sin(X)*exp(Y)/(1+X^2) + sqrt(X)").unwrap().to_ratfun().unwrap();
        let c = CompiledSet::new(std::slice::from_ref(&e)).unwrap();
        let v = c.eval(0.7, -0.3)[0];
        let expect = 0.7f64.sin() * (-0.3f64).exp() / (1.0 + 0.49) + 0.7f64.sqrt();
        assert!((v - expect).abs() < 1e-14);
    }

    #[test]
    fn unbound_parameter_is_reported() {
        let e = parse("c*X").unwrap();
        assert!(matches!(eval_at(&e, &q(1, 1), &q(1, 1), 64), Err(SymError::UnboundParameter(_))));
    }
}
