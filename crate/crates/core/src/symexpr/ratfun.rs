//! Rational functions over the symbol ring, with factored denominators.
//!
//! A [`RatFun`] is `num / prod f_i^{e_i}` where each `f_i` lives in a global
//! registry of monic, square-free denominator factors. Ring operations and
//! differentiation never need a gcd: differentiation only raises exponents of
//! factors already present, and sums use the exponent-wise maximum. A value is
//! zero exactly when its numerator is the zero polynomial, independent of how
//! well the denominator has been reduced. Fully reduced `p/q` forms are only
//! produced on demand by [`RatFun::canonical`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;
use smallvec::SmallVec;

use super::gcd::{gcd, squarefree};
use super::poly::Poly;
use super::symbol::Sym;
use super::{SymError, Q};

#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FactorId(u32);

struct FactorInfo {
    poly: Poly,
    syms: BTreeSet<Sym>,
    /// A symbol in which the factor is linear with constant coefficient.
    linear: Option<(Sym, Q, Poly)>,
}

struct FactorTable {
    factors: Vec<Arc<FactorInfo>>,
    by_poly: HashMap<Poly, FactorId>,
    derivs: HashMap<(FactorId, Sym), RatFun>,
}

static FACTORS: Lazy<RwLock<FactorTable>> = Lazy::new(|| {
    RwLock::new(FactorTable { factors: Vec::new(), by_poly: HashMap::new(), derivs: HashMap::new() })
});

fn factor(id: FactorId) -> Arc<FactorInfo> {
    FACTORS.read().unwrap().factors[id.0 as usize].clone()
}

pub(crate) fn factor_poly(id: FactorId) -> Poly {
    factor(id).poly.clone()
}

fn register(p: Poly) -> FactorId {
    let p = p.monic();
    if let Some(id) = FACTORS.read().unwrap().by_poly.get(&p) {
        return *id;
    }
    let syms = p.symbols();
    let linear = syms.iter().find_map(|&s| {
        if p.degree_in(s) != 1 {
            return None;
        }
        let cs = p.coeffs_in(s);
        cs[1].constant_value().map(|a| (s, a, cs[0].clone()))
    });
    let mut t = FACTORS.write().unwrap();
    if let Some(id) = t.by_poly.get(&p) {
        return *id;
    }
    let id = FactorId(t.factors.len() as u32);
    t.factors.push(Arc::new(FactorInfo { poly: p.clone(), syms, linear }));
    t.by_poly.insert(p, id);
    id
}

type Den = SmallVec<[(FactorId, u32); 4]>;

/// Splits a nonzero polynomial into a constant and registered factors.
fn factorize(p: &Poly) -> (Q, Den) {
    debug_assert!(!p.is_zero());
    let mut rest = p.clone();
    let mut exps: BTreeMap<FactorId, u32> = BTreeMap::new();

    // single-variable monomial content first, so that e.g. X*Y*(X+Y) splits
    let syms = rest.symbols();
    for s in syms {
        let m = rest.terms().iter().map(|(m, _)| m.exp(s)).min().unwrap_or(0);
        if m > 0 {
            let id = register(Poly::var(s));
            rest = rest.div_exact(&Poly::var(s).pow(m)).expect("monomial content divides");
            *exps.entry(id).or_default() += m;
        }
    }

    let snapshot: Vec<(FactorId, Arc<FactorInfo>)> = {
        let t = FACTORS.read().unwrap();
        t.factors.iter().enumerate().map(|(i, f)| (FactorId(i as u32), f.clone())).collect()
    };
    for (id, f) in &snapshot {
        if rest.is_constant() {
            break;
        }
        if !f.syms.is_subset(&rest.symbols()) {
            continue;
        }
        while !rest.is_constant() {
            match rest.div_exact(&f.poly) {
                Some(q) => {
                    rest = q;
                    *exps.entry(*id).or_default() += 1;
                }
                None => break,
            }
        }
    }
    if !rest.is_constant() {
        for (s, m) in squarefree(&rest) {
            // refine against the registry where a common part exists
            let mut pieces = vec![s.clone()];
            for (_, f) in &snapshot {
                let mut next = Vec::new();
                for piece in pieces {
                    let g = gcd(&piece, &f.poly);
                    if g.is_constant() || g == piece.monic() {
                        next.push(piece);
                    } else {
                        next.push(piece.div_exact(&g).expect("gcd divides"));
                        next.push(g);
                    }
                }
                pieces = next;
            }
            for piece in pieces {
                let id = register(piece.clone());
                *exps.entry(id).or_default() += m;
                rest = rest.div_exact(&factor(id).poly.pow(m)).expect("square-free part divides");
            }
        }
    }
    let c = rest.constant_value().expect("fully factored");
    (c, exps.into_iter().filter(|(_, e)| *e > 0).collect())
}

const P61: u64 = (1 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P61 as u128) as u64
}

fn powmod(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b);
        }
        b = mulmod(b, b);
        e >>= 1;
    }
    r
}

fn q_mod(q: &Q) -> Option<u64> {
    let m = BigInt::from(P61);
    let n = ((q.numer() % &m) + &m) % &m;
    let d = ((q.denom() % &m) + &m) % &m;
    let d = d.to_u64()?;
    if d == 0 {
        return None;
    }
    Some(mulmod(n.to_u64()?, powmod(d, P61 - 2)))
}

fn poly_mod(p: &Poly, val: &impl Fn(Sym) -> u64) -> Option<u64> {
    let mut acc = 0u64;
    for (m, c) in p.terms() {
        let mut t = q_mod(c)?;
        for (s, e) in m.iter() {
            t = mulmod(t, powmod(val(s), e as u64));
        }
        acc = (acc + t) % P61;
    }
    Some(acc)
}

/// Cheap necessary condition for `f | num`: `num` must vanish on the zero set
/// of `f`. Returns `false` only when `f` certainly does not divide `num`.
fn may_divide(num: &Poly, f: &FactorInfo) -> bool {
    if f.poly.len() == 1 {
        let (m, _) = &f.poly.terms()[0];
        return num.terms().iter().all(|(mm, _)| mm.div(m).is_some());
    }
    let Some((v, a, rest)) = &f.linear else { return true };
    let val0 = |s: Sym| ((s.0 as u64 + 7).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 4) % P61;
    let (Some(r), Some(ai)) = (poly_mod(rest, &val0), q_mod(a)) else { return true };
    if ai == 0 {
        return true;
    }
    // a*v + rest = 0
    let vv = mulmod((P61 - r) % P61, powmod(ai, P61 - 2));
    let val = |s: Sym| if s == *v { vv } else { val0(s) };
    match poly_mod(num, &val) {
        Some(x) => x == 0,
        None => true,
    }
}

#[derive(Clone, Debug)]
pub struct RatFun {
    num: Poly,
    den: Den,
}

impl Default for RatFun {
    fn default() -> Self {
        RatFun::zero()
    }
}

impl PartialEq for RatFun {
    fn eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }
}

impl RatFun {
    pub fn zero() -> RatFun {
        RatFun { num: Poly::zero(), den: Den::new() }
    }

    pub fn one() -> RatFun {
        RatFun::constant(Q::one())
    }

    pub fn constant(c: Q) -> RatFun {
        RatFun { num: Poly::constant(c), den: Den::new() }
    }

    pub fn int(n: i64) -> RatFun {
        RatFun::constant(Q::from_integer(n.into()))
    }

    pub fn ratio(n: i64, d: i64) -> RatFun {
        RatFun::constant(Q::new(n.into(), d.into()))
    }

    pub fn from_sym(s: Sym) -> RatFun {
        RatFun { num: Poly::var(s), den: Den::new() }
    }

    pub fn from_poly(p: Poly) -> RatFun {
        RatFun { num: p, den: Den::new() }
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn den_factors(&self) -> Vec<(Poly, u32)> {
        self.den.iter().map(|&(id, e)| (factor_poly(id), e)).collect()
    }

    pub fn den_poly(&self) -> Poly {
        self.den.iter().fold(Poly::one(), |acc, &(id, e)| acc.mul(&factor(id).poly.pow(e)))
    }

    /// `1 / denominator`.
    pub fn den_inverse(&self) -> RatFun {
        RatFun { num: Poly::one(), den: self.den.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    pub fn constant_value(&self) -> Option<Q> {
        if self.den.is_empty() {
            self.num.constant_value()
        } else {
            None
        }
    }

    /// Every symbol occurring in the numerator or the denominator.
    pub fn symbols(&self) -> BTreeSet<Sym> {
        let mut s = self.num.symbols();
        for &(id, _) in &self.den {
            s.extend(factor(id).syms.iter().copied());
        }
        s
    }

    /// Plain variables this value depends on, looking through kernels.
    pub fn free_vars(&self) -> BTreeSet<Sym> {
        self.symbols().into_iter().flat_map(|s| s.info().free_vars.clone()).collect()
    }

    pub fn kernels(&self) -> Vec<Sym> {
        self.symbols().into_iter().filter(|s| !s.is_plain()).collect()
    }

    pub fn depends_on(&self, v: Sym) -> bool {
        self.symbols().iter().any(|s| s.depends_on(v))
    }

    fn reduce(mut self) -> RatFun {
        if self.num.is_zero() {
            self.den.clear();
            return self;
        }
        for slot in self.den.iter_mut() {
            let f = factor(slot.0);
            while slot.1 > 0 && may_divide(&self.num, &f) {
                match self.num.div_exact(&f.poly) {
                    Some(q) => {
                        self.num = q;
                        slot.1 -= 1;
                    }
                    None => break,
                }
            }
        }
        self.den.retain(|(_, e)| *e > 0);
        self
    }

    pub fn neg(&self) -> RatFun {
        RatFun { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn scale(&self, k: &Q) -> RatFun {
        if k.is_zero() {
            return RatFun::zero();
        }
        RatFun { num: self.num.scale(k), den: self.den.clone() }
    }

    fn combine(&self, o: &RatFun, sign: &Q) -> RatFun {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.scale(sign);
        }
        if self.den == o.den {
            return RatFun { num: self.num.add(&o.num.scale(sign)), den: self.den.clone() }.reduce();
        }
        let mut merged: BTreeMap<FactorId, (u32, u32)> = BTreeMap::new();
        for &(id, e) in &self.den {
            merged.entry(id).or_default().0 = e;
        }
        for &(id, e) in &o.den {
            merged.entry(id).or_default().1 = e;
        }
        let mut ma = Poly::one();
        let mut mb = Poly::one();
        let mut den = Den::new();
        for (id, (ea, eb)) in merged {
            let f = factor(id);
            let e = ea.max(eb);
            if e > ea {
                ma = ma.mul(&f.poly.pow(e - ea));
            }
            if e > eb {
                mb = mb.mul(&f.poly.pow(e - eb));
            }
            den.push((id, e));
        }
        let num = self.num.mul(&ma).add(&o.num.mul(&mb).scale(sign));
        RatFun { num, den }.reduce()
    }

    pub fn add(&self, o: &RatFun) -> RatFun {
        self.combine(o, &Q::one())
    }

    pub fn sub(&self, o: &RatFun) -> RatFun {
        self.combine(o, &-Q::one())
    }

    pub fn mul(&self, o: &RatFun) -> RatFun {
        if self.is_zero() || o.is_zero() {
            return RatFun::zero();
        }
        if let Some(c) = o.constant_value() {
            return self.scale(&c);
        }
        if let Some(c) = self.constant_value() {
            return o.scale(&c);
        }
        let mut exps: BTreeMap<FactorId, u32> = BTreeMap::new();
        for &(id, e) in self.den.iter().chain(o.den.iter()) {
            *exps.entry(id).or_default() += e;
        }
        let r = RatFun { num: self.num.mul(&o.num), den: exps.into_iter().collect() };
        if self.den.is_empty() && o.den.is_empty() {
            r
        } else {
            r.reduce()
        }
    }

    pub fn inv(&self) -> Result<RatFun, SymError> {
        if self.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        let (c, fs) = factorize(&self.num);
        let num = self.den_poly().scale(&c.recip());
        Ok(RatFun { num, den: fs }.reduce())
    }

    pub fn div(&self, o: &RatFun) -> Result<RatFun, SymError> {
        if let Some(c) = o.constant_value() {
            if c.is_zero() {
                return Err(SymError::DivisionByZero);
            }
            return Ok(self.scale(&c.recip()));
        }
        Ok(self.mul(&o.inv()?))
    }

    pub fn powi(&self, e: i64) -> Result<RatFun, SymError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = RatFun::one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        Ok(acc)
    }

    /// Total derivative of a polynomial in the symbol ring.
    fn poly_diff(p: &Poly, v: Sym) -> RatFun {
        let mut acc = RatFun::zero();
        let mut poly_part = Poly::zero();
        for s in p.symbols() {
            if !s.depends_on(v) {
                continue;
            }
            let dp = p.partial(s);
            if s == v {
                poly_part = poly_part.add(&dp);
                continue;
            }
            let ds = s.derivative(v);
            if ds.is_polynomial() {
                poly_part = poly_part.add(&dp.mul(&ds.num));
            } else {
                acc = acc.add(&RatFun::from_poly(dp).mul(&ds));
            }
        }
        acc.add(&RatFun::from_poly(poly_part))
    }

    fn factor_diff(id: FactorId, v: Sym) -> RatFun {
        if let Some(d) = FACTORS.read().unwrap().derivs.get(&(id, v)) {
            return d.clone();
        }
        let d = RatFun::poly_diff(&factor(id).poly, v);
        FACTORS.write().unwrap().derivs.insert((id, v), d.clone());
        d
    }

    /// Exact partial derivative with respect to the plain variable `v`.
    pub fn diff(&self, v: Sym) -> RatFun {
        if !self.depends_on(v) {
            return RatFun::zero();
        }
        let dn = RatFun::poly_diff(&self.num, v);
        let dfs: Vec<(usize, RatFun)> = self
            .den
            .iter()
            .enumerate()
            .filter_map(|(i, &(id, _))| {
                let d = RatFun::factor_diff(id, v);
                (!d.is_zero()).then_some((i, d))
            })
            .collect();
        if dfs.is_empty() {
            return dn.mul(&RatFun { num: Poly::one(), den: self.den.clone() });
        }
        if dn.is_polynomial() && dfs.iter().all(|(_, d)| d.is_polynomial()) {
            let fpolys: Vec<Poly> = dfs.iter().map(|(i, _)| factor(self.den[*i].0).poly.clone()).collect();
            let all = fpolys.iter().fold(Poly::one(), |a, f| a.mul(f));
            let mut num = dn.num.mul(&all);
            for (k, (i, d)) in dfs.iter().enumerate() {
                let others = fpolys
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .fold(Poly::one(), |a, (_, f)| a.mul(f));
                let e = Q::from_integer(BigInt::from(self.den[*i].1));
                num = num.sub(&self.num.mul(&d.num).mul(&others).scale(&e));
            }
            let mut den = self.den.clone();
            for (i, _) in &dfs {
                den[*i].1 += 1;
            }
            return RatFun { num, den }.reduce();
        }
        let inv_den = RatFun { num: Poly::one(), den: self.den.clone() };
        let mut acc = dn.mul(&inv_den);
        for (i, d) in dfs {
            let (id, e) = self.den[i];
            let one_over_f = RatFun { num: Poly::one(), den: smallvec::smallvec![(id, 1)] };
            let term = RatFun::from_poly(self.num.clone())
                .mul(&d)
                .mul(&one_over_f)
                .mul(&inv_den)
                .scale(&Q::from_integer(BigInt::from(e)));
            acc = acc.sub(&term);
        }
        acc
    }

    /// Replaces symbols by values, simultaneously.
    pub fn substitute(&self, map: &impl Fn(Sym) -> Option<RatFun>) -> Result<RatFun, SymError> {
        let sub_poly = |p: &Poly| -> RatFun {
            let mut cache: HashMap<Sym, RatFun> = HashMap::new();
            let mut acc = RatFun::zero();
            for (m, c) in p.terms() {
                let mut t = RatFun::constant(c.clone());
                for (s, e) in m.iter() {
                    let v = cache.entry(s).or_insert_with(|| map(s).unwrap_or_else(|| RatFun::from_sym(s))).clone();
                    t = t.mul(&v.powi(e as i64).expect("nonnegative power"));
                }
                acc = acc.add(&t);
            }
            acc
        };
        let num = sub_poly(&self.num);
        let mut den = RatFun::one();
        for (f, e) in self.den_factors() {
            den = den.mul(&sub_poly(&f).powi(e as i64)?);
        }
        num.div(&den)
    }

    /// Fully reduced `p / q` with `q` monic under the display order.
    pub fn canonical(&self) -> (Poly, Poly) {
        if self.den.is_empty() {
            return (self.num.clone(), Poly::one());
        }
        // Cancel against one stored factor at a time: once the numerator is
        // coprime to every remaining piece it is coprime to their product.
        let mut p = self.num.clone();
        let mut q = Poly::one();
        for (f, e) in self.den_factors() {
            for _ in 0..e {
                let mut d = f.clone();
                loop {
                    let g = gcd(&p, &d);
                    if g.is_constant() {
                        break;
                    }
                    p = p.div_exact(&g).expect("gcd divides");
                    d = d.div_exact(&g).expect("gcd divides");
                }
                q = q.mul(&d);
            }
        }
        let lc = q.display_leading().map(|(_, c)| c.clone()).unwrap_or_else(Q::one);
        (p.scale(&lc.recip()), q.scale(&lc.recip()))
    }

    pub fn canonical_string(&self) -> String {
        let (p, q) = self.canonical();
        if q.constant_value().is_some_and(|c| c.is_one()) {
            p.to_display_string()
        } else {
            format!("({})/({})", p.to_display_string(), q.to_display_string())
        }
    }

    /// Numerator sign under the display order; used to pick parity representatives.
    pub fn leading_sign_negative(&self) -> bool {
        let (p, _) = self.canonical();
        p.display_leading().is_some_and(|(_, c)| c.is_negative())
    }

    /// `Some((n, rest))` when `self = n * rest` with `n` a positive integer > 1
    /// and `rest` having integer-coprime coefficients. Used for multiple-angle
    /// rewriting.
    pub fn integer_multiple(&self) -> Option<(u32, RatFun)> {
        if !self.den.is_empty() {
            return None;
        }
        let c = self.num.content();
        if !c.is_integer() || c <= Q::one() {
            return None;
        }
        let n = c.to_integer().to_u32()?;
        Some((n, self.scale(&c.recip())))
    }

    /// `Some((k, s))` when `self = k * s` for a single symbol `s`.
    pub fn as_scaled_symbol(&self) -> Option<(Q, Sym)> {
        if !self.den.is_empty() || self.num.len() != 1 {
            return None;
        }
        let (m, c) = &self.num.terms()[0];
        let v: Vec<_> = m.iter().collect();
        match v.as_slice() {
            [(s, 1)] => Some((c.clone(), *s)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::symbol::{X, Y};

    fn x() -> RatFun {
        RatFun::from_sym(X)
    }
    fn y() -> RatFun {
        RatFun::from_sym(Y)
    }

    #[test]
    fn quotient_cancels() {
        let n = x().mul(&x()).sub(&y().mul(&y()));
        let d = x().sub(&y());
        let q = n.div(&d).unwrap();
        assert!(q.is_polynomial());
        assert_eq!(q.canonical_string(), "X + Y");
    }

    #[test]
    fn derivative_of_reciprocal() {
        let f = x().sub(&y()).inv().unwrap();
        let d = f.diff(Y);
        let expect = x().sub(&y()).powi(-2).unwrap();
        assert!(d.sub(&expect).is_zero());
        assert_eq!(d.canonical_string(), "(1)/(X^2 - 2*X*Y + Y^2)");
    }

    #[test]
    fn sums_share_denominators() {
        let a = x().inv().unwrap();
        let b = y().inv().unwrap();
        let s = a.add(&b).sub(&x().add(&y()).div(&x().mul(&y())).unwrap());
        assert!(s.is_zero());
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert!(x().sub(&x()).inv().is_err());
    }
}
