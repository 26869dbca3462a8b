//! Exact rationals and midpoint-radius balls with dyadic endpoints.
//!
//! Rational operations on exact inputs stay exact. Everything else produces a
//! ball `[mid - rad, mid + rad]` whose midpoint carries `prec + GUARD` bits and
//! whose radius is kept as a 64-bit upper bound. Transcendental functions are
//! evaluated in fixed point with argument reduction; their truncation and
//! rounding errors are folded into the radius.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

use super::{SymError, Q};

const GUARD: u32 = 64;
const RAD_BITS: u64 = 64;

/// `m * 2^e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dyadic {
    m: BigInt,
    e: i64,
}

impl Dyadic {
    pub fn zero() -> Dyadic {
        Dyadic { m: BigInt::zero(), e: 0 }
    }

    pub fn new(m: BigInt, e: i64) -> Dyadic {
        Dyadic { m, e }
    }

    /// `2^e`.
    pub fn pow2(e: i64) -> Dyadic {
        Dyadic { m: BigInt::one(), e }
    }

    pub fn is_zero(&self) -> bool {
        self.m.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.m.is_negative()
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic { m: self.m.abs(), e: self.e }
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic { m: -&self.m, e: self.e }
    }

    fn align(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, i64) {
        let e = a.e.min(b.e);
        (&a.m << (a.e - e) as usize, &b.m << (b.e - e) as usize, e)
    }

    pub fn add(&self, o: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let (a, b, e) = Dyadic::align(self, o);
        Dyadic { m: a + b, e }
    }

    pub fn sub(&self, o: &Dyadic) -> Dyadic {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Dyadic) -> Dyadic {
        Dyadic { m: &self.m * &o.m, e: self.e + o.e }
    }

    pub fn shl(&self, k: i64) -> Dyadic {
        Dyadic { m: self.m.clone(), e: self.e + k }
    }

    pub fn cmp_value(&self, o: &Dyadic) -> Ordering {
        let (a, b, _) = Dyadic::align(self, o);
        a.cmp(&b)
    }

    /// Exponent of the leading bit, `floor(log2 |self|)`; `None` for zero.
    pub fn magnitude(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.m.bits() as i64 - 1 + self.e)
        }
    }

    /// Truncates toward zero to `bits` significant bits; returns the value and
    /// an upper bound on the discarded part.
    pub fn round(&self, bits: u64) -> (Dyadic, Dyadic) {
        let b = self.m.bits();
        if b <= bits {
            return (self.clone(), Dyadic::zero());
        }
        let drop = b - bits;
        let m = if self.m.is_negative() { -((-&self.m) >> drop as usize) } else { &self.m >> drop as usize };
        (Dyadic { m, e: self.e + drop as i64 }, Dyadic::pow2(self.e + drop as i64))
    }

    /// Upper bound of a nonnegative value with at most `RAD_BITS` bits.
    fn up(&self) -> Dyadic {
        let (r, err) = self.round(RAD_BITS);
        if err.is_zero() {
            r
        } else {
            r.add(&err)
        }
    }

    /// Lower bound of a nonnegative value with at most `RAD_BITS` bits.
    fn down(&self) -> Dyadic {
        self.round(RAD_BITS).0
    }

    /// `a / b` truncated, with about `bits` significant bits, plus error bound.
    pub fn div(a: &Dyadic, b: &Dyadic, bits: u64) -> (Dyadic, Dyadic) {
        assert!(!b.is_zero());
        let shift = (bits as i64 + b.m.bits() as i64 - a.m.bits() as i64 + 2).max(0);
        let q = (&a.m << shift as usize) / &b.m;
        let e = a.e - b.e - shift;
        (Dyadic { m: q, e }, Dyadic::pow2(e))
    }

    /// Upper bound of `a / b` for `a >= 0`, `b > 0`.
    fn div_up(a: &Dyadic, b: &Dyadic) -> Dyadic {
        let (q, err) = Dyadic::div(a, b, RAD_BITS);
        q.add(&err).up()
    }

    pub fn from_q(q: &Q, bits: u64) -> (Dyadic, Dyadic) {
        let n = Dyadic { m: q.numer().clone(), e: 0 };
        let d = Dyadic { m: q.denom().clone(), e: 0 };
        if q.denom().is_one() {
            return (n, Dyadic::zero());
        }
        Dyadic::div(&n, &d, bits)
    }

    pub fn to_q(&self) -> Q {
        if self.e >= 0 {
            Q::from_integer(&self.m << self.e as usize)
        } else {
            Q::new(self.m.clone(), BigInt::one() << (-self.e) as usize)
        }
    }

    pub fn to_f64(&self) -> f64 {
        let (r, _) = self.round(60);
        r.m.to_f64().unwrap_or(f64::NAN) * (2f64).powi(r.e.clamp(-2000, 2000) as i32)
    }

    /// Fixed-point integer `round(self * 2^w)`, truncated.
    fn to_fixed(&self, w: i64) -> BigInt {
        let s = self.e + w;
        if s >= 0 {
            &self.m << s as usize
        } else if self.m.is_negative() {
            -((-&self.m) >> (-s) as usize)
        } else {
            &self.m >> (-s) as usize
        }
    }
}

/// An exact rational or a rigorous ball.
#[derive(Clone, Debug)]
pub enum Real {
    Exact(Q),
    Ball { mid: Dyadic, rad: Dyadic },
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(q) => write!(f, "{q}"),
            Real::Ball { mid, rad } => write!(f, "{:e} +/- {:e}", mid.to_f64(), rad.to_f64()),
        }
    }
}

impl Real {
    pub fn exact(q: Q) -> Real {
        Real::Exact(q)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Real::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&Q> {
        match self {
            Real::Exact(q) => Some(q),
            Real::Ball { .. } => None,
        }
    }

    fn parts(&self, prec: u32) -> (Dyadic, Dyadic) {
        match self {
            Real::Exact(q) => Dyadic::from_q(q, (prec + GUARD) as u64),
            Real::Ball { mid, rad } => (mid.clone(), rad.clone()),
        }
    }

    fn ball(mid: Dyadic, rad: Dyadic, prec: u32) -> Real {
        let (m, err) = mid.round((prec + GUARD) as u64);
        Real::Ball { mid: m, rad: rad.add(&err).up() }
    }

    pub fn mid_f64(&self) -> f64 {
        match self {
            Real::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Real::Ball { mid, .. } => mid.to_f64(),
        }
    }

    pub fn rad(&self) -> Dyadic {
        match self {
            Real::Exact(_) => Dyadic::zero(),
            Real::Ball { rad, .. } => rad.clone(),
        }
    }

    pub fn contains_zero(&self) -> bool {
        match self {
            Real::Exact(q) => q.is_zero(),
            Real::Ball { mid, rad } => mid.abs().cmp_value(rad) != Ordering::Greater,
        }
    }

    /// Strictly positive on the whole enclosure.
    pub fn is_positive(&self) -> bool {
        match self {
            Real::Exact(q) => q.is_positive(),
            Real::Ball { mid, rad } => !mid.is_negative() && mid.cmp_value(rad) == Ordering::Greater,
        }
    }

    /// Full width `2 * rad` as an exact rational.
    pub fn width(&self) -> Q {
        self.rad().to_q() * Q::from_integer(2.into())
    }

    pub fn neg(&self) -> Real {
        match self {
            Real::Exact(q) => Real::Exact(-q),
            Real::Ball { mid, rad } => Real::Ball { mid: mid.neg(), rad: rad.clone() },
        }
    }

    pub fn add(&self, o: &Real, prec: u32) -> Real {
        if let (Real::Exact(a), Real::Exact(b)) = (self, o) {
            return Real::Exact(a + b);
        }
        let (am, ar) = self.parts(prec);
        let (bm, br) = o.parts(prec);
        Real::ball(am.add(&bm), ar.add(&br), prec)
    }

    pub fn sub(&self, o: &Real, prec: u32) -> Real {
        self.add(&o.neg(), prec)
    }

    pub fn mul(&self, o: &Real, prec: u32) -> Real {
        if let (Real::Exact(a), Real::Exact(b)) = (self, o) {
            return Real::Exact(a * b);
        }
        let (am, ar) = self.parts(prec);
        let (bm, br) = o.parts(prec);
        let rad = am.abs().up().mul(&br).add(&bm.abs().up().mul(&ar)).add(&ar.mul(&br));
        Real::ball(am.mul(&bm), rad, prec)
    }

    pub fn inv(&self, prec: u32) -> Result<Real, SymError> {
        if self.contains_zero() {
            return Err(SymError::Pole(format!("reciprocal of {self}")));
        }
        if let Real::Exact(q) = self {
            return Ok(Real::Exact(q.recip()));
        }
        let (m, r) = self.parts(prec);
        let (q, err) = Dyadic::div(&Dyadic::pow2(0), &m, (prec + GUARD) as u64);
        let am = m.abs();
        let lower = am.down().mul(&am.sub(&r).down());
        let rad = Dyadic::div_up(&r, &lower).add(&err);
        Ok(Real::ball(q, rad, prec))
    }

    pub fn powi(&self, k: i64, prec: u32) -> Result<Real, SymError> {
        let base = if k < 0 { self.inv(prec)? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Real::Exact(Q::one());
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b, prec);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b, prec);
            }
        }
        Ok(acc)
    }

    /// Applies an increasing function by evaluating it at both ends.
    fn monotone(
        &self,
        prec: u32,
        f: impl Fn(&Dyadic, u64) -> Result<(Dyadic, Dyadic), SymError>,
    ) -> Result<Real, SymError> {
        let w = (prec + GUARD) as u64;
        let (m, r) = self.parts(prec);
        if r.is_zero() {
            let (v, err) = f(&m, w)?;
            return Ok(Real::ball(v, err, prec));
        }
        let (lo, elo) = f(&m.sub(&r), w)?;
        let (hi, ehi) = f(&m.add(&r), w)?;
        let mid = lo.add(&hi).shl(-1);
        let half = hi.sub(&lo).abs().shl(-1).up();
        let err = if elo.cmp_value(&ehi) == Ordering::Greater { elo } else { ehi };
        Ok(Real::ball(mid, half.add(&err).add(&Dyadic::pow2(lo.e.min(hi.e) - 1)), prec))
    }

    pub fn exp(&self, prec: u32) -> Result<Real, SymError> {
        if let Real::Exact(q) = self {
            if q.is_zero() {
                return Ok(Real::Exact(Q::one()));
            }
        }
        self.monotone(prec, exp_mid)
    }

    pub fn ln(&self, prec: u32) -> Result<Real, SymError> {
        if !self.is_positive() {
            return Err(SymError::Domain(format!("ln of {self}")));
        }
        if let Real::Exact(q) = self {
            if q.is_one() {
                return Ok(Real::Exact(Q::zero()));
            }
        }
        self.monotone(prec, ln_mid)
    }

    fn trig(&self, prec: u32, cos: bool) -> Result<Real, SymError> {
        if let Real::Exact(q) = self {
            if q.is_zero() {
                return Ok(Real::Exact(if cos { Q::one() } else { Q::zero() }));
            }
        }
        let w = (prec + GUARD) as u64;
        let (m, r) = self.parts(prec);
        let (s, c, err) = sin_cos_mid(&m, w)?;
        let v = if cos { c } else { s };
        // both functions are 1-Lipschitz
        Ok(Real::ball(v, err.add(&r), prec))
    }

    pub fn sin(&self, prec: u32) -> Result<Real, SymError> {
        self.trig(prec, false)
    }

    pub fn cos(&self, prec: u32) -> Result<Real, SymError> {
        self.trig(prec, true)
    }

    /// Principal `self^r` for `self > 0`.
    pub fn pow_q(&self, r: &Q, prec: u32) -> Result<Real, SymError> {
        if r.is_integer() {
            return self.powi(r.to_integer().to_i64().unwrap_or(0), prec);
        }
        if !self.is_positive() {
            return Err(SymError::Domain(format!("fractional power of {self}")));
        }
        if let Real::Exact(q) = self {
            if let Some(k) = r.denom().to_u32() {
                let (n, d) = (q.numer().nth_root(k), q.denom().nth_root(k));
                if n.pow(k) == *q.numer() && d.pow(k) == *q.denom() {
                    return Real::Exact(Q::new(n, d)).powi(r.numer().to_i64().unwrap_or(0), prec);
                }
            }
        }
        self.ln(prec)?.mul(&Real::Exact(r.clone()), prec).exp(prec)
    }
}

fn fixed_one(w: i64) -> BigInt {
    BigInt::one() << w as usize
}

/// `exp(x)` at `w` bits; `(value, error)`.
fn exp_mid(x: &Dyadic, w: u64) -> Result<(Dyadic, Dyadic), SymError> {
    let Some(mag) = x.magnitude() else { return Ok((Dyadic::pow2(0), Dyadic::zero())) };
    if mag > 24 {
        return Err(SymError::Domain("exp argument out of range".into()));
    }
    let s = (mag + 12).max(0);
    let wf = w as i64 + s + 24;
    let t = x.shl(-s).to_fixed(wf);
    let one = fixed_one(wf);
    let mut sum = one.clone();
    let mut term = one.clone();
    let mut k = 1u64;
    loop {
        term = (&term * &t >> wf as usize) / BigInt::from(k);
        if term.is_zero() {
            break;
        }
        sum += &term;
        k += 1;
    }
    for _ in 0..s {
        sum = &sum * &sum >> wf as usize;
    }
    let value = Dyadic::new(sum, -wf);
    // (k + 3) ulps before squaring, relative error doubling at each squaring
    let mag_v = value.magnitude().unwrap_or(0).max(0) + 1;
    let err = Dyadic::new(BigInt::from(k + 3), mag_v + s + 1 - wf);
    Ok((value, err))
}

static LN2: Lazy<Mutex<HashMap<i64, BigInt>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// `atanh(z)` in fixed point for `0 <= z < 1/2`; returns `(value, ulps of error)`.
fn atanh_fixed(z: &BigInt, wf: i64) -> (BigInt, u64) {
    let z2 = z * z >> wf as usize;
    let mut p = z.clone();
    let mut sum = z.clone();
    let mut k = 1u64;
    loop {
        p = &p * &z2 >> wf as usize;
        if p.is_zero() {
            break;
        }
        sum += &p / BigInt::from(2 * k + 1);
        k += 1;
    }
    (sum, k + 2)
}

fn ln2_fixed(wf: i64) -> BigInt {
    if let Some(v) = LN2.lock().unwrap().get(&wf) {
        return v.clone();
    }
    let third = fixed_one(wf) / BigInt::from(3);
    let (a, _) = atanh_fixed(&third, wf);
    let v: BigInt = a << 1;
    LN2.lock().unwrap().insert(wf, v.clone());
    v
}

/// `ln(x)` for `x > 0` at `w` bits.
fn ln_mid(x: &Dyadic, w: u64) -> Result<(Dyadic, Dyadic), SymError> {
    if x.m.sign() != Sign::Plus {
        return Err(SymError::Domain("ln of a nonpositive number".into()));
    }
    let b = x.m.bits() as i64;
    let n = x.e + b - 1;
    let extra = 64 - (n.unsigned_abs() + 1).leading_zeros() as i64;
    let wf = w as i64 + 24 + extra;
    // y = m / 2^(b-1) in [1, 2)
    let y = Dyadic::new(x.m.clone(), -(b - 1)).to_fixed(wf);
    let one = fixed_one(wf);
    let z = ((&y - &one) << wf as usize) / (&y + &one);
    let (a, ulps) = atanh_fixed(&z, wf);
    let mut v = a << 1;
    v += ln2_fixed(wf) * BigInt::from(n);
    let err_ulps = 2 * ulps + 2 + 2 * (n.unsigned_abs() + 1) * 4;
    Ok((Dyadic::new(v, -wf), Dyadic::new(BigInt::from(err_ulps), -wf)))
}

/// `(sin x, cos x, error)` at `w` bits.
fn sin_cos_mid(x: &Dyadic, w: u64) -> Result<(Dyadic, Dyadic, Dyadic), SymError> {
    let Some(mag) = x.magnitude() else {
        return Ok((Dyadic::zero(), Dyadic::pow2(0), Dyadic::zero()));
    };
    if mag > 40 {
        return Err(SymError::Domain("trig argument out of range".into()));
    }
    let s = (mag + 8).max(0);
    let wf = w as i64 + 2 * s + 24;
    let t = x.shl(-s).to_fixed(wf);
    let t2 = &t * &t >> wf as usize;
    let one = fixed_one(wf);
    let mut sin = t.clone();
    let mut cos = one.clone();
    let mut term_s = t.clone();
    let mut term_c = one.clone();
    let mut k = 1u64;
    loop {
        term_s = -(&term_s * &t2 >> wf as usize) / BigInt::from((2 * k) * (2 * k + 1));
        term_c = -(&term_c * &t2 >> wf as usize) / BigInt::from((2 * k - 1) * (2 * k));
        if term_s.is_zero() && term_c.is_zero() {
            break;
        }
        sin += &term_s;
        cos += &term_c;
        k += 1;
    }
    for _ in 0..s {
        let s2 = (&sin * &cos >> wf as usize) << 1;
        let c2 = &one - ((&sin * &sin >> wf as usize) << 1);
        sin = s2;
        cos = c2;
    }
    let err = Dyadic::new(BigInt::from(k + 4), 2 * (s + 1) - wf);
    Ok((Dyadic::new(sin, -wf), Dyadic::new(cos, -wf), err))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    fn close(r: &Real, v: f64) {
        let m = r.mid_f64();
        assert!((m - v).abs() <= 1e-14 * v.abs().max(1.0), "{m} vs {v}");
        assert!(r.rad().to_f64() < 1e-60, "radius {}", r.rad().to_f64());
    }

    #[test]
    fn elementary_values() {
        let p = 256;
        close(&Real::exact(q(1, 1)).exp(p).unwrap(), std::f64::consts::E);
        close(&Real::exact(q(-7, 2)).exp(p).unwrap(), (-3.5f64).exp());
        close(&Real::exact(q(10, 1)).ln(p).unwrap(), 10f64.ln());
        close(&Real::exact(q(1, 7)).ln(p).unwrap(), (1.0f64 / 7.0).ln());
        close(&Real::exact(q(5, 2)).sin(p).unwrap(), 2.5f64.sin());
        close(&Real::exact(q(-5, 2)).cos(p).unwrap(), 2.5f64.cos());
        close(&Real::exact(q(2, 1)).pow_q(&q(1, 3), p).unwrap(), 2f64.cbrt());
    }

    #[test]
    fn pythagoras_encloses_zero() {
        let p = 256;
        let x = Real::exact(q(13, 10));
        let s = x.sin(p).unwrap();
        let c = x.cos(p).unwrap();
        let r = s.mul(&s, p).add(&c.mul(&c, p), p).sub(&Real::exact(q(1, 1)), p);
        assert!(r.contains_zero());
        assert!(r.width() < q(1, 1) / Q::from_integer(BigInt::from(10).pow(60)));
    }

    #[test]
    fn exp_ln_roundtrip_encloses_argument() {
        let p = 200;
        let x = Real::exact(q(3, 7));
        let r = x.exp(p).unwrap().ln(p).unwrap().sub(&x, p);
        assert!(r.contains_zero());
    }

    #[test]
    fn exact_stays_exact_and_poles_error() {
        let a = Real::exact(q(1, 2)).add(&Real::exact(q(1, 2)), 64);
        assert_eq!(a.as_exact(), Some(&q(1, 1)));
        assert!(Real::exact(q(0, 1)).inv(64).is_err());
        assert!(Real::exact(q(-1, 1)).ln(64).is_err());
        assert_eq!(Real::exact(q(4, 9)).pow_q(&q(1, 2), 64).unwrap().as_exact(), Some(&q(2, 3)));
    }
}
