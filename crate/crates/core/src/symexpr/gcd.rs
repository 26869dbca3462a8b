//! Multivariate gcd over the rationals by recursive primitive remainder
//! sequences, plus square-free decomposition.
//!
//! Inputs reaching these routines are small (kernel arguments, user-supplied
//! denominators, final canonical forms), so no modular acceleration is used.

use num_traits::One;

use super::poly::{Mono, Poly};
use super::symbol::Sym;
use super::Q;

/// Monic gcd (internal order). `gcd(0, 0) = 0`.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    let syms: Vec<Sym> = a.symbols().union(&b.symbols()).copied().collect();
    let v = syms[0];
    let (da, db) = (a.degree_in(v), b.degree_in(v));
    if da == 0 {
        return gcd(a, &content_in(b, v));
    }
    if db == 0 {
        return gcd(&content_in(a, v), b);
    }
    let (ca, cb) = (content_in(a, v), content_in(b, v));
    let g_content = gcd(&ca, &cb);
    let mut p = a.div_exact(&ca).expect("content divides");
    let mut q = b.div_exact(&cb).expect("content divides");
    if p.degree_in(v) < q.degree_in(v) {
        std::mem::swap(&mut p, &mut q);
    }
    loop {
        let r = prem(&p, &q, v);
        if r.is_zero() {
            break;
        }
        if r.degree_in(v) == 0 {
            q = Poly::one();
            break;
        }
        p = q;
        q = primitive_in(&r, v);
    }
    let g = if q.degree_in(v) == 0 { Poly::one() } else { primitive_in(&q, v) };
    g.mul(&g_content).monic()
}

/// Gcd of the coefficients of `p` seen as a polynomial in `v`.
pub fn content_in(p: &Poly, v: Sym) -> Poly {
    let mut g = Poly::zero();
    for c in p.coeffs_in(v) {
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, &c);
        if g.is_constant() {
            return Poly::one();
        }
    }
    if g.is_zero() {
        Poly::one()
    } else {
        g
    }
}

pub fn primitive_in(p: &Poly, v: Sym) -> Poly {
    let c = content_in(p, v);
    let pp = p.div_exact(&c).expect("content divides");
    // strip the rational content too
    let k = pp.content();
    pp.scale(&k.recip())
}

/// Pseudo-remainder of `a` by `b` in the variable `v`.
fn prem(a: &Poly, b: &Poly, v: Sym) -> Poly {
    let db = b.degree_in(v);
    let bc = b.coeffs_in(v);
    let lc_b = bc[db as usize].clone();
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(v) >= db {
        let dr = r.degree_in(v);
        let lc_r = r.coeffs_in(v)[dr as usize].clone();
        let shift = Poly::term(Mono::var(v, dr - db), Q::one());
        r = r.mul(&lc_b).sub(&lc_r.mul(&shift).mul(b));
    }
    r
}

/// Square-free decomposition `p = c * prod s_i^{m_i}` with monic, pairwise
/// coprime, square-free `s_i`. Constant factors are dropped.
pub fn squarefree(p: &Poly) -> Vec<(Poly, u32)> {
    if p.is_constant() {
        return Vec::new();
    }
    let mut g = p.clone();
    for s in p.symbols() {
        g = gcd(&g, &p.partial(s));
        if g.is_constant() {
            break;
        }
    }
    let mut b = p.div_exact(&g).expect("gcd divides").monic();
    let mut g = g.monic();
    let mut out = Vec::new();
    let mut i = 1;
    while !b.is_constant() {
        let d = gcd(&b, &g);
        let f = b.div_exact(&d).expect("gcd divides").monic();
        if !f.is_constant() {
            out.push((f, i));
        }
        g = g.div_exact(&d).expect("gcd divides");
        b = d;
        i += 1;
    }
    out
}

#[cfg(test)]
fn is_one(p: &Poly) -> bool {
    p.constant_value().is_some_and(|c| c.is_one())
}
