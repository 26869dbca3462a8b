//! Sparse multivariate polynomials over the rationals.
//!
//! Terms are kept sorted in descending graded-lex order, where a symbol with a
//! smaller id is the more significant variable. Because `X` and `Y` are
//! interned first this agrees with the display order on the chart variables.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

use super::symbol::Sym;
use super::Q;

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Mono(pub(crate) SmallVec<[(Sym, u32); 4]>);

impl Mono {
    pub fn one() -> Mono {
        Mono(SmallVec::new())
    }

    pub fn var(s: Sym, e: u32) -> Mono {
        if e == 0 {
            Mono::one()
        } else {
            Mono(smallvec::smallvec![(s, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exp(&self, s: Sym) -> u32 {
        self.0.iter().find(|(v, _)| *v == s).map_or(0, |&(_, e)| e)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Sym, u32)> + '_ {
        self.0.iter().copied()
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        let (a, b) = (&self.0, &o.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Mono(out)
    }

    /// `self / o` when `o` divides `self`.
    pub fn div(&self, o: &Mono) -> Option<Mono> {
        let mut out: SmallVec<[(Sym, u32); 4]> = SmallVec::new();
        let mut j = 0;
        for &(s, e) in self.0.iter() {
            if j < o.0.len() && o.0[j].0 < s {
                return None;
            }
            if j < o.0.len() && o.0[j].0 == s {
                let f = o.0[j].1;
                j += 1;
                match e.cmp(&f) {
                    Ordering::Less => return None,
                    Ordering::Equal => {}
                    Ordering::Greater => out.push((s, e - f)),
                }
            } else {
                out.push((s, e));
            }
        }
        if j < o.0.len() {
            return None;
        }
        Some(Mono(out))
    }

    /// Removes `s`, returning its exponent.
    pub fn split_off(&self, s: Sym) -> (u32, Mono) {
        let mut e = 0;
        let rest = self
            .0
            .iter()
            .filter(|(v, x)| {
                if *v == s {
                    e = *x;
                    false
                } else {
                    true
                }
            })
            .copied()
            .collect();
        (e, Mono(rest))
    }

    /// Internal graded-lex order.
    pub fn cmp_grlex(&self, o: &Mono) -> Ordering {
        self.degree().cmp(&o.degree()).then_with(|| lex(&self.0, &o.0, |a, b| a.cmp(&b)))
    }

    /// Graded-lex order with variables ranked by [`Sym::display_cmp`].
    pub fn cmp_display(&self, o: &Mono) -> Ordering {
        self.degree().cmp(&o.degree()).then_with(|| {
            let mut a: Vec<_> = self.0.to_vec();
            let mut b: Vec<_> = o.0.to_vec();
            a.sort_by(|x, y| Sym::display_cmp(x.0, y.0));
            b.sort_by(|x, y| Sym::display_cmp(x.0, y.0));
            lex(&a, &b, Sym::display_cmp)
        })
    }
}

fn lex(a: &[(Sym, u32)], b: &[(Sym, u32)], order: impl Fn(Sym, Sym) -> Ordering) -> Ordering {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(_), None) => return Ordering::Greater,
            (None, Some(_)) => return Ordering::Less,
            (Some(&(sa, ea)), Some(&(sb, eb))) => match order(sa, sb) {
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
                Ordering::Equal => {
                    if ea != eb {
                        return ea.cmp(&eb);
                    }
                    i += 1;
                    j += 1;
                }
            },
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    pub(crate) terms: Vec<(Mono, Q)>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_display_string())
    }
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }

    pub fn constant(c: Q) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(Mono::one(), c)] }
        }
    }

    pub fn var(s: Sym) -> Poly {
        Poly { terms: vec![(Mono::var(s, 1), Q::one())] }
    }

    pub fn term(m: Mono, c: Q) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    fn from_map(map: HashMap<Mono, Q>) -> Poly {
        let mut terms: Vec<_> = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_by(|a, b| b.0.cmp_grlex(&a.0));
        Poly { terms }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Mono, Q)>) -> Poly {
        let mut map: HashMap<Mono, Q> = HashMap::new();
        for (m, c) in terms {
            *map.entry(m).or_insert_with(Q::zero) += c;
        }
        Poly::from_map(map)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn constant_value(&self) -> Option<Q> {
        match self.terms.as_slice() {
            [] => Some(Q::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[(Mono, Q)] {
        &self.terms
    }

    pub fn leading(&self) -> Option<&(Mono, Q)> {
        self.terms.first()
    }

    pub fn symbols(&self) -> BTreeSet<Sym> {
        self.terms.iter().flat_map(|(m, _)| m.iter().map(|(s, _)| s)).collect()
    }

    pub fn degree_in(&self, s: Sym) -> u32 {
        self.terms.iter().map(|(m, _)| m.exp(s)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    /// Merge of two sorted term lists, `self + k * m * o`.
    fn add_scaled(&self, o: &Poly, k: &Q, m: &Mono) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + o.terms.len());
        let mut rhs = o.terms.iter().map(|(mm, c)| (mm.mul(m), c * k)).peekable();
        let mut lhs = self.terms.iter().peekable();
        loop {
            let ord = match (lhs.peek(), rhs.peek()) {
                (None, None) => break,
                (Some(_), None) => Ordering::Greater,
                (None, Some(_)) => Ordering::Less,
                (Some(a), Some(b)) => a.0.cmp_grlex(&b.0),
            };
            match ord {
                Ordering::Greater => out.push(lhs.next().unwrap().clone()),
                Ordering::Less => out.push(rhs.next().unwrap()),
                Ordering::Equal => {
                    let (ma, ca) = lhs.next().unwrap();
                    let (_, cb) = rhs.next().unwrap();
                    let c = ca + cb;
                    if !c.is_zero() {
                        out.push((ma.clone(), c));
                    }
                }
            }
        }
        Poly { terms: out }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        self.add_scaled(o, &Q::one(), &Mono::one())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add_scaled(o, &-Q::one(), &Mono::one())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = o.constant_value() {
            return self.scale(&c);
        }
        if let Some(c) = self.constant_value() {
            return o.scale(&c);
        }
        let (small, big) = if self.len() <= o.len() { (self, o) } else { (o, self) };
        if small.len() == 1 {
            let (m, c) = &small.terms[0];
            return Poly { terms: big.terms.iter().map(|(mm, cc)| (mm.mul(m), cc * c)).collect() };
        }
        let mut map: HashMap<Mono, Q> = HashMap::with_capacity(self.len() * o.len());
        for (ma, ca) in &small.terms {
            for (mb, cb) in &big.terms {
                let c = ca * cb;
                match map.entry(ma.mul(mb)) {
                    std::collections::hash_map::Entry::Occupied(mut e) => *e.get_mut() += c,
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(c);
                    }
                }
            }
        }
        Poly::from_map(map)
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Formal partial derivative with respect to the symbol `s`, treating every
    /// other symbol (kernels included) as independent.
    pub fn partial(&self, s: Sym) -> Poly {
        let terms = self.terms.iter().filter_map(|(m, c)| {
            let (e, rest) = m.split_off(s);
            if e == 0 {
                return None;
            }
            let m2 = rest.mul(&Mono::var(s, e - 1));
            Some((m2, c * Q::from_integer(BigInt::from(e))))
        });
        Poly::from_terms(terms)
    }

    /// Exact quotient, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        assert!(!d.is_zero(), "division by the zero polynomial");
        if let Some(c) = d.constant_value() {
            return Some(self.scale(&c.recip()));
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        for s in d.symbols() {
            if d.degree_in(s) > self.degree_in(s) {
                return None;
            }
        }
        let (lm, lc) = d.terms[0].clone();
        let lc_inv = lc.recip();
        let mut r = self.clone();
        let mut q = Vec::new();
        while let Some((mr, cr)) = r.terms.first() {
            let m = mr.div(&lm)?;
            let c = cr * &lc_inv;
            r = r.add_scaled(d, &-c.clone(), &m);
            q.push((m, c));
        }
        Some(Poly { terms: q })
    }

    /// Coefficients with respect to `s`: `self = sum_i out[i] * s^i`.
    pub fn coeffs_in(&self, s: Sym) -> Vec<Poly> {
        let deg = self.degree_in(s) as usize;
        let mut parts: Vec<Vec<(Mono, Q)>> = vec![Vec::new(); deg + 1];
        for (m, c) in &self.terms {
            let (e, rest) = m.split_off(s);
            parts[e as usize].push((rest, c.clone()));
        }
        parts.into_iter().map(Poly::from_terms).collect()
    }

    pub fn from_coeffs_in(s: Sym, coeffs: &[Poly]) -> Poly {
        let mut acc = Poly::zero();
        for (i, c) in coeffs.iter().enumerate() {
            acc = acc.add_scaled(c, &Q::one(), &Mono::var(s, i as u32));
        }
        acc
    }

    /// Divides by the internal leading coefficient.
    pub fn monic(&self) -> Poly {
        match self.terms.first() {
            None => Poly::zero(),
            Some((_, c)) => self.scale(&c.recip()),
        }
    }

    /// Leading term under the display order.
    pub fn display_leading(&self) -> Option<&(Mono, Q)> {
        self.terms.iter().max_by(|a, b| a.0.cmp_display(&b.0))
    }

    pub fn display_terms(&self) -> Vec<(Mono, Q)> {
        let mut t = self.terms.clone();
        t.sort_by(|a, b| b.0.cmp_display(&a.0));
        t
    }

    /// Evaluates with a caller-supplied ring.
    pub fn eval_with<T: Clone>(
        &self,
        value: &mut impl FnMut(Sym) -> T,
        from_q: impl Fn(&Q) -> T,
        add: impl Fn(&T, &T) -> T,
        mul: impl Fn(&T, &T) -> T,
        zero: T,
        one: T,
    ) -> T {
        let mut powers: HashMap<(Sym, u32), T> = HashMap::new();
        let mut acc = zero;
        for (m, c) in &self.terms {
            let mut t = from_q(c);
            for (s, e) in m.iter() {
                let p = match powers.get(&(s, e)) {
                    Some(p) => p.clone(),
                    None => {
                        let base = value(s);
                        let mut p = one.clone();
                        for _ in 0..e {
                            p = mul(&p, &base);
                        }
                        powers.insert((s, e), p.clone());
                        p
                    }
                };
                t = mul(&t, &p);
            }
            acc = add(&acc, &t);
        }
        acc
    }

    pub fn eval_q(&self, value: &impl Fn(Sym) -> Q) -> Q {
        let mut v = |s| value(s);
        self.eval_with(&mut v, |c| c.clone(), |a, b| a + b, |a, b| a * b, Q::zero(), Q::one())
    }

    /// Least common denominator of the coefficients and gcd of the resulting
    /// integer numerators.
    pub fn content(&self) -> Q {
        let mut den = BigInt::one();
        for (_, c) in &self.terms {
            den = den.lcm(c.denom());
        }
        let mut g = BigInt::zero();
        for (_, c) in &self.terms {
            let n = c.numer() * (&den / c.denom());
            g = g.gcd(&n);
        }
        if g.is_zero() {
            Q::zero()
        } else {
            Q::new(g, den)
        }
    }

    pub fn to_display_string(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.display_terms().iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mono = mono_string(m);
            if mono.is_empty() {
                out.push_str(&q_string(&a));
            } else if a.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&q_string(&a));
                out.push('*');
                out.push_str(&mono);
            }
        }
        out
    }
}

pub(crate) fn q_string(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("({}/{})", q.numer(), q.denom())
    }
}

fn mono_string(m: &Mono) -> String {
    let mut vars: Vec<_> = m.iter().collect();
    vars.sort_by(|a, b| Sym::display_cmp(a.0, b.0));
    vars.iter()
        .map(|&(s, e)| {
            let info = s.info();
            let name = info.key.clone();
            if e == 1 {
                name
            } else {
                format!("{name}^{e}")
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::symbol::{X, Y};

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    #[test]
    fn product_and_exact_division() {
        let a = Poly::var(X).sub(&Poly::var(Y));
        let b = Poly::var(X).add(&Poly::var(Y));
        let p = a.mul(&b);
        assert_eq!(p.to_display_string(), "X^2 - Y^2");
        assert_eq!(p.div_exact(&a), Some(b.clone()));
        assert_eq!(p.div_exact(&Poly::var(X)), None);
        assert_eq!(p.coeffs_in(X).len(), 3);
        assert_eq!(Poly::from_coeffs_in(X, &p.coeffs_in(X)), p);
    }

    #[test]
    fn partial_and_content() {
        let p = Poly::var(X).pow(3).scale(&q(6)).add(&Poly::var(Y).scale(&q(4)));
        assert_eq!(p.partial(X).to_display_string(), "18*X^2");
        assert_eq!(p.content(), q(2));
    }

    #[test]
    fn grlex_with_x_before_y() {
        let p = Poly::var(Y).pow(2).add(&Poly::var(X).mul(&Poly::var(Y))).add(&Poly::var(X));
        assert_eq!(p.to_display_string(), "X*Y + Y^2 + X");
    }
}
