//! Tensor fields on a 2D chart, covariant differentiation and the curvature
//! tower `R -> Ricci -> Schouten -> B, beta, theta`.
//!
//! Indices are 0-based internally: index 0 is the coordinate `X` (written 1
//! in formulas), index 1 is `Y`. Index raising and lowering use
//! `V^a = eps^{ab} V_b` and `V_a = eps_{ba} V^b` with `eps^{12} = 1/eps_{12}`,
//! so that `eps^{ab} eps_{cb} = delta^a_c`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::symexpr::{is_zero_ratfun, Expr, RatFun, Sym, ZeroTestConfig, ZeroVerdict, X, Y};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Slot {
    Up,
    Down,
}

/// All index tuples of the given rank, slot 0 most significant.
pub fn indices(rank: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..1usize << rank).map(move |n| (0..rank).map(|i| (n >> (rank - 1 - i)) & 1).collect())
}

pub(crate) fn coord(i: usize) -> Sym {
    if i == 0 {
        X
    } else {
        Y
    }
}

#[derive(Clone, Debug)]
pub struct TensorField {
    slots: Vec<Slot>,
    comps: Vec<RatFun>,
}

impl TensorField {
    pub fn new(slots: Vec<Slot>, comps: Vec<RatFun>) -> TensorField {
        assert_eq!(comps.len(), 1 << slots.len(), "a rank-r field has 2^r components");
        TensorField { slots, comps }
    }

    pub fn from_fn(slots: Vec<Slot>, mut f: impl FnMut(&[usize]) -> RatFun) -> TensorField {
        let comps = indices(slots.len()).map(|i| f(&i)).collect();
        TensorField { slots, comps }
    }

    pub fn zeros(slots: Vec<Slot>) -> TensorField {
        TensorField::from_fn(slots, |_| RatFun::zero())
    }

    pub fn scalar(r: RatFun) -> TensorField {
        TensorField { slots: Vec::new(), comps: vec![r] }
    }

    pub fn one_form(k1: RatFun, k2: RatFun) -> TensorField {
        TensorField { slots: vec![Slot::Down], comps: vec![k1, k2] }
    }

    pub fn vector(v1: RatFun, v2: RatFun) -> TensorField {
        TensorField { slots: vec![Slot::Up], comps: vec![v1, v2] }
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn comps(&self) -> &[RatFun] {
        &self.comps
    }

    fn offset(idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| (acc << 1) | i)
    }

    pub fn get(&self, idx: &[usize]) -> &RatFun {
        debug_assert_eq!(idx.len(), self.rank());
        &self.comps[TensorField::offset(idx)]
    }

    pub fn is_identically_zero(&self) -> bool {
        self.comps.iter().all(RatFun::is_zero)
    }

    pub fn sub(&self, o: &TensorField) -> TensorField {
        assert_eq!(self.slots, o.slots);
        TensorField {
            slots: self.slots.clone(),
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    /// Components keyed by 1-based index strings such as `"12"`.
    pub fn labelled(&self) -> Vec<(String, &RatFun)> {
        indices(self.rank())
            .map(|i| {
                let key: String = i.iter().map(|d| char::from(b'1' + *d as u8)).collect();
                (key, self.get(&i))
            })
            .collect()
    }

    pub fn component_exprs(&self) -> Vec<(String, Expr)> {
        self.labelled().into_iter().map(|(k, r)| (k, Expr::from_ratfun(r))).collect()
    }
}

/// Symmetric Christoffel symbols and an area form component `eps_{12}`.
#[derive(Clone, Debug)]
pub struct Connection {
    /// Order: G111 G112 G122 G211 G212 G222 (upper index first).
    g: [RatFun; 6],
    eps12: RatFun,
}

fn pair(b: usize, c: usize) -> usize {
    b + c
}

pub const GAMMA_KEYS: [&str; 6] = ["G111", "G112", "G122", "G211", "G212", "G222"];

impl Connection {
    pub fn new(g: [RatFun; 6], eps12: RatFun) -> Result<Connection> {
        if eps12.is_zero() {
            return Err(Error::Precondition("eps12 vanishes identically".into()));
        }
        Ok(Connection { g, eps12 })
    }

    pub fn from_exprs(g: &[Expr; 6], eps12: &Expr) -> Result<Connection> {
        let mut out: [RatFun; 6] = Default::default();
        for (o, e) in out.iter_mut().zip(g) {
            *o = e.to_ratfun()?;
        }
        Connection::new(out, eps12.to_ratfun()?)
    }

    /// Builds from a closure giving `Gamma^a_{bc}` (0-based) for `b <= c`.
    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> RatFun) -> Connection {
        let g = [f(0, 0, 0), f(0, 0, 1), f(0, 1, 1), f(1, 0, 0), f(1, 0, 1), f(1, 1, 1)];
        Connection { g, eps12: RatFun::one() }
    }

    pub fn flat() -> Connection {
        Connection::from_fn(|_, _, _| RatFun::zero())
    }

    pub fn with_eps12(&self, eps12: RatFun) -> Result<Connection> {
        Connection::new(self.g.clone(), eps12)
    }

    /// `Gamma^a_{bc}`, 0-based.
    pub fn gamma(&self, a: usize, b: usize, c: usize) -> &RatFun {
        &self.g[3 * a + pair(b, c)]
    }

    pub fn components(&self) -> &[RatFun; 6] {
        &self.g
    }

    pub fn eps12(&self) -> &RatFun {
        &self.eps12
    }

    /// `eps_{ab}`.
    pub fn eps_down(&self, a: usize, b: usize) -> RatFun {
        match (a, b) {
            (0, 1) => self.eps12.clone(),
            (1, 0) => self.eps12.neg(),
            _ => RatFun::zero(),
        }
    }

    /// `eps^{ab}`, the inverse in the sense `eps^{ab} eps_{cb} = delta^a_c`.
    pub fn eps_up(&self, a: usize, b: usize) -> RatFun {
        let inv = self.eps12.inv().expect("eps12 is nonzero");
        match (a, b) {
            (0, 1) => inv,
            (1, 0) => inv.neg(),
            _ => RatFun::zero(),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        self.g.iter().all(|r| r.is_polynomial() && r.kernels().is_empty())
    }
}

/// `nabla t`, with the new lower slot in front.
pub fn covariant_derivative(t: &TensorField, conn: &Connection) -> TensorField {
    let mut slots = vec![Slot::Down];
    slots.extend_from_slice(t.slots());
    TensorField::from_fn(slots, |idx| {
        let a = idx[0];
        let rest = &idx[1..];
        let mut v = t.get(rest).diff(coord(a));
        let mut j = rest.to_vec();
        for (s, kind) in t.slots().iter().enumerate() {
            let orig = rest[s];
            for e in 0..2 {
                j[s] = e;
                let comp = t.get(&j);
                if comp.is_zero() {
                    continue;
                }
                match kind {
                    Slot::Up => {
                        let g = conn.gamma(orig, a, e);
                        if !g.is_zero() {
                            v = v.add(&g.mul(comp));
                        }
                    }
                    Slot::Down => {
                        let g = conn.gamma(e, a, orig);
                        if !g.is_zero() {
                            v = v.sub(&g.mul(comp));
                        }
                    }
                }
            }
            j[s] = orig;
        }
        v
    })
}

pub fn raise_index(t: &TensorField, slot: usize, conn: &Connection) -> Result<TensorField> {
    if slot >= t.rank() || t.slots()[slot] != Slot::Down {
        return Err(Error::Slot(slot));
    }
    let mut slots = t.slots().to_vec();
    slots[slot] = Slot::Up;
    Ok(TensorField::from_fn(slots, |idx| {
        let mut j = idx.to_vec();
        let mut v = RatFun::zero();
        for b in 0..2 {
            j[slot] = b;
            let e = conn.eps_up(idx[slot], b);
            if !e.is_zero() {
                v = v.add(&e.mul(t.get(&j)));
            }
        }
        v
    }))
}

pub fn lower_index(t: &TensorField, slot: usize, conn: &Connection) -> Result<TensorField> {
    if slot >= t.rank() || t.slots()[slot] != Slot::Up {
        return Err(Error::Slot(slot));
    }
    let mut slots = t.slots().to_vec();
    slots[slot] = Slot::Down;
    Ok(TensorField::from_fn(slots, |idx| {
        let mut j = idx.to_vec();
        let mut v = RatFun::zero();
        for b in 0..2 {
            j[slot] = b;
            let e = conn.eps_down(b, idx[slot]);
            if !e.is_zero() {
                v = v.add(&e.mul(t.get(&j)));
            }
        }
        v
    }))
}

/// Combined verdict for "every component vanishes": the first
/// `ProvenNonzero` if any, else `Indeterminate` if any, else the weakest zero.
pub fn all_zero(comps: &[&RatFun], cfg: &ZeroTestConfig) -> Result<ZeroVerdict> {
    let mut weakest = ZeroVerdict::ProvenZero { canonical: "0".into() };
    let mut indeterminate = None;
    for r in comps {
        if r.is_zero() {
            continue;
        }
        let v = is_zero_ratfun(r, cfg)?;
        match &v {
            ZeroVerdict::ProvenNonzero { .. } => return Ok(v),
            ZeroVerdict::Indeterminate { .. } => indeterminate = Some(v),
            ZeroVerdict::ProbablyZero { samples, .. } => {
                let replace = match &weakest {
                    ZeroVerdict::ProbablyZero { samples: s, .. } => samples < s,
                    _ => true,
                };
                if replace {
                    weakest = v;
                }
            }
            ZeroVerdict::ProvenZero { .. } => {}
        }
    }
    Ok(indeterminate.unwrap_or(weakest))
}

#[derive(Clone, Debug)]
pub struct CurvatureTower {
    /// `R_ab^c_d`, slots (Down, Down, Up, Down).
    pub riem: TensorField,
    pub ricci: TensorField,
    pub schouten: TensorField,
    pub bform: TensorField,
    pub beta: RatFun,
    pub theta: TensorField,
    /// Verdict on the decomposition residual of the curvature.
    pub decomposition: ZeroVerdict,
}

pub fn riemann(conn: &Connection) -> TensorField {
    TensorField::from_fn(vec![Slot::Down, Slot::Down, Slot::Up, Slot::Down], |i| {
        let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
        if a == b {
            return RatFun::zero();
        }
        let mut v = conn.gamma(c, b, d).diff(coord(a)).sub(&conn.gamma(c, a, d).diff(coord(b)));
        for e in 0..2 {
            v = v.add(&conn.gamma(c, a, e).mul(conn.gamma(e, b, d)));
            v = v.sub(&conn.gamma(c, b, e).mul(conn.gamma(e, a, d)));
        }
        v
    })
}

/// `R_ab = R_ca^c_b`.
fn ricci_from(riem: &TensorField) -> TensorField {
    TensorField::from_fn(vec![Slot::Down, Slot::Down], |i| {
        let (a, b) = (i[0], i[1]);
        riem.get(&[0, a, 0, b]).add(riem.get(&[1, a, 1, b]))
    })
}

pub fn ricci_of(conn: &Connection) -> TensorField {
    ricci_from(&riemann(conn))
}

pub fn curvature_tower(conn: &Connection, cfg: &ZeroTestConfig) -> Result<CurvatureTower> {
    let riem = riemann(conn);
    let d2 = vec![Slot::Down, Slot::Down];
    let ricci = ricci_from(&riem);
    let two_thirds = RatFun::ratio(2, 3);
    let third = RatFun::ratio(1, 3);
    let schouten = TensorField::from_fn(d2.clone(), |i| {
        ricci.get(&[i[0], i[1]]).mul(&two_thirds).add(&ricci.get(&[i[1], i[0]]).mul(&third))
    });
    let bform = TensorField::from_fn(d2.clone(), |i| schouten.get(&[i[1], i[0]]).sub(schouten.get(&[i[0], i[1]])));
    let mut beta = RatFun::zero();
    for a in 0..2 {
        for b in 0..2 {
            beta = beta.add(&bform.get(&[a, b]).mul(&conn.eps_up(a, b)));
        }
    }
    let eps = TensorField::from_fn(d2.clone(), |i| conn.eps_down(i[0], i[1]));
    let deps = covariant_derivative(&eps, conn);
    let theta = TensorField::from_fn(vec![Slot::Down], |i| {
        let mut v = RatFun::zero();
        for b in 0..2 {
            for c in 0..2 {
                v = v.add(&conn.eps_up(b, c).mul(deps.get(&[i[0], b, c])));
            }
        }
        v.mul(&RatFun::ratio(1, 2))
    });

    let delta = |a: usize, b: usize| if a == b { RatFun::one() } else { RatFun::zero() };
    let residual: Vec<RatFun> = indices(4)
        .map(|i| {
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            let model = delta(a, c)
                .mul(schouten.get(&[b, d]))
                .sub(&delta(b, c).mul(schouten.get(&[a, d])))
                .add(&bform.get(&[a, b]).mul(&delta(d, c)));
            riem.get(&i).sub(&model)
        })
        .collect();
    let decomposition = all_zero(&residual.iter().collect::<Vec<_>>(), cfg)?;
    if decomposition.is_nonzero() {
        return Err(Error::InvariantViolation("curvature decomposition residual is nonzero".into()));
    }
    Ok(CurvatureTower { riem, ricci, schouten, bform, beta, theta, decomposition })
}

/// Levi-Civita connection of a metric `g_ab`.
pub fn levi_civita(g: [[RatFun; 2]; 2]) -> Result<Connection> {
    let det = g[0][0].mul(&g[1][1]).sub(&g[0][1].mul(&g[1][0]));
    let inv_det = det.inv().map_err(|_| Error::Precondition("degenerate metric".into()))?;
    let ginv = [
        [g[1][1].mul(&inv_det), g[0][1].neg().mul(&inv_det)],
        [g[1][0].neg().mul(&inv_det), g[0][0].mul(&inv_det)],
    ];
    let half = RatFun::ratio(1, 2);
    Ok(Connection::from_fn(|a, b, c| {
        let mut v = RatFun::zero();
        for d in 0..2 {
            if ginv[a][d].is_zero() {
                continue;
            }
            let t = g[d][c].diff(coord(b)).add(&g[d][b].diff(coord(c))).sub(&g[b][c].diff(coord(d)));
            v = v.add(&ginv[a][d].mul(&t));
        }
        v.mul(&half)
    }))
}

/// Gaussian curvature of a metric: half its scalar curvature.
pub fn gaussian_curvature(g: [[RatFun; 2]; 2]) -> Result<RatFun> {
    let conn = levi_civita(g.clone())?;
    let riem = riemann(&conn);
    let det = g[0][0].mul(&g[1][1]).sub(&g[0][1].mul(&g[1][0]));
    let inv_det = det.inv().map_err(|_| Error::Precondition("degenerate metric".into()))?;
    let ginv = [
        [g[1][1].mul(&inv_det), g[0][1].neg().mul(&inv_det)],
        [g[1][0].neg().mul(&inv_det), g[0][0].mul(&inv_det)],
    ];
    let mut s = RatFun::zero();
    for b in 0..2 {
        for d in 0..2 {
            if ginv[b][d].is_zero() {
                continue;
            }
            let ric = riem.get(&[0, b, 0, d]).add(riem.get(&[1, b, 1, d]));
            s = s.add(&ginv[b][d].mul(&ric));
        }
    }
    Ok(s.mul(&RatFun::ratio(1, 2)))
}
