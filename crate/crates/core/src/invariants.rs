//! Obstructions to linear first integrals of the geodesic flow and the
//! 0/1/2/3 classifier.
//!
//! A linear integral `K_a dX^a` solves `nabla_(a K_b) = 0`; equivalently
//! `(K_1, K_2, mu)` is parallel for the prolongation connection. Its curvature
//! yields the algebraic system `M Psi = 0` whose rows are `(F^1, F^2, beta)`
//! and `(M_a^1, M_a^2, N_a)`. Counting independent solutions uses the scalar
//! `I_N = det M` (up to the area form), the tensor `T_a^b` whose vanishing
//! kills all 2x2 minors, and the tensor `W_abc` that decides sufficiency of
//! `I_N = 0`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::symexpr::{Expr, RatFun, ZeroTestConfig, ZeroVerdict};
use crate::tensor::{
    all_zero, coord, covariant_derivative, curvature_tower, indices, Connection, CurvatureTower, Slot, TensorField,
};

fn third() -> RatFun {
    RatFun::ratio(1, 3)
}

fn half() -> RatFun {
    RatFun::ratio(1, 2)
}

fn delta(a: usize, b: usize) -> RatFun {
    if a == b {
        RatFun::one()
    } else {
        RatFun::zero()
    }
}

/// `sum_{b,c} eps^{bc} f(b, c)`, skipping the vanishing diagonal.
fn eps_contract(conn: &Connection, mut f: impl FnMut(usize, usize) -> RatFun) -> RatFun {
    let e = conn.eps_up(0, 1);
    f(0, 1).sub(&f(1, 0)).mul(&e)
}

fn sym2(t: &TensorField, pre: &[usize], c: usize, d: usize) -> RatFun {
    let mut i = pre.to_vec();
    i.extend([c, d]);
    let mut j = pre.to_vec();
    j.extend([d, c]);
    t.get(&i).add(t.get(&j)).mul(&half())
}

#[derive(Clone, Debug)]
pub struct ObstructionTower {
    pub curvature: CurvatureTower,
    /// `L_b = eps^{cd} nabla_c P_db`.
    pub cotton: TensorField,
    /// `F^a`.
    pub fvec: TensorField,
    /// `M_a^b`.
    pub m: TensorField,
    /// `N_a`.
    pub n: TensorField,
    /// `Y_cdb = nabla_[c P_d]b`.
    pub y: TensorField,
    /// Rows `(F^1, F^2, beta)`, `(M_1^1, M_1^2, N_1)`, `(M_2^1, M_2^2, N_2)`.
    pub mmatrix: [[RatFun; 3]; 3],
    pub i_n: RatFun,
    /// `T_a^b = N_a F^b - beta M_a^b`.
    pub t: TensorField,
    /// `W_acd`, computed on demand by [`ObstructionTower::compute_w`].
    pub w: Option<TensorField>,
    /// `L^a L^b nabla_a L_b`, present when beta has a zero verdict.
    pub nu5: Option<RatFun>,
    pub notes: Vec<String>,
    conn: Connection,
    nabla_p: TensorField,
    nabla_b: TensorField,
    nabla_nabla_b: TensorField,
    nabla_y: TensorField,
}

impl ObstructionTower {
    /// Everything except `W`.
    pub fn core(conn: &Connection, cfg: &ZeroTestConfig) -> Result<ObstructionTower> {
        let curvature = curvature_tower(conn, cfg)?;
        let p = &curvature.schouten;
        let b = &curvature.bform;
        let beta = curvature.beta.clone();
        let nabla_p = covariant_derivative(p, conn);
        let nabla_b = covariant_derivative(b, conn);

        let cotton = TensorField::from_fn(vec![Slot::Down], |i| eps_contract(conn, |c, d| nabla_p.get(&[c, d, i[0]]).clone()));
        // G_b = L_b - eps^{cd} nabla_b B_cd
        let g: Vec<RatFun> = (0..2)
            .map(|bb| cotton.get(&[bb]).sub(&eps_contract(conn, |c, d| nabla_b.get(&[bb, c, d]).clone())))
            .collect();
        let fvec = TensorField::from_fn(vec![Slot::Up], |i| {
            let mut v = RatFun::zero();
            for bb in 0..2 {
                v = v.add(&conn.eps_up(i[0], bb).mul(&g[bb]));
            }
            v.mul(&third())
        });
        let f_low: Vec<RatFun> = (0..2)
            .map(|a| {
                let mut v = RatFun::zero();
                for bb in 0..2 {
                    v = v.add(&conn.eps_down(bb, a).mul(fvec.get(&[bb])));
                }
                v
            })
            .collect();

        let y = TensorField::from_fn(vec![Slot::Down; 3], |i| {
            let (c, d, bb) = (i[0], i[1], i[2]);
            nabla_p.get(&[c, d, bb]).sub(nabla_p.get(&[d, c, bb])).mul(&half())
        });
        let nabla_y = covariant_derivative(&y, conn);
        let nabla_nabla_b = covariant_derivative(&nabla_b, conn);

        // P^b_a = eps^{bc} P_ca
        let p_up = |bb: usize, a: usize| {
            let mut v = RatFun::zero();
            for c in 0..2 {
                v = v.add(&conn.eps_up(bb, c).mul(p.get(&[c, a])));
            }
            v
        };
        let beta_sq_half = beta.mul(&beta).mul(&half());
        let m = TensorField::from_fn(vec![Slot::Down, Slot::Up], |i| {
            let (a, bb) = (i[0], i[1]);
            let mut s = RatFun::zero();
            for c in 0..2 {
                let ebc = conn.eps_up(bb, c);
                if ebc.is_zero() {
                    continue;
                }
                let inner = eps_contract(conn, |d, e| nabla_y.get(&[a, d, e, c]).sub(nabla_nabla_b.get(&[a, c, d, e])));
                s = s.add(&ebc.mul(&inner));
            }
            s.mul(&third()).add(&beta.mul(&p_up(bb, a))).add(&beta_sq_half.mul(&delta(a, bb)))
        });
        let n = TensorField::from_fn(vec![Slot::Down], |i| {
            let a = i[0];
            f_low[a].neg().add(&eps_contract(conn, |bb, c| nabla_b.get(&[a, bb, c]).clone()))
        });

        let mmatrix = [
            [fvec.get(&[0]).clone(), fvec.get(&[1]).clone(), beta.clone()],
            [m.get(&[0, 0]).clone(), m.get(&[0, 1]).clone(), n.get(&[0]).clone()],
            [m.get(&[1, 0]).clone(), m.get(&[1, 1]).clone(), n.get(&[1]).clone()],
        ];

        // I_N = eps_cd eps^{be} M_e^c (N_b F^d - beta M_b^d / 2)
        let mut i_n = RatFun::zero();
        for c in 0..2 {
            for d in 0..2 {
                let ecd = conn.eps_down(c, d);
                if ecd.is_zero() {
                    continue;
                }
                for bb in 0..2 {
                    for e in 0..2 {
                        let ebe = conn.eps_up(bb, e);
                        if ebe.is_zero() {
                            continue;
                        }
                        let inner = n.get(&[bb]).mul(fvec.get(&[d])).sub(&beta.mul(m.get(&[bb, d])).mul(&half()));
                        i_n = i_n.add(&ecd.mul(&ebe).mul(m.get(&[e, c])).mul(&inner));
                    }
                }
            }
        }

        let t = TensorField::from_fn(vec![Slot::Down, Slot::Up], |i| {
            n.get(&[i[0]]).mul(fvec.get(&[i[1]])).sub(&beta.mul(m.get(&[i[0], i[1]])))
        });

        let mut notes = Vec::new();
        let beta_verdict = all_zero(&[&beta], cfg)?;
        let nu5 = if beta_verdict.is_zero() {
            let l_up: Vec<RatFun> = (0..2)
                .map(|a| {
                    let mut v = RatFun::zero();
                    for bb in 0..2 {
                        v = v.add(&conn.eps_up(a, bb).mul(cotton.get(&[bb])));
                    }
                    v
                })
                .collect();
            let nabla_l = covariant_derivative(&cotton, conn);
            let mut v = RatFun::zero();
            for a in 0..2 {
                for bb in 0..2 {
                    v = v.add(&l_up[a].mul(&l_up[bb]).mul(nabla_l.get(&[a, bb])));
                }
            }
            Some(v)
        } else {
            notes.push(format!("nu5 absent: beta is {}", beta_verdict.label()));
            None
        };

        Ok(ObstructionTower {
            curvature,
            cotton,
            fvec,
            m,
            n,
            y,
            mmatrix,
            i_n,
            t,
            w: None,
            nu5,
            notes,
            conn: conn.clone(),
            nabla_p,
            nabla_b,
            nabla_nabla_b,
            nabla_y,
        })
    }

    /// The full tower, `W` included.
    pub fn full(conn: &Connection, cfg: &ZeroTestConfig) -> Result<ObstructionTower> {
        let mut t = ObstructionTower::core(conn, cfg)?;
        t.compute_w();
        Ok(t)
    }

    pub fn beta(&self) -> &RatFun {
        &self.curvature.beta
    }

    /// Every computed field as canonical strings, keyed by name and 1-based
    /// component index.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::{json, Map, Value};
        let tensor = |t: &TensorField| {
            Value::Object(t.labelled().into_iter().map(|(k, v)| (k, Value::String(v.canonical_string()))).collect())
        };
        let scalar = |r: &RatFun| Value::String(r.canonical_string());
        let c = &self.curvature;
        let mut m = Map::new();
        m.insert("riemann".into(), tensor(&c.riem));
        m.insert("ricci".into(), tensor(&c.ricci));
        m.insert("schouten".into(), tensor(&c.schouten));
        m.insert("b_form".into(), tensor(&c.bform));
        m.insert("beta".into(), scalar(&c.beta));
        m.insert("theta".into(), tensor(&c.theta));
        m.insert("decomposition".into(), serde_json::to_value(&c.decomposition).expect("verdict serializes"));
        m.insert("cotton".into(), tensor(&self.cotton));
        m.insert("f".into(), tensor(&self.fvec));
        m.insert("m".into(), tensor(&self.m));
        m.insert("n".into(), tensor(&self.n));
        m.insert("y".into(), tensor(&self.y));
        m.insert(
            "mmatrix".into(),
            json!(self.mmatrix.iter().map(|row| row.iter().map(|r| r.canonical_string()).collect::<Vec<_>>()).collect::<Vec<_>>()),
        );
        m.insert("i_n".into(), scalar(&self.i_n));
        m.insert("t".into(), tensor(&self.t));
        m.insert("w".into(), self.w.as_ref().map_or(Value::Null, tensor));
        m.insert("nu5".into(), self.nu5.as_ref().map_or(Value::Null, scalar));
        m.insert("notes".into(), json!(self.notes));
        Value::Object(m)
    }

    /// `W_acd`; fills the cache on first call.
    pub fn compute_w(&mut self) -> &TensorField {
        if self.w.is_none() {
            let w = self.build_w();
            self.w = Some(w);
        }
        self.w.as_ref().unwrap()
    }

    fn build_w(&self) -> TensorField {
        let conn = &self.conn;
        let p = &self.curvature.schouten;
        let b = &self.curvature.bform;
        let beta = &self.curvature.beta;
        let nabla_nabla_y = covariant_derivative(&self.nabla_y, conn);
        let nabla3_b = covariant_derivative(&self.nabla_nabla_b, conn);
        let nabla_nabla_p = covariant_derivative(&self.nabla_p, conn);

        // eps^{ef} nabla_c B_ef
        let div_b: Vec<RatFun> =
            (0..2).map(|c| eps_contract(conn, |e, f| self.nabla_b.get(&[c, e, f]).clone())).collect();
        let eps_b = eps_contract(conn, |e, f| b.get(&[e, f]).clone());

        // U^b_ca
        let u = TensorField::from_fn(vec![Slot::Up, Slot::Down, Slot::Down], |i| {
            let (bb, c, a) = (i[0], i[1], i[2]);
            let mut s = RatFun::zero();
            for d in 0..2 {
                let ebd = conn.eps_up(bb, d);
                if ebd.is_zero() {
                    continue;
                }
                let inner = eps_contract(conn, |e, f| {
                    nabla_nabla_y
                        .get(&[c, a, e, f, d])
                        .sub(nabla3_b.get(&[c, a, d, e, f]))
                        .mul(&third())
                        .add(&self.nabla_b.get(&[c, e, f]).mul(p.get(&[d, a])))
                        .add(&b.get(&[e, f]).mul(self.nabla_p.get(&[c, d, a])))
                });
                let tail = self.n.get(&[a]).mul(&p.get(&[d, c]).add(&beta.mul(&conn.eps_down(c, d)).mul(&half())));
                s = s.add(&ebd.mul(&inner.add(&tail)));
            }
            // (1/2) eps^{ef} eps^{gh} nabla_c (B_ef B_gh) delta^b_a
            let quad = div_b[c].mul(&eps_b);
            s.add(&quad.mul(&delta(bb, a)))
        });

        let m_low = |a: usize, c: usize| {
            let mut v = RatFun::zero();
            for d in 0..2 {
                v = v.add(&conn.eps_down(d, c).mul(self.m.get(&[a, d])));
            }
            v
        };
        // V_ca = -M_ac + nabla_c N_a, with N_a = -F_a + eps^{de} nabla_a B_de expanded
        let v = TensorField::from_fn(vec![Slot::Down, Slot::Down], |i| {
            let (c, a) = (i[0], i[1]);
            let inner =
                eps_contract(conn, |d, e| nabla_nabla_p.get(&[c, d, e, a]).sub(self.nabla_nabla_b.get(&[c, a, d, e])));
            let div_b = eps_contract(conn, |d, e| self.nabla_nabla_b.get(&[c, a, d, e]).clone());
            m_low(a, c).neg().sub(&inner.mul(&third())).add(&div_b)
        });

        let f_low: Vec<RatFun> = (0..2)
            .map(|bb| {
                let mut s = RatFun::zero();
                for c in 0..2 {
                    s = s.add(&conn.eps_down(c, bb).mul(self.fvec.get(&[c])));
                }
                s
            })
            .collect();

        TensorField::from_fn(vec![Slot::Down; 3], |i| {
            let (a, c, d) = (i[0], i[1], i[2]);
            let vcd = sym2(&v, &[], c, d);
            let mut s = RatFun::zero();
            for bb in 0..2 {
                let ucd = sym2(&u, &[bb], c, d);
                s = s.add(&f_low[bb].mul(self.m.get(&[a, bb])).mul(&vcd));
                s = s.sub(&f_low[bb].mul(&ucd).mul(self.n.get(&[a])));
                s = s.add(&beta.mul(&m_low(a, bb)).mul(&ucd));
            }
            s
        })
    }
}

/// Alias matching the operation name; computes every field including `W`.
pub fn obstruction_tower(conn: &Connection, cfg: &ZeroTestConfig) -> Result<ObstructionTower> {
    ObstructionTower::full(conn, cfg)
}

pub fn cotton(conn: &Connection, cfg: &ZeroTestConfig) -> Result<TensorField> {
    Ok(ObstructionTower::core(conn, cfg)?.cotton)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Certainty {
    Proven,
    Probabilistic,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub count: u8,
    pub certainty: Certainty,
    pub branch: String,
    pub diagnostics: BTreeMap<String, ZeroVerdict>,
    pub indeterminate: Vec<String>,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    pub fn to_json(&self) -> serde_json::Value {
        // serde_json maps are sorted, so the output has canonical key order
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn verdict(&self, key: &str) -> Option<&ZeroVerdict> {
        self.diagnostics.get(key)
    }
}

fn label_mmatrix(i: usize, j: usize) -> String {
    format!("mmatrix_{}{}", i + 1, j + 1)
}

struct Recorder<'a> {
    cfg: &'a ZeroTestConfig,
    diagnostics: BTreeMap<String, ZeroVerdict>,
}

impl Recorder<'_> {
    fn test(&mut self, key: String, r: &RatFun) -> Result<ZeroVerdict> {
        let v = all_zero(&[r], self.cfg)?;
        self.diagnostics.insert(key, v.clone());
        Ok(v)
    }

    /// Tests every entry, stopping at the first nonzero one.
    fn all(&mut self, items: Vec<(String, &RatFun)>) -> Result<bool> {
        let mut zero = true;
        for (k, r) in items {
            let v = self.test(k, r)?;
            if !v.is_zero() {
                zero = false;
                if v.is_nonzero() {
                    break;
                }
            }
        }
        Ok(zero)
    }
}

/// Decides the number of independent linear first integrals.
pub fn classify(conn: &Connection, cfg: &ZeroTestConfig) -> Result<ClassificationReport> {
    let mut tower = ObstructionTower::core(conn, cfg)?;
    let mut rec = Recorder { cfg, diagnostics: BTreeMap::new() };
    let mut notes = tower.notes.clone();

    let beta_v = rec.test("beta".into(), tower.beta())?;
    let cotton_items: Vec<(String, &RatFun)> =
        tower.cotton.labelled().into_iter().map(|(k, r)| (format!("cotton_{k}"), r)).collect();
    let cotton_zero = rec.all(cotton_items)?;

    let m_items: Vec<(String, &RatFun)> = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (label_mmatrix(i, j), &tower.mmatrix[i][j]))
        .collect();
    let m_zero = rec.all(m_items)?;
    let flat_special = cotton_zero && beta_v.is_zero();
    if m_zero != flat_special {
        notes.push(format!(
            "disagreement: mmatrix vanishing is {m_zero}, while Cotton and beta vanishing is {flat_special}"
        ));
    }

    let (count, branch) = if m_zero {
        (3, "mmatrix vanishes".to_string())
    } else {
        let t_items: Vec<(String, &RatFun)> =
            tower.t.labelled().into_iter().map(|(k, r)| (format!("T_{k}"), r)).collect();
        let t_zero = if beta_v.is_nonzero() { rec.all(t_items)? } else { false };
        if beta_v.is_nonzero() && t_zero {
            (2, "T vanishes and beta is nonzero".to_string())
        } else {
            let i_n = tower.i_n.clone();
            let in_v = rec.test("I_N".into(), &i_n)?;
            if in_v.is_zero() {
                let w = tower.compute_w().clone();
                let w_items: Vec<(String, &RatFun)> = [[0, 0, 0], [0, 0, 1], [0, 1, 1], [1, 0, 0], [1, 0, 1], [1, 1, 1]]
                    .iter()
                    .map(|i| (format!("W_{}{}{}", i[0] + 1, i[1] + 1, i[2] + 1), w.get(i)))
                    .collect();
                if rec.all(w_items)? {
                    (1, "I_N and W vanish".to_string())
                } else {
                    (0, "W does not vanish".to_string())
                }
            } else {
                (0, "I_N does not vanish".to_string())
            }
        }
    };

    let indeterminate: Vec<String> =
        rec.diagnostics.iter().filter(|(_, v)| v.is_indeterminate()).map(|(k, _)| k.clone()).collect();
    let certainty = if rec.diagnostics.values().all(ZeroVerdict::is_proven) {
        Certainty::Proven
    } else {
        Certainty::Probabilistic
    };
    if !indeterminate.is_empty() {
        notes.push(format!("indeterminate verdicts treated as not established zero: {}", indeterminate.join(", ")));
    }
    Ok(ClassificationReport { count, certainty, branch, diagnostics: rec.diagnostics, indeterminate, notes })
}

/// The two-integral normal form with parameter `c` in {0, 1}.
pub fn normal_form(c: u8, p: &Expr, q: &Expr) -> Result<Connection> {
    if c > 1 {
        return Err(Error::Precondition("normal form parameter must be 0 or 1".into()));
    }
    let (p, q) = (p.to_ratfun()?, q.to_ratfun()?);
    if q.is_zero() {
        return Err(Error::Precondition("Q vanishes identically".into()));
    }
    let cc = RatFun::int(c as i64);
    let x = coord(0);
    let y = coord(1);
    let g112 = cc.mul(&half());
    let g211 = p.diff(x).div(&q)?;
    let g212 = p.diff(y).add(&q.diff(x)).sub(&cc.mul(&p)).div(&q.scale(&crate::symexpr::q(2, 1)))?;
    let g222 = q.diff(y).div(&q)?;
    Connection::new([RatFun::zero(), g112, RatFun::zero(), g211, g212, g222], RatFun::one())
}

/// The integrals planted in [`normal_form`]: `e^{cY} dX` and `P dX + Q dY`.
pub fn normal_form_integrals(c: u8, p: &Expr, q: &Expr) -> Result<[TensorField; 2]> {
    let k1 = if c == 0 { RatFun::one() } else { Expr::y().exp().to_ratfun()? };
    Ok([
        TensorField::one_form(k1, RatFun::zero()),
        TensorField::one_form(p.to_ratfun()?, q.to_ratfun()?),
    ])
}

/// Components of `nabla_(a K_b)`: (11, 12, 22).
pub fn killing_residual(conn: &Connection, k: &TensorField) -> Result<[RatFun; 3]> {
    if k.slots() != [Slot::Down] {
        return Err(Error::Slot(0));
    }
    let d = covariant_derivative(k, conn);
    Ok([d.get(&[0, 0]).clone(), sym2(&d, &[], 0, 1), d.get(&[1, 1]).clone()])
}

pub fn killing_verify(conn: &Connection, k: &TensorField, cfg: &ZeroTestConfig) -> Result<ZeroVerdict> {
    let r = killing_residual(conn, k)?;
    all_zero(&r.iter().collect::<Vec<_>>(), cfg)
}

/// `(A_0, A_1, A_2, A_3)` of `Y'' = A_3 Y'^3 + A_2 Y'^2 + A_1 Y' + A_0`.
pub fn geodesic_ode_coefficients(conn: &Connection) -> [RatFun; 4] {
    let g = |a, b, c| conn.gamma(a, b, c).clone();
    [
        g(1, 0, 0).neg(),
        g(0, 0, 0).sub(&g(1, 0, 1).scale(&crate::symexpr::q(2, 1))),
        g(0, 0, 1).scale(&crate::symexpr::q(2, 1)).sub(&g(1, 1, 1)),
        g(0, 1, 1),
    ]
}

/// Coefficient matrices `C_a` of the prolongation system `d_a Psi = C_a Psi`
/// for `Psi = (K_1, K_2, mu)`.
#[cfg(test)]
pub(crate) fn prolongation_matrices(conn: &Connection, tower: &CurvatureTower) -> [[[RatFun; 3]; 3]; 2] {
    let p = &tower.schouten;
    let beta = &tower.beta;
    let mut out: [[[RatFun; 3]; 3]; 2] = Default::default();
    for a in 0..2 {
        let c = &mut out[a];
        for b in 0..2 {
            for e in 0..2 {
                c[b][e] = conn.gamma(e, a, b).clone();
            }
            c[b][2] = conn.eps_down(a, b);
        }
        for b in 0..2 {
            let mut v = RatFun::zero();
            for e in 0..2 {
                v = v.add(&conn.eps_up(b, e).mul(p.get(&[e, a])));
            }
            if a == b {
                v = v.add(&beta.mul(&half()));
            }
            c[2][b] = v;
        }
        c[2][2] = tower.theta.get(&[a]).neg();
    }
    out
}

/// `d_a R + R C_a` for a row `R` annihilating parallel sections.
#[cfg(test)]
pub(crate) fn dual_derivative(row: &[RatFun; 3], c: &[[RatFun; 3]; 3], a: usize) -> [RatFun; 3] {
    std::array::from_fn(|j| {
        let mut v = row[j].diff(coord(a));
        for (i, r) in row.iter().enumerate() {
            if !r.is_zero() && !c[i][j].is_zero() {
                v = v.add(&r.mul(&c[i][j]));
            }
        }
        v
    })
}

/// `det(V, D_a V, D_(b D_c) V)` straight from the prolongation system.
#[cfg(test)]
pub(crate) fn mechanical_w(conn: &Connection, tower: &ObstructionTower) -> TensorField {
    let cm = prolongation_matrices(conn, &tower.curvature);
    let v = tower.mmatrix[0].clone();
    let dv: Vec<[RatFun; 3]> = (0..2).map(|a| dual_derivative(&v, &cm[a], a)).collect();
    let ddv = |b: usize, c: usize| -> [RatFun; 3] {
        let mut r = dual_derivative(&dv[c], &cm[b], b);
        for e in 0..2 {
            let g = conn.gamma(e, b, c);
            for j in 0..3 {
                r[j] = r[j].sub(&g.mul(&dv[e][j]));
            }
        }
        r
    };
    let sym: Vec<Vec<[RatFun; 3]>> = (0..2)
        .map(|b| {
            (0..2)
                .map(|c| {
                    let (x, y) = (ddv(b, c), ddv(c, b));
                    std::array::from_fn(|j| x[j].add(&y[j]).mul(&half()))
                })
                .collect()
        })
        .collect();
    TensorField::from_fn(vec![Slot::Down; 3], |i| det3(&[v.clone(), dv[i[0]].clone(), sym[i[1]][i[2]].clone()]))
}

/// Determinant of a 3x3 matrix of rational functions.
pub fn det3(m: &[[RatFun; 3]; 3]) -> RatFun {
    let minor = |r1: usize, r2: usize, c1: usize, c2: usize| m[r1][c1].mul(&m[r2][c2]).sub(&m[r1][c2].mul(&m[r2][c1]));
    m[0][0]
        .mul(&minor(1, 2, 1, 2))
        .sub(&m[0][1].mul(&minor(1, 2, 0, 2)))
        .add(&m[0][2].mul(&minor(1, 2, 0, 1)))
}

/// All components of a tensor, keyed by 1-based labels, as canonical strings.
pub fn canonical_components(t: &TensorField) -> BTreeMap<String, String> {
    t.labelled().into_iter().map(|(k, r)| (k, r.canonical_string())).collect()
}

/// Convenience for tests and reports: every index tuple of a rank.
pub fn index_tuples(rank: usize) -> Vec<Vec<usize>> {
    indices(rank).collect()
}
