//! Two-component hydrodynamic-type systems in Riemann invariants
//! `X^a_t = lambda^a(X) X^a_x` and their associated affine connection, whose
//! linear first integrals count hydrodynamic Hamiltonian structures.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariants::{classify, killing_verify, ClassificationReport};
use crate::symexpr::{q, Expr, RatFun, ZeroTestConfig, ZeroVerdict, Q, X, Y};
use crate::tensor::{all_zero, gaussian_curvature, levi_civita, ricci_of, Connection, Slot, TensorField};

#[derive(Clone, Debug)]
pub struct HydroSystem {
    pub lambda1: Expr,
    pub lambda2: Expr,
}

impl HydroSystem {
    pub fn new(lambda1: Expr, lambda2: Expr) -> HydroSystem {
        HydroSystem { lambda1, lambda2 }
    }

    /// `lambda^1 = -lambda^2 = lambda`.
    pub fn antisymmetric(lambda: Expr) -> HydroSystem {
        HydroSystem { lambda2: -lambda.clone(), lambda1: lambda }
    }
}

#[derive(Clone, Debug)]
pub struct HydroConnectionBundle {
    pub a: RatFun,
    pub b: RatFun,
    pub conn: Connection,
    /// `h = AB dX (.) dY`, stored as `h_12 = h_21 = AB / 2`.
    pub h: [[RatFun; 2]; 2],
    pub upsilon: TensorField,
}

#[derive(Clone, Debug)]
pub struct FlatMetricCandidate {
    pub f: RatFun,
    pub k: RatFun,
    /// `g = k^{-1} dX^2 + f^{-1} dY^2`.
    pub g: [[RatFun; 2]; 2],
}

fn require_nonzero(r: &RatFun, what: &str, cfg: &ZeroTestConfig) -> Result<ZeroVerdict> {
    let v = all_zero(&[r], cfg)?;
    if v.is_zero() {
        return Err(Error::LinearlyDegenerate(what.into()));
    }
    Ok(v)
}

pub fn from_lambdas(sys: &HydroSystem, cfg: &ZeroTestConfig) -> Result<HydroConnectionBundle> {
    let l1 = sys.lambda1.to_ratfun()?;
    let l2 = sys.lambda2.to_ratfun()?;
    let diff = l1.sub(&l2);
    if all_zero(&[&diff], cfg)?.is_zero() {
        return Err(Error::NotStrictlyHyperbolic);
    }
    let a = l1.diff(Y).div(&l2.sub(&l1))?;
    let b = l2.diff(X).div(&l1.sub(&l2))?;
    require_nonzero(&a, "A", cfg)?;
    require_nonzero(&b, "B", cfg)?;
    from_ab_ratfun(a, b)
}

pub fn from_ab(a: &Expr, b: &Expr, cfg: &ZeroTestConfig) -> Result<HydroConnectionBundle> {
    let (a, b) = (a.to_ratfun()?, b.to_ratfun()?);
    require_nonzero(&a, "A", cfg)?;
    require_nonzero(&b, "B", cfg)?;
    from_ab_ratfun(a, b)
}

fn from_ab_ratfun(a: RatFun, b: RatFun) -> Result<HydroConnectionBundle> {
    let two = q(2, 1);
    let half = RatFun::ratio(1, 2);
    let dlna = |v| a.diff(v).div(&a);
    let dlnb = |v| b.diff(v).div(&b);
    let g111 = dlna(X)?.sub(&b.scale(&two));
    let g222 = dlnb(Y)?.sub(&a.scale(&two));
    let g112 = dlna(Y)?.mul(&half).add(&a).neg();
    let g212 = dlnb(X)?.mul(&half).add(&b).neg();
    let conn = Connection::new([g111, g112, RatFun::zero(), RatFun::zero(), g212, g222], RatFun::one())?;
    let ab = a.mul(&b);
    let h = [[RatFun::zero(), ab.mul(&half)], [ab.mul(&half), RatFun::zero()]];
    let upsilon = TensorField::one_form(dlnb(X)?.mul(&half).add(&b), dlna(Y)?.mul(&half).add(&a));
    Ok(HydroConnectionBundle { a, b, conn, h, upsilon })
}

pub fn hamiltonian_count(sys: &HydroSystem, cfg: &ZeroTestConfig) -> Result<ClassificationReport> {
    classify(&from_lambdas(sys, cfg)?.conn, cfg)
}

/// Recovers `(f, k)` from a Killing form via `K_1 = A f`, `K_2 = B k` and
/// checks both flat-metric equations.
pub fn killing_to_flat_metric(
    bundle: &HydroConnectionBundle,
    k: &TensorField,
    cfg: &ZeroTestConfig,
) -> Result<FlatMetricCandidate> {
    if k.slots() != [Slot::Down] {
        return Err(Error::Slot(0));
    }
    let kv = killing_verify(&bundle.conn, k, cfg)?;
    if !kv.is_zero() {
        return Err(Error::Precondition(format!("not a Killing form: {}", kv.label())));
    }
    let f = k.get(&[0]).div(&bundle.a)?;
    let kk = k.get(&[1]).div(&bundle.b)?;
    for (r, name) in [(&f, "K_1 / A"), (&kk, "K_2 / B")] {
        if all_zero(&[r], cfg)?.is_zero() {
            return Err(Error::Precondition(format!("{name} vanishes")));
        }
    }
    let (a, b) = (&bundle.a, &bundle.b);
    let two = q(2, 1);
    let half = RatFun::ratio(1, 2);
    let eq1a = kk.diff(Y).add(&a.mul(&kk).scale(&two));
    let eq1b = f.diff(X).add(&b.mul(&f).scale(&two));
    if !all_zero(&[&eq1a, &eq1b], cfg)?.is_zero() {
        return Err(Error::InvariantViolation("first flat-metric equation fails".into()));
    }
    let eq2 = a
        .diff(Y)
        .add(&a.mul(a))
        .mul(&f)
        .add(&b.diff(X).add(&b.mul(b)).mul(&kk))
        .add(&a.mul(&f.diff(Y)).mul(&half))
        .add(&b.mul(&kk.diff(X)).mul(&half));
    if !all_zero(&[&eq2], cfg)?.is_zero() {
        return Err(Error::InvariantViolation("second flat-metric equation fails".into()));
    }
    let g = [[kk.inv()?, RatFun::zero()], [RatFun::zero(), f.inv()?]];
    Ok(FlatMetricCandidate { f, k: kk, g })
}

/// Zero test of the Gaussian curvature of a candidate metric.
pub fn flat_metric_curvature(c: &FlatMetricCandidate, cfg: &ZeroTestConfig) -> Result<ZeroVerdict> {
    let kappa = gaussian_curvature(c.g.clone())?;
    all_zero(&[&kappa], cfg)
}

#[derive(Clone, Debug, Serialize)]
pub struct LiouvilleResult {
    /// Verdict on both partial derivatives of `(AB)^{-1} d_1 d_2 ln(AB)`.
    pub verdict: ZeroVerdict,
    pub constant: bool,
    /// The constant, when the quotient normalizes to a rational number.
    pub kappa: Option<String>,
    pub quotient: String,
}

pub fn liouville_check(bundle: &HydroConnectionBundle, cfg: &ZeroTestConfig) -> Result<LiouvilleResult> {
    let ab = bundle.a.mul(&bundle.b);
    if all_zero(&[&ab], cfg)?.is_zero() {
        return Err(Error::Precondition("AB vanishes".into()));
    }
    let quotient = ab.diff(Y).div(&ab)?.diff(X).div(&ab)?;
    let (dx, dy) = (quotient.diff(X), quotient.diff(Y));
    let verdict = all_zero(&[&dx, &dy], cfg)?;
    let constant = verdict.is_zero();
    let kappa = if constant { quotient.constant_value().map(|v| v.to_string()) } else { None };
    Ok(LiouvilleResult { verdict, constant, kappa, quotient: quotient.canonical_string() })
}

#[derive(Clone, Debug)]
pub struct Metrisability {
    pub upsilon: TensorField,
    pub d_upsilon: RatFun,
    /// `(R_12 - R_21) - 3 (d Upsilon)_12` with `R_ab = R_ca^c_b`.
    pub skew_residual: ZeroVerdict,
    /// Levi-Civita connection of `h` minus the projectively shifted connection.
    pub shift_residual: ZeroVerdict,
    pub h: [[RatFun; 2]; 2],
}

pub fn upsilon_and_metrisability(bundle: &HydroConnectionBundle, cfg: &ZeroTestConfig) -> Result<Metrisability> {
    let u = &bundle.upsilon;
    let d_upsilon = u.get(&[1]).diff(X).sub(&u.get(&[0]).diff(Y));
    let ric = ricci_of(&bundle.conn);
    let skew = ric.get(&[0, 1]).sub(ric.get(&[1, 0])).sub(&d_upsilon.scale(&q(3, 1)));
    let skew_residual = all_zero(&[&skew], cfg)?;
    if skew_residual.is_nonzero() {
        return Err(Error::InvariantViolation("skew Ricci differs from 3 d(Upsilon)".into()));
    }
    let lc = levi_civita(bundle.h.clone())?;
    let delta = |a: usize, b: usize| if a == b { RatFun::one() } else { RatFun::zero() };
    let mut diffs = Vec::new();
    for a in 0..2 {
        for (b, c) in [(0, 0), (0, 1), (1, 1)] {
            let shifted = bundle
                .conn
                .gamma(a, b, c)
                .add(&delta(a, b).mul(u.get(&[c])))
                .add(&delta(a, c).mul(u.get(&[b])));
            diffs.push(lc.gamma(a, b, c).sub(&shifted));
        }
    }
    let shift_residual = all_zero(&diffs.iter().collect::<Vec<_>>(), cfg)?;
    if shift_residual.is_nonzero() {
        return Err(Error::InvariantViolation("Levi-Civita connection of h is not the shifted connection".into()));
    }
    Ok(Metrisability { upsilon: u.clone(), d_upsilon, skew_residual, shift_residual, h: bundle.h.clone() })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum FrobeniusCase {
    /// `f = v^k`.
    Power(i64),
    V2LnV,
    LnV,
    Exp2V,
}

impl FrobeniusCase {
    pub fn label(&self) -> String {
        match self {
            FrobeniusCase::Power(k) => format!("v^{k}"),
            FrobeniusCase::V2LnV => "v^2 ln v".into(),
            FrobeniusCase::LnV => "ln v".into(),
            FrobeniusCase::Exp2V => "exp(2v)".into(),
        }
    }
}

/// `lambda^1 = -lambda^2 = sqrt(f'''(v))` rewritten in `X - Y = 2 int sqrt(f''') dv`.
///
/// Closed forms, with `s = X - Y`:
/// `exp(2v)`: `v = ln(s / 4)`, `lambda = s / 2`.
/// `v^2 ln v`: `v = s^2 / 32`, `lambda = 8 / s`.
/// `ln v`: `v = 32 / s^2` on `s < 0`, `lambda = -s^3 / 128`.
/// `v^k`: with `c = k(k-1)(k-2)`, `v = ((k-1) s / (4 sqrt c))^(2/(k-1))` and
/// `lambda = sqrt(c) ((k-1) s / (4 sqrt c))^((k-3)/(k-1))`. When `c < 0` the
/// speeds are imaginary; the real multiple with `|c|` is used, which leaves
/// `A`, `B` and the connection unchanged.
pub fn frobenius_corpus(case: FrobeniusCase) -> Result<HydroSystem> {
    let s = Expr::x() - Expr::y();
    let lambda = match case {
        FrobeniusCase::Exp2V => s * Expr::ratio(1, 2),
        FrobeniusCase::V2LnV => Expr::int(8) / s,
        FrobeniusCase::LnV => -(s.powi(3) / Expr::int(128)),
        FrobeniusCase::Power(k) => {
            if k == 0 || k == 2 {
                return Err(Error::Precondition(format!("exponent k = {k} is not admissible")));
            }
            if k == 1 {
                return Err(Error::NotStrictlyHyperbolic);
            }
            let c = (k * (k - 1) * (k - 2)).abs();
            let root = Expr::int(c).sqrt();
            let base = Expr::int(k - 1) * s / (Expr::int(4) * root.clone());
            root * base.pow(Expr::ratio(k - 3, k - 1))
        }
    };
    Ok(HydroSystem::antisymmetric(lambda))
}

/// The Killing form whose flat metric is `g(c1, c2, c3)` for the `exp(2v)`
/// potential: `K = -(1/4) [(c1 + c2 Y + c3 Y^2) dX + (c1 + c2 X + c3 X^2) dY]`.
pub fn frobenius_exp_integral(c: [Q; 3]) -> TensorField {
    let poly = |v: RatFun| {
        RatFun::constant(c[0].clone()).add(&v.scale(&c[1])).add(&v.mul(&v).scale(&c[2])).scale(&q(-1, 4))
    };
    TensorField::one_form(poly(RatFun::from_sym(Y)), poly(RatFun::from_sym(X)))
}

/// The metric `g(c1, c2, c3) = lambda^{-1} (dX^2 / p(X) - dY^2 / p(Y))` with
/// `p(t) = c1 + c2 t + c3 t^2`.
pub fn frobenius_metric(lambda: &Expr, c: [Q; 3]) -> Result<[[RatFun; 2]; 2]> {
    let l = lambda.to_ratfun()?;
    let p = |v: RatFun| RatFun::constant(c[0].clone()).add(&v.scale(&c[1])).add(&v.mul(&v).scale(&c[2]));
    let g11 = l.mul(&p(RatFun::from_sym(X))).inv()?;
    let g22 = l.mul(&p(RatFun::from_sym(Y))).inv()?.neg();
    Ok([[g11, RatFun::zero()], [RatFun::zero(), g22]])
}

/// True when the two metrics agree up to a nonzero constant factor.
pub fn proportional_metrics(g: &[[RatFun; 2]; 2], h: &[[RatFun; 2]; 2], cfg: &ZeroTestConfig) -> Result<bool> {
    let ratio = g[0][0].div(&h[0][0])?;
    if ratio.is_zero() {
        return Ok(false);
    }
    let mut checks = vec![ratio.diff(X), ratio.diff(Y)];
    for (a, b) in [(0, 1), (1, 0), (1, 1)] {
        checks.push(g[a][b].sub(&h[a][b].mul(&ratio)));
    }
    Ok(all_zero(&checks.iter().collect::<Vec<_>>(), cfg)?.is_zero())
}

/// The Zoll representative connection built from the ODE coefficients
/// `A_1 = F'/(F-1) - 2 cot X`,
/// `A_2 = (H' sin X cos X - 2H) / (cos X (F-1))`,
/// `A_3 = -(H^2+1) sin X cos X / (F-1)^2`.
pub fn zoll_corpus(f: &Expr, h: &Expr) -> Result<Connection> {
    let (a1, a2, a3) = zoll_coefficients(f, h)?;
    Connection::new(
        [a1, a2.mul(&RatFun::ratio(1, 2)), a3, RatFun::zero(), RatFun::zero(), RatFun::zero()],
        RatFun::one(),
    )
}

pub fn zoll_coefficients(f: &Expr, h: &Expr) -> Result<(RatFun, RatFun, RatFun)> {
    let x = Expr::x();
    let fm1 = f.clone() - Expr::int(1);
    let (sin, cos) = (x.sin(), x.cos());
    let df = f.differentiate("X")?;
    let dh = h.differentiate("X")?;
    let a1 = df / fm1.clone() - Expr::int(2) * x.cot();
    let a2 = (dh * sin.clone() * cos.clone() - Expr::int(2) * h.clone()) / (cos.clone() * fm1.clone());
    let a3 = -((h.powi(2) + Expr::int(1)) * sin * cos / fm1.powi(2));
    let (a1, a2, a3) = (a1.to_ratfun()?, a2.to_ratfun()?, a3.to_ratfun()?);
    Ok((a1, a2, a3))
}

/// `F = 1 + c (H^2 + 1) cot X`.
pub fn zoll_two_integral_f(c: Q, h: &Expr) -> Expr {
    Expr::int(1) + Expr::num(c) * (h.powi(2) + Expr::int(1)) * Expr::x().cot()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::geodesic_ode_coefficients;
    use crate::symexpr::{parse, SampleBox};

    fn cfg() -> ZeroTestConfig {
        ZeroTestConfig::default()
    }

    fn e(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn same(a: &RatFun, b: &str) -> bool {
        a.sub(&e(b).to_ratfun().unwrap()).is_zero()
    }

    #[test]
    fn ab_from_lambdas() {
        let b = from_lambdas(&HydroSystem::antisymmetric(e("X-Y")), &cfg()).unwrap();
        assert!(same(&b.a, "1/(2*(X-Y))"));
        assert!(same(&b.b, "-1/(2*(X-Y))"));
        let c = from_ab(&e("1/(2*(X-Y))"), &e("-1/(2*(X-Y))"), &cfg()).unwrap();
        for (g, h) in b.conn.components().iter().zip(c.conn.components()) {
            assert!(g.sub(h).is_zero());
        }
        assert!(b.conn.gamma(0, 1, 1).is_zero() && b.conn.gamma(1, 0, 0).is_zero());
    }

    #[test]
    fn rejected_systems() {
        let r = from_lambdas(&HydroSystem::new(e("X"), e("X")), &cfg());
        assert!(matches!(r, Err(Error::NotStrictlyHyperbolic)));
        let r = from_lambdas(&HydroSystem::new(e("X"), e("X+Y")), &cfg());
        assert!(matches!(r, Err(Error::LinearlyDegenerate(_))));
    }

    #[test]
    fn example2_beta_zero_and_closed_upsilon() {
        let b = from_ab(&e("-1/2"), &e("1/2"), &cfg()).unwrap();
        let t = crate::tensor::curvature_tower(&b.conn, &cfg()).unwrap();
        assert!(t.beta.is_zero());
        let m = upsilon_and_metrisability(&b, &cfg()).unwrap();
        assert!(m.d_upsilon.is_zero());
    }

    #[test]
    fn upsilon_cases() {
        let b = from_ab(&e("1"), &e("1"), &cfg()).unwrap();
        let m = upsilon_and_metrisability(&b, &cfg()).unwrap();
        assert!(same(m.upsilon.get(&[0]), "1") && same(m.upsilon.get(&[1]), "1"));
        let b = from_ab(&e("3*X+Y"), &e("X+3*Y"), &cfg()).unwrap();
        let m = upsilon_and_metrisability(&b, &cfg()).unwrap();
        assert!(!m.d_upsilon.is_zero());
        assert!(m.skew_residual.is_zero() && m.shift_residual.is_zero());
    }

    #[test]
    fn liouville_cases() {
        let b = from_ab(&e("1/(2*(X-Y))"), &e("-1/(2*(X-Y))"), &cfg()).unwrap();
        let l = liouville_check(&b, &cfg()).unwrap();
        assert!(l.constant);
        assert_eq!(l.kappa.as_deref(), Some("8"));
        let b = from_ab(&e("Y"), &e("X"), &cfg()).unwrap();
        assert_eq!(liouville_check(&b, &cfg()).unwrap().kappa.as_deref(), Some("0"));
        let b = from_lambdas(&HydroSystem::antisymmetric(e("(X-Y)^2*(X+Y)")), &cfg()).unwrap();
        assert!(!liouville_check(&b, &cfg()).unwrap().constant);
    }

    #[test]
    fn example3_counts() {
        for (n, m, expected) in [(2, 1, 2), (1, 1, 3)] {
            let sys = HydroSystem::antisymmetric(e(&format!("(X-Y)^{n}*(X+Y)^{m}")));
            assert_eq!(hamiltonian_count(&sys, &cfg()).unwrap().count, expected, "n={n} m={m}");
        }
    }

    #[test]
    fn geodesic_ode_matches_z() {
        let b = from_ab(&e("3*X+Y"), &e("X+3*Y"), &cfg()).unwrap();
        let [a0, a1, a2, a3] = geodesic_ode_coefficients(&b.conn);
        let ab = b.a.mul(&b.b);
        let zx = ab.diff(X).div(&ab).unwrap();
        let zy = ab.diff(Y).div(&ab).unwrap();
        assert!(a0.is_zero() && a3.is_zero());
        assert!(a1.sub(&zx).is_zero() && a2.add(&zy).is_zero());
    }

    #[test]
    fn frobenius_exp_metrics() {
        let sys = frobenius_corpus(FrobeniusCase::Exp2V).unwrap();
        let b = from_lambdas(&sys, &cfg()).unwrap();
        let one = || q(1, 1);
        let zero = || q(0, 1);
        for c in [[one(), zero(), zero()], [zero(), one(), zero()], [zero(), zero(), one()]] {
            let k = frobenius_exp_integral(c.clone());
            let cand = killing_to_flat_metric(&b, &k, &cfg()).unwrap();
            assert!(flat_metric_curvature(&cand, &cfg()).unwrap().is_zero());
            let g = frobenius_metric(&sys.lambda1, c).unwrap();
            assert!(proportional_metrics(&cand.g, &g, &cfg()).unwrap());
        }
        let bad = TensorField::one_form(RatFun::zero(), RatFun::one());
        assert!(matches!(killing_to_flat_metric(&b, &bad, &cfg()), Err(Error::Precondition(_))));
    }

    #[test]
    fn frobenius_counts() {
        for case in [FrobeniusCase::Exp2V, FrobeniusCase::V2LnV, FrobeniusCase::LnV, FrobeniusCase::Power(-1), FrobeniusCase::Power(4)] {
            let sys = frobenius_corpus(case).unwrap();
            assert_eq!(hamiltonian_count(&sys, &cfg()).unwrap().count, 3, "{}", case.label());
        }
        let sys = frobenius_corpus(FrobeniusCase::Power(3)).unwrap();
        assert!(matches!(from_lambdas(&sys, &cfg()), Err(Error::LinearlyDegenerate(_))));
        assert!(frobenius_corpus(FrobeniusCase::Power(2)).is_err());
    }

    fn zoll_cfg() -> ZeroTestConfig {
        ZeroTestConfig { sample_box: SampleBox::new(q(1, 5), q(13, 10), q(-1, 1), q(1, 1)), ..Default::default() }
    }

    #[test]
    fn zoll_round_sphere() {
        let conn = zoll_corpus(&e("0"), &e("0")).unwrap();
        assert_eq!(classify(&conn, &zoll_cfg()).unwrap().count, 3);
        let [a0, a1, a2, a3] = geodesic_ode_coefficients(&conn);
        let (c1, c2, c3) = zoll_coefficients(&e("0"), &e("0")).unwrap();
        assert!(a0.is_zero() && a1.sub(&c1).is_zero() && a2.sub(&c2).is_zero() && a3.sub(&c3).is_zero());
    }

    #[test]
    fn zoll_general_and_family() {
        let conn = zoll_corpus(&e("sin(2*X)/2"), &e("sin(2*X)^2")).unwrap();
        assert!(classify(&conn, &zoll_cfg()).unwrap().count >= 1);
        let h = e("sin(2*X)^2");
        let conn = zoll_corpus(&zoll_two_integral_f(q(1, 10), &h), &h).unwrap();
        let r = classify(&conn, &zoll_cfg()).unwrap();
        assert_eq!(r.count, 2);
        assert!(r.verdict("beta").unwrap().is_nonzero());
    }

    /// With `H = 0` the Ricci tensor is symmetric, so exactly two integrals
    /// cannot occur; this member of the family is projectively flat.
    #[test]
    fn zoll_family_without_h_is_flat() {
        let conn = zoll_corpus(&zoll_two_integral_f(q(1, 10), &e("0")), &e("0")).unwrap();
        let r = classify(&conn, &zoll_cfg()).unwrap();
        assert!(r.verdict("beta").unwrap().is_zero());
        assert_eq!(r.count, 3);
    }
}
