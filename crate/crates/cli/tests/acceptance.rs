//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines reach the console.
//!
//! Sub-checks that are known to fail because the stated expectation
//! contradicts the mathematics are listed in `KNOWN_FAILURES` with the
//! reason; the suite fails if any other sub-check fails or if a listed one
//! starts passing.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use affint_core::corpus::{corpus, find, CorpusEntry};
use affint_core::hydro::{
    flat_metric_curvature, frobenius_corpus, frobenius_exp_integral, from_lambdas, hamiltonian_count,
    killing_to_flat_metric, zoll_corpus, zoll_two_integral_f, FrobeniusCase, HydroSystem,
};
use affint_core::invariants::{classify, killing_verify, normal_form, ObstructionTower};
use affint_core::numeric::{
    conservation_check, conserved_exactly_by_rk4, holonomy_rank, integrate_geodesic, stabilized_killing_dimension,
    ConnectionEvaluator, CovectorEvaluator, GeodesicState, HolonomyConfig,
};
use affint_core::symexpr::{
    eval_ratfun, is_zero_ratfun, parse, q, Expr, RatFun, Real, SampleBox, ZeroTestConfig, ZeroVerdict, Q, X, Y,
};
use affint_core::tensor::{Connection, Slot, TensorField};
use affint_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CRITERION_1_BUDGET: Duration = Duration::from_secs(30);
const CRITERION_3_BUDGET: Duration = Duration::from_secs(120);
const WEIGHT_RELATIVE_TOL: f64 = 1e-30;
const WEIGHT_PRECISION: u32 = 256;
const DRIFT_MAX: f64 = 1e-8;
const RATIO_RANGE: (f64, f64) = (12.0, 20.0);
/// Below this coarse-step drift the integral is conserved to roundoff and
/// the step-halving ratio carries no information.
const ROUNDOFF_DRIFT: f64 = 1e-12;
const STEP: f64 = 1e-3;
const TAU_END: f64 = 1.0;
const ORACLE_NORMAL_FORMS: usize = 10;
const ORACLE_GENERIC: usize = 5;
const ORACLE_SEED: u64 = 2024;
const ANSATZ_START: u32 = 3;
const ANSATZ_MAX: u32 = 6;

const KNOWN_FAILURES: &[(&str, &str)] = &[
    (
        "4:v^3",
        "f = v^3 has constant f''', so A = B = 0 and the system is linearly degenerate; it is rejected, not counted",
    ),
    (
        "5:family H=0",
        "with H = 0 beta vanishes identically, so exactly two integrals is impossible; the metric has constant curvature and the count is 3",
    ),
];

struct Check {
    name: String,
    ok: bool,
    detail: String,
}

fn check(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), ok, detail: detail.into() }
}

fn e(s: &str) -> Expr {
    parse(s).unwrap()
}

fn entry(id: &str) -> (CorpusEntry, ZeroTestConfig, Connection) {
    let en = find(id).unwrap();
    let cfg = en.config(&ZeroTestConfig::default());
    let conn = en.connection(&cfg).unwrap();
    (en, cfg, conn)
}

fn example1(c: i64) -> Connection {
    entry(&format!("ex1-c{c}")).2
}

fn criterion_1() -> Vec<Check> {
    let cfg = ZeroTestConfig::default();
    let start = Instant::now();
    let mut out = Vec::new();
    for (c, want) in [(0, 3), (3, 2), (-3, 2), (2, 1)] {
        let r = classify(&example1(c), &cfg).unwrap();
        out.push(check(format!("1:c={c}"), r.count == want, format!("c={c} count {} (want {want})", r.count)));
    }
    let r = classify(&example1(1), &cfg).unwrap();
    let beta_proven = matches!(r.verdict("beta"), Some(ZeroVerdict::ProvenZero { .. }));
    out.push(check("1:c=1", r.count >= 1 && beta_proven, format!("c=1 count {} beta ProvenZero {beta_proven}", r.count)));
    let r = classify(&example1(2), &cfg).unwrap();
    let nonzero_t = r.diagnostics.iter().any(|(k, v)| k.starts_with("T_") && matches!(v, ZeroVerdict::ProvenNonzero { .. }));
    out.push(check("1:c=2 T", nonzero_t, "c=2 report has a ProvenNonzero T component"));
    let t = start.elapsed();
    out.push(check("1:time", t < CRITERION_1_BUDGET, format!("{:.2}s < {}s", t.as_secs_f64(), CRITERION_1_BUDGET.as_secs())));
    out
}

fn criterion_2() -> Vec<Check> {
    let c = 2i64;
    let cfg = ZeroTestConfig::default();
    let tower = ObstructionTower::core(&example1(c), &cfg).unwrap();
    let (x, y) = (RatFun::from_sym(X), RatFun::from_sym(Y));
    let a = RatFun::int(c).mul(&x).add(&y);
    let b = x.add(&RatFun::int(c).mul(&y));
    let k = RatFun::int(8 * c * c * (c * c - 9))
        .div(&RatFun::int(9).mul(&a.powi(3).unwrap()).mul(&b.powi(3).unwrap()))
        .unwrap();
    let closed = TensorField::new(
        vec![Slot::Down, Slot::Up],
        vec![k.neg(), k.mul(&a).div(&b).unwrap().neg(), k.mul(&b).div(&a).unwrap(), k.clone()],
    );
    let diff = tower.t.sub(&closed);
    let verdicts: Vec<ZeroVerdict> = diff.comps().iter().map(|r| is_zero_ratfun(r, &cfg).unwrap()).collect();
    let ok = verdicts.iter().all(|v| matches!(v, ZeroVerdict::ProvenZero { .. }));
    vec![check("2:T", ok, "T minus the closed form is ProvenZero in all four components")]
}

fn criterion_3() -> Vec<Check> {
    let cfg = ZeroTestConfig::default();
    let start = Instant::now();
    let mut out = Vec::new();
    for n in 1..=3i64 {
        for m in 1..=3i64 {
            let lambda = e(&format!("(X-Y)^{n}*(X+Y)^{m}"));
            let sys = HydroSystem::new(lambda.clone(), -lambda);
            let count = hamiltonian_count(&sys, &cfg).unwrap().count;
            let want = if n * m * (n * n - m * m) == 0 { 3 } else { 2 };
            out.push(check(format!("3:n={n},m={m}"), count == want, format!("n={n} m={m} count {count} (want {want})")));
        }
    }
    let t = start.elapsed();
    out.push(check("3:time", t < CRITERION_3_BUDGET, format!("{:.2}s < {}s", t.as_secs_f64(), CRITERION_3_BUDGET.as_secs())));
    out
}

fn criterion_4() -> Vec<Check> {
    let cfg = ZeroTestConfig::default();
    let mut out = Vec::new();
    for case in [
        FrobeniusCase::Power(3),
        FrobeniusCase::Power(4),
        FrobeniusCase::Power(-1),
        FrobeniusCase::V2LnV,
        FrobeniusCase::LnV,
        FrobeniusCase::Exp2V,
    ] {
        let label = case.label();
        let (ok, detail) = match frobenius_corpus(case).and_then(|s| hamiltonian_count(&s, &cfg)) {
            Ok(r) => (r.count == 3, format!("{label} count {}", r.count)),
            Err(err) => (false, format!("{label} rejected: {err}")),
        };
        out.push(check(format!("4:{label}"), ok, detail));
    }
    let sys = frobenius_corpus(FrobeniusCase::Exp2V).unwrap();
    let bundle = from_lambdas(&sys, &cfg).unwrap();
    for i in 0..3 {
        let c: [Q; 3] = std::array::from_fn(|j| if i == j { q(1, 1) } else { q(0, 1) });
        let k = frobenius_exp_integral(c.clone());
        let killing = killing_verify(&bundle.conn, &k, &cfg).unwrap();
        let curvature = killing_to_flat_metric(&bundle, &k, &cfg).and_then(|m| flat_metric_curvature(&m, &cfg));
        let flat = curvature.as_ref().is_ok_and(|v| v.is_zero());
        out.push(check(
            format!("4:g{i}"),
            killing.is_zero() && flat,
            format!(
                "g({},{},{}) Killing {} curvature {}",
                c[0],
                c[1],
                c[2],
                killing.label(),
                curvature.map(|v| v.label()).unwrap_or_else(|e| e.to_string())
            ),
        ));
    }
    out
}

fn zoll_cfg() -> ZeroTestConfig {
    ZeroTestConfig { sample_box: SampleBox::new(q(1, 5), q(13, 10), q(-1, 1), q(1, 1)), ..Default::default() }
}

fn criterion_5() -> Vec<Check> {
    let cfg = zoll_cfg();
    let mut out = Vec::new();
    let round = classify(&zoll_corpus(&e("0"), &e("0")).unwrap(), &cfg).unwrap();
    out.push(check("5:round", round.count == 3, format!("(F,H)=(0,0) count {}", round.count)));
    let general = classify(&zoll_corpus(&e("sin(2*X)/2"), &e("sin(2*X)^2")).unwrap(), &cfg).unwrap();
    let zero = |k: &str| general.verdict(k).is_some_and(|v| v.is_zero());
    let w_zero = ["W_111", "W_112", "W_122", "W_211", "W_212", "W_222"].iter().all(|k| zero(k));
    out.push(check(
        "5:general",
        general.count >= 1 && zero("I_N") && w_zero,
        format!("(sin(2X)/2, sin(2X)^2) count {} I_N zero {} all W zero {w_zero}", general.count, zero("I_N")),
    ));
    let h = e("0");
    let family = classify(&zoll_corpus(&zoll_two_integral_f(q(1, 10), &h), &h).unwrap(), &cfg).unwrap();
    out.push(check("5:family H=0", family.count == 2, format!("F=1+(H^2+1)cot(X)/10, H=0 count {} (want 2)", family.count)));
    out
}

/// Three polynomial connections without linear integrals. Every corpus
/// connection has `I_N = 0`, where the weight law holds trivially.
fn weight_connections() -> Vec<(&'static str, Connection)> {
    [
        ("G=(Y^2,0,0,0,X,XY)", ["Y^2", "0", "0", "0", "X", "X*Y"]),
        ("G=(XY,1,Y,X^2,0,Y^2+1)", ["X*Y", "1", "Y", "X^2", "0", "Y^2+1"]),
        ("G=(0,X^2,Y,X+Y,XY,0)", ["0", "X^2", "Y", "X+Y", "X*Y", "0"]),
    ]
    .into_iter()
    .map(|(name, g)| (name, Connection::from_exprs(&g.map(e), &e("1+X^2")).unwrap()))
    .collect()
}

fn criterion_6() -> Vec<Check> {
    let cfg = ZeroTestConfig::default();
    let prec = WEIGHT_PRECISION;
    let pts = [(q(6, 5), q(7, 5)), (q(2, 1), q(1, 2)), (q(-5, 2), q(9, 4)), (q(3, 4), q(-8, 3))];
    let factor = Real::exact(q(1, 32));
    let mut out = Vec::new();
    for (name, conn) in weight_connections() {
        let scaled = conn.with_eps12(conn.eps12().scale(&q(2, 1))).unwrap();
        let i0 = ObstructionTower::core(&conn, &cfg).unwrap().i_n;
        let i1 = ObstructionTower::core(&scaled, &cfg).unwrap().i_n;
        let mut worst = 0.0f64;
        let mut ok = true;
        for (x, y) in &pts {
            let u = eval_ratfun(&i0, x, y, prec).unwrap();
            let v = eval_ratfun(&i1, x, y, prec).unwrap();
            let want = u.mul(&factor, prec);
            let d = v.sub(&want, prec);
            let err = d.mid_f64().abs() + num_traits::ToPrimitive::to_f64(&d.width()).unwrap();
            let rel = err / want.mid_f64().abs();
            ok &= !u.contains_zero() && rel <= WEIGHT_RELATIVE_TOL;
            worst = worst.max(rel);
        }
        out.push(check(format!("6:{name}"), ok, format!("{name} max relative error {worst:.1e} <= {WEIGHT_RELATIVE_TOL:e}")));
    }
    out
}

fn criterion_7() -> Vec<Check> {
    let mut out = Vec::new();
    for en in corpus() {
        let cfg = en.config(&ZeroTestConfig::default());
        let Ok(conn) = en.connection(&cfg) else { continue };
        let tower = ObstructionTower::core(&conn, &cfg).unwrap();
        if !matches!(is_zero_ratfun(tower.beta(), &cfg), Ok(ZeroVerdict::ProvenZero { .. })) {
            continue;
        }
        let (ok, detail) = match &tower.nu5 {
            Some(nu5) => {
                let v = is_zero_ratfun(&tower.i_n.add(&nu5.scale(&q(1, 27))), &cfg).unwrap();
                (v.is_zero(), format!("{} I_N + nu5/27 {}", en.id, v.label()))
            }
            None => (false, format!("{} nu5 missing", en.id)),
        };
        out.push(check(format!("7:{}", en.id), ok, detail));
    }
    out
}

fn random_poly(rng: &mut ChaCha8Rng, degree: u32, coeff: i64, constant: Option<i64>) -> String {
    let mut terms = Vec::new();
    for total in 0..=degree {
        for i in 0..=total {
            let j = total - i;
            let c = if total == 0 { constant.unwrap_or_else(|| rng.gen_range(-coeff..=coeff)) } else { rng.gen_range(-coeff..=coeff) };
            if c != 0 {
                terms.push(format!("({c})*X^{i}*Y^{j}"));
            }
        }
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join("+")
    }
}

const ORACLE_BASES: [[f64; 2]; 2] = [[0.2, 0.1], [-0.15, 0.25]];

/// Classification, polynomial ansatz and holonomy for one connection.
fn triangle(conn: &Connection) -> (u8, usize, Vec<(u8, bool)>) {
    let cfg = ZeroTestConfig::default();
    let count = classify(conn, &cfg).unwrap().count;
    let ansatz = stabilized_killing_dimension(conn, ANSATZ_START, ANSATZ_MAX).unwrap().dimension;
    let ev = ConnectionEvaluator::new(conn).unwrap();
    let hol = ORACLE_BASES
        .iter()
        .map(|b| {
            let h = holonomy_rank(&ev, *b, &HolonomyConfig::default()).unwrap();
            (h.dimension, h.indeterminate)
        })
        .collect();
    (count, ansatz, hol)
}

fn criterion_8() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let mut out = Vec::new();
    for i in 0..ORACLE_NORMAL_FORMS {
        let p = random_poly(&mut rng, 3, 2, None);
        // Q stays within 1 of its constant term near the base points
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        let qq = format!("{}+({})/4", 3 * sign, random_poly(&mut rng, 3, 1, Some(0)));
        let conn = normal_form(0, &e(&p), &e(&qq)).unwrap();
        let (count, ansatz, hol) = triangle(&conn);
        let ok = (2..=3).contains(&count)
            && ansatz == count as usize
            && hol.iter().all(|&(d, ind)| d == count && !ind);
        out.push(check(
            format!("8:normal form {i}"),
            ok,
            format!("P={p} Q={qq}: classify {count} ansatz {ansatz} holonomy {hol:?}"),
        ));
    }
    for i in 0..ORACLE_GENERIC {
        let g: [Expr; 6] = std::array::from_fn(|_| e(&random_poly(&mut rng, 2, 2, None)));
        let conn = Connection::from_exprs(&g, &e("1")).unwrap();
        let (count, ansatz, hol) = triangle(&conn);
        let ok = count == 0 && ansatz == 0 && hol.iter().all(|&(d, ind)| d == 0 && !ind);
        let shown: Vec<String> = g.iter().map(|x| x.to_string()).collect();
        out.push(check(
            format!("8:generic {i}"),
            ok,
            format!("Gamma={shown:?}: classify {count} ansatz {ansatz} holonomy {hol:?}"),
        ));
    }
    out
}

fn criterion_9() -> Vec<Check> {
    let mut out = Vec::new();
    for en in corpus() {
        let cfg = en.config(&ZeroTestConfig::default());
        let Ok(conn) = en.connection(&cfg) else { continue };
        if classify(&conn, &cfg).unwrap().count == 0 {
            continue;
        }
        let ks = en.certified_integrals(&conn, &cfg, ANSATZ_START).unwrap();
        let ev = ConnectionEvaluator::new(&conn).unwrap();
        let init = GeodesicState { x: en.base_points[0], v: en.velocity, tau: 0.0 };
        for (i, k) in ks.iter().enumerate() {
            let kev = CovectorEvaluator::new(k).unwrap();
            let drift = |h: f64| -> Result<f64, Error> {
                conservation_check(&integrate_geodesic(&ev, init, TAU_END, h, &en.chart)?, &kev)
            };
            let name = format!("9:{} K{i}", en.id);
            let (d1, d2) = match (drift(STEP), drift(STEP / 2.0)) {
                (Ok(a), Ok(b)) => (a, b),
                (a, b) => {
                    out.push(check(name, false, format!("integration failed: {a:?} {b:?}")));
                    continue;
                }
            };
            let exact = conserved_exactly_by_rk4(&conn, k);
            let (ok, ratio) = if exact {
                (d1 <= ROUNDOFF_DRIFT, "n/a (conserved exactly by RK4)".to_string())
            } else {
                let r = d1 / d2;
                (d1 <= DRIFT_MAX && (RATIO_RANGE.0..=RATIO_RANGE.1).contains(&r), format!("{r:.2}"))
            };
            out.push(check(name, ok, format!("{} K{i} drift {d1:.2e} ratio {ratio}", en.id)));
        }
    }
    out
}

fn criterion_10() -> Vec<Check> {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_affint"))
            .env_remove("AFFINT_PRECISION")
            .args(["corpus", "--all", "--seed", "7"])
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    let ok = a.status.success() && b.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    vec![check("10:bytes", ok, format!("two runs of `corpus --all --seed 7`: {} bytes, identical {}", a.stdout.len(), a.stdout == b.stdout))]
}

fn main() {
    let criteria: [(u8, &str, fn() -> Vec<Check>); 10] = [
        (1, "Example 1 sweep", criterion_1),
        (2, "Example 1 T closed form", criterion_2),
        (3, "Example 3 grid", criterion_3),
        (4, "Frobenius suite", criterion_4),
        (5, "Zoll suite", criterion_5),
        (6, "weight -5 of I_N", criterion_6),
        (7, "special-connection bridge", criterion_7),
        (8, "oracle triangle", criterion_8),
        (9, "numeric conservation", criterion_9),
        (10, "determinism", criterion_10),
    ];
    let known: BTreeSet<&str> = KNOWN_FAILURES.iter().map(|(n, _)| *n).collect();
    let mut unexpected = Vec::new();
    for (n, title, run) in criteria {
        let start = Instant::now();
        let checks = run();
        let pass = !checks.is_empty() && checks.iter().all(|c| c.ok);
        println!(
            "criterion {n:>2} {}: {title} ({} checks, {:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            checks.len(),
            start.elapsed().as_secs_f64()
        );
        for c in &checks {
            let mark = match (c.ok, known.contains(c.name.as_str())) {
                (true, false) => "ok",
                (false, true) => "known failure",
                (false, false) => "FAILED",
                (true, true) => "UNEXPECTED PASS",
            };
            println!("    [{mark}] {}", c.detail);
            if c.ok == known.contains(c.name.as_str()) {
                unexpected.push(c.name.clone());
            }
        }
        for (name, why) in KNOWN_FAILURES {
            if name.split(':').next() == Some(&n.to_string()) {
                println!("    note {name}: {why}");
            }
        }
        if checks.is_empty() {
            unexpected.push(format!("{n}:empty"));
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all outcomes as documented");
    } else {
        println!("acceptance: unexpected outcomes {unexpected:?}");
        std::process::exit(1);
    }
}
