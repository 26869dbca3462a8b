use affint_core::corpus::{corpus, find, CorpusEntry, Expected};
use affint_core::invariants::{classify, normal_form};
use affint_core::numeric::{
    conservation_check, holonomy_rank, integrate_geodesic, stabilized_killing_dimension, transport_matrix, Chain,
    Circle, ConnectionEvaluator, CovectorEvaluator, GeodesicState, HolonomyConfig, Segment,
};
use affint_core::symexpr::{parse, Poly, RatFun, ZeroTestConfig, X, Y};
use affint_core::tensor::{Connection, TensorField};
use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn entry(id: &str) -> (CorpusEntry, ZeroTestConfig, Connection) {
    let e = find(id).unwrap();
    let cfg = e.config(&ZeroTestConfig::default());
    let conn = e.connection(&cfg).unwrap();
    (e, cfg, conn)
}

fn generic() -> Connection {
    let g = ["Y^2", "0", "0", "0", "X", "X*Y"].map(|s| parse(s).unwrap());
    Connection::from_exprs(&g, &parse("1").unwrap()).unwrap()
}

#[test]
fn loop_there_and_back_is_identity() {
    let ev = ConnectionEvaluator::new(&generic()).unwrap();
    let (p, q) = ([0.2, 0.1], [0.5, -0.3]);
    let chain = Chain(vec![Box::new(Segment { from: p, to: q }), Box::new(Segment { from: q, to: p })]);
    let m = transport_matrix(&ev, &chain, 800).unwrap();
    assert!((m - Matrix3::identity()).norm() < 1e-8, "{m}");
}

#[test]
fn transport_composes_along_chains() {
    let ev = ConnectionEvaluator::new(&generic()).unwrap();
    let (p, q, r) = ([0.2, 0.1], [0.5, -0.3], [0.1, -0.4]);
    let a = transport_matrix(&ev, &Segment { from: p, to: q }, 400).unwrap();
    let b = transport_matrix(&ev, &Segment { from: q, to: r }, 400).unwrap();
    let chain = Chain(vec![Box::new(Segment { from: p, to: q }), Box::new(Segment { from: q, to: r })]);
    let ab = transport_matrix(&ev, &chain, 800).unwrap();
    assert!((ab - b * a).norm() < 1e-8 * ab.norm());
}

#[test]
fn small_loop_holonomy_of_generic_connection_is_nontrivial() {
    let ev = ConnectionEvaluator::new(&generic()).unwrap();
    let m = transport_matrix(&ev, &Circle { center: [0.3, 0.2], radius: 0.1 }, 1024).unwrap();
    assert!((m - Matrix3::identity()).norm() > 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transport_is_linear(
        p in (-0.5f64..0.5, -0.5f64..0.5),
        q in (-0.5f64..0.5, -0.5f64..0.5),
        s in proptest::array::uniform3(-2.0f64..2.0),
        t in proptest::array::uniform3(-2.0f64..2.0),
        a in -3.0f64..3.0,
    ) {
        use affint_core::numeric::{transport_section, ProlongationSection};
        let ev = ConnectionEvaluator::new(&generic()).unwrap();
        let seg = Segment { from: [p.0, p.1], to: [q.0, q.1] };
        let sec = |v: [f64; 3]| ProlongationSection { k: [v[0], v[1]], mu: v[2] };
        let comb: [f64; 3] = std::array::from_fn(|i| a * s[i] + t[i]);
        let lhs = transport_section(&ev, &seg, sec(comb), 200).unwrap();
        let us = transport_section(&ev, &seg, sec(s), 200).unwrap();
        let ut = transport_section(&ev, &seg, sec(t), 200).unwrap();
        let rhs = [a * us.k[0] + ut.k[0], a * us.k[1] + ut.k[1], a * us.mu + ut.mu];
        for (l, r) in [lhs.k[0], lhs.k[1], lhs.mu].iter().zip(rhs) {
            prop_assert!((l - r).abs() < 1e-8 * (1.0 + r.abs()));
        }
    }
}

#[test]
fn non_integral_drifts_on_flat_connection() {
    let ev = ConnectionEvaluator::new(&Connection::flat()).unwrap();
    let k = TensorField::one_form(RatFun::from_sym(X), RatFun::zero());
    let kev = CovectorEvaluator::new(&k).unwrap();
    let init = GeodesicState { x: [0.3, 0.4], v: [1.0, 0.5], tau: 0.0 };
    let traj = integrate_geodesic(&ev, init, 1.0, 1e-3, &Default::default()).unwrap();
    // kappa = X X' grows by tau X'^2
    assert!((conservation_check(&traj, &kev).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn zoll_integral_is_conserved() {
    for id in ["ex5-round", "ex5-general", "ex5-family-h", "ex5-family-h0"] {
        let (e, cfg, conn) = entry(id);
        let ev = ConnectionEvaluator::new(&conn).unwrap();
        let ks = e.certified_integrals(&conn, &cfg, 3).unwrap();
        assert!(!ks.is_empty(), "{id}");
        for k in &ks {
            let kev = CovectorEvaluator::new(k).unwrap();
            let init = GeodesicState { x: e.base_points[0], v: e.velocity, tau: 0.0 };
            let traj = integrate_geodesic(&ev, init, 1.0, 1e-3, &e.chart).unwrap();
            assert!(conservation_check(&traj, &kev).unwrap() <= 1e-8, "{id}");
        }
    }
}

#[test]
fn certified_integrals_are_conserved_at_fourth_order() {
    for id in ["normal-form-y2", "ex2-toda", "ex3-n1-m2", "ex4-v^-1", "ex4-ln v"] {
        let (e, cfg, conn) = entry(id);
        let ev = ConnectionEvaluator::new(&conn).unwrap();
        let init = GeodesicState { x: e.base_points[0], v: e.velocity, tau: 0.0 };
        for k in e.certified_integrals(&conn, &cfg, 3).unwrap() {
            let kev = CovectorEvaluator::new(&k).unwrap();
            let drift = |h: f64| {
                let traj = integrate_geodesic(&ev, init, 1.0, h, &e.chart).unwrap();
                conservation_check(&traj, &kev).unwrap()
            };
            let (d1, d2) = (drift(1e-3), drift(5e-4));
            assert!(d1 <= 1e-8, "{id}: drift {d1}");
            if d1 > 1e-12 {
                assert!((12.0..=20.0).contains(&(d1 / d2)), "{id}: ratio {}", d1 / d2);
            }
        }
    }
}

fn eval_f64(p: &Poly, at: [f64; 2]) -> f64 {
    let mut value = |s| if s == X { at[0] } else { at[1] };
    p.eval_with(&mut value, |c| num_traits::ToPrimitive::to_f64(c).unwrap(), |a, b| a + b, |a, b| a * b, 0.0, 1.0)
}

/// First-order distance from `at` to the nearest pole of a polynomial-in-X,Y
/// denominator factor of the connection.
fn pole_distance(conn: &Connection, at: [f64; 2]) -> f64 {
    let xy = [X, Y].into_iter().collect::<std::collections::BTreeSet<_>>();
    let mut best = f64::INFINITY;
    for c in conn.components() {
        for (f, _) in c.den_factors() {
            if !f.symbols().is_subset(&xy) {
                continue;
            }
            let grad = [X, Y].map(|v| eval_f64(&RatFun::from_poly(f.clone()).diff(v).canonical().0, at));
            best = best.min(eval_f64(&f, at).abs() / grad[0].hypot(grad[1]));
        }
    }
    best
}

fn expected_count(e: &CorpusEntry, classified: u8) -> u8 {
    match e.expected {
        Expected::Count(n) => n,
        _ => classified,
    }
}

#[test]
fn holonomy_agrees_with_classification_over_corpus() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let hcfg = HolonomyConfig::default();
    for e in corpus() {
        let cfg = e.config(&ZeroTestConfig::default());
        let Ok(conn) = e.connection(&cfg) else { continue };
        let count = classify(&conn, &cfg).unwrap().count;
        let ev = ConnectionEvaluator::new(&conn).unwrap();
        let [a, b] = e.base_points;
        // the lasso ring must stay well clear of poles
        let reach = 3.0 * (hcfg.ring + hcfg.radii[0]);
        let mut bases = Vec::new();
        for _ in 0..1000 {
            if bases.len() == 2 {
                break;
            }
            // a random point of the box spanned by the two base points
            let t: f64 = rng.gen();
            let s: f64 = rng.gen();
            let base = [a[0] + t * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            if pole_distance(&conn, base) > reach {
                bases.push(base);
            }
        }
        assert_eq!(bases.len(), 2, "{}: no base point clear of poles", e.id);
        for base in bases {
            let est = holonomy_rank(&ev, base, &hcfg).unwrap_or_else(|err| panic!("{} at {base:?}: {err}", e.id));
            assert!(!est.indeterminate, "{} at {base:?}: {:?}", e.id, est.notes);
            assert_eq!(est.dimension, expected_count(&e, count).min(3), "{} at {base:?}: {:?}", e.id, est);
        }
    }
}

#[test]
fn ansatz_agrees_with_classification_on_polynomial_connections() {
    let cfg = ZeroTestConfig::default();
    for (p, q) in [("Y^2", "1"), ("X^2*Y+Y^3", "1"), ("X^2+Y^3", "2"), ("X*Y^2-X^3", "X+3")] {
        let conn = normal_form(0, &parse(p).unwrap(), &parse(q).unwrap()).unwrap();
        let count = classify(&conn, &cfg).unwrap().count as usize;
        let stab = stabilized_killing_dimension(&conn, 3, 6).unwrap();
        assert!(stab.stable, "P={p} Q={q}");
        assert_eq!(stab.dimension, count, "P={p} Q={q}");
    }
    let stab = stabilized_killing_dimension(&generic(), 3, 6).unwrap();
    assert_eq!(stab.dimension, 0);
    assert_eq!(classify(&generic(), &cfg).unwrap().count, 0);
}

#[test]
fn ansatz_is_a_lower_bound_when_an_integral_is_not_polynomial() {
    // P = XY, Q = 1 carries a third, non-polynomial integral
    let cfg = ZeroTestConfig::default();
    let conn = normal_form(0, &parse("X*Y").unwrap(), &parse("1").unwrap()).unwrap();
    assert_eq!(classify(&conn, &cfg).unwrap().count, 3);
    let ev = ConnectionEvaluator::new(&conn).unwrap();
    let est = holonomy_rank(&ev, [0.3, 0.2], &HolonomyConfig::default()).unwrap();
    assert_eq!((est.dimension, est.indeterminate), (3, false));
    assert_eq!(stabilized_killing_dimension(&conn, 3, 6).unwrap().dimension, 2);
}
