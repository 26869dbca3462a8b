use std::path::Path;

use affint_core::corpus::{corpus, find, run_entry, CorpusEntry, CorpusRow};
use affint_core::hydro::{from_ab, from_lambdas, liouville_check, HydroConnectionBundle};
use affint_core::invariants::{classify, killing_verify, ObstructionTower};
use affint_core::numeric::{
    conservation_check, conserved_exactly_by_rk4, holonomy_rank, integrate_geodesic, polynomial_killing_solver,
    stabilized_killing_dimension, write_trajectory_csv, ConnectionEvaluator, CovectorEvaluator,
    GeodesicState, HolonomyConfig,
};
use affint_core::symexpr::{RatFun, ZeroTestConfig};
use affint_core::tensor::{Connection, TensorField};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::problem::{load, Block, HydroInput, Options, Problem};
use crate::{CliError, GlobalOpts, NumericOpts};

const EXIT_INDETERMINATE: u8 = 3;

fn zero_config(global: &GlobalOpts, options: &Options) -> ZeroTestConfig {
    let mut cfg = ZeroTestConfig { seed: global.seed.or(options.seed).unwrap_or(0), ..Default::default() };
    if let Some(p) = global.precision.or(options.precision) {
        cfg.precision = p;
        cfg.max_precision = cfg.max_precision.max(p);
    }
    if let Some(n) = options.samples {
        cfg.samples = n;
    }
    if let Some(b) = &options.sample_box {
        cfg.sample_box = b.clone();
    }
    cfg
}

fn load_for(file: &Path, mode: &str) -> Result<Problem, CliError> {
    let p = load(file)?;
    if let Some(m) = &p.mode {
        if m != mode {
            return Err(CliError::Parse(format!("file declares mode `{m}` but `{mode}` was requested")));
        }
    }
    Ok(p)
}

fn connection_json(conn: &Connection) -> Value {
    let names = ["G111", "G112", "G122", "G211", "G212", "G222"];
    let mut m: Map<String, Value> =
        names.iter().zip(conn.components()).map(|(n, g)| (n.to_string(), json!(g.canonical_string()))).collect();
    m.insert("eps12".into(), json!(conn.eps12().canonical_string()));
    Value::Object(m)
}

fn covector_json(k: &TensorField) -> Value {
    json!([k.comps()[0].canonical_string(), k.comps()[1].canonical_string()])
}

fn bundle(h: &HydroInput, cfg: &ZeroTestConfig) -> Result<HydroConnectionBundle, CliError> {
    Ok(match h {
        HydroInput::Lambdas(sys) => from_lambdas(sys, cfg)?,
        HydroInput::AB(a, b) => from_ab(a, b, cfg)?,
    })
}

fn render_text(v: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(m) = v {
        for (k, x) in m {
            let s = match x {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("{k}: {s}\n"));
        }
    }
    out
}

fn corpus_table(rows: &[CorpusRow]) -> String {
    let mut out = format!("{:<18} {:<24} {:<28} {:<28} {:<6} {}\n", "id", "params", "expected", "computed", "agree", "claim");
    for r in rows {
        let params: String = r.params.chars().take(24).collect();
        out.push_str(&format!(
            "{:<18} {:<24} {:<28} {:<28} {:<6} {}\n",
            r.id, params, r.expected, r.computed, r.agreement, r.citation
        ));
    }
    out
}

fn emit(report: &Value, text: Option<String>, global: &GlobalOpts, file_output: Option<&Path>) -> Result<(), CliError> {
    let body = if global.json {
        serde_json::to_string_pretty(report).expect("json") + "\n"
    } else {
        text.unwrap_or_else(|| render_text(report))
    };
    print!("{body}");
    if let Some(path) = global.output.as_deref().or(file_output) {
        std::fs::write(path, &body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn classify_connection(file: &Path, global: &GlobalOpts) -> Result<u8, CliError> {
    let p = load_for(file, "classify-connection")?;
    let cfg = zero_config(global, &p.options);
    let conn = &match &p.block {
        Block::Connection(c) => c.clone(),
        Block::Hydro(h) => bundle(h, &cfg)?.conn,
    };
    let report = classify(conn, &cfg)?;
    let mut out = report.to_json();
    out["mode"] = json!("classify-connection");
    out["seed"] = json!(cfg.seed);
    out["connection"] = connection_json(conn);
    emit(&out, None, global, p.output.as_deref())?;
    Ok(if report.indeterminate.is_empty() { 0 } else { EXIT_INDETERMINATE })
}

fn structure_label(count: u8) -> &'static str {
    match count {
        0 => "none",
        1 => "Hamiltonian",
        2 => "bi-Hamiltonian",
        _ => "tri-Hamiltonian",
    }
}

pub fn classify_hydro(file: &Path, global: &GlobalOpts) -> Result<u8, CliError> {
    let p = load_for(file, "classify-hydro")?;
    let cfg = zero_config(global, &p.options);
    let Block::Hydro(h) = &p.block else {
        return Err(affint_core::Error::Precondition("classify-hydro needs a hydro block".into()).into());
    };
    let b = bundle(h, &cfg)?;
    let report = classify(&b.conn, &cfg)?;
    let liouville = liouville_check(&b, &cfg)?;
    let mut out = report.to_json();
    out["mode"] = json!("classify-hydro");
    out["seed"] = json!(cfg.seed);
    out["structure"] = json!(structure_label(report.count));
    out["A"] = json!(b.a.canonical_string());
    out["B"] = json!(b.b.canonical_string());
    out["connection"] = connection_json(&b.conn);
    out["liouville"] = serde_json::to_value(&liouville).expect("json");
    emit(&out, None, global, p.output.as_deref())?;
    Ok(if report.indeterminate.is_empty() { 0 } else { EXIT_INDETERMINATE })
}

pub fn invariants(file: &Path, global: &GlobalOpts) -> Result<u8, CliError> {
    let p = load_for(file, "invariants")?;
    let cfg = zero_config(global, &p.options);
    let conn = match &p.block {
        Block::Connection(c) => c.clone(),
        Block::Hydro(h) => bundle(h, &cfg)?.conn,
    };
    let tower = ObstructionTower::full(&conn, &cfg)?;
    let mut out = tower.to_json();
    out["mode"] = json!("invariants");
    out["connection"] = connection_json(&conn);
    emit(&out, None, global, p.output.as_deref())?;
    Ok(0)
}

pub fn run_corpus(id: Option<&str>, global: &GlobalOpts) -> Result<u8, CliError> {
    let entries: Vec<CorpusEntry> = match id {
        Some(id) => vec![find(id).ok_or_else(|| CliError::Parse(format!("no corpus entry `{id}`")))?],
        None => corpus(),
    };
    let cfg = zero_config(global, &Options::default());
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::Io(e.to_string()))?;
    let rows: Vec<CorpusRow> = pool.install(|| entries.par_iter().map(|e| run_entry(e, &cfg)).collect());
    let all_agree = rows.iter().all(|r| r.agreement);
    let out = json!({
        "mode": "corpus",
        "seed": cfg.seed,
        "all_agree": all_agree,
        "rows": rows,
    });
    emit(&out, Some(corpus_table(&rows)), global, None)?;
    Ok(if all_agree { 0 } else { 1 })
}

fn random_base_points(
    ev: &ConnectionEvaluator,
    cfg: &ZeroTestConfig,
    hol: &HolonomyConfig,
    n: usize,
) -> Vec<[f64; 2]> {
    let f = |q: &affint_core::symexpr::Q| q.to_f64().unwrap_or(0.0);
    let b = &cfg.sample_box;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for _ in 0..50 * n {
        if out.len() == n {
            break;
        }
        let p = [rng.gen_range(f(&b.x.0)..f(&b.x.1)), rng.gen_range(f(&b.y.0)..f(&b.y.1))];
        // keep the lasso ring away from poles
        let margin = hol.ring + 2.0 * hol.radii[0];
        let probes = [[0.0, 0.0], [margin, 0.0], [-margin, 0.0], [0.0, margin], [0.0, -margin]];
        if probes.iter().all(|d| ev.at([p[0] + d[0], p[1] + d[1]]).is_ok()) {
            out.push(p);
        }
    }
    out
}

pub fn numeric_verify(file: &Path, global: &GlobalOpts, num: &NumericOpts) -> Result<u8, CliError> {
    let p = load_for(file, "numeric-verify")?;
    let o = &p.options;
    let cfg = zero_config(global, o);
    let conn = match &p.block {
        Block::Connection(c) => c.clone(),
        Block::Hydro(h) => bundle(h, &cfg)?.conn,
    };
    let report = classify(&conn, &cfg)?;
    let ev = ConnectionEvaluator::new(&conn)?;

    let mut hol = HolonomyConfig::default();
    if let Some(r) = num.loop_radius.or(o.loop_radius) {
        hol.radii = [r, r / 2.0];
    }
    let bases = match o.base_point {
        Some(b) => vec![b],
        None => random_base_points(&ev, &cfg, &hol, 2),
    };
    let mut holonomy = Vec::new();
    let mut indeterminate = false;
    let mut holonomy_agrees = !bases.is_empty();
    for b in &bases {
        match holonomy_rank(&ev, *b, &hol) {
            Ok(h) => {
                indeterminate |= h.indeterminate;
                holonomy_agrees &= h.dimension == report.count;
                holonomy.push(json!({ "base_point": b, "estimate": h }));
            }
            Err(e) => {
                indeterminate = true;
                holonomy_agrees = false;
                holonomy.push(json!({ "base_point": b, "error": e.to_string() }));
            }
        }
    }

    let degree = num.ansatz_degree.or(o.ansatz_degree).unwrap_or(3);
    let (ansatz, integrals) = match stabilized_killing_dimension(&conn, degree, degree + 2) {
        Ok(s) => {
            let basis = polynomial_killing_solver(&conn, s.degree)?.basis;
            let mut certified = Vec::new();
            for k in basis {
                if killing_verify(&conn, &k, &cfg)?.is_zero() {
                    certified.push(k);
                }
            }
            let agrees = !s.stable || s.dimension == report.count as usize;
            (json!({ "stabilization": s, "agrees": agrees }), certified)
        }
        Err(affint_core::Error::Precondition(msg)) => (json!({ "skipped": msg }), Vec::new()),
        Err(e) => return Err(e.into()),
    };

    let step = num.step.or(o.step).unwrap_or(1e-3);
    let tau_end = num.tau_end.or(o.tau_end).unwrap_or(1.0);
    let chart = o.chart.unwrap_or_default();
    let start = bases.first().copied().unwrap_or([0.0, 0.0]);
    let init = GeodesicState { x: start, v: o.velocity.unwrap_or([0.6, -0.4]), tau: 0.0 };
    let mut conservation = Vec::new();
    for k in &integrals {
        let kev = CovectorEvaluator::new(k)?;
        let drift = |h: f64| integrate_geodesic(&ev, init, tau_end, h, &chart).and_then(|t| conservation_check(&t, &kev));
        let entry = match (drift(step), drift(step / 2.0)) {
            (Ok(a), Ok(b)) => json!({
                "covector": covector_json(k),
                "drift": a,
                "drift_half_step": b,
                "ratio": if b > 0.0 { json!(a / b) } else { Value::Null },
                "exact_for_rk4": conserved_exactly_by_rk4(&conn, k),
            }),
            (Err(e), _) | (_, Err(e)) => json!({ "covector": covector_json(k), "error": e.to_string() }),
        };
        conservation.push(entry);
    }

    if let Some(path) = num.csv.as_deref().or(o.trajectory_csv.as_deref()) {
        let zero = || TensorField::one_form(RatFun::zero(), RatFun::zero());
        let k = integrals.first().cloned().unwrap_or_else(zero);
        let kev = CovectorEvaluator::new(&k)?;
        let traj = integrate_geodesic(&ev, init, tau_end, step, &chart)?;
        let f = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        write_trajectory_csv(&traj, &kev, std::io::BufWriter::new(f))?;
    }

    let out = json!({
        "mode": "numeric-verify",
        "seed": cfg.seed,
        "classification": report.to_json(),
        "holonomy": holonomy,
        "holonomy_agrees": holonomy_agrees,
        "ansatz": ansatz,
        "conservation": conservation,
        "step": step,
        "tau_end": tau_end,
        "chart": { "x": [chart.x.0, chart.x.1], "y": [chart.y.0, chart.y.1] },
    });
    emit(&out, None, global, p.output.as_deref())?;
    Ok(if indeterminate || !report.indeterminate.is_empty() { EXIT_INDETERMINATE } else { 0 })
}
