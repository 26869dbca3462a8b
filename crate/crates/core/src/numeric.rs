//! Floating-point oracles: geodesic integration, transport of prolongation
//! sections and loop holonomy, plus an exact polynomial ansatz for Killing
//! forms. Curvature here is recomputed from `Gamma` and its derivatives in
//! `f64`, independently of the symbolic tower.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symexpr::{CompiledSet, Mono, Poly, RatFun, Q, X, Y};
use crate::tensor::{Connection, TensorField};

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicState {
    pub x: [f64; 2],
    pub v: [f64; 2],
    pub tau: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct ProlongationSection {
    pub k: [f64; 2],
    pub mu: f64,
}

impl ProlongationSection {
    fn to_vec(self) -> Vector3<f64> {
        Vector3::new(self.k[0], self.k[1], self.mu)
    }

    fn from_vec(v: Vector3<f64>) -> ProlongationSection {
        ProlongationSection { k: [v[0], v[1]], mu: v[2] }
    }
}

/// Axis-aligned region the integrators must stay inside.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ChartBox {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl ChartBox {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        (self.x.0..=self.x.1).contains(&p[0]) && (self.y.0..=self.y.1).contains(&p[1])
    }
}

impl Default for ChartBox {
    fn default() -> Self {
        ChartBox { x: (-1e6, 1e6), y: (-1e6, 1e6) }
    }
}

/// `Gamma`, its first derivatives and the area form, compiled for `f64`.
#[derive(Clone, Debug)]
pub struct ConnectionEvaluator {
    set: CompiledSet,
}

/// Pointwise values: `gamma[a][b][c] = Gamma^a_bc`, `dgamma[d][a][b][c] = d_d Gamma^a_bc`.
#[derive(Clone, Debug)]
pub struct PointData {
    pub gamma: [[[f64; 2]; 2]; 2],
    pub dgamma: [[[[f64; 2]; 2]; 2]; 2],
    pub eps: f64,
    pub deps: [f64; 2],
}

impl ConnectionEvaluator {
    pub fn new(conn: &Connection) -> Result<ConnectionEvaluator> {
        let mut fns: Vec<RatFun> = conn.components().to_vec();
        for v in [X, Y] {
            fns.extend(conn.components().iter().map(|g| g.diff(v)));
        }
        fns.push(conn.eps12().clone());
        fns.push(conn.eps12().diff(X));
        fns.push(conn.eps12().diff(Y));
        Ok(ConnectionEvaluator { set: CompiledSet::new(&fns)? })
    }

    pub fn at(&self, p: [f64; 2]) -> Result<PointData> {
        let v = self.set.eval(p[0], p[1]);
        if v.iter().any(|z| !z.is_finite()) {
            return Err(Error::Numeric(format!("pole at ({}, {})", p[0], p[1])));
        }
        let unpack = |off: usize| {
            let mut g = [[[0.0; 2]; 2]; 2];
            let idx = |b: usize, c: usize| b + c;
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        g[a][b][c] = v[off + 3 * a + idx(b, c)];
                    }
                }
            }
            g
        };
        Ok(PointData { gamma: unpack(0), dgamma: [unpack(6), unpack(12)], eps: v[18], deps: [v[19], v[20]] })
    }

    pub fn gamma(&self, p: [f64; 2]) -> Result<[[[f64; 2]; 2]; 2]> {
        Ok(self.at(p)?.gamma)
    }

    /// Coefficient matrices `C_a` with parallel sections solving `d_a Psi = C_a Psi`.
    pub fn prolongation(&self, p: [f64; 2]) -> Result<[Matrix3<f64>; 2]> {
        let d = self.at(p)?;
        let g = &d.gamma;
        let dg = &d.dgamma;
        // R_ab^c_d
        let riem = |a: usize, b: usize, c: usize, dd: usize| {
            let mut r = dg[a][c][b][dd] - dg[b][c][a][dd];
            for e in 0..2 {
                r += g[c][a][e] * g[e][b][dd] - g[c][b][e] * g[e][a][dd];
            }
            r
        };
        let ricci = |b: usize, dd: usize| riem(0, b, 0, dd) + riem(1, b, 1, dd);
        let p_ab = |a: usize, b: usize| 2.0 / 3.0 * ricci(a, b) + 1.0 / 3.0 * ricci(b, a);
        let eps_down = |a: usize, b: usize| match (a, b) {
            (0, 1) => d.eps,
            (1, 0) => -d.eps,
            _ => 0.0,
        };
        let eps_up = |a: usize, b: usize| match (a, b) {
            (0, 1) => 1.0 / d.eps,
            (1, 0) => -1.0 / d.eps,
            _ => 0.0,
        };
        let b12 = p_ab(1, 0) - p_ab(0, 1);
        let beta = 2.0 * b12 / d.eps;
        let mut out = [Matrix3::zeros(); 2];
        for a in 0..2 {
            let theta = d.deps[a] / d.eps - g[0][a][0] - g[1][a][1];
            let c = &mut out[a];
            for b in 0..2 {
                for e in 0..2 {
                    c[(b, e)] = g[e][a][b];
                }
                c[(b, 2)] = eps_down(a, b);
                let mut pu = 0.0;
                for e in 0..2 {
                    pu += eps_up(b, e) * p_ab(e, a);
                }
                c[(2, b)] = pu + if a == b { 0.5 * beta } else { 0.0 };
            }
            c[(2, 2)] = -theta;
        }
        Ok(out)
    }
}

fn geodesic_rhs(ev: &ConnectionEvaluator, s: [f64; 4]) -> Result<[f64; 4]> {
    let g = ev.gamma([s[0], s[1]])?;
    let v = [s[2], s[3]];
    let mut acc = [0.0; 2];
    for (a, out) in acc.iter_mut().enumerate() {
        for b in 0..2 {
            for c in 0..2 {
                *out -= g[a][b][c] * v[b] * v[c];
            }
        }
    }
    Ok([v[0], v[1], acc[0], acc[1]])
}

fn axpy(s: [f64; 4], h: f64, k: [f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| s[i] + h * k[i])
}

/// Classical RK4 for `x'' + Gamma(x)(x', x') = 0`.
pub fn integrate_geodesic(
    ev: &ConnectionEvaluator,
    init: GeodesicState,
    tau_end: f64,
    step: f64,
    chart: &ChartBox,
) -> Result<Vec<GeodesicState>> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::Precondition("step must be positive".into()));
    }
    let n = ((tau_end - init.tau) / step).round().max(0.0) as usize;
    let mut s = [init.x[0], init.x[1], init.v[0], init.v[1]];
    let mut out = Vec::with_capacity(n + 1);
    out.push(init);
    for i in 0..n {
        let k1 = geodesic_rhs(ev, s)?;
        let k2 = geodesic_rhs(ev, axpy(s, step / 2.0, k1))?;
        let k3 = geodesic_rhs(ev, axpy(s, step / 2.0, k2))?;
        let k4 = geodesic_rhs(ev, axpy(s, step, k3))?;
        for j in 0..4 {
            s[j] += step / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let x = [s[0], s[1]];
        if s.iter().any(|z| !z.is_finite()) {
            return Err(Error::Numeric("non-finite geodesic state".into()));
        }
        if !chart.contains(x) {
            return Err(Error::Numeric(format!("geodesic left the chart at ({}, {})", x[0], x[1])));
        }
        out.push(GeodesicState { x, v: [s[2], s[3]], tau: init.tau + (i + 1) as f64 * step });
    }
    Ok(out)
}

/// A covector field compiled for `f64`.
#[derive(Clone, Debug)]
pub struct CovectorEvaluator {
    set: CompiledSet,
}

impl CovectorEvaluator {
    pub fn new(k: &TensorField) -> Result<CovectorEvaluator> {
        if k.rank() != 1 {
            return Err(Error::Slot(0));
        }
        Ok(CovectorEvaluator { set: CompiledSet::new(k.comps())? })
    }

    pub fn kappa(&self, s: &GeodesicState) -> f64 {
        let k = self.set.eval(s.x[0], s.x[1]);
        k[0] * s.v[0] + k[1] * s.v[1]
    }
}

/// `max |kappa(tau) - kappa(0)|` with `kappa = K_a x'^a`.
pub fn conservation_check(traj: &[GeodesicState], k: &CovectorEvaluator) -> Result<f64> {
    let first = traj.first().ok_or_else(|| Error::Precondition("empty trajectory".into()))?;
    let k0 = k.kappa(first);
    Ok(traj.iter().map(|s| (k.kappa(s) - k0).abs()).fold(0.0, f64::max))
}

/// Whether RK4 conserves `K_a x'^a` to roundoff regardless of step: for a
/// constant Killing form `K_c Gamma^c_ab = 0`, so `kappa` is a linear invariant
/// of every stage; for `Gamma = 0` the trajectories are reproduced exactly.
pub fn conserved_exactly_by_rk4(conn: &Connection, k: &TensorField) -> bool {
    conn.components().iter().all(|g| g.is_zero()) || k.comps().iter().all(|c| c.constant_value().is_some())
}

/// Writes `tau,x1,x2,v1,v2,kappa` rows.
pub fn write_trajectory_csv(traj: &[GeodesicState], k: &CovectorEvaluator, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Numeric(e.to_string());
    w.write_record(["tau", "x1", "x2", "v1", "v2", "kappa"]).map_err(io)?;
    for s in traj {
        let row = [s.tau, s.x[0], s.x[1], s.v[0], s.v[1], k.kappa(s)];
        w.write_record(row.iter().map(|v| format!("{v:.17e}"))).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Numeric(e.to_string()))
}

/// A parametrized path `t in [0, 1] -> (position, velocity)`.
pub trait Path {
    fn point(&self, t: f64) -> ([f64; 2], [f64; 2]);

    /// Smooth pieces, for paths with corners. Integrators step across each
    /// piece separately so no stage straddles a corner.
    fn pieces(&self) -> Option<&[Box<dyn Path + Send + Sync>]> {
        None
    }
}

pub struct Segment {
    pub from: [f64; 2],
    pub to: [f64; 2],
}

impl Path for Segment {
    fn point(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let d = [self.to[0] - self.from[0], self.to[1] - self.from[1]];
        ([self.from[0] + t * d[0], self.from[1] + t * d[1]], d)
    }
}

/// Counterclockwise circle starting at `center + (r, 0)`.
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Path for Circle {
    fn point(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let (s, c) = (2.0 * PI * t).sin_cos();
        let r = self.radius;
        (
            [self.center[0] + r * c, self.center[1] + r * s],
            [-2.0 * PI * r * s, 2.0 * PI * r * c],
        )
    }
}

/// Concatenation of paths, each taking an equal share of `[0, 1]`.
pub struct Chain(pub Vec<Box<dyn Path + Send + Sync>>);

impl Path for Chain {
    fn point(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let n = self.0.len() as f64;
        let i = ((t * n).floor() as usize).min(self.0.len() - 1);
        let (p, v) = self.0[i].point(t * n - i as f64);
        (p, [v[0] * n, v[1] * n])
    }

    fn pieces(&self) -> Option<&[Box<dyn Path + Send + Sync>]> {
        Some(&self.0)
    }
}

fn transport_rhs(ev: &ConnectionEvaluator, path: &dyn Path, t: f64, m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let (p, v) = path.point(t);
    let c = ev.prolongation(p)?;
    Ok((c[0] * v[0] + c[1] * v[1]) * m)
}

/// Fundamental matrix of the parallel-transport system along `path`.
pub fn transport_matrix(ev: &ConnectionEvaluator, path: &dyn Path, steps: usize) -> Result<Matrix3<f64>> {
    if let Some(pieces) = path.pieces() {
        let per = steps.div_ceil(pieces.len().max(1)).max(1);
        let mut m = Matrix3::identity();
        for piece in pieces {
            m = transport_matrix(ev, piece.as_ref(), per)? * m;
        }
        return Ok(m);
    }
    let h = 1.0 / steps as f64;
    let mut m = Matrix3::identity();
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = transport_rhs(ev, path, t, &m)?;
        let k2 = transport_rhs(ev, path, t + h / 2.0, &(m + k1 * (h / 2.0)))?;
        let k3 = transport_rhs(ev, path, t + h / 2.0, &(m + k2 * (h / 2.0)))?;
        let k4 = transport_rhs(ev, path, t + h, &(m + k3 * h))?;
        m += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    if m.iter().any(|z| !z.is_finite()) {
        return Err(Error::Numeric("non-finite transport".into()));
    }
    Ok(m)
}

pub fn transport_section(
    ev: &ConnectionEvaluator,
    path: &dyn Path,
    init: ProlongationSection,
    steps: usize,
) -> Result<ProlongationSection> {
    Ok(ProlongationSection::from_vec(transport_matrix(ev, path, steps)? * init.to_vec()))
}

/// Smallest factor the loop radii are shrunk by before giving up.
const MIN_LOOP_SCALE: f64 = 1.0 / 4096.0;

const FAR_FROM_IDENTITY: &str = "holonomy too far from the identity for the log series";

fn matrix_log(h: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let e = h - Matrix3::identity();
    if e.norm() > 0.5 {
        return Err(Error::Numeric(FAR_FROM_IDENTITY.into()));
    }
    let mut term = e;
    let mut out = Matrix3::zeros();
    for k in 1..=60 {
        let add = term / k as f64;
        out += if k % 2 == 1 { add } else { -add };
        if add.norm() < 1e-18 {
            break;
        }
        term *= e;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolonomyConfig {
    pub radii: [f64; 2],
    /// Distance from the base point to the loop centres.
    pub ring: f64,
    pub ring_points: usize,
    /// Kernel threshold on singular values of area-normalized loop logs.
    pub threshold: f64,
    pub loop_steps: usize,
}

impl Default for HolonomyConfig {
    fn default() -> Self {
        HolonomyConfig { radii: [1e-2, 5e-3], ring: 0.05, ring_points: 6, threshold: 1e-6, loop_steps: 1024 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HolonomyEstimate {
    /// Dimension of the common fixed subspace of the sampled holonomies.
    pub dimension: u8,
    pub indeterminate: bool,
    pub singular_values: Vec<f64>,
    /// Dimensions from each radius alone, before extrapolation.
    pub per_radius: Vec<u8>,
    pub notes: Vec<String>,
}

fn kernel_dimension(sv: &[f64], tol: f64) -> u8 {
    sv.iter().filter(|&&s| s < tol).count() as u8
}

fn singular_values(rows: &[Matrix3<f64>]) -> Vec<f64> {
    let mut m = DMatrix::zeros(3 * rows.len(), 3);
    for (i, r) in rows.iter().enumerate() {
        for a in 0..3 {
            for b in 0..3 {
                m[(3 * i + a, b)] = r[(a, b)];
            }
        }
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Area-normalized logs of lassos around each centre, one list per radius.
fn loop_logs(
    ev: &ConnectionEvaluator,
    base: [f64; 2],
    centres: &[[f64; 2]],
    radii: [f64; 2],
    steps: usize,
) -> Result<[Vec<Matrix3<f64>>; 2]> {
    let mut logs: [Vec<Matrix3<f64>>; 2] = [Vec::new(), Vec::new()];
    for q in centres {
        let out = if q == &base {
            Matrix3::identity()
        } else {
            transport_matrix(ev, &Segment { from: base, to: *q }, 64)?
        };
        let back = out.try_inverse().ok_or_else(|| Error::Numeric("singular transport".into()))?;
        for (slot, r) in radii.iter().enumerate() {
            let start = [q[0] + r, q[1]];
            let approach = transport_matrix(ev, &Segment { from: *q, to: start }, 8)?;
            let approach_inv = approach.try_inverse().ok_or_else(|| Error::Numeric("singular transport".into()))?;
            let around = transport_matrix(ev, &Circle { center: *q, radius: *r }, steps)?;
            // log of the loop at its own centre, then moved to the base
            // frame; the conjugation may be badly conditioned
            let log = approach_inv * matrix_log(&around)? * approach;
            logs[slot].push(back * log * out / (PI * r * r));
        }
    }
    Ok(logs)
}

/// Estimates the dimension of the space of parallel sections of the
/// prolongation connection near `base`: lassos from `base` to small circles
/// around ring points, area-normalized matrix logs extrapolated linearly in
/// the radius, then the common kernel via singular values.
pub fn holonomy_rank(ev: &ConnectionEvaluator, base: [f64; 2], cfg: &HolonomyConfig) -> Result<HolonomyEstimate> {
    let mut centres = vec![base];
    for j in 0..cfg.ring_points {
        let phi = 2.0 * PI * (j as f64 + 0.5) / cfg.ring_points as f64;
        centres.push([base[0] + cfg.ring * phi.cos(), base[1] + cfg.ring * phi.sin()]);
    }
    // Shrink the loops where curvature is too large for the log series.
    let mut scale = 1.0;
    let logs = loop {
        match loop_logs(ev, base, &centres, [cfg.radii[0] * scale, cfg.radii[1] * scale], cfg.loop_steps) {
            Err(Error::Numeric(msg)) if msg.starts_with(FAR_FROM_IDENTITY) && scale > MIN_LOOP_SCALE => scale /= 2.0,
            other => break other?,
        }
    };
    let [r1, r2] = [cfg.radii[0] * scale, cfg.radii[1] * scale];
    let extrapolated: Vec<Matrix3<f64>> =
        logs[0].iter().zip(&logs[1]).map(|(a, b)| (b * r1 - a * r2) / (r1 - r2)).collect();
    let sv = singular_values(&extrapolated);
    let tol = cfg.threshold * sv[0].max(1.0);
    let dimension = kernel_dimension(&sv, tol);
    let per_radius: Vec<u8> = logs
        .iter()
        .map(|l| {
            let s = singular_values(l);
            kernel_dimension(&s, cfg.threshold * s[0].max(1.0))
        })
        .collect();
    let mut notes = Vec::new();
    let ambiguous = sv.iter().any(|&s| s > tol * 1e-2 && s < tol * 1e2);
    if ambiguous {
        notes.push(format!("singular value within two decades of the threshold {tol:e}"));
    }
    if scale < 1.0 {
        notes.push(format!("loop radii scaled by {scale}"));
    }
    if per_radius.iter().any(|&d| d != dimension) {
        notes.push(format!("per-radius dimensions {per_radius:?} differ from the extrapolated {dimension}"));
    }
    let indeterminate = ambiguous || per_radius.iter().any(|&d| d != dimension);
    Ok(HolonomyEstimate { dimension, indeterminate, singular_values: sv, per_radius, notes })
}

#[derive(Clone, Debug)]
pub struct KillingAnsatz {
    pub degree: u32,
    pub dimension: usize,
    pub basis: Vec<TensorField>,
}

fn monomials(d: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for total in 0..=d {
        for i in (0..=total).rev() {
            out.push((i, total - i));
        }
    }
    out
}

fn mono_poly(i: u32, j: u32) -> Poly {
    Poly::term(Mono::var(X, i).mul(&Mono::var(Y, j)), Q::one())
}

/// Common denominator of all components, as a polynomial.
fn common_denominator(conn: &Connection) -> Poly {
    let mut max: HashMap<Poly, u32> = HashMap::new();
    let mut order = Vec::new();
    for g in conn.components() {
        for (f, e) in g.den_factors() {
            let slot = max.entry(f.clone()).or_insert_with(|| {
                order.push(f.clone());
                0
            });
            *slot = (*slot).max(e);
        }
    }
    order.iter().fold(Poly::one(), |acc, f| acc.mul(&f.pow(max[f])))
}

/// Exact kernel of `M` (rows of rationals) as a list of basis vectors.
fn nullspace(mut rows: Vec<Vec<Q>>, ncols: usize) -> Vec<Vec<Q>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = Q::one() / rows[r][c].clone();
        for v in rows[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for k in c..ncols {
                    let sub = &f * &rows[r][k];
                    rows[i][k] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); ncols];
            v[f] = Q::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -rows[i][f].clone();
            }
            v
        })
        .collect()
}

/// Polynomial Killing forms `K_a` of degree at most `d`. Rational `Gamma`
/// are handled by clearing a common denominator from the equations.
pub fn polynomial_killing_solver(conn: &Connection, d: u32) -> Result<KillingAnsatz> {
    if conn.components().iter().any(|g| !g.kernels().is_empty()) {
        return Err(Error::Precondition("Christoffel symbols are not rational in X, Y".into()));
    }
    let den = common_denominator(conn);
    let den_r = RatFun::from_poly(den.clone());
    let scaled: Vec<Poly> = conn
        .components()
        .iter()
        .map(|g| {
            let s = g.mul(&den_r);
            debug_assert!(s.is_polynomial());
            s.numerator().clone()
        })
        .collect();
    let gamma = |a: usize, b: usize, c: usize| &scaled[3 * a + b + c];
    let monos = monomials(d);
    // unknown u = (component, monomial index)
    let unknowns: Vec<(usize, u32, u32)> =
        (0..2).flat_map(|comp| monos.iter().map(move |&(i, j)| (comp, i, j))).collect();
    let half = Q::new(1.into(), 2.into());
    let vars = [X, Y];
    let mut columns: Vec<[Poly; 3]> = Vec::with_capacity(unknowns.len());
    for &(comp, i, j) in &unknowns {
        let m = mono_poly(i, j);
        let col = [(0, 0), (0, 1), (1, 1)].map(|(a, b)| {
            let mut e = Poly::zero();
            if comp == b {
                e = e.add(&m.partial(vars[a]).scale(&half));
            }
            if comp == a {
                e = e.add(&m.partial(vars[b]).scale(&half));
            }
            e.mul(&den).sub(&gamma(comp, a, b).mul(&m))
        });
        columns.push(col);
    }
    let mut row_index: HashMap<(usize, Mono), usize> = HashMap::new();
    let mut rows: Vec<Vec<Q>> = Vec::new();
    for (u, col) in columns.iter().enumerate() {
        for (eq, p) in col.iter().enumerate() {
            for (m, c) in p.terms() {
                let idx = *row_index.entry((eq, m.clone())).or_insert_with(|| {
                    rows.push(vec![Q::zero(); unknowns.len()]);
                    rows.len() - 1
                });
                rows[idx][u] += c;
            }
        }
    }
    let kernel = nullspace(rows, unknowns.len());
    let basis = kernel
        .iter()
        .map(|v| {
            let mut k = [Poly::zero(), Poly::zero()];
            for (coef, &(comp, i, j)) in v.iter().zip(&unknowns) {
                if !coef.is_zero() {
                    k[comp] = k[comp].add(&mono_poly(i, j).scale(coef));
                }
            }
            let [k1, k2] = k;
            TensorField::one_form(RatFun::from_poly(k1), RatFun::from_poly(k2))
        })
        .collect::<Vec<_>>();
    Ok(KillingAnsatz { degree: d, dimension: basis.len(), basis })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KillingStabilization {
    /// Kernel dimension at `degree`, capped at 3.
    pub dimension: usize,
    pub degree: u32,
    /// Whether `degree` and `degree + 1` gave the same dimension.
    pub stable: bool,
}

/// Runs the ansatz from degree `start` upward until two consecutive degrees
/// agree, giving up after `max_degree`.
pub fn stabilized_killing_dimension(conn: &Connection, start: u32, max_degree: u32) -> Result<KillingStabilization> {
    let mut prev = polynomial_killing_solver(conn, start)?.dimension;
    for d in start + 1..=max_degree.max(start + 1) {
        let cur = polynomial_killing_solver(conn, d)?.dimension;
        if cur == prev {
            return Ok(KillingStabilization { dimension: cur.min(3), degree: d - 1, stable: true });
        }
        prev = cur;
    }
    Ok(KillingStabilization { dimension: prev.min(3), degree: max_degree.max(start + 1), stable: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydro::from_ab;
    use crate::invariants::normal_form;
    use crate::symexpr::{parse, ZeroTestConfig};

    fn example1(c: i64) -> Connection {
        let a = parse(&format!("({c})*X+Y")).unwrap();
        let b = parse(&format!("X+({c})*Y")).unwrap();
        from_ab(&a, &b, &ZeroTestConfig::default()).unwrap().conn
    }

    fn gamma_y() -> Connection {
        Connection::from_fn(|a, b, c| if a == 1 && b + c == 1 { RatFun::from_sym(Y) } else { RatFun::zero() })
    }

    fn start(x: [f64; 2], v: [f64; 2]) -> GeodesicState {
        GeodesicState { x, v, tau: 0.0 }
    }

    #[test]
    fn flat_geodesic_is_a_line() {
        let ev = ConnectionEvaluator::new(&Connection::flat()).unwrap();
        let traj = integrate_geodesic(&ev, start([0.5, -1.0], [2.0, 3.0]), 1.0, 0.01, &ChartBox::default()).unwrap();
        let last = traj.last().unwrap();
        assert!((last.x[0] - 2.5).abs() < 1e-12 && (last.x[1] - 2.0).abs() < 1e-12);
        assert_eq!(traj.len(), 101);
    }

    #[test]
    fn gamma_y_conserves_dx() {
        let conn = gamma_y();
        let ev = ConnectionEvaluator::new(&conn).unwrap();
        let k = CovectorEvaluator::new(&TensorField::one_form(RatFun::one(), RatFun::zero())).unwrap();
        let traj = integrate_geodesic(&ev, start([0.1, 0.2], [0.3, 0.4]), 10.0, 1e-3, &ChartBox::default()).unwrap();
        assert!(conservation_check(&traj, &k).unwrap() <= 1e-10);
    }

    #[test]
    fn rk4_error_scales_with_fourth_power() {
        // x'' = -x'^2 in the flat-free direction: x(t) = ln(1 + v t)
        let conn = Connection::from_fn(|a, b, c| if a == 0 && b == 0 && c == 0 { RatFun::one() } else { RatFun::zero() });
        let ev = ConnectionEvaluator::new(&conn).unwrap();
        let err = |h: f64| {
            let t = integrate_geodesic(&ev, start([0.0, 0.0], [3.0, 0.0]), 2.0, h, &ChartBox::default()).unwrap();
            (t.last().unwrap().x[0] - 7f64.ln()).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let ev = ConnectionEvaluator::new(&Connection::flat()).unwrap();
        let k = CovectorEvaluator::new(&TensorField::one_form(RatFun::one(), RatFun::zero())).unwrap();
        let traj = integrate_geodesic(&ev, start([0.0, 0.0], [1.0, 0.0]), 0.1, 0.05, &ChartBox::default()).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &k, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "tau,x1,x2,v1,v2,kappa");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn chart_exit_is_an_error() {
        let ev = ConnectionEvaluator::new(&Connection::flat()).unwrap();
        let chart = ChartBox { x: (-1.0, 1.0), y: (-1.0, 1.0) };
        assert!(integrate_geodesic(&ev, start([0.0, 0.0], [1.0, 0.0]), 3.0, 0.1, &chart).is_err());
    }

    #[test]
    fn holonomy_dimensions() {
        let cfg = HolonomyConfig::default();
        let flat = ConnectionEvaluator::new(&Connection::flat()).unwrap();
        assert_eq!(holonomy_rank(&flat, [0.3, 0.4], &cfg).unwrap().dimension, 3);
        for (c, expected) in [(0, 3), (3, 2), (2, 1)] {
            let ev = ConnectionEvaluator::new(&example1(c)).unwrap();
            let h = holonomy_rank(&ev, [1.0, 2.0], &cfg).unwrap();
            assert_eq!(h.dimension, expected, "c = {c}: {h:?}");
            assert!(!h.indeterminate, "c = {c}: {h:?}");
        }
        let nf = normal_form(1, &parse("Y^2").unwrap(), &parse("1").unwrap()).unwrap();
        let ev = ConnectionEvaluator::new(&nf).unwrap();
        assert_eq!(holonomy_rank(&ev, [0.5, 0.7], &cfg).unwrap().dimension, 2);
    }

    #[test]
    fn transported_killing_section_matches_field() {
        // K = dX is parallel for Gamma^2_12 = Y; mu = eps^{ab} d_a K_b / 2 = 0
        let ev = ConnectionEvaluator::new(&gamma_y()).unwrap();
        let path = Circle { center: [0.2, 0.1], radius: 0.3 };
        let init = ProlongationSection { k: [1.0, 0.0], mu: 0.0 };
        let out = transport_section(&ev, &path, init, 200).unwrap();
        assert!((out.k[0] - 1.0).abs() < 1e-10 && out.k[1].abs() < 1e-10 && out.mu.abs() < 1e-10);
    }

    #[test]
    fn solver_flat_and_simple() {
        let flat = Connection::flat();
        assert_eq!(polynomial_killing_solver(&flat, 0).unwrap().dimension, 2);
        assert_eq!(polynomial_killing_solver(&flat, 1).unwrap().dimension, 3);
        assert_eq!(stabilized_killing_dimension(&flat, 0, 3).unwrap().dimension, 3);
        let g = gamma_y();
        assert_eq!(
            polynomial_killing_solver(&g, 2).unwrap().dimension,
            polynomial_killing_solver(&g, 3).unwrap().dimension
        );
        let nf = normal_form(0, &parse("Y^2").unwrap(), &parse("1").unwrap()).unwrap();
        assert_eq!(polynomial_killing_solver(&nf, 2).unwrap().dimension, 2);
    }

    #[test]
    fn solver_basis_is_killing() {
        let conn = example1(3);
        let sol = polynomial_killing_solver(&conn, 2).unwrap();
        for k in &sol.basis {
            assert!(crate::invariants::killing_residual(&conn, k).unwrap().iter().all(|r| r.is_zero()));
        }
    }
}
