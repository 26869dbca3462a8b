//! Problem files: flat TOML key/value pairs with quoted expressions.
//!
//! ```text
//! mode = "classify-connection"
//! G111 = "0"
//! G112 = "0"
//! G122 = "0"
//! G211 = "0"
//! G212 = "Y"
//! G222 = "0"
//! eps12 = "1"
//! seed = 7
//! ```
//!
//! Hydro problems give `lambda1`/`lambda2` or `A`/`B` instead of the `G`
//! keys; `params.<name>` binds constants used in either block. The corpus
//! selectors `frobenius.case` (with `frobenius.k` for powers) and
//! `zoll.F`/`zoll.H` stand in for a hydro or connection block respectively.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use affint_core::hydro::{frobenius_corpus, zoll_corpus, FrobeniusCase, HydroSystem};
use affint_core::numeric::ChartBox;
use affint_core::symexpr::{parse_with_params, Expr, SampleBox, Q};
use affint_core::tensor::Connection;
use toml::{Table, Value};

use crate::CliError;

const GAMMA_KEYS: [&str; 6] = ["G111", "G112", "G122", "G211", "G212", "G222"];

#[derive(Clone, Debug)]
pub enum HydroInput {
    Lambdas(HydroSystem),
    AB(Expr, Expr),
}

#[derive(Clone, Debug)]
pub enum Block {
    Connection(Connection),
    Hydro(HydroInput),
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub seed: Option<u64>,
    pub precision: Option<u32>,
    pub samples: Option<usize>,
    pub sample_box: Option<SampleBox>,
    pub tau_end: Option<f64>,
    pub step: Option<f64>,
    pub loop_radius: Option<f64>,
    pub ansatz_degree: Option<u32>,
    pub base_point: Option<[f64; 2]>,
    pub velocity: Option<[f64; 2]>,
    pub chart: Option<ChartBox>,
    pub trajectory_csv: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub mode: Option<String>,
    pub block: Block,
    pub options: Options,
    pub output: Option<PathBuf>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

fn precondition(msg: impl Into<String>) -> CliError {
    CliError::Core(affint_core::Error::Precondition(msg.into()))
}

fn string(v: &Value, key: &str) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        _ => Err(bad(format!("`{key}` must be a quoted expression"))),
    }
}

fn float(v: &Value, key: &str) -> Result<f64, CliError> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(format!("`{key}` must be a number"))),
    }
}

fn integer(v: &Value, key: &str) -> Result<i64, CliError> {
    v.as_integer().ok_or_else(|| bad(format!("`{key}` must be an integer")))
}

fn floats<const N: usize>(v: &Value, key: &str) -> Result<[f64; N], CliError> {
    let arr = v.as_array().filter(|a| a.len() == N).ok_or_else(|| bad(format!("`{key}` must be an array of {N} numbers")))?;
    let mut out = [0.0; N];
    for (o, x) in out.iter_mut().zip(arr) {
        *o = float(x, key)?;
    }
    Ok(out)
}

fn rational(s: &str, key: &str) -> Result<Q, CliError> {
    let e = parse_with_params(s, &[]).map_err(|e| bad(format!("`{key}`: {e}")))?;
    e.as_rational_constant().ok_or_else(|| bad(format!("`{key}` must be a rational constant")))
}

struct Reader {
    table: Table,
    params: Vec<String>,
    bindings: HashMap<String, Expr>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<Value> {
        self.table.remove(key)
    }

    fn take_sub(&mut self, table: &str, key: &str) -> Result<Option<Value>, CliError> {
        match self.table.get_mut(table) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(t.remove(key)),
            Some(_) => Err(bad(format!("`{table}` must be a dotted key group"))),
        }
    }

    fn expr(&self, text: &str, key: &str) -> Result<Expr, CliError> {
        let names: Vec<&str> = self.params.iter().map(String::as_str).collect();
        let e = parse_with_params(text, &names).map_err(|e| bad(format!("`{key}`: {e}")))?;
        Ok(if self.bindings.is_empty() { e } else { e.substitute(&self.bindings) })
    }

    fn expr_key(&mut self, key: &str) -> Result<Option<Expr>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => Ok(Some(self.expr(&string(&v, key)?, key)?)),
        }
    }
}

pub fn load(path: &Path) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_problem(&text)
}

pub fn parse_problem(text: &str) -> Result<Problem, CliError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| bad(e.to_string()))?;
    let mut r = Reader { table, params: Vec::new(), bindings: HashMap::new() };
    if let Some(v) = r.take("params") {
        let t = v.as_table().ok_or_else(|| bad("`params` must hold `params.<name>` keys"))?.clone();
        r.params = t.keys().cloned().collect();
        for (name, v) in &t {
            let e = parse_with_params(&string(v, name)?, &[]).map_err(|e| bad(format!("`params.{name}`: {e}")))?;
            r.bindings.insert(name.clone(), e);
        }
    }
    let mode = r.take("mode").map(|v| string(&v, "mode")).transpose()?;
    let output = r.take("output").map(|v| string(&v, "output").map(PathBuf::from)).transpose()?;

    let mut blocks = Vec::new();
    let has_gamma = GAMMA_KEYS.iter().any(|k| r.table.contains_key(*k));
    if has_gamma {
        let mut g = Vec::with_capacity(6);
        for k in GAMMA_KEYS {
            let e = r.expr_key(k)?.ok_or_else(|| precondition(format!("connection block is missing `{k}`")))?;
            g.push(e.to_ratfun().map_err(|e| CliError::Core(e.into()))?);
        }
        let eps = match r.expr_key("eps12")? {
            Some(e) => e,
            None => Expr::int(1),
        };
        let eps = eps.to_ratfun().map_err(|e| CliError::Core(e.into()))?;
        let g: [_; 6] = g.try_into().expect("six components");
        blocks.push(Block::Connection(Connection::new(g, eps)?));
    } else if r.table.contains_key("eps12") {
        return Err(precondition("`eps12` given without a connection block"));
    }
    let (l1, l2) = (r.expr_key("lambda1")?, r.expr_key("lambda2")?);
    match (l1, l2) {
        (Some(a), Some(b)) => blocks.push(Block::Hydro(HydroInput::Lambdas(HydroSystem::new(a, b)))),
        (None, None) => {}
        _ => return Err(precondition("hydro block needs both `lambda1` and `lambda2`")),
    }
    let (a, b) = (r.expr_key("A")?, r.expr_key("B")?);
    match (a, b) {
        (Some(a), Some(b)) => blocks.push(Block::Hydro(HydroInput::AB(a, b))),
        (None, None) => {}
        _ => return Err(precondition("hydro block needs both `A` and `B`")),
    }
    if let Some(case) = r.take_sub("frobenius", "case")? {
        let case = string(&case, "frobenius.case")?;
        let k = r.take_sub("frobenius", "k")?.map(|v| integer(&v, "frobenius.k")).transpose()?;
        let case = match (case.as_str(), k) {
            ("v^k", Some(k)) => FrobeniusCase::Power(k),
            ("v^2 ln v", None) => FrobeniusCase::V2LnV,
            ("ln v", None) => FrobeniusCase::LnV,
            ("exp(2v)", None) => FrobeniusCase::Exp2V,
            _ => return Err(bad("`frobenius.case` is one of \"v^k\" (with `frobenius.k`), \"v^2 ln v\", \"ln v\", \"exp(2v)\"")),
        };
        blocks.push(Block::Hydro(HydroInput::Lambdas(frobenius_corpus(case)?)));
    }
    let zf = r.take_sub("zoll", "F")?;
    let zh = r.take_sub("zoll", "H")?;
    match (zf, zh) {
        (Some(f), Some(h)) => {
            let f = r.expr(&string(&f, "zoll.F")?, "zoll.F")?;
            let h = r.expr(&string(&h, "zoll.H")?, "zoll.H")?;
            blocks.push(Block::Connection(zoll_corpus(&f, &h)?));
        }
        (None, None) => {}
        _ => return Err(precondition("zoll selector needs both `zoll.F` and `zoll.H`")),
    }
    for group in ["frobenius", "zoll"] {
        if r.table.get(group).and_then(Value::as_table).is_some_and(|t| t.is_empty()) {
            r.table.remove(group);
        }
    }
    if blocks.len() != 1 {
        return Err(precondition(format!(
            "exactly one connection or hydro block is required, found {}",
            blocks.len()
        )));
    }

    let mut o = Options::default();
    if let Some(v) = r.take("seed") {
        o.seed = Some(u64::try_from(integer(&v, "seed")?).map_err(|_| bad("`seed` must be non-negative"))?);
    }
    if let Some(v) = r.take("precision") {
        o.precision = Some(u32::try_from(integer(&v, "precision")?).map_err(|_| bad("`precision` out of range"))?);
    }
    if let Some(v) = r.take("samples") {
        o.samples = Some(usize::try_from(integer(&v, "samples")?).map_err(|_| bad("`samples` out of range"))?);
    }
    if let Some(v) = r.take("sample_box") {
        let arr = v.as_array().filter(|a| a.len() == 4).ok_or_else(|| bad("`sample_box` is [x0, x1, y0, y1]"))?;
        let q: Vec<Q> =
            arr.iter().map(|x| string(x, "sample_box").and_then(|s| rational(&s, "sample_box"))).collect::<Result<_, _>>()?;
        o.sample_box = Some(SampleBox::new(q[0].clone(), q[1].clone(), q[2].clone(), q[3].clone()));
    }
    if let Some(v) = r.take("chart") {
        let [x0, x1, y0, y1] = floats::<4>(&v, "chart")?;
        o.chart = Some(ChartBox { x: (x0, x1), y: (y0, y1) });
    }
    o.tau_end = r.take("tau_end").map(|v| float(&v, "tau_end")).transpose()?;
    o.step = r.take("step").map(|v| float(&v, "step")).transpose()?;
    o.loop_radius = r.take("loop_radius").map(|v| float(&v, "loop_radius")).transpose()?;
    if let Some(v) = r.take("ansatz_degree") {
        o.ansatz_degree = Some(u32::try_from(integer(&v, "ansatz_degree")?).map_err(|_| bad("`ansatz_degree` out of range"))?);
    }
    o.base_point = r.take("base_point").map(|v| floats::<2>(&v, "base_point")).transpose()?;
    o.velocity = r.take("velocity").map(|v| floats::<2>(&v, "velocity")).transpose()?;
    o.trajectory_csv = r.take("trajectory_csv").map(|v| string(&v, "trajectory_csv").map(PathBuf::from)).transpose()?;

    if let Some(k) = r.table.keys().next() {
        return Err(bad(format!("unknown key `{k}`")));
    }
    Ok(Problem { mode, block: blocks.pop().expect("one block"), options: o, output })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn connection_block() {
        let p = parse_problem(
            "G111 = \"0\"\nG112 = \"0\"\nG122 = \"0\"\nG211 = \"0\"\nG212 = \"Y\"\nG222 = \"0\"\nseed = 3\n",
        )
        .unwrap();
        assert!(matches!(p.block, Block::Connection(_)));
        assert_eq!(p.options.seed, Some(3));
    }

    #[test]
    fn params_are_substituted() {
        let p = parse_problem("A = \"c*X+Y\"\nB = \"X+c*Y\"\nparams.c = \"3\"\n").unwrap();
        let Block::Hydro(HydroInput::AB(a, _)) = p.block else { panic!() };
        let expected = parse_with_params("3*X+Y", &[]).unwrap();
        assert!(a.to_ratfun().unwrap().sub(&expected.to_ratfun().unwrap()).is_zero());
    }

    #[test]
    fn two_blocks_rejected() {
        let err = parse_problem("A = \"X\"\nB = \"Y\"\nlambda1 = \"X\"\nlambda2 = \"Y\"\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_problem("A = \"X\"\nB = \"Y\"\nfoo = 1\n").unwrap_err();
        assert!(matches!(err, CliError::Parse(_)));
    }

    #[test]
    fn zoll_selector() {
        let p = parse_problem("zoll.F = \"0\"\nzoll.H = \"0\"\n").unwrap();
        assert!(matches!(p.block, Block::Connection(_)));
    }
}
