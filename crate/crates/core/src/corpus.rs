//! Built-in example suite. Each entry carries the claim it reproduces, the
//! expected verdict and a chart where the numeric oracles may run.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hydro::{
    frobenius_corpus, frobenius_exp_integral, from_ab, from_lambdas, zoll_corpus, zoll_two_integral_f, FrobeniusCase,
    HydroSystem,
};
use crate::invariants::{classify, killing_verify, normal_form, normal_form_integrals, Certainty, ClassificationReport};
use crate::numeric::{polynomial_killing_solver, ChartBox};
use crate::symexpr::{parse, q, Expr, RatFun, SampleBox, ZeroTestConfig, Q};
use crate::tensor::{Connection, TensorField};

#[derive(Clone, Debug, PartialEq)]
pub enum CorpusInput {
    Flat,
    NormalForm { c: u8, p: String, q: String },
    AB { a: String, b: String },
    Lambdas { lambda1: String, lambda2: String },
    Frobenius(FrobeniusCase),
    Zoll { f: String, h: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Expected {
    Count(u8),
    AtLeast(u8),
    /// Precondition failure with the named error kind.
    Rejected(String),
}

impl Expected {
    fn describe(&self) -> String {
        match self {
            Expected::Count(n) => n.to_string(),
            Expected::AtLeast(n) => format!(">={n}"),
            Expected::Rejected(kind) => format!("rejected:{kind}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub id: String,
    pub params: String,
    pub citation: String,
    pub input: CorpusInput,
    pub expected: Expected,
    /// Additionally require `beta` to zero-test as zero.
    pub beta_zero: bool,
    pub sample_box: Option<SampleBox>,
    pub chart: ChartBox,
    pub base_points: [[f64; 2]; 2],
    /// Initial velocity for conservation runs from the first base point,
    /// large enough that RK4 truncation error exceeds roundoff.
    pub velocity: [f64; 2],
}

fn e(s: &str) -> Result<Expr> {
    Ok(parse(s)?)
}

/// Short name of an error variant, used in reports.
pub fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Sym(_) => "Symbolic",
        Error::InvariantViolation(_) => "InvariantViolation",
        Error::Precondition(_) => "Precondition",
        Error::NotStrictlyHyperbolic => "NotStrictlyHyperbolic",
        Error::LinearlyDegenerate(_) => "LinearlyDegenerate",
        Error::Slot(_) => "Slot",
        Error::Numeric(_) => "Numeric",
    }
}

impl CorpusEntry {
    pub fn config(&self, base: &ZeroTestConfig) -> ZeroTestConfig {
        let mut cfg = base.clone();
        if let Some(b) = &self.sample_box {
            cfg.sample_box = b.clone();
        }
        cfg
    }

    pub fn connection(&self, cfg: &ZeroTestConfig) -> Result<Connection> {
        match &self.input {
            CorpusInput::Flat => Ok(Connection::flat()),
            CorpusInput::NormalForm { c, p, q } => normal_form(*c, &e(p)?, &e(q)?),
            CorpusInput::AB { a, b } => Ok(from_ab(&e(a)?, &e(b)?, cfg)?.conn),
            CorpusInput::Lambdas { lambda1, lambda2 } => {
                Ok(from_lambdas(&HydroSystem::new(e(lambda1)?, e(lambda2)?), cfg)?.conn)
            }
            CorpusInput::Frobenius(case) => Ok(from_lambdas(&frobenius_corpus(*case)?, cfg)?.conn),
            CorpusInput::Zoll { f, h } => zoll_corpus(&e(f)?, &e(h)?),
        }
    }

    /// Integrals known in closed form for this entry, before verification.
    fn planted_integrals(&self) -> Result<Vec<TensorField>> {
        let dx = || TensorField::one_form(RatFun::one(), RatFun::zero());
        let dy = || TensorField::one_form(RatFun::zero(), RatFun::one());
        Ok(match &self.input {
            CorpusInput::Flat => vec![dx(), dy(), TensorField::one_form(RatFun::from_sym(crate::symexpr::Y), RatFun::from_sym(crate::symexpr::X).neg())],
            CorpusInput::NormalForm { c, p, q } => normal_form_integrals(*c, &e(p)?, &e(q)?)?.to_vec(),
            CorpusInput::Frobenius(FrobeniusCase::Exp2V) => {
                let (one, zero) = (|| q(1, 1), || Q::from_integer(0.into()));
                vec![
                    frobenius_exp_integral([one(), zero(), zero()]),
                    frobenius_exp_integral([zero(), one(), zero()]),
                    frobenius_exp_integral([zero(), zero(), one()]),
                ]
            }
            // Gamma^2 vanishes identically for this representative
            CorpusInput::Zoll { .. } => vec![dy()],
            _ => Vec::new(),
        })
    }

    /// Killing forms certified by zero-testing the Killing operator. Closed
    /// forms are used when known, otherwise the polynomial ansatz up to
    /// `degree`.
    pub fn certified_integrals(&self, conn: &Connection, cfg: &ZeroTestConfig, degree: u32) -> Result<Vec<TensorField>> {
        let mut ks = self.planted_integrals()?;
        if ks.is_empty() {
            ks = match polynomial_killing_solver(conn, degree) {
                Ok(sol) => sol.basis,
                Err(Error::Precondition(_)) => Vec::new(),
                Err(err) => return Err(err),
            };
        }
        let mut out = Vec::new();
        for k in ks {
            if killing_verify(conn, &k, cfg)?.is_zero() {
                out.push(k);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusRow {
    pub id: String,
    pub params: String,
    pub citation: String,
    pub expected: String,
    pub computed: String,
    pub agreement: bool,
    pub certainty: Option<Certainty>,
    pub branch: String,
    pub notes: Vec<String>,
}

fn check(entry: &CorpusEntry, report: &ClassificationReport) -> (bool, Vec<String>) {
    let mut notes = Vec::new();
    let mut ok = match entry.expected {
        Expected::Count(n) => report.count == n,
        Expected::AtLeast(n) => report.count >= n,
        Expected::Rejected(_) => false,
    };
    if entry.beta_zero {
        let zero = report.verdict("beta").is_some_and(|v| v.is_zero());
        notes.push(format!("beta zero-test: {}", if zero { "zero" } else { "not zero" }));
        ok &= zero;
    }
    (ok, notes)
}

pub fn run_entry(entry: &CorpusEntry, base: &ZeroTestConfig) -> CorpusRow {
    let cfg = entry.config(base);
    let mut row = CorpusRow {
        id: entry.id.clone(),
        params: entry.params.clone(),
        citation: entry.citation.clone(),
        expected: entry.expected.describe(),
        computed: String::new(),
        agreement: false,
        certainty: None,
        branch: String::new(),
        notes: Vec::new(),
    };
    match entry.connection(&cfg).and_then(|conn| classify(&conn, &cfg)) {
        Ok(report) => {
            let (ok, notes) = check(entry, &report);
            row.computed = report.count.to_string();
            row.agreement = ok;
            row.certainty = Some(report.certainty);
            row.branch = report.branch.clone();
            row.notes = report.notes.iter().cloned().chain(notes).collect();
        }
        Err(err) => {
            let kind = error_kind(&err);
            row.computed = format!("rejected:{kind}");
            row.agreement = entry.expected == Expected::Rejected(kind.to_string());
            row.notes.push(err.to_string());
        }
    }
    row
}

fn zoll_box() -> SampleBox {
    SampleBox::new(q(1, 5), q(13, 10), q(-1, 1), q(1, 1))
}

/// The full built-in suite, in report order.
pub fn corpus() -> Vec<CorpusEntry> {
    let wide = ChartBox { x: (-1e3, 1e3), y: (-1e3, 1e3) };
    let mut out = vec![CorpusEntry {
        id: "flat".into(),
        params: "Gamma=0".into(),
        citation: "flat connection: dX, dY and Y dX - X dY are integrals".into(),
        input: CorpusInput::Flat,
        expected: Expected::Count(3),
        beta_zero: false,
        sample_box: None,
        chart: wide,
        base_points: [[0.3, 0.4], [-0.7, 1.1]],
        velocity: [1.0, 0.5],
    }];
    out.push(CorpusEntry {
        id: "normal-form-y2".into(),
        params: "c=0, P=Y^2, Q=1".into(),
        citation: "two-integral normal form: integrals dX and P dX + Q dY".into(),
        input: CorpusInput::NormalForm { c: 0, p: "Y^2".into(), q: "1".into() },
        expected: Expected::Count(2),
        beta_zero: false,
        sample_box: None,
        chart: wide,
        base_points: [[0.5, 0.7], [-0.4, 0.2]],
        velocity: [3.0, 4.0],
    });
    for (c, expected, citation) in [
        (0, 3, "A=cX+Y, B=X+cY: c=0 projectively flat, tri-Hamiltonian"),
        (3, 2, "A=cX+Y, B=X+cY: c=3 precisely two integrals, bi-Hamiltonian"),
        (-3, 2, "A=cX+Y, B=X+cY: c=-3 precisely two integrals, bi-Hamiltonian"),
        (2, 1, "A=cX+Y, B=X+cY: c not 0, 3, -3 gives a unique Hamiltonian"),
        (1, 1, "A=cX+Y, B=X+cY: c=1 parallel volume form, unique Hamiltonian"),
    ] {
        out.push(CorpusEntry {
            id: format!("ex1-c{c}"),
            params: format!("c={c}"),
            citation: citation.into(),
            input: CorpusInput::AB { a: format!("({c})*X+Y"), b: format!("X+({c})*Y") },
            expected: if c == 1 { Expected::AtLeast(1) } else { Expected::Count(expected) },
            beta_zero: c == 1,
            sample_box: None,
            chart: ChartBox { x: (0.5, 3.0), y: (0.5, 3.0) },
            base_points: [[1.0, 2.0], [1.7, 1.2]],
            velocity: [0.6, -0.4],
        });
    }
    out.push(CorpusEntry {
        id: "ex2-elastic-h1".into(),
        params: "h(v)=1".into(),
        citation: "elastic medium u_t=h^2 v_x, v_t=u_x: h=1 forces A=-G''/(2G')=0".into(),
        input: CorpusInput::AB { a: "0".into(), b: "0".into() },
        expected: Expected::Rejected("LinearlyDegenerate".into()),
        beta_zero: false,
        sample_box: None,
        chart: wide,
        base_points: [[0.3, 0.4], [-0.7, 1.1]],
        velocity: [1.0, 0.5],
    });
    out.push(CorpusEntry {
        id: "ex2-toda".into(),
        params: "A=-B=1/(2(X-Y))".into(),
        citation: "elastic medium, singular solution A=1/(2z): Toda equation, tri-Hamiltonian".into(),
        input: CorpusInput::AB { a: "1/(2*(X-Y))".into(), b: "-1/(2*(X-Y))".into() },
        expected: Expected::Count(3),
        beta_zero: true,
        sample_box: Some(SampleBox::new(q(2, 1), q(3, 1), q(-1, 1), q(1, 1))),
        chart: ChartBox { x: (1.5, 9.0), y: (-7.0, 1.2) },
        base_points: [[2.5, 0.0], [3.0, -0.5]],
        velocity: [2.4, -3.2],
    });
    for n in 1..=3i64 {
        for m in 1..=3i64 {
            let tri = n * m * (n * n - m * m) == 0;
            out.push(CorpusEntry {
                id: format!("ex3-n{n}-m{m}"),
                params: format!("n={n}, m={m}"),
                citation: "lambda1=-lambda2=(X-Y)^n (X+Y)^m: always bi-Hamiltonian, tri-Hamiltonian iff nm(n^2-m^2)=0"
                    .into(),
                input: CorpusInput::Lambdas {
                    lambda1: format!("(X-Y)^{n}*(X+Y)^{m}"),
                    lambda2: format!("-(X-Y)^{n}*(X+Y)^{m}"),
                },
                expected: Expected::Count(if tri { 3 } else { 2 }),
                beta_zero: false,
                sample_box: None,
                chart: ChartBox { x: (1.1, 12.0), y: (-1.0, 1.0) },
                base_points: [[2.0, 0.5], [2.6, 0.3]],
                velocity: [4.0, 0.2],
            });
        }
    }
    let frobenius = [
        (FrobeniusCase::Power(3), Expected::Rejected("LinearlyDegenerate".into())),
        (FrobeniusCase::Power(4), Expected::Count(3)),
        (FrobeniusCase::Power(-1), Expected::Count(3)),
        (FrobeniusCase::V2LnV, Expected::Count(3)),
        (FrobeniusCase::LnV, Expected::Count(3)),
        (FrobeniusCase::Exp2V, Expected::Count(3)),
    ];
    for (case, expected) in frobenius {
        out.push(CorpusEntry {
            id: format!("ex4-{}", case.label()),
            params: format!("f={}", case.label()),
            citation: if case == FrobeniusCase::Power(3) {
                "2D Frobenius manifold with f=v^3: f''' constant, so A=B=0 and the system is linearly degenerate".into()
            } else {
                "2D Frobenius manifold F=u^2 v/2+f(v): projectively flat and special, tri-Hamiltonian".into()
            },
            input: CorpusInput::Frobenius(case),
            expected,
            beta_zero: false,
            sample_box: None,
            chart: ChartBox { x: (1.0, 9.0), y: (-7.0, 1.2) },
            base_points: [[1.8, 0.2], [2.2, -0.3]],
            velocity: [2.4, -3.2],
        });
    }
    let zoll = [
        ("ex5-round", "0", "0", Expected::Count(3), "Zoll metric case H=0 with F=0: round sphere, projectively flat"),
        (
            "ex5-general",
            "sin(2*X)/2",
            "sin(2*X)^2",
            Expected::AtLeast(1),
            "Zoll representative Gamma^1_11=A1, Gamma^1_12=A2/2, Gamma^1_22=A3 admits a first integral for any F, H",
        ),
    ];
    for (id, f, h, expected, citation) in zoll {
        out.push(zoll_entry(id, format!("F={f}, H={h}"), f.into(), h.into(), expected, citation));
    }
    for (id, h, expected) in [("ex5-family-h", "sin(2*X)^2", 2u8), ("ex5-family-h0", "0", 3u8)] {
        let f = zoll_two_integral_f(q(1, 10), &parse(h).expect("literal parses")).to_string();
        let citation = if h == "0" {
            "Zoll family F=1+c(H^2+1)cot X at H=0: symmetric Ricci, so not exactly two integrals"
        } else {
            "Zoll family F=1+c(H^2+1)cot X: precisely two integrals"
        };
        let params = format!("F=1+c(H^2+1)cot X, c=1/10, H={h}");
        out.push(zoll_entry(id, params, f, h.into(), Expected::Count(expected), citation));
    }
    out
}

fn zoll_entry(id: &str, params: String, f: String, h: String, expected: Expected, citation: &str) -> CorpusEntry {
    CorpusEntry {
        id: id.into(),
        params,
        citation: citation.into(),
        input: CorpusInput::Zoll { f, h },
        expected,
        beta_zero: false,
        sample_box: Some(zoll_box()),
        chart: ChartBox { x: (0.15, 1.45), y: (-2.0, 2.0) },
        base_points: [[0.7, 0.1], [1.0, -0.4]],
        velocity: [-0.1, 0.03],
    }
}

pub fn find(id: &str) -> Option<CorpusEntry> {
    corpus().into_iter().find(|e| e.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique() {
        let c = corpus();
        let mut ids: Vec<_> = c.iter().map(|e| e.id.clone()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), c.len());
    }

    #[test]
    fn rejection_rows_agree() {
        let row = run_entry(&find("ex2-elastic-h1").unwrap(), &ZeroTestConfig::default());
        assert!(row.agreement, "{row:?}");
        assert_eq!(row.computed, "rejected:LinearlyDegenerate");
    }

    #[test]
    fn example1_rows_agree() {
        for c in [0, 3, -3, 2, 1] {
            let row = run_entry(&find(&format!("ex1-c{c}")).unwrap(), &ZeroTestConfig::default());
            assert!(row.agreement, "{row:?}");
        }
    }
}
