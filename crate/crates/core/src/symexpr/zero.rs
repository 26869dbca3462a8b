//! Zero testing: exact for rational functions, sampled with rigorous
//! enclosures when transcendental kernels are present.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::eval::eval_ratfun;
use super::expr::Expr;
use super::ratfun::RatFun;
use super::{q, SymError, Q};

/// Axis-aligned sampling region for the chart variables.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBox {
    pub x: (Q, Q),
    pub y: (Q, Q),
}

impl Default for SampleBox {
    fn default() -> Self {
        SampleBox { x: (q(-3, 1), q(3, 1)), y: (q(-3, 1), q(3, 1)) }
    }
}

impl SampleBox {
    pub fn new(x0: Q, x1: Q, y0: Q, y1: Q) -> SampleBox {
        SampleBox { x: (x0, x1), y: (y0, y1) }
    }

    fn positive_part(&self) -> SampleBox {
        let clip = |(a, b): &(Q, Q)| {
            if b.is_positive() && !a.is_positive() {
                (Q::zero(), b.clone())
            } else {
                (a.clone(), b.clone())
            }
        };
        SampleBox { x: clip(&self.x), y: clip(&self.y) }
    }
}

#[derive(Clone, Debug)]
pub struct ZeroTestConfig {
    pub samples: usize,
    pub precision: u32,
    /// Precision is doubled up to this bound while enclosures stay too wide.
    pub max_precision: u32,
    pub threshold: Q,
    pub seed: u64,
    pub sample_box: SampleBox,
}

impl Default for ZeroTestConfig {
    fn default() -> Self {
        ZeroTestConfig {
            samples: 8,
            precision: 256,
            max_precision: 4096,
            threshold: Q::new(1.into(), num_bigint::BigInt::from(10).pow(60)),
            seed: 0,
            sample_box: SampleBox::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum ZeroVerdict {
    ProvenZero {
        canonical: String,
    },
    ProvenNonzero {
        /// Canonical form when the proof is by normalization.
        canonical: Option<String>,
        /// Sample point with an enclosure excluding zero.
        point: Option<(String, String)>,
        enclosure: Option<String>,
    },
    ProbablyZero {
        samples: usize,
        points: Vec<(String, String)>,
    },
    Indeterminate {
        reason: String,
    },
}

impl ZeroVerdict {
    /// `ProvenZero` or `ProbablyZero`.
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::ProvenZero { .. } | ZeroVerdict::ProbablyZero { .. })
    }

    pub fn is_nonzero(&self) -> bool {
        matches!(self, ZeroVerdict::ProvenNonzero { .. })
    }

    pub fn is_proven(&self) -> bool {
        matches!(self, ZeroVerdict::ProvenZero { .. } | ZeroVerdict::ProvenNonzero { .. })
    }

    pub fn is_indeterminate(&self) -> bool {
        matches!(self, ZeroVerdict::Indeterminate { .. })
    }

    pub fn label(&self) -> String {
        match self {
            ZeroVerdict::ProvenZero { .. } => "ProvenZero".into(),
            ZeroVerdict::ProvenNonzero { .. } => "ProvenNonzero".into(),
            ZeroVerdict::ProbablyZero { samples, .. } => format!("ProbablyZero({samples})"),
            ZeroVerdict::Indeterminate { .. } => "Indeterminate".into(),
        }
    }
}

fn sample_point(rng: &mut ChaCha8Rng, b: &SampleBox) -> (Q, Q) {
    let mut pick = |(lo, hi): &(Q, Q)| {
        let k: i64 = rng.gen_range(1..1024);
        lo + (hi - lo) * q(k, 1024)
    };
    let x = pick(&b.x);
    let y = pick(&b.y);
    (x, y)
}

fn needs_positive(r: &RatFun) -> bool {
    r.symbols().iter().any(|s| s.info().needs_positive)
}

/// Deterministic sample points for `r` (the positive part of the box when
/// logarithms or fractional powers occur).
pub(crate) fn sample_points(r: &RatFun, cfg: &ZeroTestConfig, count: usize) -> Vec<(Q, Q)> {
    let b = if needs_positive(r) { cfg.sample_box.positive_part() } else { cfg.sample_box.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..count).map(|_| sample_point(&mut rng, &b)).collect()
}

pub fn is_zero(e: &Expr, cfg: &ZeroTestConfig) -> Result<ZeroVerdict, SymError> {
    is_zero_ratfun(&e.to_ratfun()?, cfg)
}

pub fn is_zero_ratfun(r: &RatFun, cfg: &ZeroTestConfig) -> Result<ZeroVerdict, SymError> {
    if r.is_zero() {
        return Ok(ZeroVerdict::ProvenZero { canonical: "0".into() });
    }
    let attempts = cfg.samples.max(1) * 8;
    let points = sample_points(r, cfg, attempts);
    let show = |(x, y): &(Q, Q)| (x.to_string(), y.to_string());

    if r.kernels().is_empty() {
        // nonzero numerator of a rational function: nonzero by normalization
        let canonical = Some(r.canonical_string());
        for p in &points {
            if let Ok(v) = eval_ratfun(r, &p.0, &p.1, cfg.precision) {
                if !v.contains_zero() {
                    return Ok(ZeroVerdict::ProvenNonzero {
                        canonical,
                        point: Some(show(p)),
                        enclosure: Some(v.to_string()),
                    });
                }
            }
        }
        return Ok(ZeroVerdict::ProvenNonzero { canonical, point: None, enclosure: None });
    }

    let mut good = Vec::new();
    let mut wide = Vec::new();
    let mut singular = Vec::new();
    for p in &points {
        if good.len() + wide.len() >= cfg.samples {
            break;
        }
        let mut prec = cfg.precision;
        loop {
            match eval_ratfun(r, &p.0, &p.1, prec) {
                Err(SymError::Pole(_)) | Err(SymError::Domain(_)) => {
                    singular.push(show(p));
                    break;
                }
                Err(e) => return Err(e),
                Ok(v) => {
                    if !v.contains_zero() {
                        return Ok(ZeroVerdict::ProvenNonzero {
                            canonical: None,
                            point: Some(show(p)),
                            enclosure: Some(v.to_string()),
                        });
                    }
                    if v.width() < cfg.threshold {
                        good.push(show(p));
                        break;
                    }
                    if prec >= cfg.max_precision {
                        wide.push(show(p));
                        break;
                    }
                    prec = (prec * 2).min(cfg.max_precision);
                }
            }
        }
    }
    if good.is_empty() && wide.is_empty() {
        let list: Vec<String> = singular.iter().map(|(x, y)| format!("({x}, {y})")).collect();
        return Err(SymError::AllSamplesSingular(list.join(", ")));
    }
    if !wide.is_empty() {
        return Ok(ZeroVerdict::Indeterminate {
            reason: format!("{} sample(s) with enclosures wider than the threshold", wide.len()),
        });
    }
    Ok(ZeroVerdict::ProbablyZero { samples: good.len(), points: good })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn verdict(s: &str) -> ZeroVerdict {
        is_zero(&parse(s).unwrap(), &ZeroTestConfig::default()).unwrap()
    }

    #[test]
    fn trivial_verdicts() {
        assert!(matches!(verdict("X-X"), ZeroVerdict::ProvenZero { .. }));
        match verdict("X+Y") {
            ZeroVerdict::ProvenNonzero { point, .. } => assert!(point.is_some()),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn pythagoras_is_probably_zero() {
        assert_eq!(verdict("sin(X)^2+cos(X)^2-1"), ZeroVerdict::ProbablyZero {
            samples: 8,
            points: match verdict("sin(X)^2+cos(X)^2-1") {
                ZeroVerdict::ProbablyZero { points, .. } => points,
                _ => unreachable!(),
            }
        });
    }

    #[test]
    fn transcendental_nonzero_has_witness() {
        assert!(verdict("sin(X)^2+cos(X)^2-1+exp(-40)").is_nonzero());
    }

    #[test]
    fn all_poles_is_an_error() {
        let cfg = ZeroTestConfig { sample_box: SampleBox::new(q(-2, 1), q(-1, 1), q(1, 1), q(2, 1)), ..Default::default() };
        let r = is_zero(&parse("ln(X)").unwrap(), &cfg);
        assert!(matches!(r, Err(SymError::AllSamplesSingular(_))));
    }
}
