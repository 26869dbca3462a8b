//! Symbolic expressions over the chart variables `X`, `Y`.
//!
//! [`Expr`] is the user-facing immutable tree. Computation happens on
//! [`RatFun`], a rational function in the chart variables, bound parameters
//! and transcendental kernels (`sin u`, `cos u`, `exp u`, `ln u`, `u^r`).

mod ball;
mod eval;
mod expr;
mod gcd;
mod parse;
mod poly;
mod ratfun;
mod symbol;
mod zero;

pub use ball::{Dyadic, Real};
pub use eval::{eval_at, eval_ratfun, CompiledSet};
pub use expr::{Expr, Func, Node};
pub use parse::{parse, parse_with_params};
pub use poly::{Mono, Poly};
pub use ratfun::RatFun;
pub use symbol::{Kernel, Sym, X, Y};
pub use zero::{is_zero, is_zero_ratfun, SampleBox, ZeroTestConfig, ZeroVerdict};

/// Exact rational numbers.
pub type Q = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("pole at {0}")]
    Pole(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameter `{0}` has no numeric binding")]
    UnboundParameter(String),
    #[error("every sample point hit a pole or domain error: {0}")]
    AllSamplesSingular(String),
}

/// Convenience constructor for small rationals.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}
