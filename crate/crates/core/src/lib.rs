//! Linear first integrals of torsion-free affine connections on a 2D chart,
//! and Hamiltonian structures of two-component hydrodynamic-type systems.

pub mod corpus;
pub mod error;
pub mod hydro;
pub mod invariants;
pub mod numeric;
pub mod symexpr;
pub mod tensor;

pub use error::{Error, Result};
