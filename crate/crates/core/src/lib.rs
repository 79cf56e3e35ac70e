//! Numerical verification of the analytic identities attached to pairs of
//! modular elliptic curves over ℚ: Rankin–Selberg unfolding, Eisenstein
//! functional equations, Kronecker's limit formula and an elliptic analogue
//! of the cyclotomic class number formula.

pub mod arith;
pub mod curves;
pub mod domain;
pub mod eisenstein;
pub mod error;
pub mod lseries;
pub mod modular;
pub(crate) mod quad;
pub mod specialfn;
pub mod verify;

pub use error::{Error, Result};
