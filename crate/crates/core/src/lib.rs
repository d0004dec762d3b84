//! Dissipation-projected dynamics of Lindblad generators.
//!
//! The crate builds Lindbladian superoperators, splits them into steady-state
//! projector and reduced resolvent, evaluates Kato perturbation terms and
//! effective generators, and drives the scaling, spectrum, holonomy and
//! robustness experiments exposed by the `dproj` binary.

pub mod error;
pub mod holonomy;
pub mod kato;
pub mod liouville;
pub mod models;
pub mod steady;
pub mod tensor;
pub mod xp;

pub use error::{Error, Result};
