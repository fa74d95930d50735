//! Trotter error analysis for two-part splittings of local spin Hamiltonians.

pub mod bounds;
pub mod dense;
pub mod error;
pub mod hamiltonian;
pub mod identities;
pub mod pauli;
pub mod product_formula;
pub mod quadrature;
pub mod scan;
pub mod series;

pub use error::{Error, Result};
