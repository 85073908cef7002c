//! SU(N) spin ladders with fundamental spins on one sublattice and
//! antifundamental spins on the other: exact diagonalization, stochastic
//! series expansion Monte Carlo and correlation-length analysis.

pub mod algebra;
pub mod analysis;
pub mod ed;
pub mod error;
pub mod io;
pub mod lattice;
pub mod qmc;

pub use error::{Error, Result};
