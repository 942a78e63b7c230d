//! Exact enumeration and series evaluation for the dimer and monomer-dimer
//! problems on d-dimensional rectangular lattices.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod exactmath;
pub mod expansions;
pub mod lattice;
pub mod matchgen;

pub use error::{Error, Result};
