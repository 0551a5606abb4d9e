//! Numerical laboratory for the symmetric exclusion process with a slow bond
//! and its hydrodynamic equations.

pub mod energy;
pub mod error;
pub mod experiments;
pub mod green;
pub mod grid;
pub mod heat;
pub mod ssep;

pub use error::{Error, Result};
