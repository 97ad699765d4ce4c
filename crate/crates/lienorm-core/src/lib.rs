#![no_std]
//! Sparse Poisson-series algebra, satellite Hamiltonian builders, Lie-series
//! normalization and the stability / steepness estimates built on top of them.
//!
//! Internal units: lengths in Earth radii, time in years, angles in radians.

extern crate alloc;

pub mod error;
pub mod math;
pub mod series;
pub mod norm;
pub mod kepler;
pub mod constants;
pub mod j2;
pub mod normalform;
pub mod gls;
pub mod estimates;
pub mod steepness;
pub mod oracle;
pub mod pipeline;

pub use error::{Error, Result};
pub use series::{PoissonSeries, Term, Trig, MAX_DOF};
