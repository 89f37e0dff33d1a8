//! Simulation and verification primitives for perpetuities driven by a
//! finite semi-Markov environment.
//!
//! The crate is `no_std` (it needs `alloc`). All sampling takes an explicit
//! random stream, so replications can run on independent workers.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod linalg;
mod math;

pub mod apps;
pub mod distributions;
pub mod limitlaws;
pub mod perpetuity;
pub mod semimarkov;
pub mod sre;
pub mod stats;

pub use error::{Error, Result};
