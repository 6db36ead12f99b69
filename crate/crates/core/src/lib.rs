//! Sheaf models of heterogeneous sensor systems over finite topologies.
//!
//! The crate is `no_std` (it needs `alloc`). It covers:
//!
//! * [`topology`]: finite topologies over named entities, generated from sensor domains.
//! * [`spaces`]: pseudometric value spaces for observations.
//! * [`sheaf`]: stalks, restriction maps, completion of unions and axiom checkers.
//! * [`consistency`]: assignments, the sup pseudometric and the consistency radius.
//! * [`fusion`]: nearest global section search with a Nelder-Mead solver.
//! * [`cohomology`]: Čech complexes, Betti numbers, Leray checks and stochastic lifts.
//! * [`scenarios`]: ready-made sheaves for search-and-rescue, obstacle and coin examples.
#![no_std]
#![warn(missing_docs)]

extern crate alloc;

pub mod cohomology;
pub mod consistency;
mod error;
pub mod fusion;
pub mod geo;
pub mod linalg;
pub mod scenarios;
pub mod sheaf;
pub mod spaces;
pub mod topology;

pub use error::{Error, Result};
