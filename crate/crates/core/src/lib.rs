//! Floorplanning of hard rectangular modules.
//!
//! Coordinates are optimized by a conjugate subgradient method on a penalized
//! wirelength objective, orientations by a distribution-evolution search over
//! per-module quantum-style amplitude vectors. Two flows are provided: a
//! fixed-outline planner ([`ffa`]) and a golden-section minimum-area planner
//! ([`gss`]).

pub mod csa;
pub mod dea;
pub mod legalize;
pub mod model;
pub mod objective;
pub mod rng;
pub mod ffa;
pub mod synth;
pub mod io;
pub mod gss;
pub mod selftest;
#[cfg(feature = "cli")]
pub mod cli;
