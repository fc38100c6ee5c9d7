//! Protocol laboratory for Birkhoff-polytope masked aggregation.
//!
//! Clients hide a bitstream inside a doubly stochastic matrix
//! `D = α*·M(b) + Σ α_i P_i` and a server recovers only the aggregate bit count.
//! The crate provides
//!
//! * [`linalg`]: permutation encodings, extraction vectors, bilinear forms,
//! * [`sampling`]: seedable Fisher–Yates and flat-Dirichlet coefficient draws,
//! * [`protocol`]: the four protocol variants as explicit entity pipelines,
//! * [`attacks`]: de-shuffling, Bayesian posteriors and matrix attacks,
//! * [`hardness`]: permanents, support sets, residuals and tuple feasibility,
//! * [`dp`]: a closed-form privacy accountant,
//! * [`sim`]: the server-view simulator and KS / Hoeffding harnesses,
//! * [`cli`]: configuration, serialization and the `polyveil` command line.
//!
//! Indices are 0-based everywhere in the library. JSON fixtures and the
//! command line use 1-based permutation maps and convert at the boundary.

pub mod attacks;
pub mod cli;
pub mod dp;
pub mod error;
pub mod hardness;
pub mod linalg;
pub mod protocol;
pub mod sampling;
pub mod sim;

pub use error::{Error, Result};
