//! Simulator and verification harness for Lagrangian mean curvature flow of
//! entire graphs, driven through the scalar potential `u` of the graph
//! `(x, Du(x))`.
//!
//! The crate is organised bottom-up: [`grid`] holds periodic fields and
//! finite-difference stencils, [`geometry`] evaluates the pointwise graph
//! geometry (Lagrangian angle, induced metric, curvature norms), [`initdata`]
//! builds and transforms initial data, [`flow`] advances the potential and
//! vector flows, and [`analysis`] reduces runs to diagnostics and residuals.
//!
//! Parallel execution over grid points is enabled by the default `parallel`
//! feature (rayon). All reductions are associative min/max merges, so results
//! are bitwise identical to the sequential fallback regardless of worker
//! count.

// In stencil and small-tensor code the loop index is the mathematical object
// (axis, eigenvalue slot, matrix entry); iterator rewrites obscure that.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod initdata;
pub mod parallel;
pub mod sym;

pub use error::{Error, Result};
