//! Simulation and verification toolkit for implicit-max extremal integrals.
//!
//! A loss function `f` singles out which vectors count as extreme; the
//! implicit maximum of a family picks the member with the largest loss
//! value. This crate builds the full stack on top of that operation:
//!
//! * [`algebra`] — loss functions, the implicit max/second-max, the induced
//!   partial order, and a perturbation bound;
//! * [`laws`] — Fréchet laws, angular measures on the unit loss sphere, and
//!   the implicit Fréchet family `sigma * Z * Theta`;
//! * [`measure`] — interval-based measure spaces, simple functions,
//!   partition refinement, dyadic monotone approximation, and `L^alpha`
//!   quadrature;
//! * [`supmeasure`] — realizations of the random sup-measure `M`:
//!   independent per-cell draws, and a coupled transformed-Poisson series
//!   usable for every integrand at once;
//! * [`integral`] — the extremal integral `I(g)` with truncation
//!   accounting, pointwise-max combination, and process simulation;
//! * [`verify`] — a KS/chi-square/Kendall-tau harness with one named check
//!   per closed-form claim;
//! * [`config`] / [`output`] — JSON run configuration and CSV/SVG emission
//!   for the command-line front end.
//!
//! Monte Carlo work parallelizes across replications (rayon, behind the
//! default `parallel` feature) with per-replication RNG substreams, so
//! results are identical with and without parallelism.

// parameter guards are written `!(x > 0.0)` on purpose: they must reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod config;
pub mod error;
pub mod exec;
pub mod integral;
pub mod laws;
pub mod measure;
pub mod output;
pub mod rng;
pub mod supmeasure;
pub mod verify;

pub use error::{Error, Result};
