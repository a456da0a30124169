//! Multi-agent consensus and flocking dynamics.
//!
//! The crate is organised bottom-up:
//!
//! - [`ensemble`] and [`stats`]: agent state containers and the diagnostics
//!   shared by every model (variances, barycenters, clusters).
//! - [`network`]: metric, topological, static and long-range neighbourhoods.
//! - [`potential`]: interaction kernels, influence functions, Morse energy and
//!   the tail integrals behind the flocking-region tests.
//! - [`dynamics`]: right-hand sides, discrete update rules and integrators.
//! - [`control`]: feedback laws, region predicates and controlled systems.
//! - [`meanfield`]: particle discretisation of the kinetic alignment equation
//!   and the binary Boltzmann control scheme.
//!
//! Monte Carlo loops go through [`par`], which uses rayon when the `parallel`
//! feature is enabled and falls back to a plain loop otherwise. Results are
//! identical either way.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod dynamics;
pub mod ensemble;
mod error;
pub mod linalg;
pub mod meanfield;
pub mod network;
pub mod par;
pub mod potential;
pub mod record;
pub mod rng;
pub mod stats;

pub use ensemble::Ensemble;
pub use error::{Error, Result};
pub use record::{ControlSample, RunRecord, Sample};
