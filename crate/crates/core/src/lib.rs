//! Relative-intensity noise of twin beams from four-wave mixing in a lossy
//! medium.
//!
//! The medium is described by an intrinsic squeezing parameter `S` (gain
//! `G = cosh²S`) and single-pass transmissions `Ta`, `Tb`; detection adds
//! beamsplitter losses `η_a`, `η_b`. [`analytic::nf_general`] evaluates the
//! continuum model through a closed-form 2x2 matrix exponential and a
//! Sylvester solve, [`chain::nf_discrete`] evaluates the discrete interleaved
//! gain/loss chain it is the limit of, and [`diagnostic`] inverts measured
//! beam gains back to `(G, Ta)`.

pub mod analytic;
pub mod chain;
pub mod cli;
pub mod diagnostic;
pub mod error;
pub mod linalg;
pub mod model;
pub mod params;

pub use error::{Error, Result};
pub use model::{NoiseResult, VarianceBreakdown};
pub use params::{DetectionParams, MediumParams};
