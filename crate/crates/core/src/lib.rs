//! Disturbed semilinear reaction-diffusion equations on an interval.
//!
//! The crate simulates `x' = A x + g(x) + h u(t)` with `A` the Dirichlet
//! Laplacian on `(0, L)`, samples global attractors of the undisturbed and
//! hull-disturbed systems, and derives and checks asymptotic-gain and
//! input-to-state practical stability bounds.
//!
//! Modules, bottom up:
//! - [`signals`]: step-signal inputs, translations and translate hulls
//! - [`spectral`]: sine-series states, the heat semigroup and the sine transform
//! - [`semiflow`]: exponential integrators, semiprocess and equilibria
//! - [`attractor`]: absorbing balls, attractor clouds and Hausdorff semi-distances
//! - [`stability`]: certificates, ISpS envelopes and empirical gain curves

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attractor;
pub mod error;
pub mod par;
pub mod presets;
pub mod sampling;
pub mod semiflow;
pub mod signals;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
