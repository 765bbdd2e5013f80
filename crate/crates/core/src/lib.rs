//! Finite-N training and high-dimensional limits of a one-layer contrastive model.
//!
//! The crate covers both sides of the mean-field picture:
//!
//! * [`sgd`] runs one-pass mini-batch SGD on the spiked-sphere data of [`data`]
//!   and records the order parameters `q = Uᵀw/N`, `r = wᵀφ(w)/N`;
//! * [`expectations`] evaluates the population averages that drive the limit
//!   (drift `g`, diffusion `Λ`, centering `ȳ`) by Gauss–Hermite quadrature;
//! * [`ode`] holds closed-form right-hand sides for the quadratic activation and
//!   an RK4 integrator, [`pde`] a finite-volume Fokker–Planck solver;
//! * [`analysis`] finds fixed points, thresholds, basins and noise sweeps.
//!
//! Independent work items (seeds, basin cells, sweep points, PDE slices) are
//! dispatched through [`Execution`], which uses rayon when the `parallel`
//! feature is enabled and a plain loop otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod activation;
pub mod analysis;
pub mod data;
pub mod error;
pub mod expectations;
pub mod ode;
pub mod par;
pub mod pde;
pub mod quadrature;
pub mod sgd;

pub use activation::{Activation, Prior};
pub use data::{HiddenDistribution, Moments, NoiseModel};
pub use error::{Error, Result};
pub use expectations::{Centering, CoefficientSet, MeanField, QuadratureSpec};
pub use par::Execution;
