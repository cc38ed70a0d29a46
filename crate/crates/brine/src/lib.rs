//! Finite-size phase behavior of a dilute solution (salt in a freezing
//! solvent) modeled as an Ising magnet carrying a conserved salt field.
//!
//! When the external field and the salt concentration both scale like the
//! inverse linear size of the box, the phase diagram in the scaled
//! variables `(xi, b)` is governed by surface-order large-deviation rate
//! functions with closed forms. This crate evaluates those rate functions,
//! solves the associated variational problems, traces every critical
//! curve, rasterizes the resulting phase diagrams, and validates the
//! theory against an exact small-lattice enumeration and a Monte Carlo
//! sampler of the underlying lattice model.
//!
//! Modules, roughly bottom-up:
//!
//! * [`params`]: shared physical inputs.
//! * [`rate`]: closed-form rate functions and their derivatives.
//! * [`minimize`]: global minimizers of the reduced rate function.
//! * [`curves`]: thresholds, boundary curves, and the finite-concentration
//!   linkage.
//! * [`diagram`]: regime classification, rasters, CSV/SVG output.
//! * [`exact`]: exact counts, entropies, and tiny-lattice enumeration.
//! * [`sim`]: Metropolis + salt heat-bath sampler with exact replay.

#![allow(clippy::excessive_precision)]

pub mod curves;
pub mod diagram;
mod error;
pub mod exact;
pub mod minimize;
mod numerics;
pub mod params;
pub mod rate;
pub mod sim;

pub use error::{Error, Result};
pub use params::{onsager_m_star, BoundaryCondition, ModelParams, ThermoPoint, ISING_2D_JC};
