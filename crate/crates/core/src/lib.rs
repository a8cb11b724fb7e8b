//! Group-velocity-dispersion broadening of the SPDC biphoton.
//!
//! The crate is organised along the measurement chain:
//!
//! - [`spectral`]: spectral amplitudes `F(Ω)` of type-I and type-II
//!   down-conversion, spectral filters and unit conversion.
//! - [`propagation`]: `G¹(τ)`, the dispersive biphoton `ψ(τ)`, `G²(τ)`, its
//!   far-field limit, the dispersion length and the windowed coincidence rate.
//! - [`detection`]: detector jitter, Monte Carlo TAC-MCA histograms and width
//!   metrics.
//! - [`fitting`]: recovery of the dispersion budget (or the crystal `D″`) from
//!   a histogram.
//! - [`scenario`]: configuration files, presets and the end-to-end runs used by
//!   the command-line tool.
//!
//! All quantities are strict SI internally (s, m, rad/s, s²/m).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
mod error;
pub mod fitting;
pub mod propagation;
mod sampled;
pub mod scenario;
pub mod spectral;
pub mod units;

pub use error::{Error, Result};
