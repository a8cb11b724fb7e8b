//! Automatic frequency/time grid sizing.
//!
//! - `omega_max` is four times the spectral reach (the crystal's first zero,
//!   or the filter bandwidth when that is narrower), raised when needed so
//!   the grid's Fourier resolution `π/omega_max` stays below 1/64 of the
//!   expected `G²` width.
//! - `ΔΩ` keeps the quadratic phase step `|B|·omega_max·ΔΩ` at 90% of `π/4`
//!   and the trapezoid period `2π/ΔΩ` at least four times `tau_max`.
//! - The time grid is reciprocal to the frequency grid (`ΔΩ·Δτ = 2π/N`),
//!   with spacing at most 1/128 of the expected width and 1/10 of the
//!   detector jitter.

use std::f64::consts::PI;

use super::TimeGrid;
use crate::spectral::{CrystalSpec, FilterShape, FilterSpec, FrequencyGrid};
use crate::{Error, Result};

const FIRST_ZERO_MULTIPLE: f64 = 4.0;
const RESOLUTION_PER_WIDTH: f64 = 64.0;
const TAU_STEPS_PER_WIDTH: f64 = 128.0;
const TAU_STEPS_PER_JITTER: f64 = 10.0;
const PHASE_SAFETY: f64 = 0.9;
const MAX_TAU_HALF_POINTS: f64 = 8192.0;
const MAX_OMEGA_HALF_POINTS: f64 = (1u64 << 26) as f64;

/// Optional explicit grid parameters; `None` fields are sized automatically.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GridRequest {
    pub omega_max: Option<f64>,
    pub n_omega: Option<usize>,
    pub tau_max: Option<f64>,
    pub n_tau: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPlan {
    pub frequency: FrequencyGrid,
    pub time: TimeGrid,
}

/// Spectral scales of the filtered crystal amplitude.
struct SpectralScales {
    /// Detuning beyond which the amplitude is negligible.
    reach: f64,
    /// Characteristic spectral width.
    width: f64,
}

fn spectral_scales(crystal: &CrystalSpec, filters: &[FilterSpec]) -> SpectralScales {
    let zero = crystal.first_zero();
    let mut reach = zero;
    let mut width = zero;
    for flt in filters {
        let bw = flt.bandwidth();
        let flt_reach = match flt.shape() {
            FilterShape::Gaussian => bw,
            FilterShape::Rectangular => 0.5 * bw,
        } + flt.center_offset().abs();
        reach = reach.min(flt_reach);
        width = width.min(bw);
    }
    SpectralScales { reach, width }
}

/// Rough FWHM scale of `G²`: the Fourier limit or the far-field width,
/// whichever is larger.
pub fn expected_width(crystal: &CrystalSpec, filters: &[FilterSpec], total_b: f64) -> f64 {
    let s = spectral_scales(crystal, filters);
    (2.0 * PI / s.width).max(total_b.abs() * s.width)
}

/// Fully automatic grids.
pub fn auto_grids(
    crystal: &CrystalSpec,
    filters: &[FilterSpec],
    total_b: f64,
    jitter_fwhm: f64,
) -> Result<GridPlan> {
    plan_grids(
        &GridRequest::default(),
        crystal,
        filters,
        total_b,
        jitter_fwhm,
    )
}

pub fn plan_grids(
    request: &GridRequest,
    crystal: &CrystalSpec,
    filters: &[FilterSpec],
    total_b: f64,
    jitter_fwhm: f64,
) -> Result<GridPlan> {
    if !total_b.is_finite() {
        return Err(Error::invalid("dispersion budget must be finite"));
    }
    if !(jitter_fwhm >= 0.0) {
        return Err(Error::invalid("jitter must be non-negative"));
    }
    let scales = spectral_scales(crystal, filters);
    let width = expected_width(crystal, filters, total_b);

    let omega_max = request.omega_max.unwrap_or_else(|| {
        (FIRST_ZERO_MULTIPLE * scales.reach).max(RESOLUTION_PER_WIDTH * PI / width)
    });
    let tau_max = request.tau_max.unwrap_or_else(|| {
        1.05 * total_b.abs() * omega_max + 4.0 * 2.0 * PI / scales.width + 3.0 * jitter_fwhm
    });

    let n_omega = match request.n_omega {
        Some(n) => n,
        None => {
            let mut step = PI / (2.0 * tau_max);
            if total_b != 0.0 {
                step = step.min(PHASE_SAFETY * PI / (4.0 * total_b.abs() * omega_max));
            }
            let half = (omega_max / step).ceil();
            if half > MAX_OMEGA_HALF_POINTS {
                return Err(Error::invalid(format!(
                    "automatic frequency grid needs {:.3e} points; reduce the dispersion budget",
                    2.0 * half + 1.0
                )));
            }
            2 * half as usize + 1
        }
    };
    let frequency = FrequencyGrid::new(omega_max, n_omega)?;

    let time = match request.n_tau {
        Some(n) => TimeGrid::new(tau_max, n)?,
        None => {
            let mut dtau = width / TAU_STEPS_PER_WIDTH;
            if jitter_fwhm > 0.0 {
                dtau = dtau.min(jitter_fwhm / TAU_STEPS_PER_JITTER);
            }
            dtau = dtau.max(tau_max / MAX_TAU_HALF_POINTS);
            TimeGrid::reciprocal(frequency.step(), dtau, tau_max)?
        }
    };
    Ok(GridPlan { frequency, time })
}
