//! First- and second-order correlation functions of the biphoton after
//! propagation through dispersive media.
//!
//! With a dispersion budget `B = Σ k″·z` the biphoton amplitude is
//!
//! ```text
//! ψ(τ) = ∫ F(Ω) · exp(i·B·Ω²/2) · cos(Ω·τ) dΩ,      G²(τ) = |ψ(τ)|²
//! ```
//!
//! while `G¹(τ) = ∫ |F(Ω)|² cos(Ω·τ) dΩ` never sees the spectral phase.
//! Integrals are trapezoid sums on the uniform detuning grid; see
//! [`quadrature`] for how they are evaluated.

mod quadrature;
pub mod sizing;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::sampled;
use crate::spectral::{check_odd_count, FrequencyGrid, SpectralAmplitude};
use crate::{Error, Result};

pub(crate) use quadrature::FoldedSpectrum;
pub use sizing::{auto_grids, plan_grids, GridPlan, GridRequest};

/// One propagation path: group-velocity dispersion `k2` (s²/m, signed) over
/// length `z` (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arm {
    pub k2: f64,
    pub z: f64,
}

/// Dispersion accumulated by the signal and idler photons.
///
/// Negative `k2` entries model compensating media.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DispersionBudget {
    arms: Vec<Arm>,
}

impl DispersionBudget {
    pub fn new(arms: Vec<Arm>) -> Result<Self> {
        for (i, arm) in arms.iter().enumerate() {
            if !(arm.z >= 0.0) || !arm.z.is_finite() {
                return Err(Error::invalid(format!(
                    "arm {} has invalid length {}",
                    i + 1,
                    arm.z
                )));
            }
            if !arm.k2.is_finite() {
                return Err(Error::invalid(format!("arm {} has non-finite k2", i + 1)));
            }
        }
        Ok(Self { arms })
    }

    /// No dispersive medium.
    pub fn none() -> Self {
        Self::default()
    }

    /// `n_arms` identical arms.
    pub fn uniform(k2: f64, z: f64, n_arms: usize) -> Result<Self> {
        Self::new(vec![Arm { k2, z }; n_arms])
    }

    /// A single unit-length arm carrying the whole budget `total_b` (s²).
    pub fn from_total(total_b: f64) -> Result<Self> {
        Self::new(vec![Arm {
            k2: total_b,
            z: 1.0,
        }])
    }

    /// This budget followed by `other`.
    pub fn then(&self, other: &DispersionBudget) -> Self {
        let mut arms = self.arms.clone();
        arms.extend_from_slice(&other.arms);
        Self { arms }
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    /// `B = Σ k2·z` in s².
    pub fn total_b(&self) -> f64 {
        self.arms.iter().fold(0.0, |acc, a| acc + a.k2 * a.z)
    }

    pub fn total_length(&self) -> f64 {
        self.arms.iter().fold(0.0, |acc, a| acc + a.z)
    }
}

/// Uniform, symmetric grid of delays `−tau_max ..= tau_max` (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    tau_max: f64,
    n_points: usize,
}

impl TimeGrid {
    pub fn new(tau_max: f64, n_points: usize) -> Result<Self> {
        if !(tau_max > 0.0) || !tau_max.is_finite() {
            return Err(Error::invalid(format!(
                "tau_max must be positive, got {tau_max}"
            )));
        }
        check_odd_count(n_points)?;
        Ok(Self { tau_max, n_points })
    }

    /// Grid with spacing `2π/(N·omega_step)` for the smallest integer `N`
    /// giving spacing ≤ `max_step`, extended to cover at least `min_tau_max`.
    pub fn reciprocal(omega_step: f64, max_step: f64, min_tau_max: f64) -> Result<Self> {
        if !(omega_step > 0.0 && max_step > 0.0 && min_tau_max > 0.0) {
            return Err(Error::invalid(
                "reciprocal grid parameters must be positive",
            ));
        }
        let n_fft = (2.0 * PI / (omega_step * max_step)).ceil();
        let step = 2.0 * PI / (n_fft * omega_step);
        let half = (min_tau_max / step).ceil().max(1.0);
        Self::new(half * step, 2 * half as usize + 1)
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn center(&self) -> usize {
        (self.n_points - 1) / 2
    }

    pub fn step(&self) -> f64 {
        self.tau_max / self.center() as f64
    }

    pub fn value(&self, j: usize) -> f64 {
        (j as f64 - self.center() as f64) * self.step()
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.value(j)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Maximum value is 1.
    PeakOne,
    /// Trapezoid integral over the grid is 1 (a probability density in s⁻¹).
    UnitIntegral,
}

/// A non-negative correlation function sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationFunction {
    grid: TimeGrid,
    values: Vec<f64>,
    normalization: Normalization,
}

impl CorrelationFunction {
    /// Scales `values` to the requested normalization.
    pub fn new(grid: TimeGrid, values: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::invalid(format!(
                "{} samples for a {}-point time grid",
                values.len(),
                grid.n_points()
            )));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(
                "correlation values must be finite and non-negative",
            ));
        }
        let mut out = Self {
            grid,
            values,
            normalization,
        };
        let scale = out.norm_of(normalization);
        if !(scale > 0.0) {
            return Err(Error::invalid("correlation function is identically zero"));
        }
        out.values.iter_mut().for_each(|v| *v /= scale);
        Ok(out)
    }

    fn norm_of(&self, mode: Normalization) -> f64 {
        match mode {
            Normalization::PeakOne => self.values.iter().copied().fold(0.0, f64::max),
            Normalization::UnitIntegral => sampled::trapezoid(&self.grid.values(), &self.values),
        }
    }

    pub fn renormalized(&self, normalization: Normalization) -> Self {
        let scale = self.norm_of(normalization);
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v / scale).collect(),
            normalization,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn taus(&self) -> Vec<f64> {
        self.grid.values()
    }

    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        sampled::trapezoid(&self.taus(), &self.values)
    }

    /// Linear interpolation, zero outside the grid.
    pub fn at(&self, tau: f64) -> f64 {
        let h = self.grid.center() as f64;
        let pos = tau / self.grid.step() + h;
        if !(pos >= 0.0) || pos > (self.grid.n_points() - 1) as f64 {
            return 0.0;
        }
        let i = (pos.floor() as usize).min(self.grid.n_points() - 2);
        let t = pos - i as f64;
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}

/// Complex biphoton amplitude `ψ(τ)` (unnormalized; units rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonAmplitude {
    grid: TimeGrid,
    values: Vec<Complex64>,
}

impl BiphotonAmplitude {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `|ψ(τ)|²` without normalization.
    pub fn intensity(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// `G²(τ) = |ψ(τ)|²`, peak-normalized.
    pub fn correlation(&self) -> Result<CorrelationFunction> {
        CorrelationFunction::new(self.grid, self.intensity(), Normalization::PeakOne)
    }
}

/// First-order correlation `G¹(τ)`, peak-normalized.
///
/// Reported as the fringe-visibility envelope `|∫ |F|² cos(Ωτ) dΩ|`, which
/// equals the transform itself wherever that is non-negative.
pub fn g1(f: &SpectralAmplitude, tgrid: &TimeGrid) -> Result<CorrelationFunction> {
    g1_from_folded(&FoldedSpectrum::from_intensity(f), tgrid)
}

pub(crate) fn g1_from_folded(
    folded: &FoldedSpectrum,
    tgrid: &TimeGrid,
) -> Result<CorrelationFunction> {
    let raw = folded.cosine_sum(0.0, tgrid);
    CorrelationFunction::new(
        *tgrid,
        raw.iter().map(|v| v.re.abs()).collect(),
        Normalization::PeakOne,
    )
}

/// `F(Ω)·exp(i·B·Ω²/2)`: the spectral amplitude after the budget.
pub fn apply_dispersion(f: &SpectralAmplitude, budget: &DispersionBudget) -> SpectralAmplitude {
    let half_b = 0.5 * budget.total_b();
    f.with_phase(|omega| half_b * omega * omega)
}

/// Checks `|B|·omega_max·ΔΩ < π/4`.
pub fn check_sampling(grid: &FrequencyGrid, total_b: f64) -> Result<()> {
    let phase_step = total_b.abs() * grid.omega_max() * grid.step();
    if phase_step < PI / 4.0 {
        return Ok(());
    }
    // need m > 4|B|·omega_max²/π
    let half = (4.0 * total_b.abs() * grid.omega_max().powi(2) / PI).floor() as usize + 1;
    Err(Error::AliasingRisk {
        phase_step,
        min_n_points: 2 * half + 1,
    })
}

/// Dispersed biphoton amplitude `ψ(τ)`.
pub fn biphoton_amplitude(
    f: &SpectralAmplitude,
    budget: &DispersionBudget,
    tgrid: &TimeGrid,
) -> Result<BiphotonAmplitude> {
    let total_b = budget.total_b();
    check_sampling(f.grid(), total_b)?;
    Ok(biphoton_from_folded(
        &FoldedSpectrum::from_amplitude(f),
        total_b,
        tgrid,
    ))
}

pub(crate) fn biphoton_from_folded(
    folded: &FoldedSpectrum,
    total_b: f64,
    tgrid: &TimeGrid,
) -> BiphotonAmplitude {
    BiphotonAmplitude {
        grid: *tgrid,
        values: folded.cosine_sum(0.5 * total_b, tgrid),
    }
}

/// Second-order correlation `G²(τ) = |ψ(τ)|²`, peak-normalized.
pub fn g2(
    f: &SpectralAmplitude,
    budget: &DispersionBudget,
    tgrid: &TimeGrid,
) -> Result<CorrelationFunction> {
    biphoton_amplitude(f, budget, tgrid)?.correlation()
}

/// Far-field limit: `|F(Ω)|²` at `Ω = τ/B`, peak-normalized.
pub fn g2_farfield(
    f: &SpectralAmplitude,
    budget: &DispersionBudget,
    tgrid: &TimeGrid,
) -> Result<CorrelationFunction> {
    let total_b = budget.total_b();
    if total_b == 0.0 {
        return Err(Error::invalid(
            "far-field mapping is undefined for a zero dispersion budget",
        ));
    }
    let grid = f.grid();
    let values = f.values();
    let last = (grid.n_points() - 1) as f64;
    let m = grid.center() as f64;
    let mapped = (0..tgrid.n_points())
        .map(|j| {
            let pos = tgrid.value(j) / total_b / grid.step() + m;
            if !(pos >= 0.0) || pos > last {
                return 0.0;
            }
            let i = (pos.floor() as usize).min(grid.n_points() - 2);
            let t = pos - i as f64;
            let (a, b) = (values[i].norm_sqr(), values[i + 1].norm_sqr());
            a + t * (b - a)
        })
        .collect();
    CorrelationFunction::new(*tgrid, mapped, Normalization::PeakOne)
}

/// Distance beyond which a pulse of length `tau0` takes the far-field shape,
/// `tau0²/(2π·k2)`.
pub fn dispersion_length(tau0: f64, k2: f64) -> Result<f64> {
    if !(k2 > 0.0) {
        return Err(Error::invalid(format!("k2 must be positive, got {k2}")));
    }
    if !(tau0 >= 0.0) {
        return Err(Error::invalid(format!(
            "tau0 must be non-negative, got {tau0}"
        )));
    }
    Ok(tau0 * tau0 / (2.0 * PI * k2))
}

/// Coincidence counts through a rectangular window of `window_width` centred
/// at `t0`: the integral of `g2` over the window, clipped to the grid.
pub fn coincidence_rate(g2: &CorrelationFunction, window_width: f64, t0: f64) -> f64 {
    if !(window_width > 0.0) {
        return 0.0;
    }
    sampled::integrate_between(
        &g2.taus(),
        g2.values(),
        t0 - 0.5 * window_width,
        t0 + 0.5 * window_width,
    )
}
