//! Trapezoid evaluation of `Σ_k w_k G(Ω_k) e^{iβk²} cos(Ω_k τ_j)`.
//!
//! The cosine kernel is even in `Ω`, so the sum is first folded onto
//! `k ≥ 0` with `G(Ω_k) + G(−Ω_k)`. Two evaluation routes compute the same
//! trapezoid sum:
//!
//! - reciprocal grids (`ΔΩ·Δτ = 2π/N` for an integer `N`): coefficients are
//!   wrapped modulo `N` and one length-`N` FFT yields every `τ_j`;
//! - any other grid: a direct sum per `τ_j` with exact block tables of
//!   `cos(bθ)`, `sin(bθ)`.
//!
//! Summation order is fixed in both routes, so output is bit-reproducible.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::TimeGrid;
use crate::spectral::{FrequencyGrid, SpectralAmplitude};

const CHIRP_RESEED: usize = 64;
const DIRECT_BLOCK: usize = 256;
const MAX_FFT_LEN: f64 = (1u64 << 24) as f64;
/// Largest tolerated phase error (rad) from a non-exact reciprocal grid.
const RECIPROCAL_PHASE_TOL: f64 = 1e-6;

/// Trapezoid-weighted spectral samples folded onto non-negative detunings.
#[derive(Debug, Clone)]
pub(crate) struct FoldedSpectrum {
    step: f64,
    coeffs: Vec<Complex64>,
}

impl FoldedSpectrum {
    /// Folds `g(Ω)` evaluated at `±Ω_k`; `g` receives the grid value.
    pub(crate) fn from_fn(grid: &FrequencyGrid, g: impl Fn(f64) -> Complex64) -> Self {
        let m = grid.center();
        Self::fold(grid, |k| g(grid.value(m + k)), |k| g(grid.value(m - k)))
    }

    pub(crate) fn from_amplitude(f: &SpectralAmplitude) -> Self {
        let grid = f.grid();
        let m = grid.center();
        let v = f.values();
        Self::fold(grid, |k| v[m + k], |k| v[m - k])
    }

    /// Folds `|F(Ω)|²`.
    pub(crate) fn from_intensity(f: &SpectralAmplitude) -> Self {
        let grid = f.grid();
        let m = grid.center();
        let v = f.values();
        Self::fold(
            grid,
            |k| Complex64::new(v[m + k].norm_sqr(), 0.0),
            |k| Complex64::new(v[m - k].norm_sqr(), 0.0),
        )
    }

    fn fold(
        grid: &FrequencyGrid,
        plus: impl Fn(usize) -> Complex64,
        minus: impl Fn(usize) -> Complex64,
    ) -> Self {
        let m = grid.center();
        let step = grid.step();
        let coeffs = (0..=m)
            .map(|k| match k {
                0 => plus(0) * step,
                k if k == m => (plus(k) + minus(k)) * (0.5 * step),
                k => (plus(k) + minus(k)) * step,
            })
            .collect();
        Self { step, coeffs }
    }

    /// Evaluates the sum with quadratic spectral phase `half_b·Ω²`
    /// (`half_b = B/2`) at every point of `tgrid`.
    pub(crate) fn cosine_sum(&self, half_b: f64, tgrid: &TimeGrid) -> Vec<Complex64> {
        match self.reciprocal_len(tgrid) {
            Some(n) => self.fft_route(half_b, tgrid, n),
            None => self.direct_route(half_b, tgrid),
        }
    }

    /// FFT length `N` when `ΔΩ·Δτ·N = 2π` holds to within the phase tolerance.
    fn reciprocal_len(&self, tgrid: &TimeGrid) -> Option<usize> {
        let alpha = self.step * tgrid.step();
        let ratio = 2.0 * PI / alpha;
        let n = ratio.round();
        if !(1.0..=MAX_FFT_LEN).contains(&n) {
            return None;
        }
        let worst_phase = (self.coeffs.len() - 1) as f64 * tgrid.center() as f64 * alpha;
        ((ratio - n).abs() / n * worst_phase <= RECIPROCAL_PHASE_TOL).then_some(n as usize)
    }

    /// Calls `sink(k, c_k·e^{iβk²})` for every `k` in ascending order.
    fn for_each_chirped(&self, half_b: f64, mut sink: impl FnMut(usize, Complex64)) {
        let beta = half_b * self.step * self.step;
        if beta == 0.0 {
            for (k, c) in self.coeffs.iter().enumerate() {
                sink(k, *c);
            }
            return;
        }
        // e^{iβ(k+1)²} = e^{iβk²}·e^{iβ(2k+1)}, reseeded exactly every block
        let rotation = Complex64::from_polar(1.0, 2.0 * beta);
        for (block, chunk) in self.coeffs.chunks(CHIRP_RESEED).enumerate() {
            let k0 = (block * CHIRP_RESEED) as f64;
            let mut phase = Complex64::from_polar(1.0, beta * k0 * k0);
            let mut ratio = Complex64::from_polar(1.0, beta * (2.0 * k0 + 1.0));
            for (i, c) in chunk.iter().enumerate() {
                sink(block * CHIRP_RESEED + i, c * phase);
                phase *= ratio;
                ratio *= rotation;
            }
        }
    }

    fn fft_route(&self, half_b: f64, tgrid: &TimeGrid, n: usize) -> Vec<Complex64> {
        let mut bins = vec![Complex64::new(0.0, 0.0); n];
        let mut r = 0;
        self.for_each_chirped(half_b, |_, c| {
            bins[r] += c;
            r += 1;
            if r == n {
                r = 0;
            }
        });
        FftPlanner::new().plan_fft_inverse(n).process(&mut bins);
        let h = tgrid.center() as i64;
        let n_i = n as i64;
        (0..tgrid.n_points() as i64)
            .map(|j| {
                let shift = j - h;
                let plus = bins[shift.rem_euclid(n_i) as usize];
                let minus = bins[(-shift).rem_euclid(n_i) as usize];
                (plus + minus) * 0.5
            })
            .collect()
    }

    fn direct_route(&self, half_b: f64, tgrid: &TimeGrid) -> Vec<Complex64> {
        let mut chirped = Vec::with_capacity(self.coeffs.len());
        self.for_each_chirped(half_b, |_, c| chirped.push(c));
        let block = DIRECT_BLOCK.min(chirped.len());
        let mut cos_table = vec![0.0; block];
        let mut sin_table = vec![0.0; block];
        (0..tgrid.n_points())
            .map(|j| {
                let theta = self.step * tgrid.value(j);
                for b in 0..block {
                    let (s, c) = (b as f64 * theta).sin_cos();
                    sin_table[b] = s;
                    cos_table[b] = c;
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, chunk) in chirped.chunks(block).enumerate() {
                    let mut with_cos = Complex64::new(0.0, 0.0);
                    let mut with_sin = Complex64::new(0.0, 0.0);
                    for (b, c) in chunk.iter().enumerate() {
                        with_cos += c * cos_table[b];
                        with_sin += c * sin_table[b];
                    }
                    let (sa, ca) = ((a * block) as f64 * theta).sin_cos();
                    acc += with_cos * ca - with_sin * sa;
                }
                acc
            })
            .collect()
    }
}
