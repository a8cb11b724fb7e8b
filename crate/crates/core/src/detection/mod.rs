//! The start–stop measurement chain: detector timing jitter, TAC-MCA
//! histogram accumulation and width estimation.

mod csv;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::propagation::{CorrelationFunction, Normalization};
use crate::sampled;
use crate::{Error, Result};

pub use self::csv::{read_histogram, read_histogram_file, write_histogram, write_histogram_file};

/// FWHM of a Gaussian in units of its standard deviation, `2·√(2 ln 2)`.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Largest fraction of the delay distribution allowed outside the MCA range.
pub const MAX_CLIPPED_FRACTION: f64 = 0.01;

/// Timing jitter (Gaussian FWHM, s) of the start and stop detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    jitter_fwhm_start: f64,
    jitter_fwhm_stop: f64,
}

impl DetectorSpec {
    pub fn new(jitter_fwhm_start: f64, jitter_fwhm_stop: f64) -> Result<Self> {
        for (name, v) in [("start", jitter_fwhm_start), ("stop", jitter_fwhm_stop)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!(
                    "{name} jitter must be non-negative, got {v}"
                )));
            }
        }
        Ok(Self {
            jitter_fwhm_start,
            jitter_fwhm_stop,
        })
    }

    /// Two identical detectors whose combined response has FWHM `combined`.
    pub fn from_combined(combined: f64) -> Result<Self> {
        let each = combined / std::f64::consts::SQRT_2;
        Self::new(each, each)
    }

    /// Ideal detectors.
    pub fn ideal() -> Self {
        Self {
            jitter_fwhm_start: 0.0,
            jitter_fwhm_stop: 0.0,
        }
    }

    pub fn jitter_fwhm_start(&self) -> f64 {
        self.jitter_fwhm_start
    }

    pub fn jitter_fwhm_stop(&self) -> f64 {
        self.jitter_fwhm_stop
    }

    /// Start–stop instrument response FWHM, `√(start² + stop²)`.
    pub fn combined_fwhm(&self) -> f64 {
        self.jitter_fwhm_start.hypot(self.jitter_fwhm_stop)
    }
}

/// Multichannel analyzer settings.
///
/// Channel `k` covers TAC delays `[k·bin_width, (k+1)·bin_width)`; zero
/// biphoton delay lands at `t_center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McaConfig {
    pub bin_width: f64,
    pub t_center: f64,
    pub n_bins: usize,
    pub n_pairs: u64,
    pub background_per_bin: f64,
    pub rng_seed: u64,
}

impl McaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width > 0.0) || !self.bin_width.is_finite() {
            return Err(Error::invalid(format!(
                "bin_width must be positive, got {}",
                self.bin_width
            )));
        }
        if self.n_bins == 0 {
            return Err(Error::invalid("n_bins must be at least 1"));
        }
        if !self.t_center.is_finite() {
            return Err(Error::invalid("t_center must be finite"));
        }
        if !(self.background_per_bin >= 0.0) || !self.background_per_bin.is_finite() {
            return Err(Error::invalid(format!(
                "background_per_bin must be non-negative, got {}",
                self.background_per_bin
            )));
        }
        Ok(())
    }

    /// Biphoton delays covered by the MCA.
    pub fn delay_range(&self) -> (f64, f64) {
        (
            -self.t_center,
            self.n_bins as f64 * self.bin_width - self.t_center,
        )
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        (0..=self.n_bins)
            .map(|k| k as f64 * self.bin_width)
            .collect()
    }
}

/// MCA counts per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    bin_edges: Vec<f64>,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(bin_edges: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() || bin_edges.len() != counts.len() + 1 {
            return Err(Error::invalid(format!(
                "{} edges for {} bins",
                bin_edges.len(),
                counts.len()
            )));
        }
        if bin_edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("bin edges must be strictly ascending"));
        }
        Ok(Self { bin_edges, counts })
    }

    /// Bins of width `bin_width` starting at `origin`.
    pub fn uniform(origin: f64, bin_width: f64, counts: Vec<u64>) -> Result<Self> {
        let edges = (0..=counts.len())
            .map(|k| origin + k as f64 * bin_width)
            .collect();
        Self::new(edges, counts)
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.bin_edges[self.n_bins()] - self.bin_edges[0]) / self.n_bins() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        Self {
            bin_edges: self.bin_edges.clone(),
            counts: self.counts.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Anything with a width: a sampled curve or a histogram.
pub trait Profile {
    fn abscissae(&self) -> Vec<f64>;
    fn ordinates(&self) -> Vec<f64>;
}

impl Profile for CorrelationFunction {
    fn abscissae(&self) -> Vec<f64> {
        self.taus()
    }

    fn ordinates(&self) -> Vec<f64> {
        self.values().to_vec()
    }
}

impl Profile for Histogram {
    fn abscissae(&self) -> Vec<f64> {
        self.centers()
    }

    fn ordinates(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

/// Convolves `g2` with the Gaussian instrument response of `det`.
pub fn detector_smear(g2: &CorrelationFunction, det: &DetectorSpec) -> Result<CorrelationFunction> {
    let fwhm = det.combined_fwhm();
    if fwhm == 0.0 {
        return Ok(g2.clone());
    }
    let step = g2.grid().step();
    if step > fwhm / 10.0 {
        return Err(Error::GridTooCoarse {
            spacing: step,
            required: fwhm / 10.0,
        });
    }
    let sigma = fwhm / FWHM_PER_SIGMA;
    let reach = (6.0 * sigma / step).ceil() as usize;
    let mut kernel: Vec<f64> = (0..=2 * reach)
        .map(|i| {
            let x = (i as f64 - reach as f64) * step / sigma;
            (-0.5 * x * x).exp()
        })
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= norm);

    let input = g2.values();
    let n = input.len();
    let out = (0..n)
        .map(|j| {
            let lo = j.saturating_sub(reach);
            let hi = (j + reach).min(n - 1);
            (lo..=hi).map(|i| input[i] * kernel[i + reach - j]).sum()
        })
        .collect();
    CorrelationFunction::new(*g2.grid(), out, g2.normalization())
}

/// Piecewise-linear delay density restricted to the MCA range.
struct DelayDensity {
    taus: Vec<f64>,
    density: Vec<f64>,
    cumulative: Vec<f64>,
    lo: f64,
    hi: f64,
    c_lo: f64,
    c_hi: f64,
}

impl DelayDensity {
    fn new(smeared: &CorrelationFunction, cfg: &McaConfig) -> Result<Self> {
        cfg.validate()?;
        let pdf = smeared.renormalized(Normalization::UnitIntegral);
        let taus = pdf.taus();
        let density = pdf.values().to_vec();
        let mut cumulative = Vec::with_capacity(taus.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 1..taus.len() {
            acc += 0.5 * (taus[i] - taus[i - 1]) * (density[i] + density[i - 1]);
            cumulative.push(acc);
        }
        let total = acc;
        let (lo, hi) = cfg.delay_range();
        let this = Self {
            c_lo: cumulative_at(&taus, &density, &cumulative, lo),
            c_hi: cumulative_at(&taus, &density, &cumulative, hi),
            taus,
            density,
            cumulative,
            lo,
            hi,
        };
        let clipped = 1.0 - (this.c_hi - this.c_lo) / total;
        if clipped > MAX_CLIPPED_FRACTION {
            return Err(Error::RangeOverflow {
                clipped_fraction: clipped,
            });
        }
        Ok(this)
    }

    fn in_range(&self) -> f64 {
        self.c_hi - self.c_lo
    }

    /// Inverse CDF; `u` in `[c_lo, c_hi]`.
    fn invert(&self, u: f64) -> f64 {
        let n = self.taus.len();
        let i = self.cumulative.partition_point(|&c| c <= u).clamp(1, n - 1) - 1;
        let h = self.taus[i + 1] - self.taus[i];
        let p0 = self.density[i];
        let slope = (self.density[i + 1] - p0) / h;
        let target = u - self.cumulative[i];
        // solve p0·s + slope·s²/2 = target in its cancellation-free form
        let disc = (p0 * p0 + 2.0 * slope * target).max(0.0);
        let denom = p0 + disc.sqrt();
        let s = if denom > 0.0 {
            2.0 * target / denom
        } else {
            0.5 * h
        };
        (self.taus[i] + s.clamp(0.0, h)).clamp(self.lo, self.hi)
    }
}

fn cumulative_at(taus: &[f64], density: &[f64], cumulative: &[f64], at: f64) -> f64 {
    let n = taus.len();
    if at <= taus[0] {
        return 0.0;
    }
    if at >= taus[n - 1] {
        return cumulative[n - 1];
    }
    let i = taus.partition_point(|&t| t <= at) - 1;
    cumulative[i] + sampled::integrate_between(taus, density, taus[i], at)
}

/// Expected counts per MCA channel: `n_pairs` spread over the in-range part
/// of the delay density, plus the flat background.
pub fn expected_counts(smeared: &CorrelationFunction, cfg: &McaConfig) -> Result<Vec<f64>> {
    let density = DelayDensity::new(smeared, cfg)?;
    let norm = density.in_range();
    Ok(cfg
        .bin_edges()
        .windows(2)
        .map(|w| {
            let p = sampled::integrate_between(
                &density.taus,
                &density.density,
                w[0] - cfg.t_center,
                w[1] - cfg.t_center,
            );
            cfg.n_pairs as f64 * p / norm + cfg.background_per_bin
        })
        .collect())
}

/// Monte Carlo TAC-MCA run.
///
/// Draws `n_pairs` delays by inverse-CDF sampling of the smeared density
/// (restricted to the MCA range), shifts them by `t_center` and bins them,
/// then adds independent Poisson background counts to every channel. Delays
/// and background come from separate streams of the seeded generator, so
/// equal seeds give equal histograms and the background does not depend on
/// `n_pairs`.
pub fn simulate_mca(smeared: &CorrelationFunction, cfg: &McaConfig) -> Result<Histogram> {
    let density = DelayDensity::new(smeared, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut counts = vec![0u64; cfg.n_bins];
    let span = density.in_range();
    for _ in 0..cfg.n_pairs {
        let u = density.c_lo + rng.gen::<f64>() * span;
        let channel_time = density.invert(u) + cfg.t_center;
        let k = ((channel_time / cfg.bin_width).floor().max(0.0) as usize).min(cfg.n_bins - 1);
        counts[k] += 1;
    }
    if cfg.background_per_bin > 0.0 {
        let poisson = Poisson::new(cfg.background_per_bin)
            .map_err(|e| Error::invalid(format!("background rate: {e}")))?;
        let mut bg_rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        bg_rng.set_stream(1);
        for c in counts.iter_mut() {
            *c += poisson.sample(&mut bg_rng) as u64;
        }
    }
    Histogram::new(cfg.bin_edges(), counts)
}

/// Full width at half maximum, with half-maximum crossings located by
/// linear interpolation.
pub fn width_fwhm<P: Profile + ?Sized>(curve: &P) -> Result<f64> {
    let x = curve.abscissae();
    let y = curve.ordinates();
    let (peak, max) = y
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        });
    if !(max > 0.0) {
        return Err(Error::UnmeasurableWidth(
            "curve has no positive maximum".into(),
        ));
    }
    let half = 0.5 * max;
    let crossing = |i: usize, j: usize| x[i] + (half - y[i]) / (y[j] - y[i]) * (x[j] - x[i]);
    let left = (0..peak)
        .rev()
        .find(|&i| y[i] < half)
        .map(|i| crossing(i, i + 1))
        .ok_or_else(|| {
            Error::UnmeasurableWidth("no half-maximum crossing left of the peak".into())
        })?;
    let right = (peak + 1..y.len())
        .find(|&i| y[i] < half)
        .map(|i| crossing(i - 1, i))
        .ok_or_else(|| {
            Error::UnmeasurableWidth("no half-maximum crossing right of the peak".into())
        })?;
    Ok(right - left)
}

/// Distance between the first side-lobe minima: the nearest local minima
/// below 1% of the peak, on each side, that are followed by a rise.
pub fn width_first_zeros(curve: &CorrelationFunction) -> Result<f64> {
    let x = curve.taus();
    let y = curve.values();
    let n = y.len();
    let (peak, max) = y
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        });
    let threshold = 0.01 * max;
    let right = (peak + 1..n.saturating_sub(1))
        .find(|&i| y[i] < threshold && y[i] <= y[i - 1] && y[i + 1] > y[i]);
    let left = (1..peak)
        .rev()
        .find(|&i| y[i] < threshold && y[i] <= y[i + 1] && y[i - 1] > y[i]);
    match (left, right) {
        (Some(l), Some(r)) => Ok(x[r] - x[l]),
        _ => Err(Error::UnmeasurableWidth(
            "no side-lobe minima below 1% of the peak".into(),
        )),
    }
}

#[cfg(test)]
mod tests;
