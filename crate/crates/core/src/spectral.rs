//! SPDC spectral amplitudes on a symmetric detuning grid.
//!
//! The detuning `Ω = ω_s − ω_p/2` is sampled on a [`FrequencyGrid`] with an
//! odd number of points so that `Ω = 0` is always a sample. Type-II (and
//! non-degenerate type-I) crystals give `sinc(D·L·Ω/2)`, degenerate type-I
//! crystals give `sinc(D″·L·Ω²/2)`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::units::SPEED_OF_LIGHT;
use crate::{Error, Result};

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Uniform, symmetric grid of detunings `−omega_max ..= omega_max` (rad/s).
///
/// Samples are computed on demand as `(k − m)·step` with `m = (n − 1)/2`, so
/// the grid is exactly antisymmetric and large grids cost no memory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    omega_max: f64,
    n_points: usize,
}

impl FrequencyGrid {
    pub fn new(omega_max: f64, n_points: usize) -> Result<Self> {
        if !(omega_max > 0.0) || !omega_max.is_finite() {
            return Err(Error::invalid(format!(
                "omega_max must be positive, got {omega_max}"
            )));
        }
        check_odd_count(n_points)?;
        Ok(Self {
            omega_max,
            n_points,
        })
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Index of `Ω = 0`.
    pub fn center(&self) -> usize {
        (self.n_points - 1) / 2
    }

    pub fn step(&self) -> f64 {
        self.omega_max / self.center() as f64
    }

    pub fn value(&self, k: usize) -> f64 {
        (k as f64 - self.center() as f64) * self.step()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |k| self.value(k))
    }
}

pub(crate) fn check_odd_count(n_points: usize) -> Result<()> {
    if n_points < 3 || n_points.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "grid point count must be odd and at least 3, got {n_points}"
        )));
    }
    Ok(())
}

/// Builds a [`FrequencyGrid`].
pub fn make_grid(omega_max: f64, n_points: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::new(omega_max, n_points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrystalKind {
    TypeII,
    TypeIDegenerate,
}

/// Nonlinear crystal: phase-matching type, length and the dispersion
/// parameter the spectral shape depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalSpec {
    kind: CrystalKind,
    length: f64,
    /// `D` (s/m) for type II, `D″` (s²/m) for degenerate type I.
    dispersion: f64,
}

impl CrystalSpec {
    /// Type-II crystal of length `length` (m) with inverse group-velocity
    /// difference `d` (s/m).
    pub fn type_ii(length: f64, d: f64) -> Result<Self> {
        Self::build(CrystalKind::TypeII, length, d, "D")
    }

    /// Degenerate type-I crystal with second dispersion derivative `d2` (s²/m).
    pub fn type_i(length: f64, d2: f64) -> Result<Self> {
        Self::build(CrystalKind::TypeIDegenerate, length, d2, "D''")
    }

    fn build(kind: CrystalKind, length: f64, dispersion: f64, name: &str) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid(format!(
                "crystal length must be positive, got {length}"
            )));
        }
        if !(dispersion > 0.0) || !dispersion.is_finite() {
            return Err(Error::invalid(format!(
                "{name} must be positive, got {dispersion}"
            )));
        }
        Ok(Self {
            kind,
            length,
            dispersion,
        })
    }

    pub fn kind(&self) -> CrystalKind {
        self.kind
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// `D` in s/m; `None` for type I.
    pub fn d(&self) -> Option<f64> {
        (self.kind == CrystalKind::TypeII).then_some(self.dispersion)
    }

    /// `D″` in s²/m; `None` for type II.
    pub fn d2(&self) -> Option<f64> {
        (self.kind == CrystalKind::TypeIDegenerate).then_some(self.dispersion)
    }

    /// Same crystal with a different `D` or `D″`.
    pub fn with_dispersion(&self, dispersion: f64) -> Result<Self> {
        Self::build(self.kind, self.length, dispersion, "crystal dispersion")
    }

    /// Real spectral amplitude at detuning `omega`.
    pub fn amplitude_at(&self, omega: f64) -> f64 {
        match self.kind {
            CrystalKind::TypeII => sinc(self.dispersion * self.length * omega / 2.0),
            CrystalKind::TypeIDegenerate => {
                sinc(self.dispersion * self.length * omega * omega / 2.0)
            }
        }
    }

    /// Smallest positive detuning where the amplitude vanishes.
    pub fn first_zero(&self) -> f64 {
        let dl = self.dispersion * self.length;
        match self.kind {
            CrystalKind::TypeII => 2.0 * PI / dl,
            CrystalKind::TypeIDegenerate => (2.0 * PI / dl).sqrt(),
        }
    }

    /// Fourier-limited correlation time scale, `2π/first_zero`. Equals `D·L`
    /// for type II.
    pub fn intrinsic_width(&self) -> f64 {
        2.0 * PI / self.first_zero()
    }
}

/// Complex spectral amplitude `F(Ω)` sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
}

impl SpectralAmplitude {
    pub fn new(grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::invalid(format!(
                "{} amplitude samples for a {}-point grid",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(Ω)` at every grid point.
    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.values().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Multiplies every sample by `exp(i·phase(Ω))`.
    pub fn with_phase(&self, phase: impl Fn(f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v * Complex64::from_polar(1.0, phase(self.grid.value(k))))
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }
}

/// `F_II(Ω) = sinc(D·L·Ω/2)`.
pub fn f_type2(grid: FrequencyGrid, crystal: &CrystalSpec) -> Result<SpectralAmplitude> {
    if crystal.kind() != CrystalKind::TypeII {
        return Err(Error::invalid("f_type2 needs a type-II crystal"));
    }
    Ok(crystal_amplitude(grid, crystal))
}

/// `F_I(Ω) = sinc(D″·L·Ω²/2)`.
pub fn f_type1(grid: FrequencyGrid, crystal: &CrystalSpec) -> Result<SpectralAmplitude> {
    if crystal.kind() != CrystalKind::TypeIDegenerate {
        return Err(Error::invalid("f_type1 needs a degenerate type-I crystal"));
    }
    Ok(crystal_amplitude(grid, crystal))
}

/// Dispatches on the crystal kind.
pub fn crystal_amplitude(grid: FrequencyGrid, crystal: &CrystalSpec) -> SpectralAmplitude {
    SpectralAmplitude::from_fn(grid, |omega| {
        Complex64::new(crystal.amplitude_at(omega), 0.0)
    })
}

/// `S(Ω) = |F(Ω)|²`.
pub fn spectrum(f: &SpectralAmplitude) -> Vec<f64> {
    f.values.iter().map(|v| v.norm_sqr()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterShape {
    Gaussian,
    Rectangular,
}

/// Interference filter in front of a detector, specified in wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    shape: FilterShape,
    fwhm_lambda: f64,
    center_lambda: f64,
    center_offset: f64,
}

impl FilterSpec {
    pub fn new(
        shape: FilterShape,
        fwhm_lambda: f64,
        center_lambda: f64,
        center_offset: f64,
    ) -> Result<Self> {
        if !(fwhm_lambda > 0.0) || !fwhm_lambda.is_finite() {
            return Err(Error::invalid(format!(
                "filter FWHM must be positive, got {fwhm_lambda}"
            )));
        }
        if !(center_lambda > 0.0) || !center_lambda.is_finite() {
            return Err(Error::invalid(format!(
                "filter center wavelength must be positive, got {center_lambda}"
            )));
        }
        if !center_offset.is_finite() {
            return Err(Error::invalid("filter center offset must be finite"));
        }
        Ok(Self {
            shape,
            fwhm_lambda,
            center_lambda,
            center_offset,
        })
    }

    pub fn gaussian(fwhm_lambda: f64, center_lambda: f64) -> Result<Self> {
        Self::new(FilterShape::Gaussian, fwhm_lambda, center_lambda, 0.0)
    }

    pub fn rectangular(fwhm_lambda: f64, center_lambda: f64) -> Result<Self> {
        Self::new(FilterShape::Rectangular, fwhm_lambda, center_lambda, 0.0)
    }

    pub fn shape(&self) -> FilterShape {
        self.shape
    }

    pub fn fwhm_lambda(&self) -> f64 {
        self.fwhm_lambda
    }

    pub fn center_lambda(&self) -> f64 {
        self.center_lambda
    }

    pub fn center_offset(&self) -> f64 {
        self.center_offset
    }

    /// Intensity FWHM in angular frequency.
    pub fn bandwidth(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT * self.fwhm_lambda / (self.center_lambda * self.center_lambda)
    }

    /// The same filter seen from the other photon of the pair: the idler
    /// sits at `−Ω`, so a filter centred at `+Ω₀` acts like one at `−Ω₀`.
    pub fn mirrored(&self) -> Self {
        Self {
            center_offset: -self.center_offset,
            ..*self
        }
    }

    /// Amplitude transmission (square root of the intensity profile).
    pub fn transmission(&self, omega: f64) -> f64 {
        let width = self.bandwidth();
        let u = (omega - self.center_offset) / width;
        match self.shape {
            FilterShape::Gaussian => (-2.0 * LN_2 * u * u).exp(),
            FilterShape::Rectangular => {
                if u.abs() <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Multiplies `F` by the filter's amplitude transmission.
pub fn apply_filter(f: &SpectralAmplitude, filter: &FilterSpec) -> SpectralAmplitude {
    let values = f
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| v * filter.transmission(f.grid.value(k)))
        .collect();
    SpectralAmplitude {
        grid: f.grid,
        values,
    }
}

/// First-order conversion of a wavelength interval to angular frequency,
/// `2π·c·Δλ/λ₀²`.
pub fn delta_lambda_to_delta_omega(delta_lambda: f64, lambda0: f64) -> Result<f64> {
    if !(lambda0 > 0.0) {
        return Err(Error::invalid(format!(
            "lambda0 must be positive, got {lambda0}"
        )));
    }
    if !(delta_lambda >= 0.0) {
        return Err(Error::invalid(format!(
            "delta_lambda must be non-negative, got {delta_lambda}"
        )));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT * delta_lambda / (lambda0 * lambda0))
}

/// Evaluates crystal shape and filters at one detuning, in the same
/// operation order as `crystal_amplitude` followed by `apply_filter` calls.
pub(crate) fn amplitude_at(crystal: &CrystalSpec, filters: &[FilterSpec], omega: f64) -> Complex64 {
    filters.iter().fold(
        Complex64::new(crystal.amplitude_at(omega), 0.0),
        |acc, flt| acc * flt.transmission(omega),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const D: f64 = 1.5e-10; // 1.5 ps/cm
    const L2: f64 = 0.4e-3;
    const D2: f64 = 5.9e-26; // 5.9e-28 s^2/cm
    const L1: f64 = 3.4e-3;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn three_point_grid() {
        let g = make_grid(1.0, 3).unwrap();
        assert_eq!(g.values().collect::<Vec<_>>(), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn grid_spacing_and_symmetry() {
        let g = make_grid(4.19e14, 4097).unwrap();
        let expected = 2.0 * 4.19e14 / 4096.0;
        assert!(rel(g.step(), expected) < 1e-15);
        let v: Vec<f64> = g.values().collect();
        assert_eq!(v[2048], 0.0);
        for k in 0..v.len() {
            assert_eq!(v[k], -v[v.len() - 1 - k]);
        }
        for w in v.windows(2) {
            assert!(((w[1] - w[0]) - expected).abs() <= 4.0 * f64::EPSILON * 4.19e14);
        }
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(make_grid(1.0, 4).is_err());
        assert!(make_grid(1.0, 1).is_err());
        assert!(make_grid(0.0, 5).is_err());
        assert!(make_grid(-1.0, 5).is_err());
    }

    #[test]
    fn sinc_near_zero() {
        assert_eq!(sinc(0.0), 1.0);
        for &x in &[1e-5, 5e-5, 9.9e-5, -3e-5] {
            let reference = 1.0 - x * x / 6.0;
            assert!((sinc(x) - reference).abs() < 1e-15);
        }
        assert!((sinc(PI / 2.0) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn type2_values_and_zeros() {
        let crystal = CrystalSpec::type_ii(L2, D).unwrap();
        assert!(rel(crystal.intrinsic_width(), 6.0e-14) < 1e-12);
        let zero = crystal.first_zero();
        assert!(rel(zero, 1.047e14) < 1e-3);
        assert!(crystal.amplitude_at(zero).abs() < 1e-15);
        assert!((crystal.amplitude_at(PI / (D * L2)) - 2.0 / PI).abs() < 1e-12);
        let f = f_type2(make_grid(4.0 * zero, 801).unwrap(), &crystal).unwrap();
        assert_eq!(f.values()[400].re, 1.0);
    }

    #[test]
    fn type1_values_and_zeros() {
        let crystal = CrystalSpec::type_i(L1, D2).unwrap();
        let zero = crystal.first_zero();
        assert!(rel(zero, 1.77e14) < 3e-3);
        assert!(crystal.amplitude_at(zero).abs() < 1e-15);
        let f = f_type1(make_grid(4.0 * zero, 1001).unwrap(), &crystal).unwrap();
        assert_eq!(f.values()[500].re, 1.0);
        let v = f.values();
        for k in 0..v.len() {
            assert_eq!(v[k], v[v.len() - 1 - k]);
        }
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let g = make_grid(1e14, 11).unwrap();
        assert!(f_type2(g, &CrystalSpec::type_i(L1, D2).unwrap()).is_err());
        assert!(f_type1(g, &CrystalSpec::type_ii(L2, D).unwrap()).is_err());
        assert!(CrystalSpec::type_ii(0.0, D).is_err());
        assert!(CrystalSpec::type_ii(L2, -1.0).is_err());
        assert_eq!(CrystalSpec::type_ii(L2, D).unwrap().d2(), None);
        assert_eq!(CrystalSpec::type_i(L1, D2).unwrap().d(), None);
    }

    #[test]
    fn wavelength_to_frequency() {
        assert_eq!(delta_lambda_to_delta_omega(0.0, 916e-9).unwrap(), 0.0);
        let w = delta_lambda_to_delta_omega(10e-9, 916e-9).unwrap();
        assert!(rel(w, 2.245e13) < 1e-3);
        let w2 = delta_lambda_to_delta_omega(20e-9, 916e-9).unwrap();
        assert!(rel(w2, 2.0 * w) < 1e-15);
        let w_far = delta_lambda_to_delta_omega(10e-9, 2.0 * 916e-9).unwrap();
        assert!(rel(w_far, w / 4.0) < 1e-15);
        assert!(delta_lambda_to_delta_omega(1e-9, 0.0).is_err());
        assert!(delta_lambda_to_delta_omega(-1e-9, 1e-6).is_err());
    }

    #[test]
    fn rectangular_filter_cuts_beyond_half_width() {
        let crystal = CrystalSpec::type_ii(L2, D).unwrap();
        let grid = make_grid(4.0 * crystal.first_zero(), 4001).unwrap();
        let f = f_type2(grid, &crystal).unwrap();
        let filter = FilterSpec::rectangular(10e-9, 916e-9).unwrap();
        let half = filter.bandwidth() / 2.0;
        assert!(rel(half, 1.12e13) < 3e-3);
        let filtered = apply_filter(&f, &filter);
        for (k, v) in filtered.values().iter().enumerate() {
            let omega = grid.value(k);
            if omega.abs() > half {
                assert_eq!(*v, Complex64::new(0.0, 0.0));
            } else {
                assert_eq!(*v, f.values()[k]);
            }
        }
        assert_eq!(apply_filter(&filtered, &filter), filtered);
    }

    #[test]
    fn gaussian_filter_limits() {
        let filter = FilterSpec::gaussian(10e-9, 916e-9).unwrap();
        assert_eq!(filter.transmission(0.0), 1.0);
        // amplitude at the intensity half-width is 1/sqrt(2)
        let t = filter.transmission(filter.bandwidth() / 2.0);
        assert!((t * t - 0.5).abs() < 1e-14);

        let crystal = CrystalSpec::type_ii(L2, D).unwrap();
        let grid = make_grid(4.0 * crystal.first_zero(), 2001).unwrap();
        let f = f_type2(grid, &crystal).unwrap();
        let wide = FilterSpec::gaussian(1.0, 916e-9).unwrap();
        let out = apply_filter(&f, &wide);
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b).norm() <= 1e-6 * b.norm().max(1e-300) || (a - b).norm() < 1e-18);
        }
    }

    #[test]
    fn mirrored_filter_reflects_offset() {
        let flt = FilterSpec::new(FilterShape::Gaussian, 5e-9, 916e-9, 3e12).unwrap();
        let m = flt.mirrored();
        for &w in &[-4e12, 0.0, 1e12, 7e12] {
            assert!((flt.transmission(w) - m.transmission(-w)).abs() < 1e-15);
        }
    }

    #[test]
    fn pointwise_matches_array_path() {
        let crystal = CrystalSpec::type_ii(L2, D).unwrap();
        let grid = make_grid(4.0 * crystal.first_zero(), 1001).unwrap();
        let flt = FilterSpec::new(FilterShape::Gaussian, 10e-9, 916e-9, 1e12).unwrap();
        let arr = apply_filter(
            &apply_filter(&f_type2(grid, &crystal).unwrap(), &flt),
            &flt.mirrored(),
        );
        let filters = [flt, flt.mirrored()];
        for (k, v) in arr.values().iter().enumerate() {
            assert_eq!(*v, amplitude_at(&crystal, &filters, grid.value(k)));
        }
    }

    proptest! {
        #[test]
        fn unfiltered_amplitudes_are_real_even_and_bounded(
            length in 1e-4f64..1e-2,
            dispersion in 0.1f64..10.0,
            type_one in any::<bool>(),
            n_half in 1usize..400,
        ) {
            let crystal = if type_one {
                CrystalSpec::type_i(length, dispersion * 1e-26).unwrap()
            } else {
                CrystalSpec::type_ii(length, dispersion * 1e-10).unwrap()
            };
            let grid = make_grid(4.0 * crystal.first_zero(), 2 * n_half + 1).unwrap();
            let f = crystal_amplitude(grid, &crystal);
            let v = f.values();
            prop_assert_eq!(v[grid.center()].re, 1.0);
            for k in 0..v.len() {
                prop_assert_eq!(v[k].im, 0.0);
                prop_assert!(v[k].re.abs() <= 1.0);
                prop_assert_eq!(v[k], v[v.len() - 1 - k]);
            }
        }

        #[test]
        fn phase_only_multiplier_keeps_spectrum(b in -1e-22f64..1e-22, cubic in -1e-36f64..1e-36) {
            let crystal = CrystalSpec::type_ii(L2, D).unwrap();
            let grid = make_grid(4.0 * crystal.first_zero(), 1001).unwrap();
            let f = crystal_amplitude(grid, &crystal);
            let phased = f.with_phase(|w| 0.5 * b * w * w + cubic * w * w * w);
            for (a, c) in spectrum(&phased).iter().zip(spectrum(&f)) {
                prop_assert!((a - c).abs() < 1e-12);
            }
        }

        #[test]
        fn rectangular_filter_is_idempotent(fwhm in 1e-9f64..50e-9, offset in -2e13f64..2e13) {
            let crystal = CrystalSpec::type_ii(L2, D).unwrap();
            let grid = make_grid(4.0 * crystal.first_zero(), 801).unwrap();
            let f = crystal_amplitude(grid, &crystal);
            let flt = FilterSpec::new(FilterShape::Rectangular, fwhm, 916e-9, offset).unwrap();
            let once = apply_filter(&f, &flt);
            prop_assert_eq!(apply_filter(&once, &flt), once);
        }
    }
}
