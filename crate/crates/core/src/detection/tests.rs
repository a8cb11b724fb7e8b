use super::*;
use crate::propagation::{self, DispersionBudget, TimeGrid};
use crate::spectral::{self, CrystalSpec};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn gaussian(fwhm: f64, tau_max: f64, n: usize) -> CorrelationFunction {
    let grid = TimeGrid::new(tau_max, n).unwrap();
    let sigma = fwhm / FWHM_PER_SIGMA;
    let values = grid
        .values()
        .iter()
        .map(|t| (-0.5 * (t / sigma).powi(2)).exp())
        .collect();
    CorrelationFunction::new(grid, values, Normalization::PeakOne).unwrap()
}

fn rectangle(width: f64, tau_max: f64, n: usize) -> CorrelationFunction {
    let grid = TimeGrid::new(tau_max, n).unwrap();
    let values = grid
        .values()
        .iter()
        .map(|t| if t.abs() <= 0.5 * width { 1.0 } else { 0.0 })
        .collect();
    CorrelationFunction::new(grid, values, Normalization::PeakOne).unwrap()
}

fn mca(n_pairs: u64, seed: u64) -> McaConfig {
    McaConfig {
        bin_width: 50e-12,
        t_center: 25.6e-9,
        n_bins: 1024,
        n_pairs,
        background_per_bin: 0.0,
        rng_seed: seed,
    }
}

fn fig2b_smeared() -> CorrelationFunction {
    let crystal = CrystalSpec::type_ii(0.4e-3, 1.5e-10).unwrap();
    let budget = DispersionBudget::uniform(3.2e-26, 500.0, 2).unwrap();
    let det = DetectorSpec::from_combined(700e-12).unwrap();
    let plan =
        propagation::auto_grids(&crystal, &[], budget.total_b(), det.combined_fwhm()).unwrap();
    let f = spectral::crystal_amplitude(plan.frequency, &crystal);
    let g2 = propagation::g2(&f, &budget, &plan.time).unwrap();
    detector_smear(&g2, &det).unwrap()
}

/// Pearson statistic and p-value of observed counts against expectations,
/// pooling bins with expectation below 5.
fn goodness_of_fit(observed: &[u64], expected: &[f64]) -> f64 {
    let (mut stat, mut dof) = (0.0, 0usize);
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        pool_o += o as f64;
        pool_e += e;
        if pool_e >= 5.0 {
            stat += (pool_o - pool_e).powi(2) / pool_e;
            dof += 1;
            pool_o = 0.0;
            pool_e = 0.0;
        }
    }
    1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(stat)
}

fn two_sample(a: &[u64], b: &[u64]) -> f64 {
    let (mut stat, mut dof) = (0.0, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        if x + y > 0 {
            stat += (x as f64 - y as f64).powi(2) / (x + y) as f64;
            dof += 1;
        }
    }
    1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn combined_jitter_adds_in_quadrature() {
    let det = DetectorSpec::new(300e-12, 400e-12).unwrap();
    assert!((det.combined_fwhm() - 500e-12).abs() < 1e-24);
    let split = DetectorSpec::from_combined(700e-12).unwrap();
    assert!((split.combined_fwhm() - 700e-12).abs() < 1e-21);
    assert!(DetectorSpec::new(-1e-12, 0.0).is_err());
}

#[test]
fn zero_jitter_is_identity() {
    let g = gaussian(1e-9, 5e-9, 1001);
    assert_eq!(detector_smear(&g, &DetectorSpec::ideal()).unwrap(), g);
}

#[test]
fn near_delta_takes_the_instrument_width() {
    let input = rectangle(0.75e-12, 4e-9, 8001);
    let det = DetectorSpec::from_combined(700e-12).unwrap();
    let out = detector_smear(&input, &det).unwrap();
    let w = width_fwhm(&out).unwrap();
    assert!((w / 700e-12 - 1.0).abs() < 0.01, "{w:e}");
}

#[test]
fn gaussian_widths_add_in_quadrature() {
    let (a, b) = (1.2e-9, 0.7e-9);
    let input = gaussian(a, 10e-9, 4001);
    let out = detector_smear(&input, &DetectorSpec::from_combined(b).unwrap()).unwrap();
    let w = width_fwhm(&out).unwrap();
    assert!((w / a.hypot(b) - 1.0).abs() < 0.01, "{w:e}");
}

#[test]
fn coarse_grid_is_rejected() {
    let input = gaussian(1e-9, 5e-9, 51);
    let err = detector_smear(&input, &DetectorSpec::from_combined(700e-12).unwrap()).unwrap_err();
    match err {
        Error::GridTooCoarse { required, .. } => assert!((required - 70e-12).abs() < 1e-20),
        other => panic!("{other:?}"),
    }
}

#[test]
fn smear_preserves_integral_and_never_narrows() {
    let input = rectangle(2e-9, 10e-9, 4001).renormalized(Normalization::UnitIntegral);
    let out = detector_smear(&input, &DetectorSpec::from_combined(700e-12).unwrap()).unwrap();
    assert!((out.integral() - 1.0).abs() < 1e-3);
    assert!(width_fwhm(&out).unwrap() >= width_fwhm(&input).unwrap());
}

#[test]
fn fwhm_of_reference_shapes() {
    let rect = rectangle(3e-9, 10e-9, 2001);
    assert!((width_fwhm(&rect).unwrap() - 3e-9).abs() <= rect.grid().step());
    let sigma = 0.4e-9;
    let g = gaussian(FWHM_PER_SIGMA * sigma, 5e-9, 2001);
    assert!((width_fwhm(&g).unwrap() / (2.3548 * sigma) - 1.0).abs() < 0.01);
}

#[test]
fn fwhm_without_crossing_is_unmeasurable() {
    let grid = TimeGrid::new(1e-9, 101).unwrap();
    let flat = CorrelationFunction::new(grid, vec![1.0; 101], Normalization::PeakOne).unwrap();
    assert!(matches!(
        width_fwhm(&flat),
        Err(Error::UnmeasurableWidth(_))
    ));
    assert!(matches!(
        width_first_zeros(&flat),
        Err(Error::UnmeasurableWidth(_))
    ));
}

#[test]
fn rectangle_has_no_side_lobes() {
    let rect = rectangle(3e-9, 10e-9, 2001);
    assert!(matches!(
        width_first_zeros(&rect),
        Err(Error::UnmeasurableWidth(_))
    ));
}

#[test]
fn histogram_width_uses_bin_centres() {
    let hist = Histogram::uniform(0.0, 1.0, vec![0, 0, 2, 4, 2, 0, 0]).unwrap();
    assert!((width_fwhm(&hist).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn histogram_invariants() {
    assert!(Histogram::new(vec![0.0, 1.0], vec![1, 2]).is_err());
    assert!(Histogram::new(vec![0.0, 0.0], vec![1]).is_err());
    let h = Histogram::uniform(1.0, 0.5, vec![1, 2, 3]).unwrap();
    assert_eq!(h.bin_edges(), &[1.0, 1.5, 2.0, 2.5]);
    assert_eq!(h.total(), 6);
    assert_eq!(h.scaled(3).counts(), &[3, 6, 9]);
}

#[test]
fn mca_config_validation() {
    let mut cfg = mca(10, 0);
    assert!(cfg.validate().is_ok());
    cfg.bin_width = 0.0;
    assert!(cfg.validate().is_err());
    let mut cfg = mca(10, 0);
    cfg.n_bins = 0;
    assert!(cfg.validate().is_err());
    let mut cfg = mca(10, 0);
    cfg.background_per_bin = -1.0;
    assert!(cfg.validate().is_err());
}

#[test]
fn no_pairs_no_counts() {
    let hist = simulate_mca(&gaussian(1e-9, 10e-9, 1001), &mca(0, 1)).unwrap();
    assert!(hist.counts().iter().all(|&c| c == 0));
    assert_eq!(hist.n_bins(), 1024);
}

#[test]
fn out_of_range_density_is_reported() {
    let mut cfg = mca(100, 1);
    cfg.t_center = 0.0;
    match simulate_mca(&gaussian(1e-9, 10e-9, 1001), &cfg) {
        Err(Error::RangeOverflow { clipped_fraction }) => {
            assert!((clipped_fraction - 0.5).abs() < 0.01)
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn seeds_are_reproducible_and_independent() {
    let g = gaussian(3e-9, 15e-9, 3001);
    let a = simulate_mca(&g, &mca(50_000, 7)).unwrap();
    let b = simulate_mca(&g, &mca(50_000, 7)).unwrap();
    let c = simulate_mca(&g, &mca(50_000, 8)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(two_sample(a.counts(), c.counts()) > 0.01);
}

#[test]
fn counts_follow_expectation_at_a_million_pairs() {
    let smeared = fig2b_smeared();
    let cfg = mca(1_000_000, 2024);
    let hist = simulate_mca(&smeared, &cfg).unwrap();
    assert_eq!(hist.total(), 1_000_000);
    let expected = expected_counts(&smeared, &cfg).unwrap();
    let p = goodness_of_fit(hist.counts(), &expected);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn background_is_added_per_bin() {
    let g = gaussian(2e-9, 10e-9, 2001);
    let mut cfg = mca(20_000, 3);
    cfg.background_per_bin = 4.0;
    let hist = simulate_mca(&g, &cfg).unwrap();
    let background = hist.total() - 20_000;
    // 1024 bins at 4 counts each; ±5σ
    assert!((background as f64 - 4096.0).abs() < 5.0 * 64.0);
    let expected = expected_counts(&g, &cfg).unwrap();
    assert!((expected.iter().sum::<f64>() - (20_000.0 + 4096.0)).abs() < 1e-6);
}

#[test]
fn histogram_converges_to_the_density() {
    let g = gaussian(3e-9, 15e-9, 3001);
    let l1 = |n: u64| {
        let cfg = mca(n, 11);
        let hist = simulate_mca(&g, &cfg).unwrap();
        let expected = expected_counts(&g, &cfg).unwrap();
        hist.counts()
            .iter()
            .zip(&expected)
            .map(|(&o, e)| (o as f64 / n as f64 - e / n as f64).abs())
            .sum::<f64>()
    };
    assert!(l1(1_000_000) < l1(10_000));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn total_counts_are_exact(n_pairs in 0u64..5_000, bg in 0.0f64..3.0, seed in any::<u64>()) {
        let g = gaussian(2e-9, 10e-9, 1001);
        let mut cfg = mca(n_pairs, seed);
        cfg.background_per_bin = bg;
        let hist = simulate_mca(&g, &cfg).unwrap();
        cfg.n_pairs = 0;
        let background = simulate_mca(&g, &cfg).unwrap();
        prop_assert_eq!(hist.total(), n_pairs + background.total());
    }

    #[test]
    fn smearing_never_narrows_a_gaussian(fwhm_ps in 50.0f64..3000.0, jitter_ps in 150.0f64..1500.0) {
        let g = gaussian(fwhm_ps * 1e-12, 20e-9, 4001);
        let det = DetectorSpec::from_combined(jitter_ps * 1e-12).unwrap();
        let out = detector_smear(&g, &det).unwrap();
        prop_assert!(width_fwhm(&out).unwrap() >= width_fwhm(&g).unwrap());
        prop_assert!((out.renormalized(Normalization::UnitIntegral).integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn fwhm_is_scale_invariant(fwhm_ps in 100.0f64..3000.0) {
        let g = gaussian(fwhm_ps * 1e-12, 10e-9, 2001);
        let a = width_fwhm(&g).unwrap();
        let b = width_fwhm(&g.renormalized(Normalization::UnitIntegral)).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }
}
