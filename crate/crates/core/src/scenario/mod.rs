//! Configuration-driven end-to-end runs: spectrum, correlation functions,
//! the smeared coincidence curve, a simulated MCA histogram, and fits of
//! histograms against the same scenario.

mod config;
pub mod presets;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::detection::{self, DetectorSpec, Histogram, McaConfig};
use crate::fitting::{self, FitProblem, FitResult, FreeParameter};
use crate::propagation::{
    self, CorrelationFunction, DispersionBudget, FoldedSpectrum, GridPlan, GridRequest,
};
use crate::spectral::{self, CrystalSpec, FilterSpec};
use crate::{Error, Result};

pub use config::parse_config;

/// Approximate row count of the spectrum CSV.
const SPECTRUM_ROWS: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterArms {
    Both,
    Signal,
    Idler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    Spectrum,
    G1,
    G2,
    G2Farfield,
    Smeared,
    Histogram,
}

impl Output {
    pub const ALL: [Output; 6] = [
        Output::Spectrum,
        Output::G1,
        Output::G2,
        Output::G2Farfield,
        Output::Smeared,
        Output::Histogram,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Output::Spectrum => "spectrum",
            Output::G1 => "g1",
            Output::G2 => "g2",
            Output::G2Farfield => "g2_farfield",
            Output::Smeared => "smeared",
            Output::Histogram => "histogram",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub crystal: CrystalSpec,
    pub budget: DispersionBudget,
    pub filter: Option<FilterSpec>,
    pub filter_arms: FilterArms,
    pub detector: DetectorSpec,
    pub mca: McaConfig,
    pub grids: GridRequest,
    pub outputs: Vec<Output>,
}

impl ScenarioConfig {
    /// Filters acting on the pair amplitude. The signal photon sees the
    /// filter at `+Ω`, the idler at `−Ω`.
    pub fn filters(&self) -> Vec<FilterSpec> {
        match (self.filter, self.filter_arms) {
            (None, _) => vec![],
            (Some(f), FilterArms::Both) => vec![f, f.mirrored()],
            (Some(f), FilterArms::Signal) => vec![f],
            (Some(f), FilterArms::Idler) => vec![f.mirrored()],
        }
    }

    pub fn plan(&self) -> Result<GridPlan> {
        propagation::plan_grids(
            &self.grids,
            &self.crystal,
            &self.filters(),
            self.budget.total_b(),
            self.detector.combined_fwhm(),
        )
    }

    /// Both sampling preconditions on the planned grids.
    fn check_grids(&self) -> Result<()> {
        let plan = self
            .plan()
            .map_err(|e| Error::validation("grid.n_omega", e.to_string()))?;
        propagation::check_sampling(&plan.frequency, self.budget.total_b())
            .map_err(|e| Error::validation("grid.n_omega", e.to_string()))?;
        let fwhm = self.detector.combined_fwhm();
        if fwhm > 0.0 && plan.time.step() > fwhm / 10.0 {
            return Err(Error::validation(
                "grid.n_tau",
                format!(
                    "time step {:e} s exceeds a tenth of the detector response",
                    plan.time.step()
                ),
            ));
        }
        Ok(())
    }
}

/// Reads a scenario file, or a built-in preset when `path` names one and no
/// such file exists.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    if !path.exists() {
        if let Some(text) = path.to_str().and_then(presets::text) {
            return parse_config(text);
        }
    }
    parse_config(&fs::read_to_string(path)?)
}

/// Curves of one scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioCurves {
    pub plan: GridPlan,
    pub g2: CorrelationFunction,
    pub smeared: CorrelationFunction,
}

/// Computes `G²` and the detector-smeared curve on the planned grids.
pub fn compute_curves(cfg: &ScenarioConfig) -> Result<ScenarioCurves> {
    let plan = cfg.plan()?;
    let total_b = cfg.budget.total_b();
    propagation::check_sampling(&plan.frequency, total_b)?;
    let filters = cfg.filters();
    let folded = FoldedSpectrum::from_fn(&plan.frequency, |omega| {
        spectral::amplitude_at(&cfg.crystal, &filters, omega)
    });
    let g2 = propagation::biphoton_from_folded(&folded, total_b, &plan.time).correlation()?;
    let smeared = detection::detector_smear(&g2, &cfg.detector)?;
    Ok(ScenarioCurves { plan, g2, smeared })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub total_b: f64,
    pub fwhm_g2: f64,
    pub fwhm_smeared: f64,
    pub first_zero_width_g2: Option<f64>,
    pub z_dis: Option<f64>,
    pub fwhm_histogram: Option<f64>,
    pub histogram_counts: Option<u64>,
}

impl Summary {
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:e}"));
        let mut s = String::new();
        let _ = writeln!(s, "total_b_s2 = {:e}", self.total_b);
        let _ = writeln!(s, "fwhm_g2_s = {:e}", self.fwhm_g2);
        let _ = writeln!(s, "fwhm_smeared_s = {:e}", self.fwhm_smeared);
        let _ = writeln!(
            s,
            "first_zero_width_g2_s = {}",
            opt(self.first_zero_width_g2)
        );
        let _ = writeln!(s, "z_dis_m = {}", opt(self.z_dis));
        if let Some(w) = self.fwhm_histogram {
            let _ = writeln!(s, "fwhm_histogram_s = {w:e}");
        }
        if let Some(n) = self.histogram_counts {
            let _ = writeln!(s, "histogram_counts = {n}");
        }
        s
    }
}

fn curve_csv(header: &str, x: &[f64], y: &[f64]) -> String {
    let mut s = String::with_capacity(48 * x.len());
    s.push_str(header);
    s.push('\n');
    for (a, b) in x.iter().zip(y) {
        let _ = writeln!(s, "{a:e},{b:e}");
    }
    s
}

/// Runs the scenario and writes the requested outputs plus `summary.txt`
/// into `out_dir`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: impl AsRef<Path>) -> Result<Summary> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let curves = compute_curves(cfg)?;
    let total_b = cfg.budget.total_b();
    let filters = cfg.filters();
    let wants = |o: Output| cfg.outputs.contains(&o);
    let taus = curves.g2.taus();

    if wants(Output::Spectrum) {
        let grid = curves.plan.frequency;
        let m = grid.center();
        let stride = (grid.n_points() - 1).div_ceil(SPECTRUM_ROWS - 1).max(1);
        let reach = m / stride;
        let omegas: Vec<f64> = (0..=2 * reach)
            .map(|j| grid.value(m - reach * stride + j * stride))
            .collect();
        let power: Vec<f64> = omegas
            .iter()
            .map(|&w| spectral::amplitude_at(&cfg.crystal, &filters, w).norm_sqr())
            .collect();
        fs::write(
            out_dir.join("spectrum.csv"),
            curve_csv("omega_rad_s,spectrum", &omegas, &power),
        )?;
    }
    if wants(Output::G1) {
        let plan =
            propagation::plan_grids(&GridRequest::default(), &cfg.crystal, &filters, 0.0, 0.0)?;
        let folded = FoldedSpectrum::from_fn(&plan.frequency, |omega| {
            let a = spectral::amplitude_at(&cfg.crystal, &filters, omega);
            a * a.conj()
        });
        let g1 = propagation::g1_from_folded(&folded, &plan.time)?;
        fs::write(
            out_dir.join("g1.csv"),
            curve_csv("tau_s,g1", &g1.taus(), g1.values()),
        )?;
    }
    if wants(Output::G2) {
        fs::write(
            out_dir.join("g2.csv"),
            curve_csv("tau_s,g2", &taus, curves.g2.values()),
        )?;
    }
    if wants(Output::G2Farfield) && total_b != 0.0 {
        let mapped: Vec<f64> = taus
            .iter()
            .map(|t| spectral::amplitude_at(&cfg.crystal, &filters, t / total_b).norm_sqr())
            .collect();
        let peak = mapped.iter().copied().fold(0.0, f64::max);
        let mapped: Vec<f64> = mapped.iter().map(|v| v / peak).collect();
        fs::write(
            out_dir.join("g2_farfield.csv"),
            curve_csv("tau_s,g2_farfield", &taus, &mapped),
        )?;
    }
    if wants(Output::Smeared) {
        fs::write(
            out_dir.join("smeared.csv"),
            curve_csv("tau_s,smeared", &taus, curves.smeared.values()),
        )?;
    }
    let mut histogram = None;
    if wants(Output::Histogram) {
        let hist = detection::simulate_mca(&curves.smeared, &cfg.mca)?;
        detection::write_histogram_file(&hist, out_dir.join("histogram.csv"))?;
        histogram = Some(hist);
    }

    let length = cfg.budget.total_length();
    let z_dis = (length > 0.0 && total_b != 0.0)
        .then(|| {
            propagation::dispersion_length(cfg.crystal.intrinsic_width(), (total_b / length).abs())
                .ok()
        })
        .flatten();
    let summary = Summary {
        total_b,
        fwhm_g2: detection::width_fwhm(&curves.g2)?,
        fwhm_smeared: detection::width_fwhm(&curves.smeared)?,
        first_zero_width_g2: detection::width_first_zeros(&curves.g2).ok(),
        z_dis,
        fwhm_histogram: histogram
            .as_ref()
            .and_then(|h: &Histogram| detection::width_fwhm(h).ok()),
        histogram_counts: histogram.as_ref().map(Histogram::total),
    };
    fs::write(out_dir.join("summary.txt"), summary.to_text())?;
    Ok(summary)
}

/// A fit of a histogram file against a scenario.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub problem: FitProblem,
    pub result: FitResult,
    pub report: String,
}

/// Builds the fit problem for `histogram` under the scenario's physics.
/// When D″ is free, the fibre k″ is the scenario's mean per-arm value.
pub fn fit_problem(
    cfg: &ScenarioConfig,
    histogram: Histogram,
    bounds: (f64, f64),
    free_parameter: FreeParameter,
) -> FitProblem {
    let arm_lengths: Vec<f64> = cfg.budget.arms().iter().map(|a| a.z).collect();
    let length: f64 = arm_lengths.iter().sum();
    FitProblem {
        histogram,
        crystal: cfg.crystal,
        filters: cfg.filters(),
        detector: cfg.detector,
        arm_lengths,
        free_parameter,
        bounds,
        fixed_k2: if length > 0.0 {
            cfg.budget.total_b() / length
        } else {
            0.0
        },
        grids: GridRequest::default(),
    }
}

pub fn run_fit(
    cfg: &ScenarioConfig,
    histogram_path: impl AsRef<Path>,
    bounds: (f64, f64),
    free_parameter: FreeParameter,
) -> Result<FitOutcome> {
    let histogram = detection::read_histogram_file(histogram_path)?;
    let problem = fit_problem(cfg, histogram, bounds, free_parameter);
    let result = fitting::fit(&problem)?;
    let report = fitting::format_report(&result, &problem);
    Ok(FitOutcome {
        problem,
        result,
        report,
    })
}
