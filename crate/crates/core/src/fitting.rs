//! Least-squares recovery of the dispersion budget (or the crystal's D″)
//! from an MCA histogram.
//!
//! The free parameter is scanned over 31 points spanning the bounds (log
//! spaced when the lower bound is positive) and the best point is refined
//! by golden-section search. At every candidate the nuisance parameters are
//! eliminated: the time offset by centroid matching, then amplitude scale
//! and flat background by linear least squares.

use std::collections::HashMap;
use std::fmt;

use crate::detection::{self, DetectorSpec, Histogram};
use crate::propagation::{
    self, CorrelationFunction, FoldedSpectrum, GridPlan, GridRequest, Normalization,
};
use crate::sampled;
use crate::spectral::{self, CrystalKind, CrystalSpec, FilterSpec};
use crate::{Error, Result};

pub const SCAN_POINTS: usize = 31;
pub const REFINE_TOLERANCE: f64 = 1e-4;

/// Fraction of the histogram's variance about its mean that the best fit
/// must explain before it is taken as a signal.
const MIN_EXPLAINED_VARIANCE: f64 = 0.5;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeParameter {
    /// Total budget `B = Σ k″·z` in s².
    TotalB,
    /// Type-I crystal curvature D″ in s²/m, with the fibre k″ held fixed.
    D2crystal,
}

impl FreeParameter {
    pub fn units(&self) -> &'static str {
        match self {
            FreeParameter::TotalB => "s^2",
            FreeParameter::D2crystal => "s^2/m",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    pub histogram: Histogram,
    pub crystal: CrystalSpec,
    /// Filters acting on the pair amplitude (already expanded per photon).
    pub filters: Vec<FilterSpec>,
    pub detector: DetectorSpec,
    /// Fibre length of each arm, m.
    pub arm_lengths: Vec<f64>,
    pub free_parameter: FreeParameter,
    pub bounds: (f64, f64),
    /// Per-arm k″ (s²/m) used for the budget when D″ is free.
    pub fixed_k2: f64,
    pub grids: GridRequest,
}

impl FitProblem {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds;
        if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
            return Err(Error::invalid(format!(
                "bounds must be finite with lo < hi, got ({lo:e}, {hi:e})"
            )));
        }
        if self.histogram.total() == 0 {
            return Err(Error::invalid("histogram has no counts"));
        }
        if self.arm_lengths.iter().any(|z| !(*z >= 0.0)) {
            return Err(Error::invalid("arm lengths must be non-negative"));
        }
        if self.free_parameter == FreeParameter::D2crystal {
            if self.crystal.kind() != CrystalKind::TypeIDegenerate {
                return Err(Error::invalid("D″ can only be fitted for a type-I crystal"));
            }
            if !(lo > 0.0) {
                return Err(Error::invalid("D″ bounds must be positive"));
            }
        }
        Ok(())
    }

    fn total_length(&self) -> f64 {
        self.arm_lengths.iter().sum()
    }

    /// Crystal and budget for a value of the free parameter.
    fn physics(&self, value: f64) -> Result<(CrystalSpec, f64)> {
        match self.free_parameter {
            FreeParameter::TotalB => Ok((self.crystal, value)),
            FreeParameter::D2crystal => Ok((
                self.crystal.with_dispersion(value)?,
                self.fixed_k2 * self.total_length(),
            )),
        }
    }
}

/// Free parameter plus nuisance parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub value: f64,
    pub scale: f64,
    /// Channel time of zero biphoton delay, s.
    pub t0: f64,
    pub background: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitFlag {
    AtLowerBound,
    AtUpperBound,
    NoSignal,
}

impl fmt::Display for FitFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitFlag::AtLowerBound => "at_lower_bound",
            FitFlag::AtUpperBound => "at_upper_bound",
            FitFlag::NoSignal => "no_signal",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub estimate: f64,
    pub free_parameter: FreeParameter,
    pub scale: f64,
    pub t0: f64,
    pub background: f64,
    pub residual_rms: f64,
    pub n_evaluations: usize,
    pub converged: bool,
    pub flags: Vec<FitFlag>,
}

/// Smeared delay density for one value of the free parameter.
#[derive(Debug, Clone)]
struct Shape {
    smeared: CorrelationFunction,
    taus: Vec<f64>,
    centroid: f64,
}

/// The forward model on a fixed grid plan, memoizing the smeared density
/// per free-parameter value.
///
/// The grids are planned once for the most demanding end of the bounds so
/// every candidate is computed on the same samples. One model can serve
/// several histograms of the same scenario.
pub struct ForwardModel {
    problem: FitProblem,
    plan: GridPlan,
    folded: Option<FoldedSpectrum>,
    cache: HashMap<u64, Shape>,
}

impl ForwardModel {
    pub fn new(problem: &FitProblem) -> Result<Self> {
        problem.validate()?;
        let (lo, hi) = problem.bounds;
        let (crystal, total_b) = match problem.free_parameter {
            FreeParameter::TotalB => (problem.crystal, lo.abs().max(hi.abs())),
            // the smallest D″ has the widest spectrum
            FreeParameter::D2crystal => problem.physics(lo)?,
        };
        let plan = propagation::plan_grids(
            &problem.grids,
            &crystal,
            &problem.filters,
            total_b,
            problem.detector.combined_fwhm(),
        )?;
        propagation::check_sampling(&plan.frequency, total_b)
            .map_err(|e| Error::Model(Box::new(e)))?;
        let folded = (problem.free_parameter == FreeParameter::TotalB).then(|| {
            FoldedSpectrum::from_fn(&plan.frequency, |omega| {
                spectral::amplitude_at(&crystal, &problem.filters, omega)
            })
        });
        Ok(Self {
            problem: problem.clone(),
            plan,
            folded,
            cache: HashMap::new(),
        })
    }

    pub fn grids(&self) -> &GridPlan {
        &self.plan
    }

    fn serves(&self, problem: &FitProblem) -> bool {
        let p = &self.problem;
        p.crystal == problem.crystal
            && p.filters == problem.filters
            && p.detector == problem.detector
            && p.arm_lengths == problem.arm_lengths
            && p.free_parameter == problem.free_parameter
            && p.bounds == problem.bounds
            && p.fixed_k2 == problem.fixed_k2
            && p.grids == problem.grids
    }

    fn shape(&mut self, value: f64) -> Result<&Shape> {
        let key = value.to_bits();
        if !self.cache.contains_key(&key) {
            let shape = self.compute(value).map_err(|e| match e {
                Error::Model(_) => e,
                other => Error::Model(Box::new(other)),
            })?;
            self.cache.insert(key, shape);
        }
        Ok(&self.cache[&key])
    }

    fn compute(&self, value: f64) -> Result<Shape> {
        let (crystal, total_b) = self.problem.physics(value)?;
        let freq = &self.plan.frequency;
        propagation::check_sampling(freq, total_b)?;
        let psi = match &self.folded {
            Some(folded) => propagation::biphoton_from_folded(folded, total_b, &self.plan.time),
            None => {
                let folded = FoldedSpectrum::from_fn(freq, |omega| {
                    spectral::amplitude_at(&crystal, &self.problem.filters, omega)
                });
                propagation::biphoton_from_folded(&folded, total_b, &self.plan.time)
            }
        };
        let smeared = detection::detector_smear(&psi.correlation()?, &self.problem.detector)?
            .renormalized(Normalization::UnitIntegral);
        let taus = smeared.taus();
        let weighted: Vec<f64> = taus
            .iter()
            .zip(smeared.values())
            .map(|(t, p)| t * p)
            .collect();
        let centroid = sampled::trapezoid(&taus, &weighted);
        Ok(Shape {
            smeared,
            taus,
            centroid,
        })
    }

    /// Smeared `G²` (unit integral) for a value of the free parameter.
    pub fn smeared(&mut self, value: f64) -> Result<CorrelationFunction> {
        Ok(self.shape(value)?.smeared.clone())
    }

    /// Expected counts per histogram bin.
    pub fn expected(&mut self, params: &ModelParams) -> Result<Vec<f64>> {
        let edges = self.problem.histogram.bin_edges().to_vec();
        let unit = bin_integrals(self.shape(params.value)?, &edges, params.t0);
        Ok(unit
            .iter()
            .map(|m| params.scale * m + params.background)
            .collect())
    }
}

fn bin_integrals(shape: &Shape, edges: &[f64], t0: f64) -> Vec<f64> {
    edges
        .windows(2)
        .map(|w| {
            sampled::integrate_between(&shape.taus, shape.smeared.values(), w[0] - t0, w[1] - t0)
        })
        .collect()
}

/// Expected counts per bin of `problem.histogram` for the given parameters.
pub fn forward_model(params: &ModelParams, problem: &FitProblem) -> Result<Vec<f64>> {
    let (lo, hi) = problem.bounds;
    if !(params.value >= lo && params.value <= hi) {
        return Err(Error::invalid(format!(
            "{:e} is outside the bounds",
            params.value
        )));
    }
    ForwardModel::new(problem)?.expected(params)
}

/// Background-subtracted centroid of the histogram; the background is
/// estimated as the mean of the lowest tenth of the bins.
fn data_centroid(hist: &Histogram) -> f64 {
    let counts: Vec<f64> = hist.counts().iter().map(|&c| c as f64).collect();
    let mut sorted = counts.clone();
    sorted.sort_by(f64::total_cmp);
    let n_low = (sorted.len() / 10).max(1);
    let floor = sorted[..n_low].iter().sum::<f64>() / n_low as f64;
    let centers = hist.centers();
    let (mut num, mut den) = (0.0, 0.0);
    for (x, c) in centers.iter().zip(&counts) {
        let w = (c - floor).max(0.0);
        num += w * x;
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        0.5 * (centers[0] + centers[centers.len() - 1])
    }
}

/// Scale and background minimizing `Σ (c − s·m − b)²`, with the residual
/// sum of squares.
fn linear_nuisance(counts: &[f64], shape: &[f64]) -> (f64, f64, f64) {
    let n = counts.len() as f64;
    let sm: f64 = shape.iter().sum();
    let smm: f64 = shape.iter().map(|m| m * m).sum();
    let sc: f64 = counts.iter().sum();
    let smc: f64 = shape.iter().zip(counts).map(|(m, c)| m * c).sum();
    let det = n * smm - sm * sm;
    let (scale, background) = if det > 1e-12 * n * smm {
        ((n * smc - sm * sc) / det, (smm * sc - sm * smc) / det)
    } else {
        (0.0, sc / n)
    };
    let ssr = counts
        .iter()
        .zip(shape)
        .map(|(c, m)| (c - scale * m - background).powi(2))
        .sum();
    (scale, background, ssr)
}

struct Objective<'a> {
    model: &'a mut ForwardModel,
    counts: Vec<f64>,
    edges: Vec<f64>,
    data_centroid: f64,
    n_evaluations: usize,
}

struct Evaluation {
    params: ModelParams,
    ssr: f64,
}

impl Objective<'_> {
    fn eval(&mut self, value: f64) -> Result<Evaluation> {
        self.n_evaluations += 1;
        let shape = self.model.shape(value)?;
        let t0 = self.data_centroid - shape.centroid;
        let unit = bin_integrals(shape, &self.edges, t0);
        let (scale, background, ssr) = linear_nuisance(&self.counts, &unit);
        Ok(Evaluation {
            params: ModelParams {
                value,
                scale,
                t0,
                background,
            },
            ssr,
        })
    }
}

/// Coordinate in which the scan is uniform.
#[derive(Clone, Copy)]
enum Axis {
    Log,
    Linear,
}

impl Axis {
    fn to_value(self, u: f64) -> f64 {
        match self {
            Axis::Log => u.exp(),
            Axis::Linear => u,
        }
    }

    fn to_axis(self, v: f64) -> f64 {
        match self {
            Axis::Log => v.ln(),
            Axis::Linear => v,
        }
    }

    fn closed(self, a: f64, b: f64) -> bool {
        match self {
            Axis::Log => b - a <= REFINE_TOLERANCE,
            Axis::Linear => {
                b - a <= REFINE_TOLERANCE * (0.5 * (a + b)).abs().max(f64::MIN_POSITIVE)
            }
        }
    }
}

pub fn fit(problem: &FitProblem) -> Result<FitResult> {
    let mut model = ForwardModel::new(problem)?;
    fit_with_model(problem, &mut model)
}

/// Fits `problem` reusing (and extending) the memoized shapes of `model`,
/// which must have been built for the same scenario and bounds.
pub fn fit_with_model(problem: &FitProblem, model: &mut ForwardModel) -> Result<FitResult> {
    problem.validate()?;
    if !model.serves(problem) {
        return Err(Error::invalid(
            "forward model was built for a different fit problem",
        ));
    }
    let hist = &problem.histogram;
    let counts: Vec<f64> = hist.counts().iter().map(|&c| c as f64).collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let ss_tot: f64 = counts.iter().map(|c| (c - mean).powi(2)).sum();
    let mut obj = Objective {
        model,
        counts,
        edges: hist.bin_edges().to_vec(),
        data_centroid: data_centroid(hist),
        n_evaluations: 0,
    };

    let (lo, hi) = problem.bounds;
    let axis = if lo > 0.0 { Axis::Log } else { Axis::Linear };
    let (u_lo, u_hi) = (axis.to_axis(lo), axis.to_axis(hi));
    let scan: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| u_lo + (u_hi - u_lo) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let mut best: Option<(usize, Evaluation)> = None;
    for (i, &u) in scan.iter().enumerate() {
        let value = match i {
            0 => lo,
            i if i == SCAN_POINTS - 1 => hi,
            _ => axis.to_value(u),
        };
        let ev = obj.eval(value)?;
        if best.as_ref().is_none_or(|(_, b)| ev.ssr < b.ssr) {
            best = Some((i, ev));
        }
    }
    let (i_best, mut best) = best.expect("scan is non-empty");

    let mut flags = Vec::new();
    if i_best == 0 {
        flags.push(FitFlag::AtLowerBound);
    } else if i_best == SCAN_POINTS - 1 {
        flags.push(FitFlag::AtUpperBound);
    } else {
        let (mut a, mut b) = (scan[i_best - 1], scan[i_best + 1]);
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = obj.eval(axis.to_value(c))?;
        let mut fd = obj.eval(axis.to_value(d))?;
        while !axis.closed(a, b) {
            if fc.ssr < fd.ssr {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = obj.eval(axis.to_value(c))?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = obj.eval(axis.to_value(d))?;
            }
        }
        for ev in [fc, fd] {
            if ev.ssr < best.ssr {
                best = ev;
            }
        }
    }
    if !(best.params.scale > 0.0) || best.ssr > MIN_EXPLAINED_VARIANCE * ss_tot {
        flags.push(FitFlag::NoSignal);
    }

    let n_bins = obj.counts.len() as f64;
    Ok(FitResult {
        estimate: best.params.value,
        free_parameter: problem.free_parameter,
        scale: best.params.scale,
        t0: best.params.t0,
        background: best.params.background,
        residual_rms: (best.ssr / n_bins).sqrt(),
        n_evaluations: obj.n_evaluations,
        converged: flags.is_empty(),
        flags,
    })
}

/// Per-photon fibre k″ (s²/m) implied by a fitted total budget, assuming
/// every arm has the same k″.
pub fn report_k2_per_arm(result: &FitResult, problem: &FitProblem) -> Result<f64> {
    if result.free_parameter != FreeParameter::TotalB {
        return Err(Error::invalid(
            "k″ per arm is only defined when the total budget is fitted",
        ));
    }
    if !result.converged {
        return Err(Error::invalid("fit did not converge"));
    }
    let total = problem.total_length();
    if !(total > 0.0) {
        return Err(Error::invalid("total arm length is zero"));
    }
    Ok(result.estimate / total)
}

/// Key-value fit report.
pub fn format_report(result: &FitResult, problem: &FitProblem) -> String {
    let k2 = match report_k2_per_arm(result, problem) {
        Ok(k2) => format!("{k2:e}"),
        Err(_) => "n/a".to_string(),
    };
    let flags = if result.flags.is_empty() {
        "none".to_string()
    } else {
        result
            .flags
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    };
    format!(
        "estimate = {:e}\nestimate_units = {}\nk2_per_arm = {}\nk2_per_arm_units = s^2/m\n\
         residual_rms = {:e}\nconverged = {}\nn_evaluations = {}\nflags = {}\n\
         scale = {:e}\nt0_s = {:e}\nbackground = {:e}\n",
        result.estimate,
        result.free_parameter.units(),
        k2,
        result.residual_rms,
        result.converged,
        result.n_evaluations,
        flags,
        result.scale,
        result.t0,
        result.background,
    )
}
