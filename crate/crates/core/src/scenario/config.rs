//! Scenario file grammar.
//!
//! ```text
//! file    = { line }
//! line    = [ key "=" value ] [ "#" comment ]
//! key     = section "." name | "arm." index "." name | "outputs"
//! value   = number [ unit ] | word | word { "," word }
//! ```
//!
//! Blank lines and `#` comments are ignored. Each key may appear once;
//! unknown keys are errors. Quantities take an optional unit suffix after a
//! space (`0.4 mm`, `1.5 ps/cm`, `3.2e-28 s2/cm`, `10 nm`); bare numbers are SI.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `crystal.kind` | `type2` or `type1` | required |
//! | `crystal.length` | crystal length | required |
//! | `crystal.d` | type-II inverse group-velocity difference `D` | required for type2 |
//! | `crystal.d2` | type-I curvature `D″` | required for type1 |
//! | `arm.<n>.k2`, `arm.<n>.z` | fibre GVD and length of arm `n` (1, 2, ...) | no arms |
//! | `filter.shape` | `gaussian` or `rectangular` | no filter |
//! | `filter.fwhm`, `filter.center` | wavelength FWHM and centre | required with a filter |
//! | `filter.offset` | passband offset from degeneracy, rad/s | 0 |
//! | `filter.arms` | `both`, `signal` or `idler` | `both` |
//! | `detector.jitter_start`, `detector.jitter_stop` | per-detector jitter FWHM | 0 |
//! | `detector.combined_fwhm` | combined response, split equally | unset |
//! | `mca.bin_width`, `mca.n_bins`, `mca.t_center` | channel layout | 50 ps, 1024, half range |
//! | `mca.n_pairs`, `mca.background_per_bin`, `mca.seed` | Monte Carlo run | 100000, 0, 1 |
//! | `grid.omega_max`, `grid.n_omega`, `grid.tau_max`, `grid.n_tau` | number or `auto` | `auto` |
//! | `outputs` | comma list of `spectrum`, `g1`, `g2`, `g2_farfield`, `smeared`, `histogram` | all |

use std::collections::BTreeMap;

use crate::detection::{DetectorSpec, McaConfig};
use crate::propagation::{Arm, DispersionBudget, GridRequest};
use crate::spectral::{CrystalSpec, FilterShape, FilterSpec};
use crate::units::{parse_quantity, Dimension};
use crate::{Error, Result};

use super::{FilterArms, Output, ScenarioConfig};

struct Entry {
    line: usize,
    value: String,
}

fn split_entries(text: &str) -> Result<BTreeMap<String, Entry>> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty key or value".into(),
            });
        }
        if !is_known(key) {
            return Err(Error::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if let Some(prev) = entries.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        ) {
            return Err(Error::Parse {
                line,
                message: format!("`{key}` already set on line {}", prev.line),
            });
        }
    }
    Ok(entries)
}

const KEYS: &[&str] = &[
    "crystal.kind",
    "crystal.length",
    "crystal.d",
    "crystal.d2",
    "filter.shape",
    "filter.fwhm",
    "filter.center",
    "filter.offset",
    "filter.arms",
    "detector.jitter_start",
    "detector.jitter_stop",
    "detector.combined_fwhm",
    "mca.bin_width",
    "mca.t_center",
    "mca.n_bins",
    "mca.n_pairs",
    "mca.background_per_bin",
    "mca.seed",
    "grid.omega_max",
    "grid.n_omega",
    "grid.tau_max",
    "grid.n_tau",
    "outputs",
];

fn arm_key(key: &str) -> Option<(usize, &str)> {
    let rest = key.strip_prefix("arm.")?;
    let (index, name) = rest.split_once('.')?;
    let index: usize = index.parse().ok().filter(|&n| n >= 1)?;
    matches!(name, "k2" | "z").then_some((index, name))
}

fn is_known(key: &str) -> bool {
    KEYS.contains(&key) || arm_key(key).is_some()
}

/// Typed access to the parsed entries; every error names the field.
struct Fields {
    entries: BTreeMap<String, Entry>,
}

impl Fields {
    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn quantity(&self, key: &str, dim: Dimension) -> Result<Option<f64>> {
        self.raw(key)
            .map(|v| parse_quantity(v, dim).map_err(|e| field_error(key, e)))
            .transpose()
    }

    fn required(&self, key: &str, dim: Dimension) -> Result<f64> {
        self.quantity(key, dim)?
            .ok_or_else(|| Error::validation(key, "missing"))
    }

    fn integer(&self, key: &str) -> Result<Option<u64>> {
        self.raw(key)
            .map(|v| {
                let parsed = v.parse::<u64>().ok().or_else(|| {
                    let f: f64 = v.parse().ok()?;
                    (f >= 0.0 && f.fract() == 0.0 && f <= 2f64.powi(53)).then_some(f as u64)
                });
                parsed.ok_or_else(|| {
                    Error::validation(key, format!("`{v}` is not a non-negative integer"))
                })
            })
            .transpose()
    }

    /// `auto` or absent gives `None`.
    fn auto_quantity(&self, key: &str, dim: Dimension) -> Result<Option<f64>> {
        match self.raw(key) {
            Some("auto") | None => Ok(None),
            Some(_) => self.quantity(key, dim),
        }
    }

    fn auto_integer(&self, key: &str) -> Result<Option<u64>> {
        match self.raw(key) {
            Some("auto") | None => Ok(None),
            Some(_) => self.integer(key),
        }
    }
}

fn field_error(key: &str, err: Error) -> Error {
    match err {
        Error::InvalidArgument(message) => Error::validation(key, message),
        Error::Validation { message, .. } => Error::validation(key, message),
        other => Error::validation(key, other.to_string()),
    }
}

fn crystal(fields: &Fields) -> Result<CrystalSpec> {
    let kind = fields
        .raw("crystal.kind")
        .ok_or_else(|| Error::validation("crystal.kind", "missing"))?;
    let length = fields.required("crystal.length", Dimension::Length)?;
    match kind.to_ascii_lowercase().as_str() {
        "type2" | "type-ii" | "typeii" | "ii" => {
            if fields.has("crystal.d2") {
                return Err(Error::validation(
                    "crystal.d2",
                    "only valid for a type1 crystal",
                ));
            }
            let d = fields.required("crystal.d", Dimension::InverseVelocity)?;
            CrystalSpec::type_ii(length, d).map_err(|e| field_error("crystal.d", e))
        }
        "type1" | "type-i" | "typei" | "i" => {
            if fields.has("crystal.d") {
                return Err(Error::validation(
                    "crystal.d",
                    "only valid for a type2 crystal",
                ));
            }
            let d2 = fields.required("crystal.d2", Dimension::Dispersion)?;
            CrystalSpec::type_i(length, d2).map_err(|e| field_error("crystal.d2", e))
        }
        other => Err(Error::validation(
            "crystal.kind",
            format!("expected type1 or type2, got `{other}`"),
        )),
    }
}

fn budget(fields: &Fields) -> Result<DispersionBudget> {
    let mut arms: BTreeMap<usize, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for key in fields.entries.keys() {
        if let Some((index, name)) = arm_key(key) {
            let dim = if name == "k2" {
                Dimension::Dispersion
            } else {
                Dimension::Length
            };
            let value = fields.quantity(key, dim)?;
            let slot = arms.entry(index).or_default();
            if name == "k2" {
                slot.0 = value;
            } else {
                slot.1 = value;
            }
        }
    }
    let mut list = Vec::new();
    for (index, (k2, z)) in arms {
        let k2 = k2.ok_or_else(|| Error::validation(format!("arm.{index}.k2"), "missing"))?;
        let z = z.ok_or_else(|| Error::validation(format!("arm.{index}.z"), "missing"))?;
        if !(z >= 0.0) {
            return Err(Error::validation(
                format!("arm.{index}.z"),
                "length must be non-negative",
            ));
        }
        list.push(Arm { k2, z });
    }
    DispersionBudget::new(list)
}

fn filter(fields: &Fields) -> Result<(Option<FilterSpec>, FilterArms)> {
    let Some(shape) = fields.raw("filter.shape") else {
        for key in [
            "filter.fwhm",
            "filter.center",
            "filter.offset",
            "filter.arms",
        ] {
            if fields.has(key) {
                return Err(Error::validation(key, "set without filter.shape"));
            }
        }
        return Ok((None, FilterArms::Both));
    };
    let shape = match shape {
        "gaussian" => FilterShape::Gaussian,
        "rectangular" => FilterShape::Rectangular,
        other => {
            return Err(Error::validation(
                "filter.shape",
                format!("expected gaussian or rectangular, got `{other}`"),
            ))
        }
    };
    let fwhm = fields.required("filter.fwhm", Dimension::Length)?;
    let center = fields.required("filter.center", Dimension::Length)?;
    let offset = fields
        .quantity("filter.offset", Dimension::AngularFrequency)?
        .unwrap_or(0.0);
    let spec =
        FilterSpec::new(shape, fwhm, center, offset).map_err(|e| field_error("filter.fwhm", e))?;
    let arms = match fields.raw("filter.arms").unwrap_or("both") {
        "both" => FilterArms::Both,
        "signal" => FilterArms::Signal,
        "idler" => FilterArms::Idler,
        other => {
            return Err(Error::validation(
                "filter.arms",
                format!("expected both, signal or idler, got `{other}`"),
            ))
        }
    };
    Ok((Some(spec), arms))
}

fn detector(fields: &Fields) -> Result<DetectorSpec> {
    if let Some(combined) = fields.quantity("detector.combined_fwhm", Dimension::Time)? {
        for key in ["detector.jitter_start", "detector.jitter_stop"] {
            if fields.has(key) {
                return Err(Error::validation(
                    key,
                    "conflicts with detector.combined_fwhm",
                ));
            }
        }
        return DetectorSpec::from_combined(combined)
            .map_err(|e| field_error("detector.combined_fwhm", e));
    }
    let start = fields
        .quantity("detector.jitter_start", Dimension::Time)?
        .unwrap_or(0.0);
    let stop = fields
        .quantity("detector.jitter_stop", Dimension::Time)?
        .unwrap_or(0.0);
    DetectorSpec::new(start, stop).map_err(|e| field_error("detector.jitter_start", e))
}

fn mca(fields: &Fields) -> Result<McaConfig> {
    let bin_width = fields
        .quantity("mca.bin_width", Dimension::Time)?
        .unwrap_or(50e-12);
    if !(bin_width > 0.0) {
        return Err(Error::validation("mca.bin_width", "must be positive"));
    }
    let n_bins = fields.integer("mca.n_bins")?.unwrap_or(1024) as usize;
    if n_bins == 0 {
        return Err(Error::validation("mca.n_bins", "must be at least 1"));
    }
    let t_center = fields
        .quantity("mca.t_center", Dimension::Time)?
        .unwrap_or(0.5 * n_bins as f64 * bin_width);
    let background_per_bin = fields
        .quantity("mca.background_per_bin", Dimension::Dimensionless)?
        .unwrap_or(0.0);
    if !(background_per_bin >= 0.0) {
        return Err(Error::validation(
            "mca.background_per_bin",
            "must be non-negative",
        ));
    }
    Ok(McaConfig {
        bin_width,
        t_center,
        n_bins,
        n_pairs: fields.integer("mca.n_pairs")?.unwrap_or(100_000),
        background_per_bin,
        rng_seed: fields.integer("mca.seed")?.unwrap_or(1),
    })
}

fn grids(fields: &Fields) -> Result<GridRequest> {
    let positive = |key: &str, v: Option<f64>| match v {
        Some(x) if !(x > 0.0) => Err(Error::validation(key, "must be positive")),
        _ => Ok(v),
    };
    let odd = |key: &str, v: Option<u64>| match v {
        Some(n) if n % 2 == 0 || n < 3 => Err(Error::validation(
            key,
            format!("must be an odd count of at least 3, got {n}"),
        )),
        _ => Ok(v.map(|n| n as usize)),
    };
    Ok(GridRequest {
        omega_max: positive(
            "grid.omega_max",
            fields.auto_quantity("grid.omega_max", Dimension::AngularFrequency)?,
        )?,
        n_omega: odd("grid.n_omega", fields.auto_integer("grid.n_omega")?)?,
        tau_max: positive(
            "grid.tau_max",
            fields.auto_quantity("grid.tau_max", Dimension::Time)?,
        )?,
        n_tau: odd("grid.n_tau", fields.auto_integer("grid.n_tau")?)?,
    })
}

fn outputs(fields: &Fields) -> Result<Vec<Output>> {
    let Some(list) = fields.raw("outputs") else {
        return Ok(Output::ALL.to_vec());
    };
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim) {
        let output = Output::ALL
            .iter()
            .copied()
            .find(|o| o.name() == name)
            .ok_or_else(|| Error::validation("outputs", format!("unknown output `{name}`")))?;
        if !out.contains(&output) {
            out.push(output);
        }
    }
    Ok(out)
}

/// Parses and validates scenario text.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let fields = Fields {
        entries: split_entries(text)?,
    };
    let (filter, filter_arms) = filter(&fields)?;
    let cfg = ScenarioConfig {
        crystal: crystal(&fields)?,
        budget: budget(&fields)?,
        filter,
        filter_arms,
        detector: detector(&fields)?,
        mca: mca(&fields)?,
        grids: grids(&fields)?,
        outputs: outputs(&fields)?,
    };
    cfg.check_grids()?;
    Ok(cfg)
}
