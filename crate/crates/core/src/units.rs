//! Physical constants and lab-unit conversion.
//!
//! Configuration files quote values in the units used at the bench (ps/cm for
//! `D`, s²/cm for `k″`, mm for crystal lengths, nm for wavelengths). Everything
//! is converted to SI on ingestion through [`parse_quantity`].

use crate::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical dimension of a configuration value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Time,
    /// Inverse group-velocity difference, s/m.
    InverseVelocity,
    /// Group-velocity dispersion, s²/m.
    Dispersion,
    /// Angular frequency, rad/s.
    AngularFrequency,
    /// Dispersion budget, s².
    TimeSquared,
    Dimensionless,
}

impl Dimension {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Length => &[
                ("m", 1.0),
                ("km", 1e3),
                ("cm", 1e-2),
                ("mm", 1e-3),
                ("um", 1e-6),
                ("µm", 1e-6),
                ("nm", 1e-9),
            ],
            Dimension::Time => &[
                ("s", 1.0),
                ("ms", 1e-3),
                ("us", 1e-6),
                ("µs", 1e-6),
                ("ns", 1e-9),
                ("ps", 1e-12),
                ("fs", 1e-15),
            ],
            Dimension::InverseVelocity => &[
                ("s/m", 1.0),
                ("ps/cm", 1e-12 / 1e-2),
                ("ps/mm", 1e-12 / 1e-3),
                ("fs/mm", 1e-15 / 1e-3),
                ("ps/m", 1e-12),
            ],
            Dimension::Dispersion => &[
                ("s2/m", 1.0),
                ("s^2/m", 1.0),
                ("s2/cm", 1.0 / 1e-2),
                ("s^2/cm", 1.0 / 1e-2),
                ("fs2/mm", 1e-30 / 1e-3),
                ("fs^2/mm", 1e-30 / 1e-3),
                ("ps2/km", 1e-24 / 1e3),
                ("ps^2/km", 1e-24 / 1e3),
            ],
            Dimension::AngularFrequency => &[("rad/s", 1.0)],
            Dimension::TimeSquared => &[
                ("s2", 1.0),
                ("s^2", 1.0),
                ("ps2", 1e-24),
                ("ps^2", 1e-24),
                ("fs2", 1e-30),
                ("fs^2", 1e-30),
            ],
            Dimension::Dimensionless => &[],
        }
    }
}

/// Parses `"<number> [unit]"` into SI. A bare number is taken as SI already.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let text = text.trim();
    let (number, unit) = match text.find(|c: char| c.is_whitespace()) {
        Some(pos) => (&text[..pos], text[pos..].trim()),
        None => (text, ""),
    };
    let value: f64 = number
        .parse()
        .map_err(|_| Error::invalid(format!("`{number}` is not a number")))?;
    if !value.is_finite() {
        return Err(Error::invalid(format!("`{number}` is not finite")));
    }
    if unit.is_empty() {
        return Ok(value);
    }
    dim.units()
        .iter()
        .find(|(name, _)| *name == unit)
        .map(|(_, factor)| value * factor)
        .ok_or_else(|| {
            let known: Vec<_> = dim.units().iter().map(|(n, _)| *n).collect();
            Error::invalid(format!(
                "unknown unit `{unit}` (expected one of {})",
                known.join(", ")
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs()
    }

    #[test]
    fn lab_units_convert_to_si() {
        assert!(close(
            parse_quantity("1.5 ps/cm", Dimension::InverseVelocity).unwrap(),
            1.5e-10
        ));
        assert!(close(
            parse_quantity("3.2e-28 s2/cm", Dimension::Dispersion).unwrap(),
            3.2e-26
        ));
        assert!(close(
            parse_quantity("0.4 mm", Dimension::Length).unwrap(),
            4e-4
        ));
        assert!(close(
            parse_quantity("916 nm", Dimension::Length).unwrap(),
            9.16e-7
        ));
        assert!(close(
            parse_quantity("700 ps", Dimension::Time).unwrap(),
            7e-10
        ));
        assert_eq!(parse_quantity("500", Dimension::Length).unwrap(), 500.0);
    }

    #[test]
    fn rejects_unknown_units_and_garbage() {
        assert!(parse_quantity("1 furlong", Dimension::Length).is_err());
        assert!(parse_quantity("abc", Dimension::Time).is_err());
        assert!(parse_quantity("inf", Dimension::Time).is_err());
        assert!(parse_quantity("1 m", Dimension::Dimensionless).is_err());
    }
}
