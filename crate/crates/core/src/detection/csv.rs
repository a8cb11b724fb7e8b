//! Histogram CSV: header `bin_center_s,counts`, one row per bin, UNIX
//! newlines. Bin edges are rebuilt from uniformly spaced centres.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::Histogram;
use crate::{Error, Result};

pub const HEADER: &str = "bin_center_s,counts";

pub fn write_histogram(hist: &Histogram, mut out: impl Write) -> Result<()> {
    writeln!(out, "{HEADER}")?;
    for (center, count) in hist.centers().iter().zip(hist.counts()) {
        writeln!(out, "{center:e},{count}")?;
    }
    Ok(())
}

pub fn write_histogram_file(hist: &Histogram, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_histogram(hist, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

fn parse_count(field: &str) -> Option<u64> {
    field.parse::<u64>().ok().or_else(|| {
        let v: f64 = field.parse().ok()?;
        (v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63)).then_some(v as u64)
    })
}

/// Reads a histogram; rows are numbered from 1 with the header as row 1.
pub fn read_histogram(input: impl Read) -> Result<Histogram> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().transpose()?.ok_or_else(|| Error::Csv {
        row: 1,
        message: "missing header".into(),
    })?;
    if header.trim() != HEADER {
        return Err(Error::Csv {
            row: 1,
            message: format!("expected header `{HEADER}`, found `{}`", header.trim()),
        });
    }
    let mut centers = Vec::new();
    let mut counts = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(c), Some(n), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Csv {
                row,
                message: "expected two comma-separated fields".into(),
            });
        };
        let center: f64 = c
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::Csv {
                row,
                message: format!("bad bin centre `{}`", c.trim()),
            })?;
        let count = parse_count(n.trim()).ok_or_else(|| Error::Csv {
            row,
            message: format!("bad count `{}`", n.trim()),
        })?;
        centers.push(center);
        counts.push(count);
    }
    if centers.len() < 2 {
        return Err(Error::Csv {
            row: centers.len() + 2,
            message: "need at least two bins".into(),
        });
    }
    let n = centers.len();
    let width = (centers[n - 1] - centers[0]) / (n - 1) as f64;
    if !(width > 0.0) {
        return Err(Error::Csv {
            row: 3,
            message: "bin centres must be ascending".into(),
        });
    }
    for (i, c) in centers.iter().enumerate() {
        if (c - (centers[0] + i as f64 * width)).abs() > 1e-6 * width {
            return Err(Error::Csv {
                row: i + 2,
                message: "bin centres are not uniformly spaced".into(),
            });
        }
    }
    Histogram::uniform(centers[0] - 0.5 * width, width, counts)
}

pub fn read_histogram_file(path: impl AsRef<Path>) -> Result<Histogram> {
    read_histogram(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(
            read_histogram("".as_bytes()),
            Err(Error::Csv { row: 1, .. })
        ));
        assert!(matches!(
            read_histogram("bin_center_s,counts\n".as_bytes()),
            Err(Error::Csv { .. })
        ));
        assert!(matches!(
            read_histogram("t,n\n0,1\n".as_bytes()),
            Err(Error::Csv { row: 1, .. })
        ));
        let bad = "bin_center_s,counts\n0,1\n1e-10,x\n";
        assert!(matches!(
            read_histogram(bad.as_bytes()),
            Err(Error::Csv { row: 3, .. })
        ));
        let negative = "bin_center_s,counts\n0,1\n1e-10,-4\n";
        assert!(matches!(
            read_histogram(negative.as_bytes()),
            Err(Error::Csv { row: 3, .. })
        ));
        let uneven = "bin_center_s,counts\n0,1\n1e-10,2\n3e-10,2\n";
        assert!(matches!(
            read_histogram(uneven.as_bytes()),
            Err(Error::Csv { .. })
        ));
        let extra = "bin_center_s,counts\n0,1,2\n";
        assert!(matches!(
            read_histogram(extra.as_bytes()),
            Err(Error::Csv { row: 2, .. })
        ));
    }

    #[test]
    fn accepts_integral_float_counts() {
        let h = read_histogram("bin_center_s,counts\n0.5,3.0\n1.5,4\n".as_bytes()).unwrap();
        assert_eq!(h.counts(), &[3, 4]);
        assert_eq!(h.bin_edges(), &[0.0, 1.0, 2.0]);
    }

    proptest! {
        #[test]
        fn write_then_read_preserves_histogram(
            counts in prop::collection::vec(0u64..1_000_000, 2..200),
            width_ps in 1.0f64..500.0,
        ) {
            let hist = Histogram::uniform(0.0, width_ps * 1e-12, counts.clone()).unwrap();
            let mut buf = Vec::new();
            write_histogram(&hist, &mut buf).unwrap();
            let back = read_histogram(buf.as_slice()).unwrap();
            prop_assert_eq!(back.counts(), &counts[..]);
            for (a, b) in back.bin_edges().iter().zip(hist.bin_edges()) {
                prop_assert!((a - b).abs() <= 1e-9 * hist.bin_width());
            }
        }
    }
}
