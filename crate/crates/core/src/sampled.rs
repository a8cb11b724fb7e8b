//! Piecewise-linear helpers shared by the correlation, detection and fitting
//! code. A sampled curve is a pair of slices `(x, y)` with ascending `x`.

/// Trapezoid integral over the whole sample range.
pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Linear interpolation; zero outside `[x[0], x[last]]`.
pub(crate) fn interpolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    let n = x.len();
    if n == 0 || at < x[0] || at > x[n - 1] {
        return 0.0;
    }
    if n == 1 {
        return y[0];
    }
    let i = match x.partition_point(|&v| v <= at) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    };
    let t = (at - x[i]) / (x[i + 1] - x[i]);
    y[i] + t * (y[i + 1] - y[i])
}

/// Exact integral of the piecewise-linear interpolant over `[lo, hi]`,
/// clipped to the sample range.
pub(crate) fn integrate_between(x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    let n = x.len();
    if n < 2 || hi <= lo {
        return 0.0;
    }
    let lo = lo.max(x[0]);
    let hi = hi.min(x[n - 1]);
    if hi <= lo {
        return 0.0;
    }
    let first = x.partition_point(|&v| v <= lo);
    let last = x.partition_point(|&v| v < hi);
    let mut acc = 0.0;
    let mut prev_x = lo;
    let mut prev_y = interpolate(x, y, lo);
    for i in first..last {
        acc += 0.5 * (x[i] - prev_x) * (prev_y + y[i]);
        prev_x = x[i];
        prev_y = y[i];
    }
    acc + 0.5 * (hi - prev_x) * (prev_y + interpolate(x, y, hi))
}
