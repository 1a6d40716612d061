//! Ordinary least squares on `(log n, log value)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero with only two points.
    pub stderr: f64,
    pub points: usize,
}

/// Fits `log value = intercept + slope · log n`. Natural logarithms.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: points.len() });
    }
    for &(n, v) in points {
        if !(n > 0.0) {
            return Err(Error::NonPositive(n));
        }
        if !(v > 0.0) {
            return Err(Error::NonPositive(v));
        }
    }
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(sx, sy), &(n, v)| (sx + libm::log(n), sy + libm::log(v)));
    let (mx, my) = (sx / m, sy / m);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(n, v) in points {
        let dx = libm::log(n) - mx;
        sxx += dx * dx;
        sxy += dx * (libm::log(v) - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidConfig("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if points.len() > 2 {
        let ssr: f64 = points
            .iter()
            .map(|&(n, v)| {
                let r = libm::log(v) - intercept - slope * libm::log(n);
                r * r
            })
            .sum();
        libm::sqrt(ssr / (m - 2.0) / sxx)
    } else {
        0.0
    };
    Ok(SlopeFit { slope, intercept, stderr, points: points.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = (4..10).map(|j| (libm::pow(2.0, j as f64), libm::pow(2.0, -(j as f64)))).collect();
        let fit = fit_loglog_slope(&pts).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
        let pts: Vec<(f64, f64)> = pts.iter().map(|&(n, _)| (n, 3.0 * libm::pow(n, -0.5))).collect();
        assert!((fit_loglog_slope(&pts).unwrap().slope + 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(fit_loglog_slope(&[(2.0, 1.0)]), Err(Error::TooFewPoints { .. })));
        assert!(matches!(fit_loglog_slope(&[(2.0, 1.0), (4.0, 0.0)]), Err(Error::NonPositive(_))));
    }
}
