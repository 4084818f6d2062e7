//! Least-squares fits on logarithmic data.

use crate::error::{Error, Result};

/// Straight-line fit `y = slope * x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::DegenerateFit(format!("{n} points")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Ok(LineFit { slope, intercept, residual: (ss / n as f64).sqrt() })
}

/// Fit `log y` against `log x`; all values must be positive.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateFit("non-positive value in log-log fit".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

/// `n` points from `lo` to `hi`, geometrically spaced.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = geometric_grid(1.0, 1e4, 9);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-0.5)).collect();
        let f = fit_loglog(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((x[8] - 1e4).abs() < 1e-8);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_line(&[1.0], &[2.0]).is_err());
        assert!(fit_loglog(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
