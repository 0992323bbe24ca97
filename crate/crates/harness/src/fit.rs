//! Least-squares exponent fits in log-log coordinates.

use serde::Serialize;

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of `log y` about the fitted line.
    pub residual: f64,
    pub points: usize,
}

/// Fits `log y = slope · log λ + intercept`. Repeated scales are allowed
/// but at least two distinct ones are required.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<FitResult> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(HarnessError::Fit(format!(
            "need at least two distinct scales, got {}",
            distinct.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0 && p.1.is_finite())) {
        return Err(HarnessError::Fit(format!("cannot take logs of ({}, {})", p.0, p.1)));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(FitResult {
        slope,
        intercept,
        residual,
        points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0].iter().map(|&l: &f64| (l, 3.0 * l.powf(-1.25))).collect();
        let f = fit_exponent(&pts).unwrap();
        assert!((f.slope + 1.25).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn single_scale_is_fit_error() {
        let e = fit_exponent(&[(4.0, 1.0), (4.0, 2.0)]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
