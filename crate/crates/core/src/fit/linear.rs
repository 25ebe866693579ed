//! Ordinary least-squares line fitting with standard errors, used for
//! rate-vs-power slopes.

use crate::error::{Error, Result};

/// Straight-line fit y = slope * x + intercept with per-parameter standard
/// errors and the residual vector (useful for spotting outliers).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_sigma: f64,
    pub intercept_sigma: f64,
    pub rss: f64,
    pub residuals: Vec<f64>,
}

/// Fits a line through `(x, y)` points. Needs at least two points with
/// distinct x values; standard errors are zero when there are no residual
/// degrees of freedom.
pub fn fit_linear_slope(points: &[(f64, f64)]) -> Result<LinearFit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "a line fit needs at least 2 points, got {n}"
        )));
    }
    for (x, y) in points {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite data point ({x}, {y})"
            )));
        }
    }
    let nf = n as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / nf;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let x_scale: f64 = points.iter().map(|(x, _)| x * x).sum::<f64>().max(1.0);
    if sxx <= f64::EPSILON * x_scale {
        return Err(Error::InvalidParameter(
            "all x values coincide; the slope is undefined".into(),
        ));
    }

    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residuals: Vec<f64> = points.iter().map(|(x, y)| y - (slope * x + intercept)).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let (slope_sigma, intercept_sigma) = if n > 2 {
        let s2 = rss / (nf - 2.0);
        (
            (s2 / sxx).sqrt(),
            (s2 * (1.0 / nf + mean_x * mean_x / sxx)).sqrt(),
        )
    } else {
        (0.0, 0.0)
    };

    Ok(LinearFit { slope, intercept, slope_sigma, intercept_sigma, rss, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_line_is_recovered() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 2.0 * i as f64)).collect();
        let fit = fit_linear_slope(&pts).unwrap();
        assert_relative_eq!(fit.slope, 2.0, epsilon = 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!(fit.rss < 1e-24);
    }

    #[test]
    fn standard_errors_match_hand_computation() {
        // x = [0, 1, 2], y = [0, 1, 1]: slope 1/2, intercept 1/6, rss 1/6
        let fit = fit_linear_slope(&[(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)]).unwrap();
        assert_relative_eq!(fit.slope, 0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 1.0 / 6.0, epsilon = 1e-12);
        assert_relative_eq!(fit.rss, 1.0 / 6.0, epsilon = 1e-12);
        assert_relative_eq!(fit.slope_sigma, (1.0f64 / 12.0).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(fit.intercept_sigma, (5.0f64 / 36.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn outlier_shows_up_in_residuals_and_refit_recovers() {
        // Outlier planted at an interior point, where leverage cannot mask it.
        let pts = vec![
            (0.0, 0.1),
            (1.0, 2.1),
            (2.0, 7.1),
            (3.0, 6.1),
            (4.0, 8.1),
            (5.0, 10.1),
        ];
        let fit = fit_linear_slope(&pts).unwrap();
        let worst = fit
            .residuals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap();
        assert_eq!(worst, 2, "the planted outlier has the largest residual");
        let cleaned: Vec<(f64, f64)> =
            pts.iter().enumerate().filter(|(i, _)| *i != worst).map(|(_, p)| *p).collect();
        let refit = fit_linear_slope(&cleaned).unwrap();
        assert_relative_eq!(refit.slope, 2.0, epsilon = 1e-9);
        assert_relative_eq!(refit.intercept, 0.1, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(fit_linear_slope(&[(1.0, 2.0)]).is_err());
        assert!(fit_linear_slope(&[(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)]).is_err());
        assert!(fit_linear_slope(&[(0.0, f64::NAN), (1.0, 2.0)]).is_err());
    }
}
