use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::series::EstimateSeries;
use crate::error::{Error, Result};

/// Fewest usable points a fit accepts.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedPoint {
    pub x: f64,
    pub reason: String,
}

/// Weighted least-squares line `y = intercept + rate · x`. For exponential
/// fits `y` is the log-estimate, so `rate` is the exponential rate (negative
/// for decay).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub rate_se: f64,
    /// 95% confidence interval for `rate`.
    pub ci: [f64; 2],
    /// Reduced chi-square of the weighted residuals.
    pub reduced_chi2: f64,
    pub used: Vec<f64>,
    pub dropped: Vec<DroppedPoint>,
}

impl FitResult {
    pub fn ci_excludes_zero(&self) -> bool {
        self.ci[0] > 0.0 || self.ci[1] < 0.0
    }
}

struct Point {
    x: f64,
    y: f64,
    sigma: f64,
}

fn wls(points: &[Point], used: Vec<f64>, dropped: Vec<DroppedPoint>) -> Result<FitResult> {
    let n = points.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints {
            usable: n,
            required: MIN_FIT_POINTS,
        });
    }
    // Points without an error estimate get unit weights when nothing has
    // one; otherwise their sigma is floored at the smallest positive sigma.
    let positive = points.iter().map(|p| p.sigma).filter(|&s| s > 0.0 && s.is_finite());
    let floor = positive.fold(f64::INFINITY, f64::min);
    let unweighted = !floor.is_finite();
    let w: Vec<f64> = points
        .iter()
        .map(|p| if unweighted { 1.0 } else { p.sigma.max(floor).powi(-2) })
        .collect();
    let sw: f64 = w.iter().sum();
    let mx = points.iter().zip(&w).map(|(p, w)| w * p.x).sum::<f64>() / sw;
    let my = points.iter().zip(&w).map(|(p, w)| w * p.y).sum::<f64>() / sw;
    let sxx: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientPoints {
            usable: 1,
            required: MIN_FIT_POINTS,
        });
    }
    let sxy: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.x - mx) * (p.y - my)).sum();
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    let chi2: f64 = points
        .iter()
        .zip(&w)
        .map(|(p, w)| w * (p.y - intercept - rate * p.x).powi(2))
        .sum();
    let syy: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.y - my).powi(2)).sum();
    let dof = (n - 2) as f64;
    let reduced = chi2 / dof;
    // With real error bars the covariance is inflated by the Birge ratio
    // only when the scatter exceeds them; without error bars it is the
    // ordinary residual estimate.
    let scale = if unweighted { reduced } else { reduced.max(1.0) };
    let rate_se = (scale / sxx).sqrt();
    let tq = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(FitResult {
        rate,
        intercept,
        r_squared: if syy > 0.0 { 1.0 - chi2 / syy } else { 1.0 },
        rate_se,
        ci: [rate - tq * rate_se, rate + tq * rate_se],
        reduced_chi2: reduced,
        used,
        dropped,
    })
}

/// Weighted least squares on `log(estimate)` against `x`, using points with
/// `x ≥ x_min` and `estimate > 3·se`; weights come from the delta-method
/// standard error `se/estimate` of the log.
pub fn fit_exponential(series: &EstimateSeries, x_min: f64) -> Result<FitResult> {
    let mut pts = Vec::new();
    let mut used = Vec::new();
    let mut dropped = Vec::new();
    for p in &series.points {
        let reason = if p.x < x_min {
            Some("below fit window")
        } else if !(p.estimate > 0.0 && p.estimate > 3.0 * p.se) {
            Some("below noise floor")
        } else {
            None
        };
        match reason {
            Some(r) => dropped.push(DroppedPoint {
                x: p.x,
                reason: r.into(),
            }),
            None => {
                used.push(p.x);
                pts.push(Point {
                    x: p.x,
                    y: p.estimate.ln(),
                    sigma: p.se / p.estimate,
                });
            }
        }
    }
    wls(&pts, used, dropped)
}

/// Weighted least squares on the raw estimates, using points with `x ≥ x_min`.
pub fn fit_linear(series: &EstimateSeries, x_min: f64) -> Result<FitResult> {
    let mut pts = Vec::new();
    let mut used = Vec::new();
    let mut dropped = Vec::new();
    for p in &series.points {
        if p.x < x_min || !p.estimate.is_finite() {
            dropped.push(DroppedPoint {
                x: p.x,
                reason: if p.x < x_min { "below fit window" } else { "not finite" }.into(),
            });
        } else {
            used.push(p.x);
            pts.push(Point {
                x: p.x,
                y: p.estimate,
                sigma: p.se,
            });
        }
    }
    wls(&pts, used, dropped)
}
