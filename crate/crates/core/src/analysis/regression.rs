use statrs::distribution::{ContinuousCDF, StudentsT};

use super::strong::LevelRecord;
use crate::error::{Error, Result};

/// Unweighted least-squares line through `(log2 x, log2 y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_std_error: f64,
    /// Half-width of the two-sided 95% Student-t interval for the slope.
    pub slope_ci_halfwidth: f64,
    pub n_points: usize,
}

/// Fits `log2 y = intercept + slope · log2 x`. Needs at least 3 points with
/// positive coordinates.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::invalid("log-log fit needs positive coordinates"));
    }
    let n = points.len();
    if n < 3 {
        return Err(Error::InsufficientData { usable: n });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(
            "log-log fit needs at least two distinct x values",
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let sst: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if sst > 0.0 { 1.0 - sse / sst } else { 1.0 };
    let dof = nf - 2.0;
    let slope_std_error = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .expect("dof ≥ 1")
        .inverse_cdf(0.975);
    Ok(LogLogFit {
        slope,
        intercept,
        r_squared,
        slope_std_error,
        slope_ci_halfwidth: t * slope_std_error,
        n_points: n,
    })
}

/// Convergence rate fitted to per-level strong-error estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_ci_halfwidth: f64,
    /// Records used in the fit.
    pub records: Vec<LevelRecord>,
    /// Records left out because their estimate is 0.
    pub excluded: Vec<LevelRecord>,
}

/// Slope of `log2(estimate)` against `log2(h)`. Per-level standard errors
/// stay in the records but do not weight the fit.
pub fn fit_rate(records: &[LevelRecord]) -> Result<RateFit> {
    if let Some(first) = records.first() {
        if records
            .iter()
            .any(|r| r.p != first.p || r.quantity != first.quantity)
        {
            return Err(Error::invalid("all records must share p and quantity"));
        }
    }
    let (used, excluded): (Vec<LevelRecord>, Vec<LevelRecord>) =
        records.iter().partition(|r| r.estimate > 0.0);
    if used.len() < 3 {
        return Err(Error::InsufficientData { usable: used.len() });
    }
    let pts: Vec<(f64, f64)> = used.iter().map(|r| (r.h, r.estimate)).collect();
    let fit = fit_loglog(&pts)?;
    Ok(RateFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        slope_ci_halfwidth: fit.slope_ci_halfwidth,
        records: used,
        excluded,
    })
}
