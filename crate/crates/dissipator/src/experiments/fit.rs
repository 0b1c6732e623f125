//! Least-squares power-law fits on log-log data.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval of the slope.
    pub slope_ci: f64,
    pub residuals: Vec<f64>,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::Fit("x and y lengths differ".into()));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite input".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("x values are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let dof = nf - 2.0;
    let se = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Fit(e.to_string()))?.inverse_cdf(0.975);
    Ok(LineFit { slope, intercept, slope_ci: t * se, residuals })
}

/// Power law `error ~ C kappa^exponent`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    /// `log C`.
    pub intercept: f64,
    /// 95% interval for the exponent.
    pub ci: (f64, f64),
    pub residuals: Vec<f64>,
    pub kappa_range: (f64, f64),
}

impl RateFit {
    pub fn prefactor(&self) -> f64 {
        self.intercept.exp()
    }

    pub fn ci_width(&self) -> f64 {
        self.ci.1 - self.ci.0
    }
}

pub fn fit_rate(kappas: &[f64], errors: &[f64]) -> Result<RateFit> {
    if kappas.len() != errors.len() {
        return Err(Error::Argument("kappa and error lists differ in length".into()));
    }
    if kappas.iter().chain(errors).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Argument("rate fits need positive finite values".into()));
    }
    let lx: Vec<f64> = kappas.iter().map(|k| k.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let f = fit_line(&lx, &ly)?;
    let lo = kappas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = kappas.iter().copied().fold(0.0, f64::max);
    Ok(RateFit {
        exponent: f.slope,
        intercept: f.intercept,
        ci: (f.slope - f.slope_ci, f.slope + f.slope_ci),
        residuals: f.residuals,
        kappa_range: (lo, hi),
    })
}
