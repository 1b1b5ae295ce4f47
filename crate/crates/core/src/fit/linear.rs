//! Closed-form weighted linear fits.

use crate::error::{Error, Result};
use crate::units::deg_to_rad;
use serde::Serialize;

/// Slope of a zero-intercept line with its 1σ uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub sigma: f64,
    pub n_points: usize,
}

/// Weighted fit of `y = slope·x` (no intercept): slope = Σwxy / Σwx².
///
/// With per-point sigmas the slope variance is 1/Σwx²; without them the
/// variance is scaled by reduced χ² so the quoted uncertainty reflects the
/// observed scatter.
pub fn linear_fit_zero_intercept(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<SlopeFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::invalid("need at least two (x, y) points"));
    }
    if let Some(s) = sigma {
        if s.len() != n {
            return Err(Error::invalid("sigma length mismatch"));
        }
    }
    let w = |i: usize| -> f64 {
        match sigma {
            Some(s) if s[i] > 0.0 => 1.0 / (s[i] * s[i]),
            _ => 1.0,
        }
    };
    let sxx: f64 = (0..n).map(|i| w(i) * x[i] * x[i]).sum();
    if sxx <= 0.0 {
        return Err(Error::domain(
            "all abscissa values are zero; slope undefined",
        ));
    }
    let sxy: f64 = (0..n).map(|i| w(i) * x[i] * y[i]).sum();
    let slope = sxy / sxx;

    let mut variance = 1.0 / sxx;
    if sigma.is_none() && n > 1 {
        let rss: f64 = (0..n)
            .map(|i| {
                let r = y[i] - slope * x[i];
                r * r
            })
            .sum();
        variance *= rss / (n - 1) as f64;
    }
    Ok(SlopeFit {
        slope,
        sigma: variance.max(0.0).sqrt(),
        n_points: n,
    })
}

/// Single-parameter fit of `Γ = A·sin²θ` over (θ in degrees, Γ) points.
///
/// Linear in A, so the weighted least-squares solution is closed-form. A
/// single non-zero angle is allowed and returns Γ/sin²θ with zero
/// uncertainty.
pub fn fit_angle_amplitude(points: &[(f64, f64)], sigma: Option<&[f64]>) -> Result<SlopeFit> {
    if points.is_empty() {
        return Err(Error::invalid("no angle points"));
    }
    let u: Vec<f64> = points
        .iter()
        .map(|&(theta, _)| {
            let s = deg_to_rad(theta).sin();
            s * s
        })
        .collect();
    if u.iter().all(|v| *v == 0.0) {
        return Err(Error::domain("all angles are zero; amplitude undefined"));
    }
    let y: Vec<f64> = points.iter().map(|&(_, g)| g).collect();
    if points.len() == 1 {
        return Ok(SlopeFit {
            slope: y[0] / u[0],
            sigma: 0.0,
            n_points: 1,
        });
    }
    linear_fit_zero_intercept(&u, &y, sigma)
}
