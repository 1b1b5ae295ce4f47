//! Exponential fit of spin-relaxation curves.

use super::engine::{least_squares, FitOptions, Model};
use super::models::{ExponentialDecay, KHZ_US};
use super::FitReport;
use crate::error::{Error, Result};
use crate::series::DecayCurve;

/// Fits `p(τ) = p_inf + amplitude·exp(−γ_s·τ)` and reports
/// `(gamma_s_khz, p_inf, amplitude)` with 1σ uncertainties.
///
/// Initial values come from log-linear seeding on baseline-subtracted data.
/// A constant curve is degenerate (γ unidentifiable): the returned report has
/// zero amplitude and `converged = false` instead of an error.
pub fn fit_exponential_decay(curve: &DecayCurve) -> Result<FitReport> {
    let n = curve.len();
    if n < 4 {
        return Err(Error::invalid("need at least four points to fit a decay"));
    }
    let tau = &curve.tau_us;
    let y = &curve.population;

    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return Ok(FitReport {
            names: ExponentialDecay.param_names(),
            values: vec![0.0, y[0], 0.0],
            sigmas: vec![0.0; 3],
            covariance: vec![vec![0.0; 3]; 3],
            residual_norm: 0.0,
            iterations: 0,
            converged: false,
        });
    }

    // Seed: baseline from the tail, rate from a log-linear slope.
    let tail = (n / 5).max(2);
    let p_inf0 = y[n - tail..].iter().sum::<f64>() / tail as f64;
    let amp0 = y[0] - p_inf0;
    let gamma0 = seed_rate(tau, y, p_inf0, amp0)
        .unwrap_or_else(|| 1.0 / (KHZ_US * (tau[n - 1] - tau[0]).max(1e-9) / 3.0));

    let clamp = |p: &mut [f64]| {
        if p[0] < 0.0 {
            p[0] = 0.0;
        }
    };
    least_squares(
        &ExponentialDecay,
        tau,
        y,
        &curve.weights(),
        &[gamma0, p_inf0, amp0],
        Some(&clamp),
        curve.sigma.is_none(),
        &FitOptions::default(),
    )
}

fn seed_rate(tau: &[f64], y: &[f64], p_inf0: f64, amp0: f64) -> Option<f64> {
    if amp0.abs() < 1e-12 {
        return None;
    }
    let pts: Vec<(f64, f64)> = tau
        .iter()
        .zip(y)
        .filter_map(|(&t, &v)| {
            let z = (v - p_inf0) / amp0;
            (z > 0.05).then(|| (t, z.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    // Unweighted regression of ln z on τ; slope = −γ·1e-3.
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let gamma = -slope / KHZ_US;
    (gamma.is_finite() && gamma > 0.0).then_some(gamma)
}
