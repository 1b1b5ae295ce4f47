//! Built-in fit models with analytic Jacobians.

use super::engine::Model;

/// Polynomial of fixed degree, params `[c0, c1, ...]`, evaluated by Horner.
#[derive(Debug, Clone)]
pub struct Polynomial {
    degree: usize,
}

impl Polynomial {
    pub fn new(degree: usize) -> Self {
        Polynomial { degree }
    }
}

impl Model for Polynomial {
    fn param_names(&self) -> Vec<String> {
        (0..=self.degree).map(|i| format!("c{i}")).collect()
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn jacobian(&self, x: f64, _p: &[f64], out: &mut [f64]) {
        let mut pow = 1.0;
        for v in out.iter_mut() {
            *v = pow;
            pow *= x;
        }
    }
}

/// `p(τ) = p_inf + amplitude · exp(−γ_s·τ)` with τ in µs and γ_s in kHz
/// (1 kHz × 1 µs = 1e-3).
///
/// Params: `[gamma_s_khz, p_inf, amplitude]`.
#[derive(Debug, Clone)]
pub struct ExponentialDecay;

pub(crate) const KHZ_US: f64 = 1e-3;

impl Model for ExponentialDecay {
    fn param_names(&self) -> Vec<String> {
        vec!["gamma_s_khz".into(), "p_inf".into(), "amplitude".into()]
    }

    fn eval(&self, tau: f64, p: &[f64]) -> f64 {
        p[1] + p[2] * (-KHZ_US * p[0] * tau).exp()
    }

    fn jacobian(&self, tau: f64, p: &[f64], out: &mut [f64]) {
        let e = (-KHZ_US * p[0] * tau).exp();
        out[0] = -KHZ_US * tau * p[2] * e;
        out[1] = 1.0;
        out[2] = e;
    }
}

/// `y(x) = baseline + amplitude · (Γ/2)² / ((x−x₀)² + (Γ/2)²)`.
///
/// Params: `[center, fwhm, amplitude, baseline]`; the amplitude is the peak
/// height above baseline and Γ is the full width at half maximum.
#[derive(Debug, Clone)]
pub struct LorentzianPeak;

impl Model for LorentzianPeak {
    fn param_names(&self) -> Vec<String> {
        vec![
            "center".into(),
            "fwhm".into(),
            "amplitude".into(),
            "baseline".into(),
        ]
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let half = p[1] / 2.0;
        let u = half * half;
        let dx = x - p[0];
        p[3] + p[2] * u / (dx * dx + u)
    }

    fn jacobian(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let half = p[1] / 2.0;
        let u = half * half;
        let dx = x - p[0];
        let denom = dx * dx + u;
        let denom2 = denom * denom;
        out[0] = p[2] * u * 2.0 * dx / denom2;
        out[1] = p[2] * dx * dx / denom2 * half;
        out[2] = u / denom;
        out[3] = 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::engine::max_jacobian_deviation;

    // Analytic Jacobians are checked against central finite differences at a
    // relative step of 1e-6; agreement must be 1e-5 or better.
    const JACOBIAN_TOL: f64 = 1e-5;

    #[test]
    fn polynomial_jacobian_matches_finite_differences() {
        let xs: Vec<f64> = (-5..=5).map(|i| i as f64 * 0.7).collect();
        let dev = max_jacobian_deviation(&Polynomial::new(3), &xs, &[0.3, -1.2, 0.8, 0.05]);
        assert!(dev < JACOBIAN_TOL, "deviation {dev:.3e}");
    }

    #[test]
    fn exponential_jacobian_matches_finite_differences() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 25.0).collect();
        let dev = max_jacobian_deviation(&ExponentialDecay, &xs, &[10.0, 0.9, -0.85]);
        assert!(dev < JACOBIAN_TOL, "deviation {dev:.3e}");
    }

    #[test]
    fn lorentzian_jacobian_matches_finite_differences() {
        let xs: Vec<f64> = (0..40).map(|i| 11.9 + i as f64 * 0.01).collect();
        let dev = max_jacobian_deviation(&LorentzianPeak, &xs, &[12.06, 0.035, 9.0, 1.0]);
        assert!(dev < JACOBIAN_TOL, "deviation {dev:.3e}");
    }

    #[test]
    fn lorentzian_shape_anchors() {
        let p = [12.06, 0.035, 9.0, 1.0];
        let m = LorentzianPeak;
        assert!((m.eval(12.06, &p) - 10.0).abs() < 1e-12);
        // Half max above baseline at one half-width detuning.
        assert!((m.eval(12.06 + 0.0175, &p) - (1.0 + 4.5)).abs() < 1e-9);
    }
}
