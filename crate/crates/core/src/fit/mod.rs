//! Deterministic nonlinear least-squares engine and the concrete fits built
//! on it: weighted linear fits, exponential-decay fits, Lorentzian peak fits,
//! and peak scanning for broadband spectra.
//!
//! Every fit is a pure function of its inputs: no randomized restarts, fixed
//! damping policy, fixed tolerances. Identical inputs produce bit-identical
//! reports.

mod decay;
mod engine;
mod linear;
mod models;
mod peaks;

pub use decay::fit_exponential_decay;
pub use engine::{least_squares, max_jacobian_deviation, FitOptions, Model};
pub use linear::{fit_angle_amplitude, linear_fit_zero_intercept, SlopeFit};
pub use models::{ExponentialDecay, LorentzianPeak, Polynomial};
pub use peaks::{fit_lorentzian_peak, scan_peaks, Peak};

use serde::ser::{Serialize, SerializeStruct, Serializer};
use std::collections::BTreeMap;

/// Outcome of a least-squares minimization.
///
/// `converged == false` with finite values means the iteration cap was hit or
/// the problem was flagged degenerate; it is a report, not an error.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// 1σ uncertainties from the linearized covariance at the optimum,
    /// scaled by reduced χ² when the data carried no uncertainties.
    pub sigmas: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// √(Σ w·r²) at the reported parameters.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitReport {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.sigmas[i])
    }

    /// Bitwise equality over every floating-point field; the determinism
    /// contract is checked with this, not with approximate comparison.
    pub fn bit_identical(&self, other: &FitReport) -> bool {
        self.names == other.names
            && self.iterations == other.iterations
            && self.converged == other.converged
            && self.residual_norm.to_bits() == other.residual_norm.to_bits()
            && bits_eq(&self.values, &other.values)
            && bits_eq(&self.sigmas, &other.sigmas)
            && self.covariance.len() == other.covariance.len()
            && self
                .covariance
                .iter()
                .zip(&other.covariance)
                .all(|(a, b)| bits_eq(a, b))
    }
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

impl Serialize for FitReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let params: BTreeMap<&str, f64> = self
            .names
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
            .collect();
        let sigmas: BTreeMap<&str, f64> = self
            .names
            .iter()
            .map(String::as_str)
            .zip(self.sigmas.iter().copied())
            .collect();
        let mut s = serializer.serialize_struct("FitReport", 5)?;
        s.serialize_field("params", &params)?;
        s.serialize_field("sigmas", &sigmas)?;
        s.serialize_field("residual_norm", &self.residual_norm)?;
        s.serialize_field("iterations", &self.iterations)?;
        s.serialize_field("converged", &self.converged)?;
        s.end()
    }
}
