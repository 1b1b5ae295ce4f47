//! Universal fit inputs: ordered (abscissa, value, uncertainty) series.

use crate::error::{Error, Result};

/// An ordered spectrum with optional per-point uncertainties.
///
/// The abscissa must be strictly increasing; unit names ride along as
/// metadata and become CSV column headers on export.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
    pub x_unit: String,
    pub y_unit: String,
}

impl Spectrum {
    pub fn new(x: Vec<f64>, y: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::invalid(format!(
                "abscissa length {} != value length {}",
                x.len(),
                y.len()
            )));
        }
        if let Some(s) = &sigma {
            if s.len() != x.len() {
                return Err(Error::invalid("sigma length mismatch"));
            }
            if s.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid("sigmas must be finite and non-negative"));
            }
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite entry in spectrum"));
        }
        if x.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("abscissa must be strictly increasing"));
        }
        Ok(Spectrum {
            x,
            y,
            sigma,
            x_unit: "x".into(),
            y_unit: "y".into(),
        })
    }

    pub fn with_units(mut self, x_unit: &str, y_unit: &str) -> Self {
        self.x_unit = x_unit.into();
        self.y_unit = y_unit.into();
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Least-squares weights 1/σ²; unit weights when no sigmas are attached.
    pub(crate) fn weights(&self) -> Vec<f64> {
        match &self.sigma {
            Some(s) => s
                .iter()
                .map(|v| if *v > 0.0 { 1.0 / (v * v) } else { 1.0 })
                .collect(),
            None => vec![1.0; self.len()],
        }
    }
}

/// Spin-population relaxation data: population vs. pump-probe delay.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    /// Pump-probe delay (µs), strictly increasing.
    pub tau_us: Vec<f64>,
    /// Extracted relative population, each in [0, 1.1].
    pub population: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

impl DecayCurve {
    pub fn new(tau_us: Vec<f64>, population: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if tau_us.len() != population.len() {
            return Err(Error::invalid("tau and population lengths differ"));
        }
        if let Some(s) = &sigma {
            if s.len() != tau_us.len() {
                return Err(Error::invalid("sigma length mismatch"));
            }
        }
        if tau_us.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("tau must be strictly increasing"));
        }
        if population.iter().any(|p| !(0.0..=1.1).contains(p)) {
            return Err(Error::invalid("population outside [0, 1.1]"));
        }
        Ok(DecayCurve {
            tau_us,
            population,
            sigma,
        })
    }

    pub fn len(&self) -> usize {
        self.tau_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_us.is_empty()
    }

    pub(crate) fn weights(&self) -> Vec<f64> {
        match &self.sigma {
            Some(s) => s
                .iter()
                .map(|v| if *v > 0.0 { 1.0 / (v * v) } else { 1.0 })
                .collect(),
            None => vec![1.0; self.len()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_rejects_unsorted_abscissa() {
        assert!(Spectrum::new(vec![1.0, 1.0], vec![0.0, 0.0], None).is_err());
        assert!(Spectrum::new(vec![2.0, 1.0], vec![0.0, 0.0], None).is_err());
        assert!(Spectrum::new(vec![1.0, 2.0], vec![0.0, 0.0], None).is_ok());
    }

    #[test]
    fn spectrum_rejects_length_mismatch() {
        assert!(Spectrum::new(vec![1.0, 2.0], vec![0.0], None).is_err());
        assert!(Spectrum::new(vec![1.0, 2.0], vec![0.0, 1.0], Some(vec![0.1])).is_err());
    }

    #[test]
    fn decay_curve_population_range() {
        assert!(DecayCurve::new(vec![0.0, 1.0], vec![0.2, 1.05], None).is_ok());
        assert!(DecayCurve::new(vec![0.0, 1.0], vec![0.2, 1.2], None).is_err());
        assert!(DecayCurve::new(vec![0.0, 1.0], vec![-0.1, 0.5], None).is_err());
    }
}
