//! Thermal-equilibrium spin populations, Bose phonon occupancy, orbital
//! freeze-out, and temperature inference from saturation populations.
//!
//! Every formula uses `h·f/k_B·T` with the ordinary frequency `f`; this is
//! the convention under which quoted transition frequencies reproduce the
//! measured occupancies directly.

use crate::error::{Error, Result};
use crate::units;
use serde::{Deserialize, Serialize};

/// CODATA values, overridable through run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Planck constant (J·s).
    pub h: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            h: units::PLANCK,
            k_b: units::BOLTZMANN,
        }
    }
}

impl Constants {
    fn ratio(&self, freq_ghz: f64, temperature_k: f64) -> f64 {
        self.h * freq_ghz * units::GHZ / (self.k_b * temperature_k)
    }
}

/// A two-level transition in contact with a bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    /// Bath temperature (K), strictly positive.
    pub temperature: f64,
    /// Transition frequency (GHz), non-negative.
    pub omega: f64,
}

impl ThermalState {
    pub fn new(temperature: f64, omega: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::domain("temperature must be positive"));
        }
        if !(omega >= 0.0) {
            return Err(Error::invalid("frequency must be non-negative"));
        }
        Ok(ThermalState { temperature, omega })
    }
}

/// Steady-state spin populations `(p_up, p_down)` with
/// p_up = 1/(e^{hf/kT} + 1). The pair sums to one exactly.
pub fn spin_steady_populations(state: &ThermalState) -> (f64, f64) {
    let x = units::thermal_ratio(state.omega, state.temperature);
    let p_up = 1.0 / (x.exp() + 1.0);
    (p_up, 1.0 - p_up)
}

fn spin_populations_with(c: &Constants, state: &ThermalState) -> (f64, f64) {
    let x = c.ratio(state.omega, state.temperature);
    let p_up = 1.0 / (x.exp() + 1.0);
    (p_up, 1.0 - p_up)
}

/// Inverts [`spin_steady_populations`]: T = (hf/k_B)/ln(1/p − 1).
///
/// Only 0 < p < 0.5 is physical in equilibrium; p = 0.5 sits on the
/// infinite-temperature boundary.
pub fn temperature_from_saturation(p_up_saturated: f64, omega_ghz: f64) -> Result<f64> {
    temperature_from_saturation_with(&Constants::default(), p_up_saturated, omega_ghz)
}

pub fn temperature_from_saturation_with(
    c: &Constants,
    p_up_saturated: f64,
    omega_ghz: f64,
) -> Result<f64> {
    if !(p_up_saturated > 0.0 && p_up_saturated < 0.5) {
        return Err(Error::domain(format!(
            "saturation population {p_up_saturated} outside (0, 0.5)"
        )));
    }
    if !(omega_ghz > 0.0) {
        return Err(Error::domain("need a positive transition frequency"));
    }
    let x = (1.0 / p_up_saturated - 1.0).ln();
    Ok(c.h * omega_ghz * units::GHZ / (c.k_b * x))
}

/// Bose-Einstein occupancy n = 1/(e^{hf/kT} − 1).
pub fn bose_occupancy(omega_ghz: f64, temperature_k: f64) -> Result<f64> {
    bose_occupancy_with(&Constants::default(), omega_ghz, temperature_k)
}

pub fn bose_occupancy_with(c: &Constants, omega_ghz: f64, temperature_k: f64) -> Result<f64> {
    if !(temperature_k > 0.0) {
        return Err(Error::domain("temperature must be positive"));
    }
    if !(omega_ghz > 0.0) {
        return Err(Error::domain("frequency must be positive"));
    }
    let x = c.ratio(omega_ghz, temperature_k);
    Ok(1.0 / x.exp_m1())
}

/// Population of the lower orbital branch for a two-level Boltzmann factor:
/// p = 1/(1 + e^{−hΔ/kT}). Always ≥ 0.5; → 1 as T → 0.
pub fn orbital_ground_fraction(delta_gs_ghz: f64, temperature_k: f64) -> Result<f64> {
    orbital_ground_fraction_with(&Constants::default(), delta_gs_ghz, temperature_k)
}

pub fn orbital_ground_fraction_with(
    c: &Constants,
    delta_gs_ghz: f64,
    temperature_k: f64,
) -> Result<f64> {
    if !(temperature_k > 0.0 && delta_gs_ghz > 0.0) {
        return Err(Error::domain("inputs must be positive"));
    }
    let x = c.ratio(delta_gs_ghz, temperature_k);
    Ok(1.0 / (1.0 + (-x).exp()))
}

/// Temperature at which the lower orbital branch holds `fraction` of the
/// population, by bisection to 1e-4 K.
///
/// Above this temperature the upper-branch phonon transition opens an
/// additional (Orbach-type) relaxation channel; only the threshold is
/// computed here.
pub fn freeze_out_temperature(delta_gs_ghz: f64, fraction: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&fraction) {
        return Err(Error::domain("target fraction must lie in [0.5, 1)"));
    }
    if !(delta_gs_ghz > 0.0) {
        return Err(Error::domain("need a positive orbital splitting"));
    }
    // orbital_ground_fraction is monotone decreasing in T.
    let mut lo = 1e-4;
    let mut hi = 1e4;
    let f = |t: f64| orbital_ground_fraction(delta_gs_ghz, t).expect("positive inputs") - fraction;
    if f(lo) < 0.0 || f(hi) > 0.0 {
        return Err(Error::domain("threshold outside the bisection bracket"));
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Thermometry summary emitted by the command-line interface.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThermometryReport {
    pub omega_ghz: f64,
    pub p_saturation: f64,
    pub temperature_k: f64,
    /// Bose occupancy of the 12.06 GHz breathing mode at the inferred
    /// temperature.
    pub n_th_12ghz: f64,
}

/// Frequency of the mechanical breathing mode used in the occupancy summary.
pub const BREATHING_MODE_GHZ: f64 = 12.06;

pub fn thermometry_report_from_temperature(
    c: &Constants,
    omega_ghz: f64,
    temperature_k: f64,
) -> Result<ThermometryReport> {
    let state = ThermalState::new(temperature_k, omega_ghz)?;
    let (p_up, _) = spin_populations_with(c, &state);
    Ok(ThermometryReport {
        omega_ghz,
        p_saturation: p_up,
        temperature_k,
        n_th_12ghz: bose_occupancy_with(c, BREATHING_MODE_GHZ, temperature_k)?,
    })
}

pub fn thermometry_report_from_saturation(
    c: &Constants,
    omega_ghz: f64,
    p_saturation: f64,
) -> Result<ThermometryReport> {
    let temperature_k = temperature_from_saturation_with(c, p_saturation, omega_ghz)?;
    Ok(ThermometryReport {
        omega_ghz,
        p_saturation,
        temperature_k,
        n_th_12ghz: bose_occupancy_with(c, BREATHING_MODE_GHZ, temperature_k)?,
    })
}
