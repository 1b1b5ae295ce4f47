//! Physical constants and unit conversion factors.
//!
//! Frequencies are stored in the unit natural to each subsystem (THz for
//! optics, GHz for mechanics and spin transitions, MHz for couplings, kHz for
//! decay rates) and converted to Hz at the point of use. Thermal formulas use
//! `h·f` with the ordinary frequency `f`, never `ħω` with a stray 2π.

/// Planck constant (J·s), CODATA 2018 exact value.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Boltzmann constant (J/K), CODATA 2018 exact value.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Hz per THz.
pub const THZ: f64 = 1e12;
/// Hz per GHz.
pub const GHZ: f64 = 1e9;
/// Hz per MHz.
pub const MHZ: f64 = 1e6;
/// Hz per kHz.
pub const KHZ: f64 = 1e3;

/// W per pW.
pub const PICOWATT: f64 = 1e-12;
/// W per µW.
pub const MICROWATT: f64 = 1e-6;

/// `h·f / k_B` in kelvin for a frequency given in GHz.
///
/// This is the temperature scale of a transition: ~0.048 K per GHz.
pub fn transition_kelvin(freq_ghz: f64) -> f64 {
    PLANCK * freq_ghz * GHZ / BOLTZMANN
}

/// Dimensionless Boltzmann argument `h·f / (k_B·T)`.
pub fn thermal_ratio(freq_ghz: f64, temperature_k: f64) -> f64 {
    transition_kelvin(freq_ghz) / temperature_k
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg * std::f64::consts::PI / 180.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn transition_scale_per_ghz() {
        // 1 GHz is 47.99 mK; 8.3 GHz gives the 0.3984 K scale used in
        // saturation thermometry.
        assert_relative_eq!(transition_kelvin(1.0), 0.04799243, max_relative = 1e-6);
        assert_relative_eq!(transition_kelvin(8.3), 0.398337, max_relative = 1e-4);
    }

    #[test]
    fn thermal_ratio_composes() {
        let x = thermal_ratio(8.3, 0.150);
        assert_relative_eq!(x, 0.398337 / 0.150, max_relative = 1e-4);
    }
}
