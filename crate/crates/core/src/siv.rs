//! Silicon-vacancy level structure under magnetic field and static strain,
//! and the spin-transition calibration against the four spin-selective
//! optical lines.
//!
//! All operations are pure functions over value types; angles are stored in
//! degrees and converted to radians internally.

use crate::error::{Error, Result};
use crate::units::deg_to_rad;
use serde::{Deserialize, Serialize};

/// Ground/excited spin-orbit splittings, strain susceptibilities, and the
/// spin gyromagnetic ratio.
///
/// `gyro` is the magnetic response (GHz/kG) and is distinct from any decay
/// rate; the strain susceptibilities `d` and `f` are configuration inputs
/// with no universally agreed values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SivParameters {
    /// Ground-state spin-orbit splitting (GHz).
    pub lambda_so_gs: f64,
    /// Excited-state spin-orbit splitting (GHz).
    pub lambda_so_es: f64,
    /// Transverse strain susceptibility (GHz per unit strain).
    pub d: f64,
    /// Shear strain susceptibility (GHz per unit strain).
    pub f: f64,
    /// Spin gyromagnetic ratio (GHz/kG).
    pub gyro: f64,
}

impl SivParameters {
    pub fn new(lambda_so_gs: f64, lambda_so_es: f64, d: f64, f: f64, gyro: f64) -> Result<Self> {
        if !(lambda_so_gs > 0.0) {
            return Err(Error::invalid("lambda_so_gs must be positive"));
        }
        if !(gyro > 0.0) {
            return Err(Error::invalid("gyro must be positive"));
        }
        if ![lambda_so_es, d, f].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("non-finite SiV parameter"));
        }
        Ok(SivParameters {
            lambda_so_gs,
            lambda_so_es,
            d,
            f,
            gyro,
        })
    }
}

/// Applied magnetic field in spherical coordinates relative to the SiV
/// high-symmetry axis. The azimuth is informational and enters no formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticField {
    /// Field strength (kG).
    pub magnitude: f64,
    /// Polar angle from the high-symmetry axis (degrees).
    pub theta: f64,
    /// Azimuth (degrees).
    pub phi: f64,
}

impl MagneticField {
    pub fn new(magnitude: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(magnitude >= 0.0) {
            return Err(Error::invalid("field magnitude must be non-negative"));
        }
        if !(0.0..=180.0).contains(&theta) {
            return Err(Error::invalid("theta must lie in [0, 180] degrees"));
        }
        if !phi.is_finite() {
            return Err(Error::invalid("phi must be finite"));
        }
        Ok(MagneticField {
            magnitude,
            theta,
            phi,
        })
    }

    /// Geometric field component perpendicular to the symmetry axis (kG).
    pub fn perpendicular(&self) -> f64 {
        self.magnitude * deg_to_rad(self.theta).sin()
    }
}

/// Static strain in the SiV frame; six independent components of the
/// symmetric tensor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StrainTensor {
    pub eps_xx: f64,
    pub eps_yy: f64,
    pub eps_zz: f64,
    pub eps_xy: f64,
    pub eps_xz: f64,
    pub eps_yz: f64,
}

impl StrainTensor {
    pub fn is_finite(&self) -> bool {
        [
            self.eps_xx,
            self.eps_yy,
            self.eps_zz,
            self.eps_xy,
            self.eps_xz,
            self.eps_yz,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Transverse-strain projection onto the orbital doublet.
///
/// `gamma_strain` is the strain quantity conventionally written γ; renamed to
/// avoid collision with decay-rate symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrainProjection {
    /// β (GHz).
    pub beta: f64,
    /// γ (GHz).
    pub gamma_strain: f64,
}

impl StrainProjection {
    /// √(β² + γ²) (GHz).
    pub fn magnitude(&self) -> f64 {
        self.beta.hypot(self.gamma_strain)
    }
}

/// Orbital splittings of the ground and excited manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FineStructure {
    /// Ground orbital splitting (GHz).
    pub delta_gs: f64,
    /// Excited orbital splitting (GHz).
    pub delta_es: f64,
}

impl FineStructure {
    pub fn new(delta_gs: f64, delta_es: f64) -> Result<Self> {
        if !(delta_gs > 0.0 && delta_es > 0.0) {
            return Err(Error::invalid("orbital splittings must be positive"));
        }
        Ok(FineStructure { delta_gs, delta_es })
    }
}

/// The four spin-selective optical lines (absolute GHz).
///
/// Naming: `f_du` is the transition from the spin-down ground state to the
/// spin-up excited state, and so on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourLineSpectrum {
    pub f_dd: f64,
    pub f_uu: f64,
    pub f_du: f64,
    pub f_ud: f64,
}

/// Projects a static strain tensor onto (β, γ):
/// β = d·(ε_xx − ε_yy) + f·ε_xz and γ = −2d·ε_xy + f·ε_yz.
pub fn strain_projection(
    strain: &StrainTensor,
    params: &SivParameters,
) -> Result<StrainProjection> {
    if !strain.is_finite() {
        return Err(Error::invalid("non-finite strain component"));
    }
    let beta = params.d * (strain.eps_xx - strain.eps_yy) + params.f * strain.eps_xz;
    let gamma_strain = -2.0 * params.d * strain.eps_xy + params.f * strain.eps_yz;
    if !beta.is_finite() || !gamma_strain.is_finite() {
        return Err(Error::invalid("strain projection overflowed"));
    }
    Ok(StrainProjection { beta, gamma_strain })
}

/// Orbital splitting of a spin-orbit doublet under transverse strain:
/// Δ = √(λ² + 4(β² + γ²)). Always ≥ λ.
pub fn orbital_splitting(projection: &StrainProjection, lambda_so: f64) -> f64 {
    let t2 = projection.beta * projection.beta + projection.gamma_strain * projection.gamma_strain;
    (lambda_so * lambda_so + 4.0 * t2).sqrt()
}

/// Inverts [`orbital_splitting`] for the total transverse-strain splitting
/// 2√(β² + γ²) = √(Δ² − λ²) (GHz).
pub fn transverse_strain_from_splitting(delta: f64, lambda_so: f64) -> Result<f64> {
    if delta < lambda_so {
        return Err(Error::domain(format!(
            "orbital splitting {delta} GHz below spin-orbit splitting {lambda_so} GHz"
        )));
    }
    Ok((delta * delta - lambda_so * lambda_so).sqrt())
}

/// Positions of the four optical lines from the level diagram: two ground
/// sublevels split by ω_s, two excited sublevels split by ω_s′, with
/// `nu0` defining the spin-down-conserving line f↓↓′.
pub fn four_lines(nu0: f64, omega_s: f64, omega_s_excited: f64) -> FourLineSpectrum {
    FourLineSpectrum {
        f_dd: nu0,
        f_uu: nu0 + omega_s_excited - omega_s,
        f_du: nu0 + omega_s_excited,
        f_ud: nu0 - omega_s,
    }
}

/// The two line-difference estimators of the spin transition frequency:
/// (f↓↑′ − f↑↑′, f↓↓′ − f↑↓′). Both equal ω_s for exact line positions.
pub fn estimate_spin_splitting(lines: &FourLineSpectrum) -> (f64, f64) {
    (lines.f_du - lines.f_uu, lines.f_dd - lines.f_ud)
}

/// Linear field-to-frequency conversion with zero intercept:
/// ω_s = conversion · |B|. The conversion constant is an empirical,
/// per-orientation calibration output.
pub fn spin_transition_frequency(field: &MagneticField, conversion_ghz_per_kg: f64) -> f64 {
    conversion_ghz_per_kg * field.magnitude
}

/// One calibration row: applied field magnitude and the four measured lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourLineRecord {
    pub field_kg: f64,
    pub lines: FourLineSpectrum,
}

/// Field-to-frequency conversion constant from four-line calibration data.
///
/// Each record contributes both spin-splitting estimators; the conversion is
/// the zero-intercept slope of estimate vs. field over all of them.
pub fn calibrate_conversion(records: &[FourLineRecord]) -> Result<crate::fit::SlopeFit> {
    if records.is_empty() {
        return Err(Error::invalid("no calibration records"));
    }
    let mut x = Vec::with_capacity(records.len() * 2);
    let mut y = Vec::with_capacity(records.len() * 2);
    for r in records {
        let (a, b) = estimate_spin_splitting(&r.lines);
        x.push(r.field_kg);
        y.push(a);
        x.push(r.field_kg);
        y.push(b);
    }
    crate::fit::linear_fit_zero_intercept(&x, &y, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(d: f64, f: f64) -> SivParameters {
        SivParameters::new(46.0, 255.0, d, f, 2.8).unwrap()
    }

    #[test]
    fn zero_strain_projects_to_zero() {
        let p = strain_projection(&StrainTensor::default(), &params(1000.0, 500.0)).unwrap();
        assert_eq!((p.beta, p.gamma_strain), (0.0, 0.0));
    }

    #[test]
    fn projection_components() {
        let s = StrainTensor {
            eps_xx: 1e-6,
            ..Default::default()
        };
        let p = strain_projection(&s, &params(1000.0, 0.0)).unwrap();
        assert_relative_eq!(p.beta, 1e-3, max_relative = 1e-12);
        assert_eq!(p.gamma_strain, 0.0);

        let s = StrainTensor {
            eps_xy: 1e-6,
            ..Default::default()
        };
        let p = strain_projection(&s, &params(1000.0, 0.0)).unwrap();
        assert_eq!(p.beta, 0.0);
        assert_relative_eq!(p.gamma_strain, -2e-3, max_relative = 1e-12);
    }

    #[test]
    fn non_finite_strain_rejected() {
        let s = StrainTensor {
            eps_xz: f64::NAN,
            ..Default::default()
        };
        assert!(strain_projection(&s, &params(1.0, 1.0)).is_err());
    }

    #[test]
    fn unstrained_orbital_splitting_is_bare_lambda() {
        let p = StrainProjection {
            beta: 0.0,
            gamma_strain: 0.0,
        };
        assert_eq!(orbital_splitting(&p, 46.0), 46.0);
    }

    #[test]
    fn strained_splitting_reaches_85_ghz() {
        // 2√(β²+γ²) = 71.48 GHz on top of λ = 46 GHz gives Δ = 85.0 GHz.
        let t = 71.48 / 2.0;
        let p = StrainProjection {
            beta: t,
            gamma_strain: 0.0,
        };
        assert_relative_eq!(orbital_splitting(&p, 46.0), 85.0, epsilon = 3e-3);
    }

    #[test]
    fn splitting_arithmetic() {
        let p = StrainProjection {
            beta: 3.0,
            gamma_strain: 4.0,
        };
        assert_relative_eq!(
            orbital_splitting(&p, 10.0),
            200.0_f64.sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn transverse_strain_inference() {
        assert_eq!(transverse_strain_from_splitting(46.0, 46.0).unwrap(), 0.0);
        let t = transverse_strain_from_splitting(85.0, 46.0).unwrap();
        assert_relative_eq!(
            t,
            (85.0_f64 * 85.0 - 46.0 * 46.0).sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(t, 71.48, epsilon = 5e-3);
        assert!(transverse_strain_from_splitting(45.0, 46.0).is_err());
    }

    #[test]
    fn four_line_bookkeeping() {
        let l = four_lines(406_700.0, 0.0, 0.0);
        assert_eq!(
            (l.f_dd, l.f_uu, l.f_du, l.f_ud),
            (406_700.0, 406_700.0, 406_700.0, 406_700.0)
        );
        let l = four_lines(406_700.0, 7.0, 9.0);
        assert_eq!(l.f_dd, 406_700.0);
        assert_eq!(l.f_uu, 406_702.0);
        assert_eq!(l.f_du, 406_709.0);
        assert_eq!(l.f_ud, 406_693.0);
        assert_eq!(estimate_spin_splitting(&l), (7.0, 7.0));
    }

    #[test]
    fn perturbed_line_shifts_one_estimator() {
        let mut l = four_lines(406_700.0, 2.7, 3.1);
        let (a0, b0) = estimate_spin_splitting(&l);
        l.f_du += 0.1;
        let (a1, b1) = estimate_spin_splitting(&l);
        assert_relative_eq!(a1 - a0, 0.1, max_relative = 1e-9);
        assert_eq!(b1, b0);
    }

    #[test]
    fn conversion_examples() {
        let b = MagneticField::new(1.0, 55.0, 0.0).unwrap();
        assert_relative_eq!(
            spin_transition_frequency(&b, 2.8),
            2.8,
            max_relative = 1e-15
        );
        let b = MagneticField::new(3.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(
            spin_transition_frequency(&b, 8.3 / 3.0),
            8.3,
            max_relative = 1e-15
        );
        let b = MagneticField::new(0.0, 90.0, 0.0).unwrap();
        assert_eq!(spin_transition_frequency(&b, 2.7), 0.0);
    }

    #[test]
    fn calibration_over_records_recovers_conversion() {
        let records: Vec<FourLineRecord> = (1..=5)
            .map(|i| {
                let b = i as f64 * 0.5;
                FourLineRecord {
                    field_kg: b,
                    lines: four_lines(406_700.0, 2.7 * b, 3.5 * b),
                }
            })
            .collect();
        let fit = calibrate_conversion(&records).unwrap();
        assert_relative_eq!(fit.slope, 2.7, max_relative = 1e-10);
        assert_eq!(fit.n_points, 10);
        assert!(calibrate_conversion(&[]).is_err());
    }

    #[test]
    fn perpendicular_component_geometry() {
        let b = MagneticField::new(2.5, 90.0, 0.0).unwrap();
        assert_relative_eq!(b.perpendicular(), 2.5, max_relative = 1e-12);
        let b = MagneticField::new(2.5, 0.0, 0.0).unwrap();
        assert!(b.perpendicular().abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn estimators_recover_omega_s_exactly(
            nu0 in 1.0e5..5.0e5f64,
            omega_s in 0.0..50.0f64,
            omega_es in 0.0..80.0f64,
        ) {
            let lines = four_lines(nu0, omega_s, omega_es);
            let (a, b) = estimate_spin_splitting(&lines);
            // Identity in real arithmetic; one ulp of nu0 in floating point.
            prop_assert!((a - omega_s).abs() <= 1e-9);
            prop_assert!((b - omega_s).abs() <= 1e-9);
            prop_assert!(lines.f_du >= lines.f_uu);
            prop_assert!(lines.f_dd >= lines.f_ud);
        }

        #[test]
        fn orbital_splitting_monotone_and_invertible(
            beta in 0.01..100.0f64,
            gamma in 0.01..100.0f64,
            lambda in 1.0..100.0f64,
        ) {
            let p = StrainProjection { beta, gamma_strain: gamma };
            let delta = orbital_splitting(&p, lambda);
            prop_assert!(delta >= lambda);
            let bigger = StrainProjection { beta: beta + 1.0, gamma_strain: gamma };
            prop_assert!(orbital_splitting(&bigger, lambda) > delta);
            let wider = StrainProjection { beta, gamma_strain: gamma + 1.0 };
            prop_assert!(orbital_splitting(&wider, lambda) > delta);
            // Round trip back to the transverse splitting 2√(β²+γ²).
            let t = transverse_strain_from_splitting(delta, lambda).unwrap();
            let expect = 2.0 * p.magnitude();
            prop_assert!((t - expect).abs() <= 1e-12 * expect.max(1e-12));
        }

        #[test]
        fn spin_frequency_is_homogeneous_in_magnitude(
            mag in 0.0..10.0f64,
            scale in 0.1..10.0f64,
            conv in 0.1..10.0f64,
        ) {
            let b1 = MagneticField::new(mag, 55.0, 0.0).unwrap();
            let b2 = MagneticField::new(mag * scale, 55.0, 0.0).unwrap();
            let f1 = spin_transition_frequency(&b1, conv);
            let f2 = spin_transition_frequency(&b2, conv);
            prop_assert!((f2 - scale * f1).abs() <= 1e-12 * f2.abs().max(1e-12));
        }
    }
}
