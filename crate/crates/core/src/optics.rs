//! Single-sided cavity reflection spectra with an embedded two-level
//! emitter; extraction of (g_so, κ, κ_e, γ_o), optical cooperativity, and
//! intracavity photon number.
//!
//! The line shape is the standard dipole-induced-transparency expression for
//! a one-sided cavity: a sharp emitter-hybridized peak inside the cavity dip.
//! |r|² is invariant under the usual extrinsic/intrinsic reflection
//! ambiguity, so fits must state the coupling regime.

use crate::error::{Error, Result};
use crate::fit::{least_squares, FitOptions, FitReport, Model};
use crate::series::Spectrum;
use crate::units::{GHZ, PLANCK, THZ};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One-sided optical cavity. The total loss rate is always the sum of the
/// extrinsic (waveguide) and intrinsic parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalCavity {
    /// Resonance frequency (THz).
    pub omega_o: f64,
    /// Extrinsic (waveguide) loss rate (GHz).
    pub kappa_e: f64,
    /// Intrinsic loss rate (GHz).
    pub kappa_i: f64,
}

impl OpticalCavity {
    pub fn new(omega_o: f64, kappa_e: f64, kappa_i: f64) -> Result<Self> {
        if !(omega_o > 0.0 && kappa_e > 0.0 && kappa_i > 0.0) {
            return Err(Error::invalid(
                "cavity frequency and loss rates must be positive",
            ));
        }
        Ok(OpticalCavity {
            omega_o,
            kappa_e,
            kappa_i,
        })
    }

    /// Construction from the total loss rate; fails unless κ_e < κ.
    pub fn from_total(omega_o: f64, kappa_total: f64, kappa_e: f64) -> Result<Self> {
        if kappa_e >= kappa_total {
            return Err(Error::invalid("extrinsic rate must be below the total"));
        }
        Self::new(omega_o, kappa_e, kappa_total - kappa_e)
    }

    /// Total loss rate κ = κ_e + κ_i (GHz).
    pub fn kappa_total(&self) -> f64 {
        self.kappa_e + self.kappa_i
    }

    /// Optical quality factor ω_o/κ.
    pub fn quality_factor(&self) -> f64 {
        1000.0 * self.omega_o / self.kappa_total()
    }
}

/// Two-level emitter: optical transition frequency and natural linewidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Emitter {
    /// Optical transition frequency (THz).
    pub omega_a: f64,
    /// Natural linewidth (GHz).
    pub gamma_o: f64,
}

impl Emitter {
    pub fn new(omega_a: f64, gamma_o: f64) -> Result<Self> {
        if !(gamma_o > 0.0) {
            return Err(Error::invalid("emitter linewidth must be positive"));
        }
        Ok(Emitter { omega_a, gamma_o })
    }
}

/// Cavity + emitter + vacuum coupling rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledOpticalSystem {
    pub cavity: OpticalCavity,
    pub emitter: Emitter,
    /// Emitter-photon coupling (GHz).
    pub g_so: f64,
}

impl CoupledOpticalSystem {
    pub fn new(cavity: OpticalCavity, emitter: Emitter, g_so: f64) -> Result<Self> {
        if !(g_so >= 0.0) {
            return Err(Error::invalid("coupling must be non-negative"));
        }
        Ok(CoupledOpticalSystem {
            cavity,
            emitter,
            g_so,
        })
    }

    pub fn cooperativity(&self) -> Result<f64> {
        optical_cooperativity(self.g_so, self.cavity.kappa_total(), self.emitter.gamma_o)
    }
}

/// Which side of κ_e = κ/2 a reflectance fit is constrained to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingRegime {
    Under,
    Over,
}

impl std::str::FromStr for CouplingRegime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "under" | "undercoupled" => Ok(CouplingRegime::Under),
            "over" | "overcoupled" => Ok(CouplingRegime::Over),
            other => Err(Error::invalid(format!("unknown coupling regime '{other}'"))),
        }
    }
}

fn amplitude(sys: &CoupledOpticalSystem, probe_thz: f64) -> Complex64 {
    let dc = (probe_thz - sys.cavity.omega_o) * THZ / GHZ;
    let da = (probe_thz - sys.emitter.omega_a) * THZ / GHZ;
    let kappa = sys.cavity.kappa_total();
    let emitter = Complex64::new(sys.emitter.gamma_o / 2.0, da);
    let denom = Complex64::new(kappa / 2.0, dc) + sys.g_so * sys.g_so / emitter;
    Complex64::new(1.0, 0.0) - sys.cavity.kappa_e / denom
}

/// Power reflectance |r|² of the coupled system at a probe frequency (THz).
///
/// r = 1 − κ_e / [iΔ_c + κ/2 + g²/(iΔ_a + γ_o/2)]; far-detuned probes
/// reflect fully.
pub fn reflectance(sys: &CoupledOpticalSystem, probe_thz: f64) -> f64 {
    amplitude(sys, probe_thz).norm_sqr()
}

/// Samples the reflectance on a strictly increasing probe grid (THz).
pub fn reflectance_spectrum(sys: &CoupledOpticalSystem, grid_thz: &[f64]) -> Result<Spectrum> {
    let y: Vec<f64> = grid_thz.iter().map(|&f| reflectance(sys, f)).collect();
    Spectrum::new(grid_thz.to_vec(), y, None).map(|s| s.with_units("freq_thz", "reflectance"))
}

/// Optical cooperativity C_o = 4g²/(κγ).
pub fn optical_cooperativity(g_so: f64, kappa_total: f64, gamma_o: f64) -> Result<f64> {
    if kappa_total * gamma_o == 0.0 {
        return Err(Error::domain("cooperativity denominator vanishes"));
    }
    Ok(4.0 * g_so * g_so / (kappa_total * gamma_o))
}

/// Mean intracavity photon number for an input power in pW at a given probe
/// detuning from the cavity (GHz):
/// n = κ_e·(P/hf) / ((κ/2)² + Δ²) with rates as angular frequencies.
pub fn intracavity_photon_number(
    power_pw: f64,
    probe_thz: f64,
    cavity: &OpticalCavity,
    detuning_ghz: f64,
) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let flux = power_pw * 1e-12 / (PLANCK * probe_thz * THZ);
    let kappa = cavity.kappa_total() * GHZ * two_pi;
    let kappa_e = cavity.kappa_e * GHZ * two_pi;
    let delta = detuning_ghz * GHZ * two_pi;
    kappa_e * flux / (kappa * kappa / 4.0 + delta * delta)
}

/// Reflectance as a fit model over `[g_so, kappa, kappa_e, gamma_o]` (GHz),
/// with the two optical frequencies held fixed. A bare-cavity variant fits
/// `[kappa, kappa_e]` only.
#[derive(Debug, Clone)]
pub struct ReflectanceModel {
    pub omega_o: f64,
    pub omega_a: f64,
    pub bare: bool,
}

impl ReflectanceModel {
    fn system(&self, p: &[f64]) -> (f64, f64, f64, f64) {
        if self.bare {
            (0.0, p[0], p[1], 1.0)
        } else {
            (p[0], p[1], p[2], p[3])
        }
    }
}

impl Model for ReflectanceModel {
    fn param_names(&self) -> Vec<String> {
        if self.bare {
            vec!["kappa_ghz".into(), "kappa_e_ghz".into()]
        } else {
            vec![
                "g_so_ghz".into(),
                "kappa_ghz".into(),
                "kappa_e_ghz".into(),
                "gamma_o_ghz".into(),
            ]
        }
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let (g, kappa, kappa_e, gamma) = self.system(p);
        let dc = (x - self.omega_o) * THZ / GHZ;
        let da = (x - self.omega_a) * THZ / GHZ;
        let emitter = Complex64::new(gamma / 2.0, da);
        let denom = Complex64::new(kappa / 2.0, dc) + g * g / emitter;
        (Complex64::new(1.0, 0.0) - kappa_e / denom).norm_sqr()
    }

    fn jacobian(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let (g, kappa, kappa_e, gamma) = self.system(p);
        let dc = (x - self.omega_o) * THZ / GHZ;
        let da = (x - self.omega_a) * THZ / GHZ;
        let emitter = Complex64::new(gamma / 2.0, da);
        let denom = Complex64::new(kappa / 2.0, dc) + g * g / emitter;
        let r = Complex64::new(1.0, 0.0) - kappa_e / denom;
        let denom2 = denom * denom;

        // ∂|r|²/∂p = 2 Re(conj(r)·∂r/∂p); ∂r/∂D = κ_e/D².
        let dr_dkappa = kappa_e / denom2 * 0.5;
        let dr_dkappa_e = -Complex64::new(1.0, 0.0) / denom;
        if self.bare {
            out[0] = 2.0 * (r.conj() * dr_dkappa).re;
            out[1] = 2.0 * (r.conj() * dr_dkappa_e).re;
        } else {
            let dr_dg = kappa_e / denom2 * (2.0 * g / emitter);
            let dr_dgamma = kappa_e / denom2 * (-(g * g) / (emitter * emitter) * 0.5);
            out[0] = 2.0 * (r.conj() * dr_dg).re;
            out[1] = 2.0 * (r.conj() * dr_dkappa).re;
            out[2] = 2.0 * (r.conj() * dr_dkappa_e).re;
            out[3] = 2.0 * (r.conj() * dr_dgamma).re;
        }
    }
}

/// Least-squares fit of a measured reflection spectrum.
///
/// Floats (g_so, κ, κ_e, γ_o) from the initial guess, holding both optical
/// frequencies fixed; an initial g_so of exactly zero selects the bare-cavity
/// fit of (κ, κ_e) alone. The coupling regime pins which side of κ/2 the
/// extrinsic rate may occupy, resolving the |r|² ambiguity.
pub fn fit_reflectance(
    spectrum: &Spectrum,
    init: &CoupledOpticalSystem,
    regime: CouplingRegime,
) -> Result<(CoupledOpticalSystem, FitReport)> {
    if spectrum.len() < 8 {
        return Err(Error::invalid("need at least eight spectrum points"));
    }
    let span_ghz = (spectrum.x[spectrum.len() - 1] - spectrum.x[0]) * THZ / GHZ;
    if span_ghz < init.cavity.kappa_total() {
        return Err(Error::invalid(
            "spectrum must span at least one cavity linewidth",
        ));
    }
    let flat = spectrum
        .y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if flat.1 - flat.0 < 1e-12 {
        return Err(Error::fit("degenerate (flat) spectrum"));
    }

    let bare = init.g_so == 0.0;
    let model = ReflectanceModel {
        omega_o: init.cavity.omega_o,
        omega_a: init.emitter.omega_a,
        bare,
    };

    let clamp = move |p: &mut [f64]| {
        let (kappa_idx, kappa_e_idx) = if bare { (0, 1) } else { (1, 2) };
        if !bare {
            p[0] = p[0].max(0.0); // g_so
            p[3] = p[3].max(1e-9); // gamma_o
        }
        p[kappa_idx] = p[kappa_idx].max(1e-9);
        let kappa = p[kappa_idx];
        let (lo, hi) = match regime {
            CouplingRegime::Under => (1e-12, kappa / 2.0),
            CouplingRegime::Over => (kappa / 2.0, kappa * (1.0 - 1e-9)),
        };
        p[kappa_e_idx] = p[kappa_e_idx].clamp(lo, hi);
    };

    let init_params = if bare {
        vec![init.cavity.kappa_total(), init.cavity.kappa_e]
    } else {
        vec![
            init.g_so,
            init.cavity.kappa_total(),
            init.cavity.kappa_e,
            init.emitter.gamma_o,
        ]
    };

    let report = least_squares(
        &model,
        &spectrum.x,
        &spectrum.y,
        &spectrum.weights(),
        &init_params,
        Some(&clamp),
        spectrum.sigma.is_none(),
        &FitOptions::default(),
    )?;

    let kappa = report.value("kappa_ghz").expect("fitted");
    let kappa_e = report.value("kappa_e_ghz").expect("fitted");
    let g_so = report.value("g_so_ghz").unwrap_or(0.0);
    let gamma_o = report.value("gamma_o_ghz").unwrap_or(init.emitter.gamma_o);
    let fitted = CoupledOpticalSystem::new(
        OpticalCavity::from_total(init.cavity.omega_o, kappa, kappa_e)?,
        Emitter::new(init.emitter.omega_a, gamma_o)?,
        g_so,
    )?;
    Ok((fitted, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::max_jacobian_deviation;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::RngExt;

    fn measured_system() -> CoupledOpticalSystem {
        CoupledOpticalSystem::new(
            OpticalCavity::from_total(406.7, 15.0, 4.0).unwrap(),
            Emitter::new(406.7, 0.11).unwrap(),
            3.6,
        )
        .unwrap()
    }

    fn probe_grid(center: f64, span_ghz: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| center + (i as f64 / (n - 1) as f64 - 0.5) * span_ghz * GHZ / THZ)
            .collect()
    }

    #[test]
    fn far_detuned_probe_reflects_fully() {
        let mut sys = measured_system();
        sys.g_so = 0.0;
        let r = reflectance(&sys, 406.7 + 1.0); // 1 THz away
        assert!(r > 0.999);
    }

    #[test]
    fn quality_factor_at_measured_loss() {
        // 409.7 THz with a 15 GHz total loss rate is Q_o ≈ 27,000.
        let cavity = OpticalCavity::from_total(409.7, 15.0, 4.0).unwrap();
        assert_relative_eq!(cavity.quality_factor(), 27_313.0, epsilon = 1.0);
        assert_relative_eq!(cavity.kappa_total(), 15.0, max_relative = 1e-15);
    }

    #[test]
    fn bare_cavity_dip_depth() {
        let mut sys = measured_system();
        sys.g_so = 0.0;
        let r = reflectance(&sys, 406.7);
        // (1 − κ_e/(κ/2))² = (7/15)²
        assert_relative_eq!(r, (1.0f64 - 4.0 / 7.5).powi(2), max_relative = 1e-12);
        assert_relative_eq!(r, 0.2178, epsilon = 5e-5);
    }

    #[test]
    fn hybridized_peak_inside_the_dip() {
        let sys = measured_system();
        let on_res = reflectance(&sys, 406.7);
        assert_relative_eq!(on_res, 0.967, epsilon = 1e-3);
        // The emitter peak towers above the bare dip level.
        let mut bare = sys;
        bare.g_so = 0.0;
        assert!(on_res > reflectance(&bare, 406.7) + 0.5);
    }

    #[test]
    fn cooperativity_examples() {
        assert_relative_eq!(
            optical_cooperativity(3.6, 15.0, 0.11).unwrap(),
            31.4,
            epsilon = 0.02
        );
        assert_eq!(optical_cooperativity(0.0, 15.0, 0.11).unwrap(), 0.0);
        assert_relative_eq!(
            optical_cooperativity(1.0, 4.0, 1.0).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert!(optical_cooperativity(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn cooperativity_scaling_invariance() {
        // g → αg, κ → α²κ leaves C invariant.
        let c0 = optical_cooperativity(3.6, 15.0, 0.11).unwrap();
        for alpha in [0.5, 2.0, 7.0] {
            let c = optical_cooperativity(alpha * 3.6, alpha * alpha * 15.0, 0.11).unwrap();
            assert_relative_eq!(c, c0, max_relative = 1e-12);
        }
    }

    #[test]
    fn photon_number_anchors() {
        let cavity = OpticalCavity::from_total(406.0, 15.0, 15.0 * (1.0 - 1e-12)).unwrap();
        let n = intracavity_photon_number(1.0, 406.0, &cavity, 0.0);
        assert_relative_eq!(n, 1.6e-4, epsilon = 3e-6);
        assert_eq!(intracavity_photon_number(0.0, 406.0, &cavity, 0.0), 0.0);
        assert_relative_eq!(
            intracavity_photon_number(2.0, 406.0, &cavity, 0.0),
            2.0 * n,
            max_relative = 1e-12
        );
        // Maximum at zero detuning.
        for d in [1.0, 5.0, -3.0] {
            assert!(intracavity_photon_number(1.0, 406.0, &cavity, d) < n);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let xs = probe_grid(406.7, 60.0, 25);
        let model = ReflectanceModel {
            omega_o: 406.7,
            omega_a: 406.7,
            bare: false,
        };
        let dev = max_jacobian_deviation(&model, &xs, &[3.6, 15.0, 4.0, 0.11]);
        assert!(dev < 1e-5, "deviation {dev:.3e}");

        let bare = ReflectanceModel {
            omega_o: 406.7,
            omega_a: 406.7,
            bare: true,
        };
        let dev = max_jacobian_deviation(&bare, &xs, &[15.0, 4.0]);
        assert!(dev < 1e-5, "deviation {dev:.3e}");
    }

    #[test]
    fn noiseless_round_trip_recovers_parameters() {
        let truth = measured_system();
        let grid = probe_grid(406.7, 60.0, 200);
        let spectrum = reflectance_spectrum(&truth, &grid).unwrap();
        let init = CoupledOpticalSystem::new(
            OpticalCavity::from_total(406.7, 18.0, 5.0).unwrap(),
            Emitter::new(406.7, 0.15).unwrap(),
            3.0,
        )
        .unwrap();
        let (fitted, report) = fit_reflectance(&spectrum, &init, CouplingRegime::Under).unwrap();
        assert!(report.converged);
        assert_relative_eq!(fitted.g_so, 3.6, max_relative = 1e-6);
        assert_relative_eq!(fitted.cavity.kappa_total(), 15.0, max_relative = 1e-6);
        assert_relative_eq!(fitted.cavity.kappa_e, 4.0, max_relative = 1e-6);
        assert_relative_eq!(fitted.emitter.gamma_o, 0.11, max_relative = 1e-6);
    }

    #[test]
    fn noisy_round_trip_within_five_percent() {
        let truth = measured_system();
        let grid = probe_grid(406.7, 60.0, 200);
        let clean = reflectance_spectrum(&truth, &grid).unwrap();
        let mut rng = crate::rng::stream(11, "optics-noise");
        let noisy: Vec<f64> = clean
            .y
            .iter()
            .map(|v| v * (1.0 + 0.01 * (rng.random::<f64>() - 0.5) * 2.0))
            .collect();
        let spectrum = Spectrum::new(grid, noisy, None).unwrap();
        let init = CoupledOpticalSystem::new(
            OpticalCavity::from_total(406.7, 13.0, 3.0).unwrap(),
            Emitter::new(406.7, 0.09).unwrap(),
            4.0,
        )
        .unwrap();
        let (fitted, _) = fit_reflectance(&spectrum, &init, CouplingRegime::Under).unwrap();
        assert_relative_eq!(fitted.g_so, 3.6, max_relative = 0.05);
        assert_relative_eq!(fitted.cavity.kappa_total(), 15.0, max_relative = 0.05);
        assert_relative_eq!(fitted.cavity.kappa_e, 4.0, max_relative = 0.05);
        assert_relative_eq!(fitted.emitter.gamma_o, 0.11, max_relative = 0.05);
    }

    #[test]
    fn bare_cavity_undercoupled_fit() {
        // ALD-clad cavity: κ_e ≈ 4 GHz, κ_i ≈ 11 GHz.
        let truth = CoupledOpticalSystem::new(
            OpticalCavity::new(406.825, 4.0, 11.0).unwrap(),
            Emitter::new(406.0, 0.11).unwrap(),
            0.0,
        )
        .unwrap();
        let grid = probe_grid(406.825, 80.0, 160);
        let spectrum = reflectance_spectrum(&truth, &grid).unwrap();
        let init = CoupledOpticalSystem::new(
            OpticalCavity::from_total(406.825, 20.0, 6.0).unwrap(),
            Emitter::new(406.0, 0.11).unwrap(),
            0.0,
        )
        .unwrap();
        let (fitted, report) = fit_reflectance(&spectrum, &init, CouplingRegime::Under).unwrap();
        assert!(report.converged);
        assert_relative_eq!(fitted.cavity.kappa_e, 4.0, max_relative = 1e-6);
        assert_relative_eq!(fitted.cavity.kappa_i, 11.0, max_relative = 1e-6);
    }

    #[test]
    fn flat_spectrum_fails() {
        let grid = probe_grid(406.7, 60.0, 50);
        let spectrum = Spectrum::new(grid, vec![1.0; 50], None).unwrap();
        let init = measured_system();
        assert!(matches!(
            fit_reflectance(&spectrum, &init, CouplingRegime::Under),
            Err(Error::FitFailure(_))
        ));
    }

    proptest! {
        #[test]
        fn reflectance_is_a_physical_probability(
            g in 0.0..10.0f64,
            kappa_e_frac in 0.01..0.99f64,
            kappa in 1.0..40.0f64,
            gamma in 0.01..2.0f64,
            detuning in -100.0..100.0f64,
        ) {
            let sys = CoupledOpticalSystem::new(
                OpticalCavity::from_total(406.7, kappa, kappa * kappa_e_frac).unwrap(),
                Emitter::new(406.7, gamma).unwrap(),
                g,
            ).unwrap();
            let r = reflectance(&sys, 406.7 + detuning * GHZ / THZ);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&r), "r = {r}");
        }

        #[test]
        fn bare_reflectance_symmetric_about_resonance(
            kappa_e_frac in 0.05..0.95f64,
            kappa in 1.0..40.0f64,
            detuning in 0.1..60.0f64,
        ) {
            let sys = CoupledOpticalSystem::new(
                OpticalCavity::from_total(406.7, kappa, kappa * kappa_e_frac).unwrap(),
                Emitter::new(406.7, 0.1).unwrap(),
                0.0,
            ).unwrap();
            let plus = reflectance(&sys, 406.7 + detuning * GHZ / THZ);
            let minus = reflectance(&sys, 406.7 - detuning * GHZ / THZ);
            prop_assert!((plus - minus).abs() <= 1e-9 * plus.max(1e-12));
        }
    }
}
