//! Spin-phonon coupling from strain, acoustic-Purcell spin decay, broadband
//! mode-sum decay spectra, and spin-mechanical cooperativities.
//!
//! Unit policy: mode frequencies in GHz, couplings and mechanical linewidths
//! in MHz, decay rates in kHz. Every operation converts to Hz internally.

use crate::error::{Error, Result};
use crate::series::Spectrum;
use crate::siv::{SivParameters, StrainProjection};
use crate::units::{deg_to_rad, GHZ, KHZ, MHZ};
use serde::{Deserialize, Serialize};

/// One acoustic mode of the structure.
///
/// The quality factor is the primary datum; the linewidth κ_q = ω_q/Q_q is
/// derived on demand and never stored separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalMode {
    /// Mode frequency (GHz).
    pub omega_q: f64,
    /// Quality factor.
    pub q_factor: f64,
    /// Spin-phonon coupling (MHz).
    pub g_q: f64,
    /// Optomechanical coupling (MHz); informational.
    pub g_om: Option<f64>,
}

impl MechanicalMode {
    pub fn new(omega_q: f64, q_factor: f64, g_q: f64, g_om: Option<f64>) -> Result<Self> {
        if !(omega_q > 0.0) {
            return Err(Error::invalid("mode frequency must be positive"));
        }
        if !(q_factor > 0.0) {
            return Err(Error::invalid("quality factor must be positive"));
        }
        if !g_q.is_finite() {
            return Err(Error::invalid("coupling must be finite"));
        }
        Ok(MechanicalMode {
            omega_q,
            q_factor,
            g_q,
            g_om,
        })
    }

    /// Linewidth κ_q = ω_q/Q_q in MHz: `1000·ω_q[GHz]/Q_q`.
    pub fn linewidth_mhz(&self) -> f64 {
        1000.0 * self.omega_q / self.q_factor
    }

    /// Linewidth in kHz.
    pub fn linewidth_khz(&self) -> f64 {
        1e6 * self.omega_q / self.q_factor
    }
}

/// An ordered set of acoustic modes standing in for a simulated or assumed
/// mode structure. Frequencies must be non-decreasing; coincident modes are
/// allowed and their decay contributions add.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    modes: Vec<MechanicalMode>,
}

impl ModeTable {
    pub fn new(modes: Vec<MechanicalMode>) -> Result<Self> {
        if modes.windows(2).any(|w| w[0].omega_q > w[1].omega_q) {
            return Err(Error::invalid("mode frequencies must be sorted ascending"));
        }
        Ok(ModeTable { modes })
    }

    /// Sorts by frequency, then constructs.
    pub fn from_unsorted(mut modes: Vec<MechanicalMode>) -> Self {
        modes.sort_by(|a, b| {
            a.omega_q
                .partial_cmp(&b.omega_q)
                .expect("finite frequencies")
        });
        ModeTable { modes }
    }

    pub fn modes(&self) -> &[MechanicalMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// The spin qubit's transition frequency and background rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinQubit {
    /// Spin transition frequency (GHz).
    pub omega_s: f64,
    /// Background relaxation rate γ_{s,o} into the acoustic continuum (kHz).
    pub gamma_s_baseline: f64,
    /// Dephasing rate γ*_{s,o} (MHz).
    pub gamma_star: f64,
}

impl SpinQubit {
    pub fn new(omega_s: f64, gamma_s_baseline: f64, gamma_star: f64) -> Result<Self> {
        if omega_s < 0.0 || gamma_s_baseline < 0.0 || gamma_star < 0.0 {
            return Err(Error::invalid("spin qubit rates must be non-negative"));
        }
        Ok(SpinQubit {
            omega_s,
            gamma_s_baseline,
            gamma_star,
        })
    }
}

/// Vacuum spin-phonon coupling from a strain projection and the transverse
/// field: g_sm = (2·γ_gyro·B_⊥/λ_SO)·√(β² + γ²), returned in MHz for β, γ in
/// GHz.
pub fn g_sm_from_strain(
    projection: &StrainProjection,
    b_perp_kg: f64,
    params: &SivParameters,
) -> Result<f64> {
    if !(params.lambda_so_gs > 0.0) {
        return Err(Error::domain("spin-orbit splitting must be positive"));
    }
    if b_perp_kg < 0.0 {
        return Err(Error::invalid("transverse field must be non-negative"));
    }
    let g_ghz = 2.0 * params.gyro * b_perp_kg / params.lambda_so_gs * projection.magnitude();
    Ok(g_ghz * GHZ / MHZ)
}

/// On-resonance coupling at the magic field orientation (θ ≈ 55°), where the
/// transverse field satisfies γ_gyro·B_⊥ = ω_s/√2 and ω_s = ω_m:
/// g_sm = (√2·ω_m/λ_SO)·√(β² + γ²) in MHz.
pub fn g_sm_on_resonance(
    omega_m_ghz: f64,
    projection: &StrainProjection,
    params: &SivParameters,
) -> Result<f64> {
    if !(params.lambda_so_gs > 0.0) {
        return Err(Error::domain("spin-orbit splitting must be positive"));
    }
    let g_ghz =
        std::f64::consts::SQRT_2 * omega_m_ghz / params.lambda_so_gs * projection.magnitude();
    Ok(g_ghz * GHZ / MHZ)
}

/// Reduction of every spin-phonon coupling under static strain, modeled as
/// λ_SO/Δ_GS ∈ (0, 1].
pub fn strain_quenching_factor(delta_gs: f64, lambda_so: f64) -> Result<f64> {
    if delta_gs < lambda_so {
        return Err(Error::domain(format!(
            "orbital splitting {delta_gs} GHz below spin-orbit splitting {lambda_so} GHz"
        )));
    }
    if !(lambda_so > 0.0) {
        return Err(Error::domain("spin-orbit splitting must be positive"));
    }
    Ok(lambda_so / delta_gs)
}

/// Purcell-enhanced spin relaxation near a single near-ground-state mode
/// (valid for κ_m ≫ γ_s):
/// γ_s = γ_baseline + g²·κ_m/(κ_m²/4 + (ω_s − ω_q)²), in kHz.
pub fn purcell_rate(
    g_sm_mhz: f64,
    mode: &MechanicalMode,
    omega_s_ghz: f64,
    gamma_baseline_khz: f64,
) -> f64 {
    let g = g_sm_mhz * MHZ;
    let kappa = mode.linewidth_mhz() * MHZ;
    let detuning = (omega_s_ghz - mode.omega_q) * GHZ;
    let enhancement = g * g * kappa / (kappa * kappa / 4.0 + detuning * detuning);
    gamma_baseline_khz + enhancement / KHZ
}

/// Inverts the on-resonance Purcell enhancement:
/// g_sm = √((γ_on − γ_off)·κ_m/4) in MHz for rates in kHz and κ_m in MHz.
pub fn infer_g_sm(gamma_on_khz: f64, gamma_off_khz: f64, kappa_m_mhz: f64) -> Result<f64> {
    if gamma_on_khz <= gamma_off_khz {
        return Err(Error::domain(
            "no enhancement to invert: gamma_on <= gamma_off",
        ));
    }
    if !(kappa_m_mhz > 0.0) {
        return Err(Error::domain("mechanical linewidth must be positive"));
    }
    let g_hz = ((gamma_on_khz - gamma_off_khz) * KHZ * kappa_m_mhz * MHZ / 4.0).sqrt();
    Ok(g_hz / MHZ)
}

/// Phenomenological quality-factor damping: Q′ = (Q_sim⁻¹ + Q_damp⁻¹)⁻¹.
pub fn effective_quality_factor(q_sim: f64, q_damp: f64) -> f64 {
    1.0 / (1.0 / q_sim + 1.0 / q_damp)
}

/// Mode-sum spin decay spectrum over a frequency grid (GHz):
/// Γ(ω) = 4·Σ_q (quench·g_q)²·κ_q′/(κ_q′² + 4(ω_q − ω)²), in kHz.
///
/// `q_damp`, when given, replaces each Q_q by the damped effective value.
/// The sum excludes the spin's background rate; it is the pure mode
/// contribution and is additive over table entries. Grid points evaluate
/// independently, so partitioned evaluation concatenates deterministically.
pub fn broadband_decay_spectrum(
    modes: &ModeTable,
    grid_ghz: &[f64],
    quench: f64,
    q_damp: Option<f64>,
) -> Result<Spectrum> {
    if modes.is_empty() {
        return Err(Error::invalid("mode table is empty"));
    }
    if grid_ghz.is_empty() {
        return Err(Error::invalid("frequency grid is empty"));
    }
    if !(quench > 0.0 && quench <= 1.0) {
        return Err(Error::invalid("quenching factor must lie in (0, 1]"));
    }
    if let Some(q) = q_damp {
        if !(q > 0.0) {
            return Err(Error::invalid("Q damping must be positive"));
        }
    }

    let effective: Vec<(f64, f64, f64)> = modes
        .modes()
        .iter()
        .map(|m| {
            let q = match q_damp {
                Some(qd) => effective_quality_factor(m.q_factor, qd),
                None => m.q_factor,
            };
            let kappa_hz = m.omega_q * GHZ / q;
            (m.omega_q, kappa_hz, quench * m.g_q * MHZ)
        })
        .collect();

    let gamma_khz: Vec<f64> = grid_ghz
        .iter()
        .map(|&w| {
            let total_hz: f64 = effective
                .iter()
                .map(|&(omega_q, kappa, g)| {
                    let detuning = (omega_q - w) * GHZ;
                    4.0 * g * g * kappa / (kappa * kappa + 4.0 * detuning * detuning)
                })
                .sum();
            total_hz / KHZ
        })
        .collect();

    Spectrum::new(grid_ghz.to_vec(), gamma_khz, None).map(|s| s.with_units("freq_ghz", "gamma_khz"))
}

/// Purcell-enhancement scaling with field orientation: Γ_sm = A·sin²θ.
pub fn angle_scaling(theta_deg: f64, amplitude_khz: f64) -> f64 {
    let s = deg_to_rad(theta_deg).sin();
    amplitude_khz * s * s
}

/// T₁- and T₂*-based spin-mechanical cooperativities
/// (C_T1, C_T2*) = (4g²/(κ_m·γ_{s,o}), 4g²/(κ_m·γ*_{s,o})).
pub fn spin_mechanical_cooperativities(
    g_sm_mhz: f64,
    kappa_m_mhz: f64,
    qubit: &SpinQubit,
) -> Result<(f64, f64)> {
    if !(kappa_m_mhz > 0.0) {
        return Err(Error::domain("mechanical linewidth must be positive"));
    }
    if !(qubit.gamma_s_baseline > 0.0) || !(qubit.gamma_star > 0.0) {
        return Err(Error::domain("qubit rates must be positive"));
    }
    let g = g_sm_mhz * MHZ;
    let kappa = kappa_m_mhz * MHZ;
    let c_t1 = 4.0 * g * g / (kappa * qubit.gamma_s_baseline * KHZ);
    let c_t2 = 4.0 * g * g / (kappa * qubit.gamma_star * MHZ);
    Ok((c_t1, c_t2))
}
