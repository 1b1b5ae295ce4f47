//! Optomechanical observables: thermal-motion noise spectra and
//! power-dependent backaction linewidths.
//!
//! The device is sideband-unresolved, so sideband series are taken at probe
//! detunings ±κ/2. Blue-sideband backaction narrows the mechanical linewidth
//! toward the phonon-lasing threshold; red broadens it. Extrapolating both to
//! zero power recovers the intrinsic linewidth.

use crate::error::{Error, Result};
use crate::phonon::MechanicalMode;
use crate::series::Spectrum;
use serde::{Deserialize, Serialize};

/// Probe sideband for a power sweep (detuning Δ_o = ∓κ/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sideband {
    Red,
    Blue,
}

impl std::str::FromStr for Sideband {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "red" => Ok(Sideband::Red),
            "blue" => Ok(Sideband::Blue),
            other => Err(Error::invalid(format!("unknown sideband '{other}'"))),
        }
    }
}

/// Measured linewidth-vs-power series on one sideband.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandSeries {
    pub sideband: Sideband,
    /// (power µW, linewidth kHz, optional sigma kHz).
    pub points: Vec<(f64, f64, Option<f64>)>,
}

impl SidebandSeries {
    pub fn new(sideband: Sideband, points: Vec<(f64, f64, Option<f64>)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("need at least two power points"));
        }
        if points.iter().any(|p| p.0 < 0.0) {
            return Err(Error::invalid("powers must be non-negative"));
        }
        Ok(SidebandSeries { sideband, points })
    }
}

/// Joint red/blue extrapolation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackactionFit {
    /// Zero-power (intrinsic) mechanical linewidth (kHz).
    pub kappa_intrinsic_khz: f64,
    /// Shared slope magnitude (kHz/µW).
    pub slope_khz_per_uw: f64,
    /// 2×2 covariance over (intercept, slope).
    pub covariance: [[f64; 2]; 2],
}

impl BackactionFit {
    pub fn sigma_kappa(&self) -> f64 {
        self.covariance[0][0].max(0.0).sqrt()
    }

    pub fn sigma_slope(&self) -> f64 {
        self.covariance[1][1].max(0.0).sqrt()
    }
}

/// Variant with per-sideband slopes, for checking the shared-magnitude
/// assumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackactionFitIndependent {
    pub kappa_intrinsic_khz: f64,
    pub slope_red_khz_per_uw: f64,
    pub slope_blue_khz_per_uw: f64,
}

/// Model linewidth at one power with a lasing indicator for the blue side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackactionLinewidth {
    pub linewidth_khz: f64,
    /// Set when blue-sideband narrowing reached zero: the phonon-lasing
    /// threshold.
    pub lasing: bool,
}

/// Lorentzian noise power spectral density of thermal motion on a frequency
/// grid (GHz): baseline + amplitude·(κ/2)²/((ω−ω_q)² + (κ/2)²).
///
/// Peak at ω_q; FWHM equals the mode linewidth.
pub fn thermal_npsd(
    mode: &MechanicalMode,
    amplitude: f64,
    baseline: f64,
    grid_ghz: &[f64],
) -> Result<Spectrum> {
    let kappa_ghz = mode.linewidth_mhz() * 1e-3;
    let half = kappa_ghz / 2.0;
    let u = half * half;
    let y: Vec<f64> = grid_ghz
        .iter()
        .map(|&w| {
            let dx = w - mode.omega_q;
            baseline + amplitude * u / (dx * dx + u)
        })
        .collect();
    Spectrum::new(grid_ghz.to_vec(), y, None).map(|s| s.with_units("freq_ghz", "npsd"))
}

/// Linear-in-power backaction model: κ(P) = κ₀ ± slope·P (red broadens, blue
/// narrows). A negative blue linewidth is clamped to zero and flagged.
pub fn backaction_linewidth(
    power_uw: f64,
    sideband: Sideband,
    kappa0_khz: f64,
    slope_khz_per_uw: f64,
) -> BackactionLinewidth {
    match sideband {
        Sideband::Red => BackactionLinewidth {
            linewidth_khz: kappa0_khz + slope_khz_per_uw * power_uw,
            lasing: false,
        },
        Sideband::Blue => {
            let lw = kappa0_khz - slope_khz_per_uw * power_uw;
            BackactionLinewidth {
                linewidth_khz: lw.max(0.0),
                lasing: lw <= 0.0,
            }
        }
    }
}

/// Joint weighted linear fit of a red/blue pair with a shared intercept and
/// shared slope magnitude (opposite signs).
///
/// The intercept is the intrinsic mechanical linewidth; the model curves of
/// the two sidebands intersect exactly there at P = 0.
pub fn fit_backaction_pair(red: &SidebandSeries, blue: &SidebandSeries) -> Result<BackactionFit> {
    if red.sideband != Sideband::Red || blue.sideband != Sideband::Blue {
        return Err(Error::invalid("series passed in the wrong sideband order"));
    }
    // Design rows (1, ±P) for y = κ₀ ± s·P.
    let rows: Vec<(f64, f64, f64, f64)> = red
        .points
        .iter()
        .map(|&(p, y, s)| (1.0, p, y, weight(s)))
        .chain(blue.points.iter().map(|&(p, y, s)| (1.0, -p, y, weight(s))))
        .collect();
    let had_sigmas = red
        .points
        .iter()
        .chain(blue.points.iter())
        .all(|p| p.2.is_some());

    let (params, mut cov, rss) = solve_2param(&rows)?;
    if !had_sigmas {
        let dof = rows.len().saturating_sub(2).max(1) as f64;
        let scale = rss / dof;
        for r in cov.iter_mut() {
            for v in r.iter_mut() {
                *v *= scale;
            }
        }
    }
    Ok(BackactionFit {
        kappa_intrinsic_khz: params.0,
        slope_khz_per_uw: params.1,
        covariance: cov,
    })
}

/// Relaxed variant: shared intercept, independent red/blue slopes.
pub fn fit_backaction_pair_independent(
    red: &SidebandSeries,
    blue: &SidebandSeries,
) -> Result<BackactionFitIndependent> {
    if red.sideband != Sideband::Red || blue.sideband != Sideband::Blue {
        return Err(Error::invalid("series passed in the wrong sideband order"));
    }
    // Parameters (κ₀, s_red, s_blue); rows (1, P, 0) and (1, 0, −P).
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    let mut add = |v: [f64; 3], y: f64, w: f64| {
        for j in 0..3 {
            b[j] += w * v[j] * y;
            for k in 0..3 {
                a[j][k] += w * v[j] * v[k];
            }
        }
    };
    for &(p, y, s) in &red.points {
        add([1.0, p, 0.0], y, weight(s));
    }
    for &(p, y, s) in &blue.points {
        add([1.0, 0.0, -p], y, weight(s));
    }
    let sol = solve3(a, b).ok_or_else(|| Error::fit("degenerate design matrix"))?;
    Ok(BackactionFitIndependent {
        kappa_intrinsic_khz: sol[0],
        slope_red_khz_per_uw: sol[1],
        slope_blue_khz_per_uw: sol[2],
    })
}

/// Power at which blue-sideband narrowing cancels the intrinsic damping:
/// P_th = κ₀/slope.
pub fn lasing_threshold_power(fit: &BackactionFit) -> Result<f64> {
    if !(fit.slope_khz_per_uw > 0.0) {
        return Err(Error::domain("no backaction: slope is zero"));
    }
    Ok(fit.kappa_intrinsic_khz / fit.slope_khz_per_uw)
}

fn weight(sigma: Option<f64>) -> f64 {
    match sigma {
        Some(s) if s > 0.0 => 1.0 / (s * s),
        _ => 1.0,
    }
}

fn solve_2param(rows: &[(f64, f64, f64, f64)]) -> Result<((f64, f64), [[f64; 2]; 2], f64)> {
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(c1, c2, y, w) in rows {
        a11 += w * c1 * c1;
        a12 += w * c1 * c2;
        a22 += w * c2 * c2;
        b1 += w * c1 * y;
        b2 += w * c2 * y;
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() <= 1e-12 * (a11 * a22).abs().max(f64::MIN_POSITIVE) {
        return Err(Error::fit(
            "collinear design matrix: powers do not constrain the slope",
        ));
    }
    let k0 = (a22 * b1 - a12 * b2) / det;
    let s = (a11 * b2 - a12 * b1) / det;
    let cov = [[a22 / det, -a12 / det], [-a12 / det, a11 / det]];
    let rss: f64 = rows
        .iter()
        .map(|&(c1, c2, y, w)| {
            let r = y - k0 * c1 - s * c2;
            w * r * r
        })
        .sum();
    Ok(((k0, s), cov, rss))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .expect("finite")
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in (col + 1)..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut out = [0.0; 3];
    for col in (0..3).rev() {
        let mut acc = b[col];
        for c in (col + 1)..3 {
            acc -= a[col][c] * out[c];
        }
        out[col] = acc / a[col][col];
        if !out[col].is_finite() {
            return None;
        }
    }
    Some(out)
}
