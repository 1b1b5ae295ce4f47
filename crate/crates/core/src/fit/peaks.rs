//! Lorentzian peak fitting and peak scanning for broadband spectra.

use super::engine::{least_squares, FitOptions, Model};
use super::models::LorentzianPeak;
use super::FitReport;
use crate::error::{Error, Result};
use crate::series::Spectrum;

/// A fitted resonance from [`scan_peaks`], sorted by center frequency.
#[derive(Debug, Clone)]
pub struct Peak {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub baseline: f64,
    /// Set when another candidate closer than the minimum separation was
    /// absorbed into this peak.
    pub merged: bool,
    pub report: FitReport,
}

/// Fits `baseline + amplitude·(Γ/2)²/((x−x₀)² + (Γ/2)²)`.
///
/// Seeding: center and amplitude from the maximum point, baseline from the
/// median, Γ from the interpolated half-maximum crossings. Fails when no
/// point rises at least 3 noise-sigmas above the baseline.
pub fn fit_lorentzian_peak(spectrum: &Spectrum) -> Result<FitReport> {
    if spectrum.len() < 8 {
        return Err(Error::invalid("need at least eight points for a peak fit"));
    }
    let x = &spectrum.x;
    let y = &spectrum.y;
    let baseline0 = median(y);
    let (imax, &ymax) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite values"))
        .expect("non-empty");
    let amp0 = ymax - baseline0;

    let noise = match &spectrum.sigma {
        Some(s) => median(s),
        None => noise_from_differences(y),
    };
    if amp0 <= 3.0 * noise || amp0 <= 0.0 {
        return Err(Error::fit(format!(
            "no peak above baseline by 3 sigma (amplitude {amp0:.3e}, noise {noise:.3e})"
        )));
    }

    let span = x[x.len() - 1] - x[0];
    let fwhm0 = half_max_width(x, y, imax, baseline0, amp0).unwrap_or(span / 4.0);

    let clamp = move |p: &mut [f64]| {
        let floor = 1e-9 * span;
        if p[1] < floor {
            p[1] = floor;
        }
    };
    least_squares(
        &LorentzianPeak,
        x,
        y,
        &spectrum.weights(),
        &[x[imax], fwhm0, amp0, baseline0],
        Some(&clamp),
        spectrum.sigma.is_none(),
        &FitOptions::default(),
    )
}

/// Finds local maxima exceeding the baseline median by `prominence`,
/// separated by at least `min_separation`, and fits each one locally.
///
/// Equal-height adjacent bins resolve to the lower frequency. Candidates
/// suppressed by the separation rule mark the surviving peak as `merged`.
/// An empty result is not an error.
pub fn scan_peaks(spectrum: &Spectrum, prominence: f64, min_separation: f64) -> Vec<Peak> {
    let x = &spectrum.x;
    let y = &spectrum.y;
    let n = y.len();
    if n < 3 {
        return Vec::new();
    }
    let baseline = median(y);

    let mut candidates: Vec<usize> = (1..n - 1)
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] - baseline >= prominence)
        .collect();
    // Strongest first; ties keep the lower frequency.
    candidates.sort_by(|&a, &b| {
        y[b].partial_cmp(&y[a])
            .expect("finite values")
            .then(a.cmp(&b))
    });

    let mut accepted: Vec<(usize, bool)> = Vec::new();
    'cand: for i in candidates {
        for (j, merged) in accepted.iter_mut() {
            if (x[i] - x[*j]).abs() < min_separation {
                *merged = true;
                continue 'cand;
            }
        }
        accepted.push((i, false));
    }

    let mut peaks: Vec<Peak> = accepted
        .into_iter()
        .map(|(i, merged)| fit_one(spectrum, i, baseline, min_separation, merged))
        .collect();
    peaks.sort_by(|a, b| a.center.partial_cmp(&b.center).expect("finite centers"));
    peaks
}

fn fit_one(
    spectrum: &Spectrum,
    imax: usize,
    baseline: f64,
    min_separation: f64,
    merged: bool,
) -> Peak {
    let x = &spectrum.x;
    let y = &spectrum.y;
    let center0 = x[imax];

    let mut lo = imax;
    let mut hi = imax;
    while lo > 0 && center0 - x[lo - 1] <= min_separation {
        lo -= 1;
    }
    while hi + 1 < x.len() && x[hi + 1] - center0 <= min_separation {
        hi += 1;
    }
    // Widen to the minimum the peak fitter accepts.
    while hi - lo + 1 < 8 && (lo > 0 || hi + 1 < x.len()) {
        if lo > 0 {
            lo -= 1;
        }
        if hi + 1 < x.len() {
            hi += 1;
        }
    }

    let window = Spectrum {
        x: x[lo..=hi].to_vec(),
        y: y[lo..=hi].to_vec(),
        sigma: spectrum.sigma.as_ref().map(|s| s[lo..=hi].to_vec()),
        x_unit: spectrum.x_unit.clone(),
        y_unit: spectrum.y_unit.clone(),
    };

    match fit_lorentzian_peak(&window) {
        Ok(report) => Peak {
            center: report.value("center").unwrap_or(center0),
            fwhm: report.value("fwhm").unwrap_or(0.0),
            amplitude: report.value("amplitude").unwrap_or(0.0),
            baseline: report.value("baseline").unwrap_or(baseline),
            merged,
            report,
        },
        Err(_) => {
            // Raw estimate when the local fit cannot run.
            let amp = y[imax] - baseline;
            let fwhm = half_max_width(x, y, imax, baseline, amp).unwrap_or(0.0);
            Peak {
                center: center0,
                fwhm,
                amplitude: amp,
                baseline,
                merged,
                report: FitReport {
                    names: LorentzianPeak.param_names(),
                    values: vec![center0, fwhm, amp, baseline],
                    sigmas: vec![0.0; 4],
                    covariance: vec![vec![0.0; 4]; 4],
                    residual_norm: 0.0,
                    iterations: 0,
                    converged: false,
                },
            }
        }
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Robust noise scale from successive differences; zero for constant data.
fn noise_from_differences(y: &[f64]) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let diffs: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    median(&diffs) * 1.4826 / std::f64::consts::SQRT_2
}

/// Width between the interpolated half-maximum crossings around `imax`;
/// mirrors one side when the other never crosses.
fn half_max_width(x: &[f64], y: &[f64], imax: usize, baseline: f64, amp: f64) -> Option<f64> {
    let half = baseline + amp / 2.0;
    let cross =
        |range: &mut dyn Iterator<Item = usize>, prev_of: fn(usize) -> usize| -> Option<f64> {
            for i in range {
                if y[i] <= half {
                    let j = prev_of(i);
                    let frac = (y[j] - half) / (y[j] - y[i]);
                    return Some(x[j] + frac * (x[i] - x[j]));
                }
            }
            None
        };
    let left = cross(&mut (0..imax).rev(), |i| i + 1);
    let right = cross(&mut ((imax + 1)..x.len()), |i| i - 1);
    match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        (Some(l), None) => Some(2.0 * (x[imax] - l)),
        (None, Some(r)) => Some(2.0 * (r - x[imax])),
        (None, None) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::engine::Model;
    use crate::fit::models::LorentzianPeak;
    use approx::assert_relative_eq;

    fn lorentzian_spectrum(center: f64, fwhm: f64, amp: f64, baseline: f64) -> Spectrum {
        let span = 10.0 * fwhm;
        let n = 201;
        let x: Vec<f64> = (0..n)
            .map(|i| center - span / 2.0 + i as f64 * span / (n - 1) as f64)
            .collect();
        let p = [center, fwhm, amp, baseline];
        let y: Vec<f64> = x.iter().map(|&v| LorentzianPeak.eval(v, &p)).collect();
        Spectrum::new(x, y, None).unwrap()
    }

    #[test]
    fn narrow_peak_fwhm_recovered_within_one_percent() {
        // The 35 MHz-wide resonance on a GHz axis.
        let s = lorentzian_spectrum(12.06, 0.035, 9.0, 1.0);
        let report = fit_lorentzian_peak(&s).unwrap();
        assert!(report.converged);
        assert_relative_eq!(report.value("fwhm").unwrap(), 0.035, max_relative = 0.01);
        assert_relative_eq!(report.value("center").unwrap(), 12.06, max_relative = 1e-6);
    }

    #[test]
    fn broad_peak_fwhm_recovered_within_one_percent() {
        let s = lorentzian_spectrum(12.06, 0.2, 9.0, 1.0);
        let report = fit_lorentzian_peak(&s).unwrap();
        assert_relative_eq!(report.value("fwhm").unwrap(), 0.2, max_relative = 0.01);
    }

    #[test]
    fn flat_spectrum_is_a_fit_failure() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y = vec![1.0; 20];
        let s = Spectrum::new(x, y, None).unwrap();
        assert!(matches!(fit_lorentzian_peak(&s), Err(Error::FitFailure(_))));
    }

    #[test]
    fn fwhm_invariant_under_vertical_scaling() {
        let s = lorentzian_spectrum(5.0, 0.4, 2.0, 0.3);
        let scaled = Spectrum::new(
            s.x.clone(),
            s.y.iter().map(|v| 0.3 + 7.0 * (v - 0.3)).collect(),
            None,
        )
        .unwrap();
        let a = fit_lorentzian_peak(&s).unwrap();
        let b = fit_lorentzian_peak(&scaled).unwrap();
        assert_relative_eq!(
            a.value("fwhm").unwrap(),
            b.value("fwhm").unwrap(),
            max_relative = 1e-6
        );
    }

    #[test]
    fn scan_finds_separated_peaks_and_flags_merges() {
        let n = 1200;
        let x: Vec<f64> = (0..n).map(|i| 8.0 + i as f64 * 0.01).collect();
        let peaks = [(9.5, 0.08, 4.0), (12.06, 0.05, 9.0), (15.0, 0.1, 2.0)];
        let y: Vec<f64> = x
            .iter()
            .map(|&v| {
                0.5 + peaks
                    .iter()
                    .map(|&(c, w, a)| LorentzianPeak.eval(v, &[c, w, a, 0.0]))
                    .sum::<f64>()
            })
            .collect();
        let s = Spectrum::new(x, y, None).unwrap();
        let found = scan_peaks(&s, 0.5, 0.5);
        assert_eq!(found.len(), 3);
        for (peak, &(c, ..)) in found.iter().zip(peaks.iter()) {
            assert!(
                (peak.center - c).abs() < 0.02,
                "center {} vs {}",
                peak.center,
                c
            );
            assert!(!peak.merged);
        }

        // Two modes closer than the separation give one merged peak.
        let y2: Vec<f64> =
            s.x.iter()
                .map(|&v| {
                    LorentzianPeak.eval(v, &[11.9, 0.05, 5.0, 0.2])
                        + LorentzianPeak.eval(v, &[12.1, 0.05, 5.0, 0.0])
                })
                .collect();
        let s2 = Spectrum::new(s.x.clone(), y2, None).unwrap();
        let found2 = scan_peaks(&s2, 0.5, 0.5);
        assert_eq!(found2.len(), 1);
        assert!(found2[0].merged);
    }

    #[test]
    fn flat_spectrum_scans_to_empty_list() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let s = Spectrum::new(x, vec![2.0; 50], None).unwrap();
        assert!(scan_peaks(&s, 0.1, 1.0).is_empty());
    }
}
