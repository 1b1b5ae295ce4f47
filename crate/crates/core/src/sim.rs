//! Monte Carlo simulation of the repump/pump/wait/probe pulse sequence and
//! extraction of relaxed-population points from the resulting photon-count
//! histograms.
//!
//! The spin is reduced to a two-level rate model: optical pumping on the
//! addressed transition empties the addressed state at `pump_rate` while
//! scattering photons in proportion to its population, and the wait interval
//! relaxes the spin toward thermal equilibrium at `gamma_s`. Repetitions are
//! independent and identically prepared, so the accumulated histogram is
//! sampled per bin as Poisson(repetitions × expected bin rate).

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::series::DecayCurve;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// 1 kHz × 1 µs.
const KHZ_US: f64 = 1e-3;

/// Pump-probe timing description. All durations are rounded down to whole
/// bins; a rounding loss above 1% of any pulse attaches a warning to the
/// histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub repump_us: f64,
    pub pump_us: f64,
    pub wait_tau_us: f64,
    pub probe_us: f64,
    pub bin_width_ns: f64,
    pub repetitions: u64,
}

impl PulseSequence {
    pub fn new(
        repump_us: f64,
        pump_us: f64,
        wait_tau_us: f64,
        probe_us: f64,
        bin_width_ns: f64,
        repetitions: u64,
    ) -> Result<Self> {
        for (name, v) in [
            ("repump", repump_us),
            ("pump", pump_us),
            ("wait", wait_tau_us),
            ("probe", probe_us),
            ("bin width", bin_width_ns),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("{name} duration must be positive")));
            }
        }
        if repetitions == 0 {
            return Err(Error::invalid("need at least one repetition"));
        }
        let seq = PulseSequence {
            repump_us,
            pump_us,
            wait_tau_us,
            probe_us,
            bin_width_ns,
            repetitions,
        };
        if seq.layout().is_none() {
            return Err(Error::invalid("a pulse is shorter than one bin"));
        }
        Ok(seq)
    }

    pub fn bin_width_us(&self) -> f64 {
        self.bin_width_ns * 1e-3
    }

    fn bins_of(&self, duration_us: f64) -> usize {
        (duration_us / self.bin_width_us() + 1e-9).floor() as usize
    }

    fn layout(&self) -> Option<SegmentMarkers> {
        let repump = self.bins_of(self.repump_us);
        let pump = self.bins_of(self.pump_us);
        let wait = self.bins_of(self.wait_tau_us);
        let probe = self.bins_of(self.probe_us);
        if repump == 0 || pump == 0 || wait == 0 || probe == 0 {
            return None;
        }
        Some(SegmentMarkers {
            repump: (0, repump),
            pump: (repump, pump),
            wait: (repump + pump, wait),
            probe: (repump + pump + wait, probe),
        })
    }

    fn rounding_warning(&self) -> Option<String> {
        let dt = self.bin_width_us();
        for (name, dur) in [
            ("repump", self.repump_us),
            ("pump", self.pump_us),
            ("wait", self.wait_tau_us),
            ("probe", self.probe_us),
        ] {
            let kept = self.bins_of(dur) as f64 * dt;
            if (dur - kept) / dur > 0.01 {
                return Some(format!(
                    "{name} pulse loses {:.2}% to bin rounding",
                    (dur - kept) / dur * 100.0
                ));
            }
        }
        None
    }
}

/// Rates of the two-level optical-pumping model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    /// Optical pumping rate out of the addressed spin state (1/µs).
    pub pump_rate_per_us: f64,
    /// Spin relaxation rate (kHz).
    pub gamma_s_khz: f64,
    /// Steady-state spin-up population.
    pub p_thermal_up: f64,
    /// Detected counts per µs at unit addressed population.
    pub detect_rate_per_us: f64,
    /// Detector background (counts per µs).
    pub background_per_us: f64,
    /// Spin-down polarization achieved by the repump pulse, in (0, 1].
    pub init_fidelity: f64,
}

impl RateModel {
    pub fn validate(&self) -> Result<()> {
        if self.pump_rate_per_us < 0.0
            || self.gamma_s_khz < 0.0
            || self.detect_rate_per_us < 0.0
            || self.background_per_us < 0.0
        {
            return Err(Error::invalid("rates must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.p_thermal_up) {
            return Err(Error::invalid("thermal population must lie in [0, 1]"));
        }
        if !(self.init_fidelity > 0.0 && self.init_fidelity <= 1.0) {
            return Err(Error::invalid("initialization fidelity must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Bin spans `(start, len)` of the four sequence segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentMarkers {
    pub repump: (usize, usize),
    pub pump: (usize, usize),
    pub wait: (usize, usize),
    pub probe: (usize, usize),
}

/// Accumulated photon counts per bin over all repetitions.
///
/// Counts are whole numbers in sampled mode and expectations in analytic
/// mode; both are carried as f64.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width_ns: f64,
    pub counts: Vec<f64>,
    pub segments: SegmentMarkers,
    pub warning: Option<String>,
}

/// Sampling mode: Poisson draws, or their expectations for exact oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimMode {
    Sampled,
    Analytic,
}

/// Expected counts in one bin `[t1, t2]` (µs from pulse start) of an
/// addressed pulse: detect·p₀·∫e^{−r·t} + background·Δt.
fn pulse_bin_expectation(
    p0: f64,
    pump_rate: f64,
    detect: f64,
    background: f64,
    t1: f64,
    t2: f64,
) -> f64 {
    let signal = if pump_rate > 0.0 {
        detect * p0 * ((-pump_rate * t1).exp() - (-pump_rate * t2).exp()) / pump_rate
    } else {
        detect * p0 * (t2 - t1)
    };
    signal + background * (t2 - t1)
}

/// Simulates one pulse sequence, deterministic for a given seed.
///
/// Per repetition: the spin starts in thermal equilibrium; the repump pulse
/// addresses the spin-up state (its fluorescence decays from the thermal up
/// population) and leaves `p_down = init_fidelity`; the pump pulse addresses
/// spin-down, producing the initialization peak while emptying the state;
/// the spin then relaxes toward equilibrium for the wait time; the probe
/// repeats the pump dynamics on the relaxed population.
pub fn simulate_histogram(
    seq: &PulseSequence,
    model: &RateModel,
    seed: u64,
    mode: SimMode,
) -> Result<Histogram> {
    model.validate()?;
    let segments = seq
        .layout()
        .ok_or_else(|| Error::invalid("a pulse is shorter than one bin"))?;
    let dt = seq.bin_width_us();
    let total_bins = segments.probe.0 + segments.probe.1;
    let mut expected = vec![0.0f64; total_bins];

    let r = model.pump_rate_per_us;
    let detect = model.detect_rate_per_us;
    let bg = model.background_per_us;
    let p_eq_down = 1.0 - model.p_thermal_up;

    // Repump: fluorescence from the thermal spin-up population.
    fill_pulse(
        &mut expected,
        segments.repump,
        model.p_thermal_up,
        r,
        detect,
        bg,
        dt,
    );
    // Pump: addressed spin-down population set by the repump.
    let p_pump0 = model.init_fidelity;
    fill_pulse(&mut expected, segments.pump, p_pump0, r, detect, bg, dt);
    let p_pump_end = p_pump0 * (-r * segments.pump.1 as f64 * dt).exp();
    // Wait: background only; the spin relaxes toward equilibrium.
    for i in 0..segments.wait.1 {
        expected[segments.wait.0 + i] = bg * dt;
    }
    let tau = segments.wait.1 as f64 * dt;
    let decay = (-KHZ_US * model.gamma_s_khz * tau).exp();
    let p_probe0 = p_eq_down + (p_pump_end - p_eq_down) * decay;
    // Probe: pump dynamics on the relaxed population.
    fill_pulse(&mut expected, segments.probe, p_probe0, r, detect, bg, dt);

    let reps = seq.repetitions as f64;
    let counts = match mode {
        SimMode::Analytic => expected.iter().map(|&l| l * reps).collect(),
        SimMode::Sampled => {
            let mut rng = stream(seed, "histogram");
            expected
                .iter()
                .map(|&l| {
                    let lambda = l * reps;
                    if lambda > 0.0 {
                        Poisson::new(lambda)
                            .expect("positive finite rate")
                            .sample(&mut rng)
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    };

    Ok(Histogram {
        bin_width_ns: seq.bin_width_ns,
        counts,
        segments,
        warning: seq.rounding_warning(),
    })
}

fn fill_pulse(
    expected: &mut [f64],
    (start, len): (usize, usize),
    p0: f64,
    pump_rate: f64,
    detect: f64,
    background: f64,
    dt: f64,
) {
    for i in 0..len {
        let t1 = i as f64 * dt;
        expected[start + i] = pulse_bin_expectation(p0, pump_rate, detect, background, t1, t1 + dt);
    }
}

/// Relative population from the pump/probe initial-fluorescence heights.
///
/// Both pulses are summed over the first `window_ns`; each pulse's
/// background is estimated from its own tail (last 20% of the pulse) and
/// subtracted. The ratio is clamped below at zero; a non-positive pump peak
/// is an extraction failure.
pub fn extract_population(hist: &Histogram, window_ns: f64) -> Result<f64> {
    extract_population_with_uncertainty(hist, window_ns).map(|(v, _)| v)
}

/// [`extract_population`] plus a Poisson-propagated 1σ uncertainty.
pub fn extract_population_with_uncertainty(hist: &Histogram, window_ns: f64) -> Result<(f64, f64)> {
    let window_bins = (window_ns / hist.bin_width_ns + 1e-9).floor() as usize;
    if window_bins < 2 {
        return Err(Error::invalid("window must cover at least two bins"));
    }
    if window_bins > hist.segments.pump.1 || window_bins > hist.segments.probe.1 {
        return Err(Error::invalid("window longer than a pulse"));
    }

    let (pump_net, pump_var) = net_peak(hist, hist.segments.pump, window_bins);
    let (probe_net, probe_var) = net_peak(hist, hist.segments.probe, window_bins);
    if pump_net <= 0.0 {
        return Err(Error::ExtractionFailure(
            "pump peak not above background".into(),
        ));
    }
    let value = (probe_net / pump_net).max(0.0);
    let sigma = ((probe_var + value * value * pump_var).max(0.0)).sqrt() / pump_net;
    Ok((value, sigma))
}

/// Window sum minus the tail-estimated background, with its Poisson variance.
fn net_peak(hist: &Histogram, (start, len): (usize, usize), window_bins: usize) -> (f64, f64) {
    let tail_bins = (len / 5).max(1);
    let window: f64 = hist.counts[start..start + window_bins].iter().sum();
    let tail: f64 = hist.counts[start + len - tail_bins..start + len]
        .iter()
        .sum();
    let scale = window_bins as f64 / tail_bins as f64;
    let net = window - scale * tail;
    // Poisson: a sum of counts estimates its own variance.
    let var = window.max(1.0) + scale * scale * tail;
    (net, var)
}

/// Runs the full sequence for every wait time and assembles a decay curve
/// with Poisson-propagated uncertainties. The extraction window is applied
/// identically to the pump and probe pulses.
pub fn build_decay_curve(
    template: &PulseSequence,
    tau_list_us: &[f64],
    model: &RateModel,
    window_ns: f64,
    seed: u64,
    mode: SimMode,
) -> Result<DecayCurve> {
    if tau_list_us.is_empty() {
        return Err(Error::invalid("empty wait-time list"));
    }
    if tau_list_us.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("wait times must be strictly increasing"));
    }
    let mut populations = Vec::with_capacity(tau_list_us.len());
    let mut sigmas = Vec::with_capacity(tau_list_us.len());
    for (i, &tau) in tau_list_us.iter().enumerate() {
        let seq = PulseSequence::new(
            template.repump_us,
            template.pump_us,
            tau,
            template.probe_us,
            template.bin_width_ns,
            template.repetitions,
        )?;
        let hist = simulate_histogram(
            &seq,
            model,
            crate::rng::derive_seed(seed, &format!("tau-{i}")),
            mode,
        )?;
        let (value, sigma) = extract_population_with_uncertainty(&hist, window_ns)?;
        populations.push(value.clamp(0.0, 1.1));
        sigmas.push(sigma);
    }
    DecayCurve::new(tau_list_us.to_vec(), populations, Some(sigmas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sequence(tau_us: f64) -> PulseSequence {
        PulseSequence::new(12.0, 12.0, tau_us, 12.0, 100.0, 200).unwrap()
    }

    fn model() -> RateModel {
        RateModel {
            pump_rate_per_us: 3.0,
            gamma_s_khz: 10.0,
            p_thermal_up: 0.07,
            detect_rate_per_us: 2000.0,
            background_per_us: 5.0,
            init_fidelity: 1.0,
        }
    }

    #[test]
    fn identical_seeds_give_bit_identical_histograms() {
        let seq = sequence(100.0);
        let a = simulate_histogram(&seq, &model(), 42, SimMode::Sampled).unwrap();
        let b = simulate_histogram(&seq, &model(), 42, SimMode::Sampled).unwrap();
        assert_eq!(a, b);
        let c = simulate_histogram(&seq, &model(), 43, SimMode::Sampled).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn zero_rates_give_background_only() {
        let seq = sequence(50.0);
        let mut m = model();
        m.detect_rate_per_us = 0.0;
        m.background_per_us = 0.0;
        let h = simulate_histogram(&seq, &m, 1, SimMode::Sampled).unwrap();
        assert!(h.counts.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn zero_duration_is_invalid() {
        assert!(PulseSequence::new(0.0, 12.0, 1.0, 12.0, 100.0, 10).is_err());
        assert!(PulseSequence::new(12.0, 12.0, 1.0, 12.0, 0.0, 10).is_err());
        // Pulse shorter than a bin.
        assert!(PulseSequence::new(0.05, 12.0, 1.0, 12.0, 100.0, 10).is_err());
    }

    #[test]
    fn short_wait_leaves_addressed_state_empty() {
        // τ ≪ 1/γ with strong pumping: the probe peak sits at background.
        let seq = sequence(0.1);
        let h = simulate_histogram(&seq, &model(), 5, SimMode::Analytic).unwrap();
        let (probe_start, _) = h.segments.probe;
        let (pump_start, _) = h.segments.pump;
        let bg_per_bin = 5.0 * 0.1 * 200.0;
        assert!(h.counts[probe_start] < bg_per_bin * 1.5);
        assert!(h.counts[pump_start] > bg_per_bin * 50.0);
    }

    #[test]
    fn long_wait_restores_the_pump_peak() {
        // τ ≫ 1/γ with p_thermal_down ≈ 1: probe and pump peaks agree.
        let mut m = model();
        m.p_thermal_up = 0.0;
        let seq = sequence(2000.0); // 20 lifetimes at 10 kHz
        let h = simulate_histogram(&seq, &m, 6, SimMode::Analytic).unwrap();
        let (pump_start, _) = h.segments.pump;
        let (probe_start, _) = h.segments.probe;
        assert_relative_eq!(
            h.counts[probe_start],
            h.counts[pump_start],
            max_relative = 1e-6
        );
    }

    #[test]
    fn extraction_matches_the_analytic_population() {
        let m = model();
        let tau = 100.0;
        let seq = sequence(tau);
        let h = simulate_histogram(&seq, &m, 7, SimMode::Analytic).unwrap();
        let value = extract_population(&h, 300.0).unwrap();

        let p_eq = 1.0 - m.p_thermal_up;
        let p_pump_end = (-3.0f64 * 12.0).exp();
        let expect = p_eq + (p_pump_end - p_eq) * (-1e-3 * m.gamma_s_khz * tau).exp();
        assert_relative_eq!(value, expect, max_relative = 1e-9);
    }

    #[test]
    fn extraction_short_wait_analytic_limit() {
        // τ → 0 limit is the residual e^{−pump_rate·T_pump}, here ~0.
        let seq = sequence(0.1);
        let h = simulate_histogram(&seq, &model(), 8, SimMode::Analytic).unwrap();
        let value = extract_population(&h, 300.0).unwrap();
        let residual = (-3.0f64 * 12.0).exp();
        let drift = (1.0 - 0.07) * (1.0 - (-1e-3f64 * 10.0 * 0.1).exp());
        assert!((value - (residual + drift)).abs() < 1e-6, "value = {value}");
    }

    #[test]
    fn copied_pulse_segments_extract_exactly_one() {
        let seq = sequence(100.0);
        let mut h = simulate_histogram(&seq, &model(), 9, SimMode::Sampled).unwrap();
        let (pump_start, pump_len) = h.segments.pump;
        let (probe_start, probe_len) = h.segments.probe;
        assert_eq!(pump_len, probe_len);
        let pump_bins: Vec<f64> = h.counts[pump_start..pump_start + pump_len].to_vec();
        h.counts[probe_start..probe_start + probe_len].copy_from_slice(&pump_bins);
        let value = extract_population(&h, 300.0).unwrap();
        assert_eq!(value, 1.0);
    }

    #[test]
    fn doubling_repetitions_doubles_expected_counts() {
        let mut seq = sequence(50.0);
        let a = simulate_histogram(&seq, &model(), 1, SimMode::Analytic).unwrap();
        seq.repetitions *= 2;
        let b = simulate_histogram(&seq, &model(), 1, SimMode::Analytic).unwrap();
        for (x, y) in a.counts.iter().zip(&b.counts) {
            assert_relative_eq!(*y, 2.0 * x, max_relative = 1e-12);
        }
    }

    #[test]
    fn extraction_invariant_under_count_scaling() {
        let seq = sequence(80.0);
        let h = simulate_histogram(&seq, &model(), 2, SimMode::Analytic).unwrap();
        let scaled = Histogram {
            counts: h.counts.iter().map(|c| c * 7.5).collect(),
            ..h.clone()
        };
        let a = extract_population(&h, 300.0).unwrap();
        let b = extract_population(&scaled, 300.0).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn populations_stay_physical() {
        // Expected bin counts never leave [bg, detect + bg] per unit time.
        let seq = sequence(25.0);
        let m = model();
        let h = simulate_histogram(&seq, &m, 3, SimMode::Analytic).unwrap();
        let dt = seq.bin_width_us();
        let reps = seq.repetitions as f64;
        let lo = 0.0;
        let hi = (m.detect_rate_per_us + m.background_per_us) * dt * reps;
        assert!(h.counts.iter().all(|&c| c >= lo && c <= hi * (1.0 + 1e-12)));
    }

    #[test]
    fn rounding_warning_attaches() {
        let seq = PulseSequence::new(1.05, 12.0, 1.0, 12.0, 100.0, 10).unwrap();
        let h = simulate_histogram(&seq, &model(), 0, SimMode::Analytic).unwrap();
        assert!(h.warning.is_some());
    }

    #[test]
    fn end_to_end_decay_curve_analytic_is_exact() {
        let m = model();
        let template = sequence(1.0);
        let tau: Vec<f64> = (1..=20).map(|i| i as f64 * 25.0).collect();
        let curve = build_decay_curve(&template, &tau, &m, 300.0, 11, SimMode::Analytic).unwrap();
        let report = crate::fit::fit_exponential_decay(&curve).unwrap();
        assert!(report.converged);
        assert_relative_eq!(
            report.value("gamma_s_khz").unwrap(),
            10.0,
            max_relative = 1e-8
        );
    }

    #[test]
    fn end_to_end_decay_curve_sampled_within_two_percent() {
        let m = model();
        let template = sequence(1.0);
        let tau: Vec<f64> = (1..=20).map(|i| i as f64 * 25.0).collect();
        let curve = build_decay_curve(&template, &tau, &m, 300.0, 12, SimMode::Sampled).unwrap();
        let report = crate::fit::fit_exponential_decay(&curve).unwrap();
        assert!(report.converged);
        assert_relative_eq!(
            report.value("gamma_s_khz").unwrap(),
            10.0,
            max_relative = 0.02
        );
    }
}
