//! Command-line surface tying the toolkit together: forward models to CSV,
//! fits to JSON, the pump-probe simulator, and the reproduction suite.
//!
//! Exit codes: 0 success, 2 usage error, 3 data/schema error, 4 fit or
//! extraction failure. All outputs are deterministic for a given `--seed`.

mod config;

use clap::{ArgGroup, Parser, Subcommand};
use config::RunConfig;
use serde::Serialize;
use sivqed::fit::{fit_angle_amplitude, fit_exponential_decay};
use sivqed::io::{
    emit_plot_data, load_angle_points, load_dataset, write_histogram_csv, write_json,
    write_spectrum_csv, DatasetKind, Payload, PlotFormat, PlotSeries,
};
use sivqed::optics::{
    fit_reflectance, reflectance_spectrum, CoupledOpticalSystem, CouplingRegime, Emitter,
    OpticalCavity,
};
use sivqed::optomech::{
    fit_backaction_pair, fit_backaction_pair_independent, lasing_threshold_power,
};
use sivqed::phonon::broadband_decay_spectrum;
use sivqed::sim::{simulate_histogram, PulseSequence, RateModel, SimMode};
use sivqed::siv::calibrate_conversion;
use sivqed::thermo::{thermometry_report_from_saturation, thermometry_report_from_temperature};
use sivqed::{Error, Result};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "sivqed",
    version,
    about = "Spin-photon and spin-phonon cavity QED toolkit",
    long_about = None,
    propagate_version = true
)]
struct Cli {
    /// RNG seed; subcommands derive labeled streams from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the field-to-spin-frequency conversion from four-line data.
    Calibrate {
        /// Four-line CSV: field_kg,f_uu_ghz,f_dd_ghz,f_du_ghz,f_ud_ghz.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a reflection spectrum of the coupled cavity-emitter system.
    Reflectance {
        #[arg(long)]
        g_so_ghz: f64,
        #[arg(long)]
        kappa_ghz: f64,
        #[arg(long)]
        kappa_e_ghz: f64,
        #[arg(long, default_value_t = 0.11)]
        gamma_o_ghz: f64,
        #[arg(long, default_value_t = 406.7)]
        omega_o_thz: f64,
        /// Emitter frequency; defaults to the cavity frequency.
        #[arg(long)]
        omega_a_thz: Option<f64>,
        #[arg(long, default_value_t = 60.0)]
        span_ghz: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit cavity QED parameters to a measured reflection spectrum.
    FitReflectance {
        /// Spectrum CSV: `freq_thz,reflectance[,sigma]`.
        #[arg(long)]
        input: PathBuf,
        /// Coupling regime bound: under or over.
        #[arg(long)]
        regime: String,
        #[arg(long, default_value_t = 3.0)]
        init_g_so_ghz: f64,
        #[arg(long, default_value_t = 15.0)]
        init_kappa_ghz: f64,
        #[arg(long, default_value_t = 4.0)]
        init_kappa_e_ghz: f64,
        #[arg(long, default_value_t = 0.11)]
        init_gamma_o_ghz: f64,
        #[arg(long, default_value_t = 406.7)]
        omega_o_thz: f64,
        #[arg(long)]
        omega_a_thz: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mode-sum spin decay spectrum over a frequency grid.
    PurcellScan {
        /// Mode table CSV: `freq_ghz,q_factor,g_mhz[,g_om_mhz]`.
        #[arg(long)]
        modes: PathBuf,
        #[arg(long, default_value_t = 8.5)]
        fmin_ghz: f64,
        #[arg(long, default_value_t = 28.0)]
        fmax_ghz: f64,
        #[arg(long, default_value_t = 0.01)]
        step_ghz: f64,
        /// Static-strain quenching factor applied to every coupling.
        #[arg(long, default_value_t = 1.0)]
        quench: f64,
        /// Phenomenological Q damping combined with each mode's Q.
        #[arg(long)]
        q_damp: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exponential fit of a spin relaxation curve.
    T1Fit {
        /// Decay CSV: `tau_us,population[,sigma]`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a repump/pump/wait/probe photon-count histogram.
    SimulateHistogram {
        #[arg(long, default_value_t = 12.0)]
        repump_us: f64,
        #[arg(long, default_value_t = 12.0)]
        pump_us: f64,
        #[arg(long, default_value_t = 100.0)]
        wait_tau_us: f64,
        #[arg(long, default_value_t = 12.0)]
        probe_us: f64,
        #[arg(long, default_value_t = 100.0)]
        bin_width_ns: f64,
        #[arg(long, default_value_t = 200)]
        repetitions: u64,
        #[arg(long, default_value_t = 3.0)]
        pump_rate_per_us: f64,
        #[arg(long, default_value_t = 10.0)]
        gamma_s_khz: f64,
        #[arg(long, default_value_t = 0.07)]
        p_thermal_up: f64,
        #[arg(long, default_value_t = 2000.0)]
        detect_rate_per_us: f64,
        #[arg(long, default_value_t = 5.0)]
        background_per_us: f64,
        #[arg(long, default_value_t = 1.0)]
        init_fidelity: f64,
        /// Replace Poisson draws with expectations.
        #[arg(long)]
        analytic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Thermal populations and breathing-mode occupancy.
    #[command(group(ArgGroup::new("source").required(true).args(["temp_k", "p_saturation"])))]
    Thermometry {
        /// Spin transition frequency (GHz).
        #[arg(long)]
        omega_ghz: f64,
        /// Known temperature (K): reports the saturation population.
        #[arg(long)]
        temp_k: Option<f64>,
        /// Measured saturation population: infers the temperature.
        #[arg(long)]
        p_saturation: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Joint red/blue sideband extrapolation to the intrinsic linewidth.
    Backaction {
        /// Red-sideband CSV: `power_uw,linewidth_khz[,sigma_khz]`.
        #[arg(long)]
        red: PathBuf,
        /// Blue-sideband CSV.
        #[arg(long)]
        blue: PathBuf,
        /// Also fit per-sideband slopes.
        #[arg(long)]
        independent_slopes: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Single-parameter sin²θ fit of angle-sweep decay amplitudes.
    AngleFit {
        /// Angle CSV: `theta_deg,gamma_khz[,sigma_khz]`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite and report one line per criterion.
    Repro {
        /// Optional JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-emit a dataset as plot-ready CSV or JSON columns.
    Export {
        #[arg(long)]
        input: PathBuf,
        /// Dataset kind: mode-table|spectrum|decay-curve|histogram|sideband-series|four-line.
        #[arg(long)]
        kind: String,
        /// Output format: csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    std::process::exit(code);
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::FitFailure(_) | Error::ExtractionFailure(_) => 4,
        _ => 3,
    }
}

#[derive(Serialize)]
struct CalibrationJson {
    conversion_ghz_per_kg: f64,
    sigma_ghz_per_kg: f64,
    n_points: usize,
}

#[derive(Serialize)]
struct ReflectanceFitJson {
    g_so_ghz: f64,
    kappa_ghz: f64,
    kappa_e_ghz: f64,
    gamma_o_ghz: f64,
    c_o: f64,
    covariance: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct AngleFitJson {
    amplitude_khz: f64,
    sigma_khz: f64,
    n_points: usize,
}

fn run(cli: Cli) -> Result<i32> {
    let config = RunConfig::from_env()?;
    let seed = config.seed(cli.seed);

    match cli.command {
        Command::Calibrate { input, out } => {
            let dataset = load_dataset(&input, DatasetKind::FourLine)?;
            let Payload::FourLine(records) = dataset.payload else {
                unreachable!()
            };
            let fit = calibrate_conversion(&records)?;
            let out = config.resolve_out(out, "calibration.json");
            write_json(
                &out,
                &CalibrationJson {
                    conversion_ghz_per_kg: fit.slope,
                    sigma_ghz_per_kg: fit.sigma,
                    n_points: fit.n_points,
                },
            )?;
            println!(
                "conversion {:.4} +/- {:.4} GHz/kG -> {}",
                fit.slope,
                fit.sigma,
                out.display()
            );
            Ok(0)
        }

        Command::Reflectance {
            g_so_ghz,
            kappa_ghz,
            kappa_e_ghz,
            gamma_o_ghz,
            omega_o_thz,
            omega_a_thz,
            span_ghz,
            points,
            out,
        } => {
            if points < 2 {
                return Err(Error::invalid("need at least two points"));
            }
            let sys = CoupledOpticalSystem::new(
                OpticalCavity::from_total(omega_o_thz, kappa_ghz, kappa_e_ghz)?,
                Emitter::new(omega_a_thz.unwrap_or(omega_o_thz), gamma_o_ghz)?,
                g_so_ghz,
            )?;
            let grid: Vec<f64> = (0..points)
                .map(|i| omega_o_thz + (i as f64 / (points - 1) as f64 - 0.5) * span_ghz * 1e-3)
                .collect();
            let spectrum = reflectance_spectrum(&sys, &grid)?;
            let out = config.resolve_out(out, "reflectance.csv");
            write_spectrum_csv(
                &spectrum,
                &out,
                &[format!(
                    "kind: spectrum g_so_ghz={g_so_ghz} kappa_ghz={kappa_ghz} kappa_e_ghz={kappa_e_ghz} gamma_o_ghz={gamma_o_ghz}"
                )],
            )?;
            println!("{} points -> {}", spectrum.len(), out.display());
            Ok(0)
        }

        Command::FitReflectance {
            input,
            regime,
            init_g_so_ghz,
            init_kappa_ghz,
            init_kappa_e_ghz,
            init_gamma_o_ghz,
            omega_o_thz,
            omega_a_thz,
            out,
        } => {
            let regime: CouplingRegime = regime.parse()?;
            let dataset = load_dataset(&input, DatasetKind::Spectrum)?;
            let Payload::Spectrum(spectrum) = dataset.payload else {
                unreachable!()
            };
            let init = CoupledOpticalSystem::new(
                OpticalCavity::from_total(omega_o_thz, init_kappa_ghz, init_kappa_e_ghz)?,
                Emitter::new(omega_a_thz.unwrap_or(omega_o_thz), init_gamma_o_ghz)?,
                init_g_so_ghz,
            )?;
            let (fitted, report) = fit_reflectance(&spectrum, &init, regime)?;
            let out = config.resolve_out(out, "reflectance_fit.json");
            write_json(
                &out,
                &ReflectanceFitJson {
                    g_so_ghz: fitted.g_so,
                    kappa_ghz: fitted.cavity.kappa_total(),
                    kappa_e_ghz: fitted.cavity.kappa_e,
                    gamma_o_ghz: fitted.emitter.gamma_o,
                    c_o: fitted.cooperativity()?,
                    covariance: report.covariance.clone(),
                },
            )?;
            println!(
                "g_so {:.4} GHz, kappa {:.4} GHz, kappa_e {:.4} GHz, gamma_o {:.4} GHz -> {}",
                fitted.g_so,
                fitted.cavity.kappa_total(),
                fitted.cavity.kappa_e,
                fitted.emitter.gamma_o,
                out.display()
            );
            if report.converged {
                Ok(0)
            } else {
                eprintln!("fit did not converge within the iteration cap");
                Ok(4)
            }
        }

        Command::PurcellScan {
            modes,
            fmin_ghz,
            fmax_ghz,
            step_ghz,
            quench,
            q_damp,
            out,
        } => {
            if !(step_ghz > 0.0) || fmax_ghz <= fmin_ghz {
                return Err(Error::invalid("need fmax > fmin and a positive step"));
            }
            let dataset = load_dataset(&modes, DatasetKind::ModeTable)?;
            let Payload::ModeTable(table) = dataset.payload else {
                unreachable!()
            };
            let n = ((fmax_ghz - fmin_ghz) / step_ghz).floor() as usize + 1;
            let grid: Vec<f64> = (0..n).map(|i| fmin_ghz + i as f64 * step_ghz).collect();
            let spectrum = broadband_decay_spectrum(&table, &grid, quench, q_damp)?;
            let out = config.resolve_out(out, "decay_spectrum.csv");
            write_spectrum_csv(
                &spectrum,
                &out,
                &[format!(
                    "kind: decay-spectrum modes={} quench={quench} q_damp={}",
                    table.len(),
                    q_damp.map_or("none".to_string(), |q| q.to_string())
                )],
            )?;
            println!(
                "{} grid points, {} modes -> {}",
                n,
                table.len(),
                out.display()
            );
            Ok(0)
        }

        Command::T1Fit { input, out } => {
            let dataset = load_dataset(&input, DatasetKind::DecayCurve)?;
            let Payload::DecayCurve(curve) = dataset.payload else {
                unreachable!()
            };
            let report = fit_exponential_decay(&curve)?;
            let out = config.resolve_out(out, "t1_fit.json");
            write_json(&out, &report)?;
            println!(
                "gamma_s {:.4} +/- {:.4} kHz -> {}",
                report.value("gamma_s_khz").unwrap_or(f64::NAN),
                report.sigma("gamma_s_khz").unwrap_or(f64::NAN),
                out.display()
            );
            if report.converged {
                Ok(0)
            } else {
                eprintln!("fit did not converge (degenerate or capped); report written anyway");
                Ok(4)
            }
        }

        Command::SimulateHistogram {
            repump_us,
            pump_us,
            wait_tau_us,
            probe_us,
            bin_width_ns,
            repetitions,
            pump_rate_per_us,
            gamma_s_khz,
            p_thermal_up,
            detect_rate_per_us,
            background_per_us,
            init_fidelity,
            analytic,
            out,
        } => {
            let seq = PulseSequence::new(
                repump_us,
                pump_us,
                wait_tau_us,
                probe_us,
                bin_width_ns,
                repetitions,
            )?;
            let model = RateModel {
                pump_rate_per_us,
                gamma_s_khz,
                p_thermal_up,
                detect_rate_per_us,
                background_per_us,
                init_fidelity,
            };
            let mode = if analytic {
                SimMode::Analytic
            } else {
                SimMode::Sampled
            };
            let hist = simulate_histogram(&seq, &model, seed, mode)?;
            let out = config.resolve_out(out, "histogram.csv");
            write_histogram_csv(
                &hist,
                &out,
                &[
                    "kind: histogram".to_string(),
                    format!(
                        "sequence: repump_us={repump_us} pump_us={pump_us} wait_tau_us={wait_tau_us} probe_us={probe_us} bin_width_ns={bin_width_ns} repetitions={repetitions}"
                    ),
                    format!(
                        "model: pump_rate_per_us={pump_rate_per_us} gamma_s_khz={gamma_s_khz} p_thermal_up={p_thermal_up} detect_rate_per_us={detect_rate_per_us} background_per_us={background_per_us} init_fidelity={init_fidelity}"
                    ),
                    format!("seed: {seed} mode: {}", if analytic { "analytic" } else { "sampled" }),
                ],
            )?;
            println!("{} bins -> {}", hist.counts.len(), out.display());
            Ok(0)
        }

        Command::Thermometry {
            omega_ghz,
            temp_k,
            p_saturation,
            out,
        } => {
            let constants = config.constants();
            let report = match (temp_k, p_saturation) {
                (Some(t), None) => thermometry_report_from_temperature(&constants, omega_ghz, t)?,
                (None, Some(p)) => thermometry_report_from_saturation(&constants, omega_ghz, p)?,
                _ => unreachable!("clap group enforces exactly one source"),
            };
            let out = config.resolve_out(out, "thermometry.json");
            write_json(&out, &report)?;
            println!(
                "T = {:.4} K, p_sat = {:.4}, n_th(12.06 GHz) = {:.4} -> {}",
                report.temperature_k,
                report.p_saturation,
                report.n_th_12ghz,
                out.display()
            );
            Ok(0)
        }

        Command::Backaction {
            red,
            blue,
            independent_slopes,
            out,
        } => {
            let red_ds = load_dataset(&red, DatasetKind::SidebandSeries)?;
            let blue_ds = load_dataset(&blue, DatasetKind::SidebandSeries)?;
            let (Payload::SidebandSeries(red), Payload::SidebandSeries(blue)) =
                (red_ds.payload, blue_ds.payload)
            else {
                unreachable!()
            };
            let fit = fit_backaction_pair(&red, &blue)?;
            let threshold = lasing_threshold_power(&fit).ok();
            let out = config.resolve_out(out, "backaction.json");
            if independent_slopes {
                let relaxed = fit_backaction_pair_independent(&red, &blue)?;
                write_json(
                    &out,
                    &serde_json::json!({ "shared": fit, "independent": relaxed }),
                )?;
            } else {
                write_json(&out, &fit)?;
            }
            println!(
                "kappa_m(0) = {:.2} +/- {:.2} kHz, slope {:.3} kHz/uW{} -> {}",
                fit.kappa_intrinsic_khz,
                fit.sigma_kappa(),
                fit.slope_khz_per_uw,
                threshold.map_or(String::new(), |p| format!(", lasing at {p:.2} uW")),
                out.display()
            );
            Ok(0)
        }

        Command::AngleFit { input, out } => {
            let (points, sigmas) = load_angle_points(&input)?;
            let fit = fit_angle_amplitude(&points, sigmas.as_deref())?;
            let out = config.resolve_out(out, "angle_fit.json");
            write_json(
                &out,
                &AngleFitJson {
                    amplitude_khz: fit.slope,
                    sigma_khz: fit.sigma,
                    n_points: fit.n_points,
                },
            )?;
            println!(
                "amplitude {:.4} +/- {:.4} kHz -> {}",
                fit.slope,
                fit.sigma,
                out.display()
            );
            Ok(0)
        }

        Command::Repro { out } => {
            let results = sivqed::acceptance::run_all();
            for r in &results {
                println!("{}", r.line());
            }
            if let Some(path) = out {
                write_json(&path, &results)?;
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed == 0 {
                println!("all {} criteria passed", results.len());
                Ok(0)
            } else {
                eprintln!("{failed} criterion(s) failed");
                Ok(1)
            }
        }

        Command::Export {
            input,
            kind,
            format,
            out,
        } => {
            let kind: DatasetKind = kind.parse()?;
            let format: PlotFormat = format.parse()?;
            let dataset = load_dataset(&input, kind)?;
            let series = to_series(&dataset.payload);
            let out = config.resolve_out(
                out,
                if format == PlotFormat::Csv {
                    "export.csv"
                } else {
                    "export.json"
                },
            );
            emit_plot_data(&series, &out, format)?;
            println!("{} series -> {}", series.len(), out.display());
            Ok(0)
        }
    }
}

fn to_series(payload: &Payload) -> Vec<PlotSeries> {
    match payload {
        Payload::Spectrum(s) => {
            let mut cols = vec![
                PlotSeries {
                    name: s.x_unit.clone(),
                    values: s.x.clone(),
                },
                PlotSeries {
                    name: s.y_unit.clone(),
                    values: s.y.clone(),
                },
            ];
            if let Some(sig) = &s.sigma {
                cols.push(PlotSeries {
                    name: "sigma".into(),
                    values: sig.clone(),
                });
            }
            cols
        }
        Payload::DecayCurve(c) => {
            let mut cols = vec![
                PlotSeries {
                    name: "tau_us".into(),
                    values: c.tau_us.clone(),
                },
                PlotSeries {
                    name: "population".into(),
                    values: c.population.clone(),
                },
            ];
            if let Some(sig) = &c.sigma {
                cols.push(PlotSeries {
                    name: "sigma".into(),
                    values: sig.clone(),
                });
            }
            cols
        }
        Payload::ModeTable(t) => {
            let modes = t.modes();
            vec![
                PlotSeries {
                    name: "freq_ghz".into(),
                    values: modes.iter().map(|m| m.omega_q).collect(),
                },
                PlotSeries {
                    name: "q_factor".into(),
                    values: modes.iter().map(|m| m.q_factor).collect(),
                },
                PlotSeries {
                    name: "g_mhz".into(),
                    values: modes.iter().map(|m| m.g_q).collect(),
                },
            ]
        }
        Payload::Histogram(h) => {
            let starts: Vec<f64> = (0..h.counts.len())
                .map(|i| i as f64 * h.bin_width_ns)
                .collect();
            vec![
                PlotSeries {
                    name: "bin_start_ns".into(),
                    values: starts,
                },
                PlotSeries {
                    name: "counts".into(),
                    values: h.counts.clone(),
                },
            ]
        }
        Payload::SidebandSeries(s) => {
            vec![
                PlotSeries {
                    name: "power_uw".into(),
                    values: s.points.iter().map(|p| p.0).collect(),
                },
                PlotSeries {
                    name: "linewidth_khz".into(),
                    values: s.points.iter().map(|p| p.1).collect(),
                },
            ]
        }
        Payload::FourLine(records) => {
            vec![
                PlotSeries {
                    name: "field_kg".into(),
                    values: records.iter().map(|r| r.field_kg).collect(),
                },
                PlotSeries {
                    name: "f_uu_ghz".into(),
                    values: records.iter().map(|r| r.lines.f_uu).collect(),
                },
                PlotSeries {
                    name: "f_dd_ghz".into(),
                    values: records.iter().map(|r| r.lines.f_dd).collect(),
                },
                PlotSeries {
                    name: "f_du_ghz".into(),
                    values: records.iter().map(|r| r.lines.f_du).collect(),
                },
                PlotSeries {
                    name: "f_ud_ghz".into(),
                    values: records.iter().map(|r| r.lines.f_ud).collect(),
                },
            ]
        }
    }
}
