//! End-to-end checks of the command-line surface: schemas, exit codes, and
//! output determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sivqed")
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("sivqed-cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("SIVQED_CONFIG")
        .output()
        .unwrap()
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn purcell_scan_peaks_at_the_breathing_mode() {
    let dir = workdir("purcell");
    let modes = dir.join("modes.csv");
    // Q = ω/κ puts the linewidth at 35 MHz.
    std::fs::write(
        &modes,
        "freq_ghz,q_factor,g_mhz\n12.06,344.5714285714286,0.3\n",
    )
    .unwrap();
    let out = dir.join("gamma.csv");
    let res = run(&[
        "purcell-scan",
        "--modes",
        modes.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&res, 0);

    let text = std::fs::read_to_string(&out).unwrap();
    let mut best = (0.0f64, 0.0f64);
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let mut cells = line.split(',');
        let f: f64 = cells.next().unwrap().parse().unwrap();
        let g: f64 = cells.next().unwrap().parse().unwrap();
        if g > best.1 {
            best = (f, g);
        }
    }
    assert!((best.0 - 12.06).abs() <= 0.01, "peak at {} GHz", best.0);
    assert!((best.1 - 10.2857).abs() < 0.05, "peak {} kHz", best.1);
}

#[test]
fn thermometry_reports_breathing_mode_occupancy() {
    let dir = workdir("thermo");
    let out = dir.join("thermo.json");
    let res = run(&[
        "thermometry",
        "--omega-ghz",
        "12.06",
        "--temp-k",
        "0.150",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&res, 0);
    let v = read_json(&out);
    let n = v["n_th_12ghz"].as_f64().unwrap();
    assert!((n - 0.022).abs() < 0.005, "n_th = {n}");
    assert!((v["temperature_k"].as_f64().unwrap() - 0.150).abs() < 1e-12);
}

#[test]
fn thermometry_inverts_saturation() {
    let dir = workdir("thermo-inv");
    let out = dir.join("thermo.json");
    let res = run(&[
        "thermometry",
        "--omega-ghz",
        "8.3",
        "--p-saturation",
        "0.0656",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&res, 0);
    let v = read_json(&out);
    assert!((v["temperature_k"].as_f64().unwrap() - 0.150).abs() < 5e-4);
}

#[test]
fn calibrate_recovers_noiseless_slope() {
    let dir = workdir("calibrate");
    let input = dir.join("lines.csv");
    let mut text = String::from("field_kg,f_uu_ghz,f_dd_ghz,f_du_ghz,f_ud_ghz\n");
    for i in 1..=6 {
        let b = i as f64 * 0.5;
        let (nu0, ws, wse) = (406_700.0, 2.7 * b, 3.5 * b);
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            b,
            nu0 + wse - ws,
            nu0,
            nu0 + wse,
            nu0 - ws
        ));
    }
    std::fs::write(&input, text).unwrap();
    let out = dir.join("calibration.json");
    let res = run(&[
        "calibrate",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&res, 0);
    let v = read_json(&out);
    let slope = v["conversion_ghz_per_kg"].as_f64().unwrap();
    assert!((slope - 2.7).abs() < 1e-9, "slope = {slope}");
    assert_eq!(v["n_points"].as_u64().unwrap(), 12);
}

#[test]
fn simulate_histogram_is_byte_deterministic() {
    let dir = workdir("hist");
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    let c = dir.join("c.csv");
    for (path, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let res = run(&[
            "simulate-histogram",
            "--wait-tau-us",
            "50",
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_code(&res, 0);
    }
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    assert_ne!(bytes_a, std::fs::read(&c).unwrap());
}

#[test]
fn t1_fit_round_trips_through_files() {
    let dir = workdir("t1");
    let hist_curve = dir.join("decay.csv");
    // Synthetic relaxation curve toward p_inf = 0.93 at 10 kHz.
    let mut text = String::from("tau_us,population\n");
    for i in 1..=20 {
        let tau = i as f64 * 25.0;
        let p = 0.93 + (0.0 - 0.93) * (-1e-3f64 * 10.0 * tau).exp();
        text.push_str(&format!("{tau},{p}\n"));
    }
    std::fs::write(&hist_curve, text).unwrap();
    let out = dir.join("t1.json");
    let res = run(&[
        "t1-fit",
        "--input",
        hist_curve.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&res, 0);
    let v = read_json(&out);
    let gamma = v["params"]["gamma_s_khz"].as_f64().unwrap();
    assert!((gamma - 10.0).abs() < 1e-6, "gamma = {gamma}");
    assert!(v["converged"].as_bool().unwrap());
}

#[test]
fn reflectance_forward_then_fit() {
    let dir = workdir("reflect");
    let spectrum = dir.join("spectrum.csv");
    let res = run(&[
        "reflectance",
        "--g-so-ghz",
        "3.6",
        "--kappa-ghz",
        "15",
        "--kappa-e-ghz",
        "4",
        "--out",
        spectrum.to_str().unwrap(),
    ]);
    assert_code(&res, 0);
    let fit_out = dir.join("fit.json");
    let res = run(&[
        "fit-reflectance",
        "--input",
        spectrum.to_str().unwrap(),
        "--regime",
        "under",
        "--init-g-so-ghz",
        "3.0",
        "--init-kappa-ghz",
        "18",
        "--init-kappa-e-ghz",
        "5",
        "--out",
        fit_out.to_str().unwrap(),
    ]);
    assert_code(&res, 0);
    let v = read_json(&fit_out);
    assert!((v["g_so_ghz"].as_f64().unwrap() - 3.6).abs() < 1e-4);
    assert!((v["kappa_ghz"].as_f64().unwrap() - 15.0).abs() < 1e-3);
    assert!((v["c_o"].as_f64().unwrap() - 31.4).abs() < 0.1);
}

#[test]
fn backaction_joint_fit() {
    let dir = workdir("backaction");
    let red = dir.join("red.csv");
    let blue = dir.join("blue.csv");
    let mut red_text = String::from("# sideband: red\npower_uw,linewidth_khz\n");
    let mut blue_text = String::from("# sideband: blue\npower_uw,linewidth_khz\n");
    for i in 1..=6 {
        let p = i as f64 * 0.8;
        red_text.push_str(&format!("{},{}\n", p, 350.0 + 10.0 * p));
        blue_text.push_str(&format!("{},{}\n", p, 350.0 - 10.0 * p));
    }
    std::fs::write(&red, red_text).unwrap();
    std::fs::write(&blue, blue_text).unwrap();
    let out = dir.join("fit.json");
    let res = run(&[
        "backaction",
        "--red",
        red.to_str().unwrap(),
        "--blue",
        blue.to_str().unwrap(),
        "--independent-slopes",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&res, 0);
    let v = read_json(&out);
    assert!((v["shared"]["kappa_intrinsic_khz"].as_f64().unwrap() - 350.0).abs() < 1e-9);
    assert!((v["independent"]["slope_blue_khz_per_uw"].as_f64().unwrap() - 10.0).abs() < 1e-9);
}

#[test]
fn angle_fit_from_csv() {
    let dir = workdir("angle");
    let input = dir.join("angles.csv");
    let mut text = String::from("theta_deg,gamma_khz\n");
    for t in [10.0f64, 30.0, 45.0, 55.0, 90.0] {
        let s = (t.to_radians()).sin();
        text.push_str(&format!("{},{}\n", t, 7.3 * s * s));
    }
    std::fs::write(&input, text).unwrap();
    let out = dir.join("fit.json");
    let res = run(&[
        "angle-fit",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&res, 0);
    let v = read_json(&out);
    assert!((v["amplitude_khz"].as_f64().unwrap() - 7.3).abs() < 1e-9);
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = workdir("codes");
    // Usage error: unknown flag.
    let res = run(&["purcell-scan", "--bogus"]);
    assert_code(&res, 2);

    // Data error: decreasing mode frequencies.
    let modes = dir.join("modes.csv");
    std::fs::write(
        &modes,
        "freq_ghz,q_factor,g_mhz\n12.0,300,0.3\n11.0,300,0.3\n",
    )
    .unwrap();
    let res = run(&["purcell-scan", "--modes", modes.to_str().unwrap()]);
    assert_code(&res, 3);
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3"));

    // Missing file is a data error too.
    let res = run(&["t1-fit", "--input", dir.join("nope.csv").to_str().unwrap()]);
    assert_code(&res, 3);

    // Fit failure: flat reflectance spectrum.
    let flat = dir.join("flat.csv");
    let mut text = String::from("freq_thz,reflectance\n");
    for i in 0..60 {
        text.push_str(&format!("{},1.0\n", 406.68 + i as f64 * 1e-3));
    }
    std::fs::write(&flat, text).unwrap();
    let res = run(&[
        "fit-reflectance",
        "--input",
        flat.to_str().unwrap(),
        "--regime",
        "under",
    ]);
    assert_code(&res, 4);
}

#[test]
fn export_round_trips_a_spectrum() {
    let dir = workdir("export");
    let spectrum = dir.join("s.csv");
    std::fs::write(&spectrum, "freq_ghz,gamma_khz\n10,1.5\n11,2.5\n12,9.75\n").unwrap();
    let out = dir.join("plot.json");
    let res = run(&[
        "export",
        "--input",
        spectrum.to_str().unwrap(),
        "--kind",
        "spectrum",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&res, 0);
    let v = read_json(&out);
    assert_eq!(v["freq_ghz"].as_array().unwrap().len(), 3);
    assert_eq!(v["gamma_khz"][2].as_f64().unwrap(), 9.75);
}

#[test]
fn repro_passes_every_criterion() {
    let dir = workdir("repro");
    let out = dir.join("report.json");
    let res = run(&["repro", "--out", out.to_str().unwrap()]);
    assert_code(&res, 0);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert_eq!(stdout.matches("PASS").count(), 13, "stdout: {stdout}");
    assert!(!stdout.contains("FAIL"));
    let v = read_json(&out);
    assert_eq!(v.as_array().unwrap().len(), 13);
}
