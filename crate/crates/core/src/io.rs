//! Dataset persistence: CSV schemas with `#` metadata comments, JSON
//! reports, and plot-data emission.
//!
//! Every reader validates against its kind's schema and reports the first
//! offending line; every writer formats floats with the shortest
//! round-trippable representation, so write/read/write cycles are
//! byte-identical.

use crate::error::{Error, Result};
use crate::optomech::{Sideband, SidebandSeries};
use crate::phonon::{MechanicalMode, ModeTable};
use crate::series::{DecayCurve, Spectrum};
use crate::sim::{Histogram, SegmentMarkers};
use crate::siv::{FourLineRecord, FourLineSpectrum};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

/// Schema tags for [`load_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    ModeTable,
    Spectrum,
    DecayCurve,
    Histogram,
    SidebandSeries,
    FourLine,
}

impl FromStr for DatasetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mode-table" => Ok(DatasetKind::ModeTable),
            "spectrum" => Ok(DatasetKind::Spectrum),
            "decay-curve" => Ok(DatasetKind::DecayCurve),
            "histogram" => Ok(DatasetKind::Histogram),
            "sideband-series" => Ok(DatasetKind::SidebandSeries),
            "four-line" => Ok(DatasetKind::FourLine),
            other => Err(Error::invalid(format!("unknown dataset kind '{other}'"))),
        }
    }
}

/// A schema-validated payload.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    ModeTable(ModeTable),
    Spectrum(Spectrum),
    DecayCurve(DecayCurve),
    Histogram(Histogram),
    SidebandSeries(SidebandSeries),
    FourLine(Vec<FourLineRecord>),
}

/// A loaded dataset with its provenance (source path).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub payload: Payload,
    pub provenance: String,
}

struct CsvFile {
    comments: Vec<(usize, String)>,
    header: Vec<String>,
    rows: Vec<(usize, Vec<f64>)>,
}

fn parse_csv(path: &Path) -> Result<CsvFile> {
    let text = std::fs::read_to_string(path)?;
    let mut comments = Vec::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            comments.push((line_no, comment.trim().to_string()));
            continue;
        }
        match &header {
            None => {
                header = Some(line.split(',').map(|c| c.trim().to_string()).collect());
            }
            Some(h) => {
                let cells: Vec<&str> = line.split(',').map(str::trim).collect();
                if cells.len() != h.len() {
                    return Err(Error::data(
                        line_no,
                        format!("expected {} columns, found {}", h.len(), cells.len()),
                    ));
                }
                let mut values = Vec::with_capacity(cells.len());
                for (col, cell) in cells.iter().enumerate() {
                    let v: f64 = cell.parse().map_err(|_| {
                        Error::data(
                            line_no,
                            format!("column '{}' value '{cell}' is not a number", h[col]),
                        )
                    })?;
                    if !v.is_finite() {
                        return Err(Error::data(line_no, "non-finite value".to_string()));
                    }
                    values.push(v);
                }
                rows.push((line_no, values));
            }
        }
    }

    let header = header.ok_or_else(|| Error::data(1, "empty file: no rows".to_string()))?;
    if rows.is_empty() {
        return Err(Error::data(1, "no rows".to_string()));
    }
    Ok(CsvFile {
        comments,
        header,
        rows,
    })
}

fn expect_header(file: &CsvFile, required: &[&str], optional: &[&str]) -> Result<usize> {
    let have: Vec<&str> = file.header.iter().map(String::as_str).collect();
    if have.len() < required.len() || have.len() > required.len() + optional.len() {
        return Err(Error::data(
            1,
            format!(
                "header must be '{}[,{}]'",
                required.join(","),
                optional.join(",")
            ),
        ));
    }
    for (i, name) in required.iter().enumerate() {
        if !have[i].eq_ignore_ascii_case(name) {
            return Err(Error::data(
                1,
                format!("column {} must be '{name}', found '{}'", i + 1, have[i]),
            ));
        }
    }
    for (i, name) in have.iter().enumerate().skip(required.len()) {
        if !name.eq_ignore_ascii_case(optional[i - required.len()]) {
            return Err(Error::data(
                1,
                format!(
                    "optional column {} must be '{}'",
                    i + 1,
                    optional[i - required.len()]
                ),
            ));
        }
    }
    Ok(have.len())
}

/// Loads and schema-validates a dataset file.
pub fn load_dataset(path: &Path, kind: DatasetKind) -> Result<Dataset> {
    let file = parse_csv(path)?;
    let payload = match kind {
        DatasetKind::ModeTable => load_mode_table(&file)?,
        DatasetKind::Spectrum => load_spectrum(&file)?,
        DatasetKind::DecayCurve => load_decay_curve(&file)?,
        DatasetKind::Histogram => load_histogram(&file)?,
        DatasetKind::SidebandSeries => load_sideband(&file)?,
        DatasetKind::FourLine => load_four_line(&file)?,
    };
    Ok(Dataset {
        kind,
        payload,
        provenance: path.display().to_string(),
    })
}

fn load_mode_table(file: &CsvFile) -> Result<Payload> {
    let cols = expect_header(file, &["freq_ghz", "q_factor", "g_mhz"], &["g_om_mhz"])?;
    let mut modes = Vec::with_capacity(file.rows.len());
    let mut prev: Option<f64> = None;
    for (line, row) in &file.rows {
        if let Some(p) = prev {
            if row[0] <= p {
                return Err(Error::data(
                    *line,
                    format!(
                        "mode frequencies must be strictly increasing ({} after {p})",
                        row[0]
                    ),
                ));
            }
        }
        prev = Some(row[0]);
        let g_om = (cols == 4).then(|| row[3]);
        let mode = MechanicalMode::new(row[0], row[1], row[2], g_om)
            .map_err(|e| Error::data(*line, e.to_string()))?;
        modes.push(mode);
    }
    let table = ModeTable::new(modes).map_err(|e| Error::data(1, e.to_string()))?;
    Ok(Payload::ModeTable(table))
}

fn load_spectrum(file: &CsvFile) -> Result<Payload> {
    if file.header.len() < 2 || file.header.len() > 3 {
        return Err(Error::data(1, "spectrum needs 2 or 3 columns".to_string()));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut s = Vec::new();
    let mut prev: Option<f64> = None;
    for (line, row) in &file.rows {
        if let Some(p) = prev {
            if row[0] <= p {
                return Err(Error::data(*line, "abscissa must be strictly increasing"));
            }
        }
        prev = Some(row[0]);
        x.push(row[0]);
        y.push(row[1]);
        if row.len() == 3 {
            s.push(row[2]);
        }
    }
    let sigma = (!s.is_empty()).then_some(s);
    let spectrum = Spectrum::new(x, y, sigma)
        .map_err(|e| Error::data(1, e.to_string()))?
        .with_units(&file.header[0], &file.header[1]);
    Ok(Payload::Spectrum(spectrum))
}

fn load_decay_curve(file: &CsvFile) -> Result<Payload> {
    expect_header(file, &["tau_us", "population"], &["sigma"])?;
    let mut tau = Vec::new();
    let mut pop = Vec::new();
    let mut sig = Vec::new();
    let mut prev: Option<f64> = None;
    for (line, row) in &file.rows {
        if let Some(p) = prev {
            if row[0] <= p {
                return Err(Error::data(*line, "tau must be strictly increasing"));
            }
        }
        if !(0.0..=1.1).contains(&row[1]) {
            return Err(Error::data(
                *line,
                format!("population {} outside [0, 1.1]", row[1]),
            ));
        }
        prev = Some(row[0]);
        tau.push(row[0]);
        pop.push(row[1]);
        if row.len() == 3 {
            sig.push(row[2]);
        }
    }
    let sigma = (!sig.is_empty()).then_some(sig);
    let curve = DecayCurve::new(tau, pop, sigma).map_err(|e| Error::data(1, e.to_string()))?;
    Ok(Payload::DecayCurve(curve))
}

fn load_histogram(file: &CsvFile) -> Result<Payload> {
    expect_header(file, &["bin_start_ns", "counts"], &[])?;
    let segments_comment = file
        .comments
        .iter()
        .find_map(|(_, c)| c.strip_prefix("segments:"))
        .ok_or_else(|| Error::data(1, "missing '# segments: ...' comment".to_string()))?;
    let segments = parse_segments(segments_comment)?;

    let mut bin_width: Option<f64> = None;
    let mut counts = Vec::with_capacity(file.rows.len());
    for (i, (line, row)) in file.rows.iter().enumerate() {
        if row[1] < 0.0 {
            return Err(Error::data(
                *line,
                "counts must be non-negative".to_string(),
            ));
        }
        if i == 1 {
            bin_width = Some(row[0] - file.rows[0].1[0]);
        }
        counts.push(row[1]);
    }
    let bin_width =
        bin_width.ok_or_else(|| Error::data(1, "need at least two bins".to_string()))?;
    if bin_width <= 0.0 {
        return Err(Error::data(1, "bin starts must increase".to_string()));
    }
    let expected = segments.probe.0 + segments.probe.1;
    if counts.len() != expected {
        return Err(Error::data(
            1,
            format!("{} bins but segments describe {expected}", counts.len()),
        ));
    }
    Ok(Payload::Histogram(Histogram {
        bin_width_ns: bin_width,
        counts,
        segments,
        warning: None,
    }))
}

fn parse_segments(text: &str) -> Result<SegmentMarkers> {
    let mut parts = [None::<(usize, usize)>; 4];
    for token in text.split_whitespace() {
        let (name, span) = token
            .split_once('=')
            .ok_or_else(|| Error::data(1, format!("bad segment token '{token}'")))?;
        let (start, len) = span
            .split_once(':')
            .ok_or_else(|| Error::data(1, format!("bad segment span '{span}'")))?;
        let start: usize = start
            .parse()
            .map_err(|_| Error::data(1, format!("bad segment start '{start}'")))?;
        let len: usize = len
            .parse()
            .map_err(|_| Error::data(1, format!("bad segment length '{len}'")))?;
        let slot = match name {
            "repump" => 0,
            "pump" => 1,
            "wait" => 2,
            "probe" => 3,
            other => return Err(Error::data(1, format!("unknown segment '{other}'"))),
        };
        parts[slot] = Some((start, len));
    }
    match parts {
        [Some(repump), Some(pump), Some(wait), Some(probe)] => Ok(SegmentMarkers {
            repump,
            pump,
            wait,
            probe,
        }),
        _ => Err(Error::data(
            1,
            "segment comment must name all four pulses".to_string(),
        )),
    }
}

fn load_sideband(file: &CsvFile) -> Result<Payload> {
    expect_header(file, &["power_uw", "linewidth_khz"], &["sigma_khz"])?;
    let sideband_text = file
        .comments
        .iter()
        .find_map(|(_, c)| c.strip_prefix("sideband:"))
        .ok_or_else(|| Error::data(1, "missing '# sideband: red|blue' comment".to_string()))?;
    let sideband: Sideband = sideband_text.parse()?;
    let mut points = Vec::with_capacity(file.rows.len());
    for (line, row) in &file.rows {
        if row[0] < 0.0 {
            return Err(Error::data(
                *line,
                "powers must be non-negative".to_string(),
            ));
        }
        points.push((row[0], row[1], row.get(2).copied()));
    }
    let series =
        SidebandSeries::new(sideband, points).map_err(|e| Error::data(1, e.to_string()))?;
    Ok(Payload::SidebandSeries(series))
}

/// Reads `theta_deg,gamma_khz[,sigma_khz]` angle-sweep points.
pub fn load_angle_points(path: &Path) -> Result<(Vec<(f64, f64)>, Option<Vec<f64>>)> {
    let file = parse_csv(path)?;
    expect_header(&file, &["theta_deg", "gamma_khz"], &["sigma_khz"])?;
    let mut points = Vec::with_capacity(file.rows.len());
    let mut sigmas = Vec::new();
    for (line, row) in &file.rows {
        if !(0.0..=180.0).contains(&row[0]) {
            return Err(Error::data(
                *line,
                "theta must lie in [0, 180] degrees".to_string(),
            ));
        }
        points.push((row[0], row[1]));
        if row.len() == 3 {
            sigmas.push(row[2]);
        }
    }
    Ok((points, (!sigmas.is_empty()).then_some(sigmas)))
}

fn load_four_line(file: &CsvFile) -> Result<Payload> {
    expect_header(
        file,
        &["field_kg", "f_uu_ghz", "f_dd_ghz", "f_du_ghz", "f_ud_ghz"],
        &[],
    )?;
    let mut records = Vec::with_capacity(file.rows.len());
    for (line, row) in &file.rows {
        if row[0] < 0.0 {
            return Err(Error::data(
                *line,
                "field magnitude must be non-negative".to_string(),
            ));
        }
        records.push(FourLineRecord {
            field_kg: row[0],
            lines: FourLineSpectrum {
                f_uu: row[1],
                f_dd: row[2],
                f_du: row[3],
                f_ud: row[4],
            },
        });
    }
    Ok(Payload::FourLine(records))
}

/// Formats a float with the shortest representation that round-trips.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

/// Writes a spectrum as CSV with optional leading `#` comments.
pub fn write_spectrum_csv(spectrum: &Spectrum, path: &Path, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").expect("string write");
    }
    let has_sigma = spectrum.sigma.is_some();
    writeln!(
        out,
        "{},{}{}",
        spectrum.x_unit,
        spectrum.y_unit,
        if has_sigma { ",sigma" } else { "" }
    )
    .expect("string write");
    for i in 0..spectrum.len() {
        match &spectrum.sigma {
            Some(s) => writeln!(
                out,
                "{},{},{}",
                fmt_f64(spectrum.x[i]),
                fmt_f64(spectrum.y[i]),
                fmt_f64(s[i])
            )
            .expect("string write"),
            None => writeln!(out, "{},{}", fmt_f64(spectrum.x[i]), fmt_f64(spectrum.y[i]))
                .expect("string write"),
        }
    }
    write_atomic(path, &out)
}

pub fn write_decay_curve_csv(curve: &DecayCurve, path: &Path, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").expect("string write");
    }
    writeln!(out, "tau_us,population,sigma").expect("string write");
    for i in 0..curve.len() {
        let sigma = curve.sigma.as_ref().map_or(0.0, |s| s[i]);
        writeln!(
            out,
            "{},{},{}",
            fmt_f64(curve.tau_us[i]),
            fmt_f64(curve.population[i]),
            fmt_f64(sigma)
        )
        .expect("string write");
    }
    write_atomic(path, &out)
}

pub fn write_mode_table_csv(table: &ModeTable, path: &Path, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").expect("string write");
    }
    let any_g_om = table.modes().iter().any(|m| m.g_om.is_some());
    writeln!(
        out,
        "freq_ghz,q_factor,g_mhz{}",
        if any_g_om { ",g_om_mhz" } else { "" }
    )
    .expect("string write");
    for m in table.modes() {
        if any_g_om {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(m.omega_q),
                fmt_f64(m.q_factor),
                fmt_f64(m.g_q),
                fmt_f64(m.g_om.unwrap_or(0.0))
            )
            .expect("string write");
        } else {
            writeln!(
                out,
                "{},{},{}",
                fmt_f64(m.omega_q),
                fmt_f64(m.q_factor),
                fmt_f64(m.g_q)
            )
            .expect("string write");
        }
    }
    write_atomic(path, &out)
}

/// Writes a histogram with its segment markers and any extra comments (the
/// pulse-sequence definition, the seed).
pub fn write_histogram_csv(hist: &Histogram, path: &Path, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").expect("string write");
    }
    let s = &hist.segments;
    writeln!(
        out,
        "# segments: repump={}:{} pump={}:{} wait={}:{} probe={}:{}",
        s.repump.0, s.repump.1, s.pump.0, s.pump.1, s.wait.0, s.wait.1, s.probe.0, s.probe.1
    )
    .expect("string write");
    if let Some(w) = &hist.warning {
        writeln!(out, "# warning: {w}").expect("string write");
    }
    writeln!(out, "bin_start_ns,counts").expect("string write");
    for (i, c) in hist.counts.iter().enumerate() {
        writeln!(
            out,
            "{},{}",
            fmt_f64(i as f64 * hist.bin_width_ns),
            fmt_f64(*c)
        )
        .expect("string write");
    }
    write_atomic(path, &out)
}

pub fn write_sideband_csv(series: &SidebandSeries, path: &Path) -> Result<()> {
    let mut out = String::new();
    let name = match series.sideband {
        Sideband::Red => "red",
        Sideband::Blue => "blue",
    };
    writeln!(out, "# sideband: {name}").expect("string write");
    let any_sigma = series.points.iter().any(|p| p.2.is_some());
    writeln!(
        out,
        "power_uw,linewidth_khz{}",
        if any_sigma { ",sigma_khz" } else { "" }
    )
    .expect("string write");
    for &(p, lw, sigma) in &series.points {
        if any_sigma {
            writeln!(
                out,
                "{},{},{}",
                fmt_f64(p),
                fmt_f64(lw),
                fmt_f64(sigma.unwrap_or(0.0))
            )
            .expect("string write");
        } else {
            writeln!(out, "{},{}", fmt_f64(p), fmt_f64(lw)).expect("string write");
        }
    }
    write_atomic(path, &out)
}

/// A named column for [`emit_plot_data`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFormat {
    Csv,
    Json,
}

impl FromStr for PlotFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(PlotFormat::Csv),
            "json" => Ok(PlotFormat::Json),
            other => Err(Error::invalid(format!("unknown format '{other}'"))),
        }
    }
}

/// Emits column-aligned plot data. CSV requires equal-length series; JSON
/// permits ragged lengths and preserves full float precision.
pub fn emit_plot_data(series: &[PlotSeries], path: &Path, format: PlotFormat) -> Result<()> {
    if series.is_empty() {
        return Err(Error::invalid("no series to emit"));
    }
    match format {
        PlotFormat::Csv => {
            let len = series[0].values.len();
            if series.iter().any(|s| s.values.len() != len) {
                return Err(Error::invalid("CSV requires equal-length series"));
            }
            let mut out = String::new();
            let names: Vec<&str> = series.iter().map(|s| s.name.as_str()).collect();
            writeln!(out, "{}", names.join(",")).expect("string write");
            for i in 0..len {
                let row: Vec<String> = series.iter().map(|s| fmt_f64(s.values[i])).collect();
                writeln!(out, "{}", row.join(",")).expect("string write");
            }
            write_atomic(path, &out)
        }
        PlotFormat::Json => {
            let map: serde_json::Map<String, serde_json::Value> = series
                .iter()
                .map(|s| {
                    (
                        s.name.clone(),
                        serde_json::Value::Array(
                            s.values.iter().map(|v| serde_json::json!(v)).collect(),
                        ),
                    )
                })
                .collect();
            write_json(path, &serde_json::Value::Object(map))
        }
    }
}

/// Serializes a report as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, &text)
}
