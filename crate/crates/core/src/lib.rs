//! Cavity-QED modeling and analysis for a color-center spin in a diamond
//! optomechanical crystal.
//!
//! The crate forward-models the two interfaces of such a device — an optical
//! cavity hybridized with the emitter's zero-phonon line, and GHz acoustic
//! modes Purcell-enhancing the spin relaxation — and provides the inverse
//! pipeline that turns measured spectra and pump-probe photon histograms back
//! into physical parameters:
//!
//! * [`siv`] — silicon-vacancy level structure, Zeeman-split optical lines,
//!   and the field-to-spin-frequency calibration.
//! * [`optics`] — single-sided cavity reflection spectra with an embedded
//!   two-level emitter; cooperativity and intracavity photon number.
//! * [`phonon`] — spin-phonon coupling from strain, acoustic Purcell decay
//!   rates, and broadband mode-sum decay spectra.
//! * [`thermo`] — thermal spin populations, Bose occupancy, orbital
//!   freeze-out, and temperature inference from saturation levels.
//! * [`optomech`] — thermal-motion noise spectra and power-dependent
//!   backaction linewidths.
//! * [`sim`] — Monte Carlo pump-probe photon-counting simulator; the
//!   synthetic oracle for the T1 analysis pipeline.
//! * [`fit`] — the shared deterministic nonlinear least-squares engine and
//!   the concrete fits built on it.
//! * [`io`] — CSV/JSON dataset schemas and plot-data emission.
//!
//! All rates are ordinary frequencies (a quantity quoted as "value/(2π)");
//! conversions to angular frequency happen only inside energy and photon-flux
//! formulas. See `FORMATS.md` at the repository root for the on-disk schemas.

pub mod acceptance;
pub mod error;
pub mod fit;
pub mod io;
pub mod optics;
pub mod optomech;
pub mod phonon;
pub mod rng;
pub mod series;
pub mod sim;
pub mod siv;
pub mod thermo;
pub mod units;

pub use error::{Error, Result};
pub use series::{DecayCurve, Spectrum};
