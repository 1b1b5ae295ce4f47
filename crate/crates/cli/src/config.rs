//! Run configuration, loaded from the JSON file named by `SIVQED_CONFIG`.
//!
//! Command-line flags always win over the config; the config wins over
//! built-in defaults. Fit tolerances are deliberately not configurable: the
//! engine pins them so results are reproducible everywhere.

use serde::Deserialize;
use sivqed::siv::SivParameters;
use sivqed::thermo::Constants;
use sivqed::{Error, Result};
use std::path::PathBuf;

pub const CONFIG_ENV: &str = "SIVQED_CONFIG";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Physical-constant overrides (h, k_b), defaulting to CODATA.
    pub constants: Option<Constants>,
    /// Emitter parameters for strain-based couplings.
    pub siv_parameters: Option<SivParameters>,
    /// Default RNG seed when `--seed` is not given.
    pub seed: Option<u64>,
    /// Directory for outputs whose `--out` is omitted.
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Loads the config named by the environment, or the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            None => Ok(RunConfig::default()),
            Some(path) => {
                let text = std::fs::read_to_string(&path)?;
                let config: RunConfig = serde_json::from_str(&text)
                    .map_err(|e| Error::invalid(format!("bad config file: {e}")))?;
                if let Some(c) = &config.constants {
                    if !(c.h > 0.0 && c.k_b > 0.0) {
                        return Err(Error::invalid("constants must be positive"));
                    }
                }
                if let Some(p) = &config.siv_parameters {
                    // Re-run the constructor checks so a bad config fails here,
                    // not at first use.
                    SivParameters::new(p.lambda_so_gs, p.lambda_so_es, p.d, p.f, p.gyro)?;
                }
                Ok(config)
            }
        }
    }

    pub fn constants(&self) -> Constants {
        self.constants.unwrap_or_default()
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(42)
    }

    /// Resolves an output path: an explicit flag is used as-is; otherwise the
    /// default filename lands in the configured output directory.
    pub fn resolve_out(&self, flag: Option<PathBuf>, default_name: &str) -> PathBuf {
        match flag {
            Some(p) => p,
            None => match &self.out_dir {
                Some(dir) => dir.join(default_name),
                None => PathBuf::from(default_name),
            },
        }
    }
}
