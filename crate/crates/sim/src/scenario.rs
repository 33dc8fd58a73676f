//! Scenario files: flat `key = value` lines with `#` comments.
//!
//! ```text
//! m = 80            # base-station antennas
//! k = 10            # users
//! n = 1000          # pilot length (channel uses)
//! l = 5             # channel taps
//! n_c = 1000        # coherence interval (channel uses)
//! snr_db = -10.0    # transmit SNR p_u/σ² in dB; inf = noiseless
//! delta_max = 0.0012566370614359172   # max CFO, rad/channel use
//! alpha = 1.5       # grid spacing 2π/n^alpha
//! pdp = "uniform"   # or [σ²_0, …, σ²_{l-1}] shared by all users,
//!                   # or one such list per user
//! trials = 2000
//! seed = 1
//! ```
//!
//! The syntax is a subset of TOML and is parsed as such. Every key is
//! required; unknown keys are rejected.

use std::fmt;
use std::path::Path;

use cecfo_core::config::{
    max_cfo, DEFAULT_BANDWIDTH_HZ, DEFAULT_CARRIER_HZ, DEFAULT_COHERENCE_TIME_S,
    DEFAULT_DELAY_SPREAD_S, DEFAULT_OFFSET_PPM,
};
use cecfo_core::{Error as CoreError, PowerDelayProfile, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PdpSpec {
    /// `"uniform"`: power `1/l` on every tap.
    Named(String),
    Shared(Vec<f64>),
    PerUser(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub l: usize,
    pub n_c: usize,
    pub snr_db: f64,
    pub delta_max: f64,
    pub alpha: f64,
    pub pdp: PdpSpec,
    pub trials: usize,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            m: 80,
            k: 10,
            n: 1000,
            l: (DEFAULT_DELAY_SPREAD_S * DEFAULT_BANDWIDTH_HZ).round() as usize,
            n_c: (DEFAULT_COHERENCE_TIME_S * DEFAULT_BANDWIDTH_HZ).round() as usize,
            snr_db: -10.0,
            delta_max: max_cfo(DEFAULT_CARRIER_HZ, DEFAULT_BANDWIDTH_HZ, DEFAULT_OFFSET_PPM),
            alpha: 1.5,
            pdp: PdpSpec::Named("uniform".into()),
            trials: 2000,
            seed: 1,
        }
    }
}

/// Scenario key carrying a `SystemConfig` field.
fn key_of(field: &str) -> &str {
    match field {
        "antennas" => "m",
        "users" => "k",
        "pilot_len" => "n",
        "taps" => "l",
        "gamma" => "snr_db",
        "coherence_len" => "n_c",
        other => other,
    }
}

fn config_error(e: CoreError) -> SimError {
    match e {
        CoreError::InvalidArgument { name, reason } => {
            SimError::Config(format!("key `{}`: {}", key_of(name), reason))
        }
        other => SimError::Config(format!("key `pdp`: {other}")),
    }
}

impl Scenario {
    pub fn parse(text: &str) -> SimResult<Self> {
        toml::from_str(text).map_err(|e| SimError::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> SimResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            SimError::Config(msg) => SimError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("scenario fields are always representable")
    }

    pub fn system_config(&self) -> SimResult<SystemConfig> {
        let cfg = SystemConfig {
            antennas: self.m,
            users: self.k,
            pilot_len: self.n,
            taps: self.l,
            gamma: cecfo_core::config::db_to_linear(self.snr_db),
            delta_max: self.delta_max,
            alpha: self.alpha,
            noise_var: 1.0,
            coherence_len: Some(self.n_c),
        };
        cfg.validate().map_err(config_error)?;
        Ok(cfg)
    }

    pub fn power_delay_profile(&self) -> SimResult<PowerDelayProfile> {
        let pdp = match &self.pdp {
            PdpSpec::Named(name) if name == "uniform" => PowerDelayProfile::uniform(self.k, self.l),
            PdpSpec::Named(name) => {
                return Err(SimError::Config(format!(
                    "key `pdp`: unknown profile \"{name}\" (expected \"uniform\" or a list)"
                )))
            }
            PdpSpec::Shared(row) => {
                if row.len() != self.l {
                    return Err(SimError::Config(format!(
                        "key `pdp`: {} tap variances given, l = {}",
                        row.len(),
                        self.l
                    )));
                }
                PowerDelayProfile::shared(self.k, row)
            }
            PdpSpec::PerUser(rows) => {
                if rows.len() != self.k || rows.iter().any(|r| r.len() != self.l) {
                    return Err(SimError::Config(format!(
                        "key `pdp`: expected {} rows of {} tap variances",
                        self.k, self.l
                    )));
                }
                PowerDelayProfile::new(self.k, self.l, rows.concat())
            }
        };
        pdp.map_err(config_error)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
