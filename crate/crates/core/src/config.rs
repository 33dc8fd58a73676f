//! Scenario parameters and the channel power delay profile.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Carrier frequency used by the reference scenario (Hz).
pub const DEFAULT_CARRIER_HZ: f64 = 2.0e9;
/// Communication bandwidth of the reference scenario (Hz).
pub const DEFAULT_BANDWIDTH_HZ: f64 = 1.0e6;
/// Worst-case oscillator mismatch of the reference scenario (parts per million).
pub const DEFAULT_OFFSET_PPM: f64 = 0.1;
/// Maximum delay spread of the reference channel (s).
pub const DEFAULT_DELAY_SPREAD_S: f64 = 5.0e-6;
/// Channel coherence time of the reference scenario (s).
pub const DEFAULT_COHERENCE_TIME_S: f64 = 1.0e-3;

/// Maximum CFO in radians per channel use for an oscillator mismatch of
/// `ppm` parts per million at carrier `carrier_hz`, sampled at `bandwidth_hz`.
pub fn max_cfo(carrier_hz: f64, bandwidth_hz: f64, ppm: f64) -> f64 {
    2.0 * PI * ppm * 1e-6 * carrier_hz / bandwidth_hz
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

/// All scalar parameters of one simulated uplink scenario.
///
/// `gamma` is the transmit SNR `p_u/σ²`. An infinite `gamma` selects a
/// noiseless frame in which the pilot power equals `noise_var`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    /// Base-station antennas `M`.
    pub antennas: usize,
    /// User terminals `K`.
    pub users: usize,
    /// Pilot length `N` in channel uses.
    pub pilot_len: usize,
    /// Channel memory `L` in taps.
    pub taps: usize,
    pub gamma: f64,
    /// Maximum CFO magnitude, radians per channel use.
    pub delta_max: f64,
    /// Search-grid exponent; the grid spacing is `2π/N^alpha`.
    pub alpha: f64,
    pub noise_var: f64,
    /// Coherence interval `N_c`; the pilot must fit inside it when given.
    pub coherence_len: Option<usize>,
}

impl Default for SystemConfig {
    /// The reference scenario: 2 GHz carrier, 1 MHz bandwidth, 0.1 ppm
    /// oscillators, 5 µs delay spread, 1 ms coherence, `K = 10`, `M = 80`,
    /// `N = 1000`, `γ = −10 dB`, `α = 1.5`.
    fn default() -> Self {
        let taps = libm::round(DEFAULT_DELAY_SPREAD_S * DEFAULT_BANDWIDTH_HZ) as usize;
        let coherence = libm::round(DEFAULT_COHERENCE_TIME_S * DEFAULT_BANDWIDTH_HZ) as usize;
        SystemConfig {
            antennas: 80,
            users: 10,
            pilot_len: 1000,
            taps,
            gamma: db_to_linear(-10.0),
            delta_max: max_cfo(DEFAULT_CARRIER_HZ, DEFAULT_BANDWIDTH_HZ, DEFAULT_OFFSET_PPM),
            alpha: 1.5,
            noise_var: 1.0,
            coherence_len: Some(coherence),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(Error::arg("antennas", "must be at least 1"));
        }
        if self.users == 0 {
            return Err(Error::arg("users", "must be at least 1"));
        }
        if self.pilot_len < self.users {
            return Err(Error::arg("pilot_len", "must be at least the user count"));
        }
        if self.taps == 0 {
            return Err(Error::arg("taps", "must be at least 1"));
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 {
            return Err(Error::arg("gamma", "must be positive"));
        }
        if !(self.delta_max.is_finite() && self.delta_max > 0.0) {
            return Err(Error::arg("delta_max", "must be positive and finite"));
        }
        if self.delta_max >= PI / self.users as f64 {
            return Err(Error::arg(
                "delta_max",
                "user bands overlap: need delta_max < pi/K",
            ));
        }
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return Err(Error::arg("alpha", "must exceed 1"));
        }
        if !(self.noise_var.is_finite() && self.noise_var > 0.0) {
            return Err(Error::arg("noise_var", "must be positive and finite"));
        }
        if let Some(nc) = self.coherence_len {
            if self.pilot_len > nc {
                return Err(Error::arg("pilot_len", "exceeds the coherence interval"));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.gamma.is_infinite()
    }

    /// Per-user pilot power `p_u = γσ²`.
    pub fn pilot_power(&self) -> f64 {
        if self.is_noiseless() {
            self.noise_var
        } else {
            self.gamma * self.noise_var
        }
    }

    /// Variance of the additive noise actually injected into a frame.
    pub fn injected_noise_var(&self) -> f64 {
        if self.is_noiseless() {
            0.0
        } else {
            self.noise_var
        }
    }

    pub fn snr_db(&self) -> f64 {
        linear_to_db(self.gamma)
    }

    pub fn with_snr_db(mut self, db: f64) -> Self {
        self.gamma = db_to_linear(db);
        self
    }
}

/// Per-user, per-tap channel variances `σ²_{u,l}` with their row sums `β_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    users: usize,
    taps: usize,
    sigma2: Vec<f64>,
    beta: Vec<f64>,
}

impl PowerDelayProfile {
    /// `sigma2` is row-major, `users × taps`.
    pub fn new(users: usize, taps: usize, sigma2: Vec<f64>) -> Result<Self> {
        if users == 0 || taps == 0 {
            return Err(Error::arg("pdp", "needs at least one user and one tap"));
        }
        Error::check_dim("pdp entries", users * taps, sigma2.len())?;
        if sigma2.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::arg(
                "pdp",
                "tap variances must be finite and non-negative",
            ));
        }
        let beta = sigma2
            .chunks_exact(taps)
            .map(|row| row.iter().sum())
            .collect();
        Ok(PowerDelayProfile {
            users,
            taps,
            sigma2,
            beta,
        })
    }

    /// Every user shares the same tap profile.
    pub fn shared(users: usize, profile: &[f64]) -> Result<Self> {
        let mut sigma2 = Vec::with_capacity(users * profile.len());
        for _ in 0..users {
            sigma2.extend_from_slice(profile);
        }
        Self::new(users, profile.len(), sigma2)
    }

    /// Equal power `1/L` on each of the `L` taps.
    pub fn uniform(users: usize, taps: usize) -> Result<Self> {
        let row = alloc::vec![1.0 / taps as f64; taps];
        Self::shared(users, &row)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn tap_variance(&self, user: usize, tap: usize) -> f64 {
        self.sigma2[user * self.taps + tap]
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.sigma2[user * self.taps..(user + 1) * self.taps]
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_scenario() {
        let cfg = SystemConfig::default();
        assert_eq!(cfg.taps, 5);
        assert_eq!(cfg.coherence_len, Some(1000));
        assert!((cfg.delta_max - PI / 2500.0).abs() < 1e-18);
        assert!((cfg.gamma - 0.1).abs() < 1e-15);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_overlapping_bands() {
        let cfg = SystemConfig {
            delta_max: PI / 10.0,
            ..SystemConfig::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(Error::InvalidArgument {
                name: "delta_max",
                ..
            })
        ));
    }

    #[test]
    fn rejects_pilot_longer_than_coherence() {
        let cfg = SystemConfig {
            pilot_len: 1200,
            ..SystemConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SystemConfig {
            coherence_len: None,
            ..cfg
        };
        cfg.validate().unwrap();
    }

    #[test]
    fn alpha_must_exceed_one() {
        let cfg = SystemConfig {
            alpha: 1.0,
            ..SystemConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn noiseless_power_split() {
        let cfg = SystemConfig {
            gamma: f64::INFINITY,
            ..SystemConfig::default()
        };
        cfg.validate().unwrap();
        assert_eq!(cfg.pilot_power(), 1.0);
        assert_eq!(cfg.injected_noise_var(), 0.0);
    }

    #[test]
    fn beta_is_row_sum() {
        let pdp =
            PowerDelayProfile::new(2, 3, alloc::vec![0.5, 0.25, 0.25, 1.0, 0.0, 2.0]).unwrap();
        assert_eq!(pdp.beta(), &[1.0, 3.0]);
        let u = PowerDelayProfile::uniform(10, 5).unwrap();
        assert!(u.beta().iter().all(|b| (b - 1.0).abs() < 1e-15));
        assert_eq!(u.tap_variance(3, 2), 0.2);
    }

    #[test]
    fn pdp_rejects_negative() {
        assert!(PowerDelayProfile::new(1, 2, alloc::vec![0.5, -0.1]).is_err());
        assert!(PowerDelayProfile::new(1, 2, alloc::vec![0.5]).is_err());
    }
}
