//! System-level constants: bandwidth plan, noise, power budgets, antenna
//! bounds, and the link geometry used for path loss.
//!
//! All fields are linear SI units (watts, hertz, meters). Values quoted in
//! dBm/dB are converted once at the configuration boundary via
//! [`dbm_to_watts`] / [`db_to_linear`]; everything downstream is linear.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Convert a power in dBm to watts: `P[W] = 10^((dBm - 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Convert a power in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Convert a ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Physical and budget constants for one system configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of OFDM subcarriers.
    pub n_f: usize,
    /// Total system bandwidth in Hz.
    pub bandwidth_total: f64,
    /// Noise power per subcarrier in watts (power spectral density times
    /// subcarrier bandwidth).
    pub noise_power_per_subcarrier: f64,
    /// Maximum transmit power allowance in watts (constraint C1).
    pub p_max: f64,
    /// Power-grid supply cap in watts (constraint C2).
    pub p_pg: f64,
    /// Static signal-processing power in watts.
    pub p_0: f64,
    /// Circuit power per active antenna in watts.
    pub p_ac: f64,
    /// Power-amplifier inefficiency, >= 1 (supply power per radiated watt).
    pub epsilon: f64,
    /// Minimum number of active antennas.
    pub n_min: u32,
    /// Maximum number of active antennas.
    pub n_max: u32,
    /// Base-station-to-user distance in meters.
    pub distance: f64,
    /// Carrier center frequency in Hz.
    pub carrier_freq: f64,
    /// Log-normal shadowing standard deviation in dB.
    pub shadowing_sigma_db: f64,
    /// Path-loss exponent of the log-distance model.
    pub pathloss_exponent: f64,
}

impl Default for SystemParams {
    /// Standard evaluation setup: 128 subcarriers over 5 MHz at 2.5 GHz,
    /// -118 dBm noise per subcarrier, user at 500 m with 8 dB shadowing,
    /// P0 = 40 dBm, P_AC = 30 dBm, epsilon = 2.5, 10..500 antennas,
    /// P_max = 46 dBm, P_PG = 48 dBm.
    fn default() -> Self {
        Self {
            n_f: 128,
            bandwidth_total: 5e6,
            noise_power_per_subcarrier: dbm_to_watts(-118.0),
            p_max: dbm_to_watts(46.0),
            p_pg: dbm_to_watts(48.0),
            p_0: dbm_to_watts(40.0),
            p_ac: dbm_to_watts(30.0),
            epsilon: 2.5,
            n_min: 10,
            n_max: 500,
            distance: 500.0,
            carrier_freq: 2.5e9,
            shadowing_sigma_db: 8.0,
            pathloss_exponent: 3.6,
        }
    }
}

impl SystemParams {
    /// Per-subcarrier bandwidth W = bandwidth_total / n_f, in Hz.
    ///
    /// Derived on demand so `W * n_f == bandwidth_total` can never drift
    /// from the stored fields.
    pub fn subcarrier_bandwidth(&self) -> f64 {
        self.bandwidth_total / self.n_f as f64
    }

    /// Linear path-loss gain of the log-distance model with a 1 m
    /// reference: `PL(dB) = 20 log10(4 pi f_c / c) + 10 alpha log10(d)`.
    pub fn path_loss(&self) -> f64 {
        let d_ref = 1.0;
        let free_space_db = 20.0
            * (4.0 * std::f64::consts::PI * d_ref * self.carrier_freq / SPEED_OF_LIGHT).log10();
        let distance_db = 10.0 * self.pathloss_exponent * (self.distance / d_ref).log10();
        db_to_linear(-(free_space_db + distance_db))
    }

    /// Minimum possible system power draw: `n_min * P_AC + P_0`, watts.
    /// No allocation can consume less, so C2 is unsatisfiable whenever
    /// this exceeds `p_pg`.
    pub fn idle_floor(&self) -> f64 {
        self.n_min as f64 * self.p_ac + self.p_0
    }

    /// Check every invariant, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")))
            }
        }
        if self.n_f < 1 {
            return Err(Error::InvalidParams("n_f must be >= 1".into()));
        }
        positive("bandwidth_total", self.bandwidth_total)?;
        positive(
            "noise_power_per_subcarrier",
            self.noise_power_per_subcarrier,
        )?;
        positive("p_max", self.p_max)?;
        positive("p_pg", self.p_pg)?;
        positive("p_0", self.p_0)?;
        positive("p_ac", self.p_ac)?;
        positive("distance", self.distance)?;
        positive("carrier_freq", self.carrier_freq)?;
        positive("pathloss_exponent", self.pathloss_exponent)?;
        if self.epsilon.is_nan() || self.epsilon < 1.0 {
            return Err(Error::InvalidParams(format!(
                "epsilon must be >= 1, got {}",
                self.epsilon
            )));
        }
        if self.n_min == 0 {
            return Err(Error::InvalidParams("n_min must be > 0".into()));
        }
        if self.n_min > self.n_max {
            return Err(Error::InvalidParams(format!(
                "n_min ({}) must not exceed n_max ({})",
                self.n_min, self.n_max
            )));
        }
        if self.shadowing_sigma_db.is_nan() || self.shadowing_sigma_db < 0.0 {
            return Err(Error::InvalidParams(format!(
                "shadowing_sigma_db must be >= 0, got {}",
                self.shadowing_sigma_db
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dbm_round_trip() {
        assert_relative_eq!(dbm_to_watts(30.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(dbm_to_watts(40.0), 10.0, max_relative = 1e-12);
        assert_relative_eq!(watts_to_dbm(dbm_to_watts(46.0)), 46.0, max_relative = 1e-12);
    }

    #[test]
    fn defaults_are_valid() {
        let p = SystemParams::default();
        p.validate().unwrap();
        assert_relative_eq!(p.subcarrier_bandwidth() * p.n_f as f64, p.bandwidth_total);
        assert_relative_eq!(p.noise_power_per_subcarrier, 10f64.powf(-14.8));
        assert_relative_eq!(p.idle_floor(), 20.0, max_relative = 1e-12);
    }

    #[test]
    fn path_loss_is_small_positive_gain() {
        let p = SystemParams::default();
        let l = p.path_loss();
        assert!(l > 0.0 && l < 1e-10, "expected deep attenuation, got {l}");
        // 20 log10(4 pi f/c) ~ 40.4 dB plus 36 log10(500) ~ 97.2 dB.
        let db = -10.0 * l.log10();
        assert_relative_eq!(db, 137.57, max_relative = 1e-3);
    }

    #[test]
    fn validation_rejects_bad_fields() {
        for broken in [
            SystemParams {
                epsilon: 0.5,
                ..SystemParams::default()
            },
            SystemParams {
                n_min: 600,
                ..SystemParams::default()
            },
            SystemParams {
                n_f: 0,
                ..SystemParams::default()
            },
            SystemParams {
                p_pg: -1.0,
                ..SystemParams::default()
            },
            SystemParams {
                epsilon: f64::NAN,
                ..SystemParams::default()
            },
        ] {
            assert!(broken.validate().is_err(), "{broken:?}");
        }
    }
}
