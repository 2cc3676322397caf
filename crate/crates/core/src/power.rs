//! Three-term system power consumption and feasibility of an allocation
//! against the problem constraints:
//!
//! - C1: total transmit power within the spectrum-mask allowance `P_max`
//! - C2: total consumed power within the grid supply `P_PG`
//! - C3: nonnegative per-subcarrier transmit powers
//! - C4: antenna counts within `[n_min, n_max]` (integral in integer mode)
//!
//! Consumed power is `max_i(N_T_i) * P_AC + epsilon * sum_i(P_i) + P_0`:
//! an activated antenna draws its circuit power once, no matter how many
//! subcarriers use it.

use serde::{Deserialize, Serialize};

use crate::params::SystemParams;
use crate::{Error, Result};

/// Default absolute tolerance (watts) for constraint checks; covers
/// floating-point boundary activity of C1/C2 at the optimum.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;

/// Whether antenna counts are relaxed reals or integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationMode {
    Relaxed,
    Integer,
}

/// Per-subcarrier transmit powers and antenna counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Allocation {
    /// Transmit power per subcarrier, watts.
    pub power: Vec<f64>,
    /// Antenna count per subcarrier; real-valued in relaxed mode,
    /// integral values in integer mode.
    pub antennas: Vec<f64>,
    pub mode: AllocationMode,
}

impl Allocation {
    /// Chunk allocation: the same power and antenna count on every
    /// subcarrier.
    pub fn uniform(p: f64, n_t: f64, n_f: usize, mode: AllocationMode) -> Self {
        Self {
            power: vec![p; n_f],
            antennas: vec![n_t; n_f],
            mode,
        }
    }

    /// Sum of per-subcarrier transmit powers, watts.
    pub fn total_transmit_power(&self) -> f64 {
        self.power.iter().sum()
    }

    /// Largest antenna count across subcarriers (the number of activated
    /// antennas at the base station).
    pub fn max_antennas(&self) -> f64 {
        self.antennas
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Structural validity: matching lengths, finite values, nonnegative
    /// powers, antenna bounds (and integrality in integer mode).
    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if self.power.len() != params.n_f || self.antennas.len() != params.n_f {
            return Err(Error::InvalidParams(format!(
                "allocation length mismatch: {} powers, {} antenna counts, n_f = {}",
                self.power.len(),
                self.antennas.len(),
                params.n_f
            )));
        }
        for (i, &p) in self.power.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "power[{i}] must be finite and >= 0, got {p}"
                )));
            }
        }
        for (i, &n) in self.antennas.iter().enumerate() {
            if !n.is_finite() || n < params.n_min as f64 || n > params.n_max as f64 {
                return Err(Error::InvalidParams(format!(
                    "antennas[{i}] = {n} outside [{}, {}]",
                    params.n_min, params.n_max
                )));
            }
            if self.mode == AllocationMode::Integer && n.fract() != 0.0 {
                return Err(Error::InvalidParams(format!(
                    "antennas[{i}] = {n} not integral in integer mode"
                )));
            }
        }
        Ok(())
    }
}

/// Decomposition of the total system power draw.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerBreakdown {
    /// Circuit power of all activated antennas: `max_i(N_T_i) * P_AC`.
    pub antenna_power: f64,
    /// Power-amplifier draw: `epsilon * sum_i(P_i)`.
    pub pa_power: f64,
    /// Static signal-processing power `P_0`.
    pub static_power: f64,
    /// Sum of the three terms.
    pub total: f64,
}

/// Evaluate the three-term power model for an allocation.
pub fn total_power(alloc: &Allocation, params: &SystemParams) -> PowerBreakdown {
    let antenna_power = alloc.max_antennas() * params.p_ac;
    let pa_power = params.epsilon * alloc.total_transmit_power();
    let static_power = params.p_0;
    PowerBreakdown {
        antenna_power,
        pa_power,
        static_power,
        total: antenna_power + pa_power + static_power,
    }
}

/// Per-constraint verdicts with slack values (positive slack = satisfied
/// with margin).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub c1_transmit_budget: bool,
    /// `P_max - sum_i(P_i)`, watts.
    pub c1_slack: f64,
    pub c2_supply_budget: bool,
    /// `P_PG - U_TP`, watts.
    pub c2_slack: f64,
    pub c3_nonnegative_power: bool,
    /// Smallest per-subcarrier power, watts.
    pub c3_min_power: f64,
    pub c4_antenna_bounds: bool,
    /// Smallest distance from any antenna count to its nearest bound.
    pub c4_slack: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.c1_transmit_budget
            && self.c2_supply_budget
            && self.c3_nonnegative_power
            && self.c4_antenna_bounds
    }
}

/// Check C1-C4 with an absolute tolerance in watts (antenna bounds use
/// the same tolerance in antenna units).
pub fn check_feasibility(alloc: &Allocation, params: &SystemParams, tol: f64) -> FeasibilityReport {
    let sum_p = alloc.total_transmit_power();
    let breakdown = total_power(alloc, params);

    let c1_slack = params.p_max - sum_p;
    let c2_slack = params.p_pg - breakdown.total;
    let c3_min_power = alloc.power.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut c4_slack = f64::INFINITY;
    let mut c4_ok = true;
    for &n in &alloc.antennas {
        let lo = n - params.n_min as f64;
        let hi = params.n_max as f64 - n;
        c4_slack = c4_slack.min(lo).min(hi);
        if lo < -tol || hi < -tol {
            c4_ok = false;
        }
        if alloc.mode == AllocationMode::Integer && n.fract() != 0.0 {
            c4_ok = false;
        }
    }

    FeasibilityReport {
        c1_transmit_budget: c1_slack >= -tol,
        c1_slack,
        c2_supply_budget: c2_slack >= -tol,
        c2_slack,
        c3_nonnegative_power: c3_min_power >= -tol,
        c3_min_power,
        c4_antenna_bounds: c4_ok,
        c4_slack,
    }
}
