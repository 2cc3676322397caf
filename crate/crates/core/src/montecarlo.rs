//! Seeded Monte Carlo campaigns over shadowing and fading.
//!
//! A campaign runs `trials` independent channel drops for every
//! `(P_PG, P_max)` budget cell, solves each drop (relaxed then
//! floor-rounded), and aggregates spectral efficiency, activated antenna
//! counts, the PA-to-antenna power ratio, and per-iteration convergence
//! traces. Per-trial seeds are a stable mix of `(base_seed, cell, trial)`,
//! so any cell or trial can be reproduced in isolation and trials can run
//! in parallel; aggregation always reduces in trial order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::sample_channel;
use crate::params::{watts_to_dbm, SystemParams};
use crate::solver::{integerize, solve_relaxed, suboptimal_from_iterate, SolverConfig};
use crate::{Error, Result};

/// Sweep axes and trial controls for one campaign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Power-grid supply values, watts.
    pub p_pg_values: Vec<f64>,
    /// Transmit-power allowance values, watts.
    pub p_max_values: Vec<f64>,
    /// Channel drops per cell.
    pub trials: usize,
    pub base_seed: u64,
    /// Master iterations covered by the per-iteration objective trace.
    pub iteration_cap: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidParams("trials must be >= 1".into()));
        }
        if self.p_pg_values.is_empty() || self.p_max_values.is_empty() {
            return Err(Error::InvalidParams(
                "sweep value lists must be non-empty".into(),
            ));
        }
        if self.iteration_cap < 1 {
            return Err(Error::InvalidParams("iteration_cap must be >= 1".into()));
        }
        for &v in self.p_pg_values.iter().chain(&self.p_max_values) {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "sweep values must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Aggregated statistics for one `(P_PG, P_max)` cell. Means and standard
/// errors cover feasible trials only; spectral efficiencies are
/// capacity / total bandwidth in bit/s/Hz.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellStats {
    pub p_pg_w: f64,
    pub p_max_w: f64,
    pub p_pg_dbm: f64,
    pub p_max_dbm: f64,
    /// Exact-model spectral efficiency of the integer allocation.
    pub mean_se_bps_hz: f64,
    pub stderr_se: f64,
    /// Activated antennas of the integer allocation.
    pub mean_antennas: f64,
    pub stderr_antennas: f64,
    /// PA power over antenna circuit power, computed per trial.
    pub mean_power_ratio: f64,
    pub stderr_ratio: f64,
    /// Asymptotic-model suboptimal spectral efficiency after m master
    /// iterations, for m = 1..=iteration_cap.
    pub mean_trace_se_bps_hz: Vec<f64>,
    /// Converged relaxed bound (asymptotic model), averaged over the same
    /// trials.
    pub mean_bound_se_bps_hz: f64,
    pub stderr_bound_se: f64,
    pub infeasible_count: usize,
    pub trials: usize,
}

/// Campaign output: one entry per cell, in row-major order over
/// `(p_pg_values, p_max_values)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<CellStats>,
    pub base_seed: u64,
    pub trials: usize,
    pub iteration_cap: usize,
}

/// Single-cell convergence summary: mean suboptimal objective per master
/// iteration against the converged relaxed bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub rows: Vec<ConvergenceRow>,
    pub p_pg_w: f64,
    pub p_max_w: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConvergenceRow {
    /// Master iterations completed.
    pub iteration: usize,
    /// Mean suboptimal (floored, projected) spectral efficiency, bit/s/Hz.
    pub mean_se_bps_hz: f64,
    /// Mean converged relaxed bound, bit/s/Hz.
    pub bound_se_bps_hz: f64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-trial seed: a 64-bit mix of `(base_seed, cell index, trial
/// index)`. Cells and trials are independently reproducible.
pub fn derive_trial_seed(base_seed: u64, cell_index: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(base_seed ^ splitmix64(cell_index)) ^ trial)
}

struct TrialRecord {
    se_exact: f64,
    antennas: f64,
    power_ratio: f64,
    bound_se: f64,
    trace_se: Vec<f64>,
}

fn run_trial(
    params: &SystemParams,
    config: &SolverConfig,
    seed: u64,
    iteration_cap: usize,
) -> Result<TrialRecord> {
    let realization = sample_channel(params, seed);
    let relaxed = solve_relaxed(&realization, params, config)?;
    let integer = integerize(&relaxed, &realization, params)?;
    let b = params.bandwidth_total;
    let lg = realization.link_gain();

    // Suboptimal objective after m master iterations: floor and project
    // the m-th iterate. A trace that converged early is extended with its
    // final entry.
    let trace_se = (1..=iteration_cap)
        .map(|m| {
            let rec = relaxed
                .trace
                .get(m)
                .or_else(|| relaxed.trace.last())
                .expect("solver trace is never empty");
            let (_, _, objective) = suboptimal_from_iterate(rec.p, rec.n_t, lg, params);
            objective / b
        })
        .collect();

    Ok(TrialRecord {
        se_exact: integer.objective_exact / b,
        antennas: integer.allocation.max_antennas(),
        power_ratio: integer.power.pa_power / integer.power.antenna_power,
        bound_se: relaxed.objective / b,
        trace_se,
    })
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Run the full campaign. The result is a pure function of
/// `(params, config, spec)`; trials execute in parallel but are reduced in
/// trial order. Infeasible trials (supply below the idle power floor) are
/// counted and excluded from the means.
///
/// Step scales are re-derived from each cell's budgets so the multiplier
/// update dynamics stay unitless across sweep points; the other solver
/// controls apply as given.
pub fn run_campaign(
    params: &SystemParams,
    config: &SolverConfig,
    spec: &SweepSpec,
) -> Result<SweepResult> {
    params.validate()?;
    config.validate()?;
    spec.validate()?;

    let mut cells = Vec::with_capacity(spec.p_pg_values.len() * spec.p_max_values.len());
    let mut cell_index = 0u64;
    for &p_pg in &spec.p_pg_values {
        for &p_max in &spec.p_max_values {
            let cell_params = SystemParams {
                p_pg,
                p_max,
                ..params.clone()
            };
            // The trace needs iterate m = iteration_cap; entry 0 is the
            // initial point, so the solve must run at least cap + 1 master
            // iterations.
            let solve_config = SolverConfig {
                max_iterations: config.max_iterations.max(spec.iteration_cap + 1),
                step_scale_1: 1.0 / p_max,
                step_scale_2: 1.0 / p_pg,
                ..config.clone()
            };

            let outcomes: Vec<Option<TrialRecord>> = (0..spec.trials)
                .into_par_iter()
                .map(|t| {
                    let seed = derive_trial_seed(spec.base_seed, cell_index, t as u64);
                    match run_trial(&cell_params, &solve_config, seed, spec.iteration_cap) {
                        Ok(rec) => Some(rec),
                        Err(Error::Infeasible(_)) => None,
                        // Parameter errors would have failed validation up
                        // front; treat anything else as infeasible too.
                        Err(_) => None,
                    }
                })
                .collect();

            let feasible: Vec<&TrialRecord> = outcomes.iter().flatten().collect();
            let infeasible_count = spec.trials - feasible.len();

            let (mean_se, stderr_se) = mean_and_stderr(feasible.iter().map(|r| r.se_exact));
            let (mean_antennas, stderr_antennas) =
                mean_and_stderr(feasible.iter().map(|r| r.antennas));
            let (mean_ratio, stderr_ratio) =
                mean_and_stderr(feasible.iter().map(|r| r.power_ratio));
            let (mean_bound, stderr_bound) = mean_and_stderr(feasible.iter().map(|r| r.bound_se));

            let mean_trace = (0..spec.iteration_cap)
                .map(|i| mean_and_stderr(feasible.iter().map(|r| r.trace_se[i])).0)
                .collect();

            cells.push(CellStats {
                p_pg_w: p_pg,
                p_max_w: p_max,
                p_pg_dbm: watts_to_dbm(p_pg),
                p_max_dbm: watts_to_dbm(p_max),
                mean_se_bps_hz: mean_se,
                stderr_se,
                mean_antennas,
                stderr_antennas,
                mean_power_ratio: mean_ratio,
                stderr_ratio,
                mean_trace_se_bps_hz: mean_trace,
                mean_bound_se_bps_hz: mean_bound,
                stderr_bound_se: stderr_bound,
                infeasible_count,
                trials: spec.trials,
            });
            cell_index += 1;
        }
    }

    Ok(SweepResult {
        cells,
        base_seed: spec.base_seed,
        trials: spec.trials,
        iteration_cap: spec.iteration_cap,
    })
}

/// Per-iteration mean suboptimal objective and the converged relaxed
/// bound for a single budget cell (the spec must carry exactly one value
/// per axis).
pub fn convergence_trace(
    params: &SystemParams,
    config: &SolverConfig,
    spec: &SweepSpec,
) -> Result<ConvergenceTrace> {
    if spec.p_pg_values.len() != 1 || spec.p_max_values.len() != 1 {
        return Err(Error::InvalidParams(
            "convergence trace expects exactly one (p_pg, p_max) cell".into(),
        ));
    }
    let result = run_campaign(params, config, spec)?;
    let cell = &result.cells[0];
    if cell.infeasible_count == spec.trials {
        return Err(Error::Infeasible(format!(
            "all {} trials infeasible at p_pg = {:.3} W",
            spec.trials, cell.p_pg_w
        )));
    }
    let rows = cell
        .mean_trace_se_bps_hz
        .iter()
        .enumerate()
        .map(|(i, &se)| ConvergenceRow {
            iteration: i + 1,
            mean_se_bps_hz: se,
            bound_se_bps_hz: cell.mean_bound_se_bps_hz,
        })
        .collect();
    Ok(ConvergenceTrace {
        rows,
        p_pg_w: cell.p_pg_w,
        p_max_w: cell.p_max_w,
        trials: spec.trials,
    })
}
