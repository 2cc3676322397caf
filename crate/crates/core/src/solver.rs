//! Two-layer dual decomposition for the relaxed joint power/antenna
//! allocation problem, plus the floor-rounded integer solution.
//!
//! In the large-antenna regime every subcarrier sees the same hardened
//! channel gain, so the optimal policy is chunk-based: one common transmit
//! power `P` and one common antenna count `N_T`. For fixed multipliers
//! `(lambda, beta)` the subproblem has the closed-form water-filling
//! solution
//!
//! ```text
//! P   = W / (ln 2 * (lambda + beta * epsilon))     capped at P_max
//! N_T = B / (ln 2 * P_AC * beta)                   clamped to [N_min, N_max]
//! ```
//!
//! where `W` is the subcarrier bandwidth and `B = n_F * W` the total
//! bandwidth. The master problem updates the multipliers along the
//! constraint violations with diminishing step sizes.

use serde::{Deserialize, Serialize};

use crate::channel::{asymptotic_capacity, exact_capacity, mrt_gain, ChannelRealization};
use crate::params::SystemParams;
use crate::power::{total_power, Allocation, AllocationMode, PowerBreakdown};
use crate::{Error, Result};

use std::f64::consts::LN_2;

/// Lagrange multipliers and iteration counter of one dual solve.
///
/// `lambda` prices the transmit-power allowance (C1), `beta` the grid
/// supply (C2). Both are kept nonnegative by projection after every
/// update. Units: bit/s per watt.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DualState {
    pub lambda: f64,
    pub beta: f64,
    pub iteration: usize,
}

/// Natural scale of the multipliers: `W / ln 2` per watt. A multiplier
/// equal to one unit puts the water level at 1 W.
pub fn multiplier_unit(params: &SystemParams) -> f64 {
    params.subcarrier_bandwidth() / LN_2
}

impl DualState {
    /// Start both multipliers at one natural unit.
    pub fn initial(params: &SystemParams) -> Self {
        let unit = multiplier_unit(params);
        Self {
            lambda: unit,
            beta: unit,
            iteration: 0,
        }
    }
}

/// Master-iteration controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Step scale for the C1 multiplier, in units of 1/watt.
    pub step_scale_1: f64,
    /// Step scale for the C2 multiplier, in units of 1/watt.
    pub step_scale_2: f64,
    /// Stop when the relative change of both multipliers falls below this.
    pub convergence_tol: f64,
    /// Threshold (in multiplier units) below which a multiplier is treated
    /// as zero in the closed forms.
    pub multiplier_floor: f64,
}

impl SolverConfig {
    /// Defaults for the given budgets: step scales normalize the watt-level
    /// subgradients by the corresponding budget, so the update dynamics are
    /// unitless across sweep points.
    pub fn for_params(params: &SystemParams) -> Self {
        Self {
            max_iterations: 50,
            step_scale_1: 1.0 / params.p_max,
            step_scale_2: 1.0 / params.p_pg,
            convergence_tol: 1e-6,
            multiplier_floor: 1e-12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParams("max_iterations must be >= 1".into()));
        }
        for (name, v) in [
            ("step_scale_1", self.step_scale_1),
            ("step_scale_2", self.step_scale_2),
            ("convergence_tol", self.convergence_tol),
            ("multiplier_floor", self.multiplier_floor),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// One master iteration of the solve trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Number of multiplier updates applied before this iterate.
    pub iteration: usize,
    pub lambda: f64,
    pub beta: f64,
    /// Common per-subcarrier power of the subproblem solution, watts.
    pub p: f64,
    /// Common (real-valued) antenna count of the subproblem solution.
    pub n_t: f64,
    /// Aggregate asymptotic-model objective of the raw iterate, bit/s.
    pub objective: f64,
}

/// Full result of one relaxed solve (or its integerized counterpart).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub allocation: Allocation,
    pub dual: DualState,
    /// Aggregate capacity on the asymptotic model, bit/s.
    pub objective: f64,
    /// Aggregate capacity re-evaluated on the exact model, bit/s.
    pub objective_exact: f64,
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
    pub power: PowerBreakdown,
}

/// Which capacity expression to aggregate in [`capacity_of`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapacityModel {
    Exact,
    Asymptotic,
}

/// Closed-form subproblem solution for fixed multipliers. The same
/// `(p, n_t)` applies to every subcarrier. When `lambda + beta * epsilon`
/// vanishes the power maximizer is unbounded; the power is then capped at
/// `P_max` so the C1 subgradient immediately drives `lambda` up. When
/// `beta` vanishes the antenna count saturates at `n_max`.
pub fn subproblem_solution(
    dual: &DualState,
    params: &SystemParams,
    config: &SolverConfig,
) -> (f64, f64) {
    let w = params.subcarrier_bandwidth();
    let unit = multiplier_unit(params);
    let floor = config.multiplier_floor * unit;

    let denom = dual.lambda + dual.beta * params.epsilon;
    let p = if denom < floor {
        params.p_max
    } else {
        (w / (LN_2 * denom)).max(0.0).min(params.p_max)
    };

    let n_t = if dual.beta < floor {
        params.n_max as f64
    } else {
        let raw = params.bandwidth_total / (LN_2 * params.p_ac * dual.beta);
        raw.clamp(params.n_min as f64, params.n_max as f64)
    };

    (p, n_t)
}

/// Subgradient step on the multipliers with diminishing step sizes
/// `xi_u(m) = step_scale_u / sqrt(m + 1)`, projected to stay nonnegative.
/// Steps act on the multipliers in natural units (see [`multiplier_unit`]),
/// so the scaled watt-level subgradients move them by O(1) units.
pub fn update_multipliers(
    dual: &DualState,
    p: f64,
    n_t: f64,
    params: &SystemParams,
    config: &SolverConfig,
) -> DualState {
    let m = dual.iteration;
    let shrink = 1.0 / ((m as f64) + 1.0).sqrt();
    let unit = multiplier_unit(params);
    let n_f = params.n_f as f64;

    let g1 = params.p_max - n_f * p;
    let g2 = params.p_pg - n_t * params.p_ac - n_f * params.epsilon * p - params.p_0;

    let lambda = (dual.lambda - unit * config.step_scale_1 * shrink * g1).max(0.0);
    let beta = (dual.beta - unit * config.step_scale_2 * shrink * g2).max(0.0);

    DualState {
        lambda,
        beta,
        iteration: m + 1,
    }
}

/// Largest relative multiplier movement between consecutive states.
fn multiplier_change(old: &DualState, new: &DualState, floor: f64) -> f64 {
    let rel = |a: f64, b: f64| (b - a).abs() / a.abs().max(floor);
    rel(old.lambda, new.lambda).max(rel(old.beta, new.beta))
}

/// Project a chunk iterate onto the feasible set: shed antennas in unit
/// steps while the supply cannot cover their circuit power at all, then
/// scale the transmit power by the largest factor <= 1 that restores C1
/// and C2.
pub(crate) fn project_feasible(p: f64, n_t: f64, params: &SystemParams) -> (f64, f64) {
    let n_f = params.n_f as f64;
    let n_min = params.n_min as f64;

    let mut n = n_t;
    let mut pa_budget = params.p_pg - params.p_0 - n * params.p_ac;
    while pa_budget <= 0.0 && n > n_min {
        n = (n - 1.0).max(n_min);
        pa_budget = params.p_pg - params.p_0 - n * params.p_ac;
    }
    pa_budget = pa_budget.max(0.0);

    let total = n_f * p;
    let mut scale = 1.0_f64;
    if total > 0.0 {
        scale = scale
            .min(params.p_max / total)
            .min(pa_budget / (params.epsilon * total))
            .max(0.0);
    }
    (p * scale, n)
}

/// Asymptotic-model aggregate objective of an allocation, with zero power
/// mapped to negative infinity instead of an error (degenerate instances
/// whose supply exactly equals the idle floor admit only zero power).
fn asymptotic_objective(alloc: &Allocation, lg: f64, params: &SystemParams) -> f64 {
    let mut sum = 0.0;
    for (&p, &n) in alloc.power.iter().zip(&alloc.antennas) {
        if p <= 0.0 || n <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match asymptotic_capacity(p, lg, n, params) {
            Ok(c) => sum += c,
            Err(_) => return f64::NEG_INFINITY,
        }
    }
    sum
}

/// Aggregate capacity of an allocation over all subcarriers.
///
/// The exact model evaluates the realized beamforming gain with
/// `floor(n_t)` active antennas (antenna counts are physical integers;
/// relaxed values are rounded down, matching how an allocation would be
/// deployed). The asymptotic model is a domain error if any power is zero.
pub fn capacity_of(
    alloc: &Allocation,
    realization: &ChannelRealization,
    params: &SystemParams,
    model: CapacityModel,
) -> Result<f64> {
    alloc.validate(params)?;
    let lg = realization.link_gain();
    let mut sum = 0.0;
    match model {
        CapacityModel::Exact => {
            for (i, (&p, &n)) in alloc.power.iter().zip(&alloc.antennas).enumerate() {
                let gain = mrt_gain(realization, i, n.floor() as u32)?;
                sum += exact_capacity(p, lg, gain, params);
            }
        }
        CapacityModel::Asymptotic => {
            for (&p, &n) in alloc.power.iter().zip(&alloc.antennas) {
                sum += asymptotic_capacity(p, lg, n, params)?;
            }
        }
    }
    Ok(sum)
}

/// Solve the relaxed problem by alternating subproblem solutions and
/// multiplier updates until the relative multiplier change falls below
/// `convergence_tol` or `max_iterations` is reached (the latter is not an
/// error; the report carries `converged = false`). The final allocation is
/// projected onto the feasible set.
pub fn solve_relaxed(
    realization: &ChannelRealization,
    params: &SystemParams,
    config: &SolverConfig,
) -> Result<SolveReport> {
    params.validate()?;
    config.validate()?;
    if params.idle_floor() > params.p_pg {
        return Err(Error::Infeasible(format!(
            "idle power floor {:.3} W exceeds supply {:.3} W",
            params.idle_floor(),
            params.p_pg
        )));
    }

    let lg = realization.link_gain();
    let unit = multiplier_unit(params);
    let mut state = DualState::initial(params);
    let mut trace = Vec::with_capacity(config.max_iterations);
    let mut converged = false;
    let mut p = 0.0;
    let mut n_t = params.n_min as f64;

    for _ in 0..config.max_iterations {
        let (pi, ni) = subproblem_solution(&state, params, config);
        p = pi;
        n_t = ni;
        let iterate = Allocation::uniform(p, n_t, params.n_f, AllocationMode::Relaxed);
        trace.push(IterationRecord {
            iteration: state.iteration,
            lambda: state.lambda,
            beta: state.beta,
            p,
            n_t,
            objective: asymptotic_objective(&iterate, lg, params),
        });

        let next = update_multipliers(&state, p, n_t, params, config);
        let change = multiplier_change(&state, &next, config.multiplier_floor * unit);
        state = next;
        if change < config.convergence_tol {
            converged = true;
            break;
        }
    }

    let (p_final, n_final) = project_feasible(p, n_t, params);
    let allocation = Allocation::uniform(p_final, n_final, params.n_f, AllocationMode::Relaxed);
    let objective = asymptotic_objective(&allocation, lg, params);
    let objective_exact = capacity_of(&allocation, realization, params, CapacityModel::Exact)?;
    let power = total_power(&allocation, params);

    Ok(SolveReport {
        allocation,
        dual: state,
        objective,
        objective_exact,
        trace,
        converged,
        power,
    })
}

/// Floor the antenna allocation of a relaxed report to integers (clamped
/// to at least `n_min`), keep the powers, and re-evaluate objectives and
/// power draw. Flooring shrinks the antenna circuit power, so feasibility
/// is preserved.
pub fn integerize(
    report: &SolveReport,
    realization: &ChannelRealization,
    params: &SystemParams,
) -> Result<SolveReport> {
    if report.allocation.mode != AllocationMode::Relaxed {
        return Err(Error::InvalidParams(
            "integerize expects a relaxed-mode report".into(),
        ));
    }
    let lg = realization.link_gain();
    let antennas: Vec<f64> = report
        .allocation
        .antennas
        .iter()
        .map(|&n| n.floor().max(params.n_min as f64))
        .collect();
    let allocation = Allocation {
        power: report.allocation.power.clone(),
        antennas,
        mode: AllocationMode::Integer,
    };
    let objective = asymptotic_objective(&allocation, lg, params);
    let objective_exact = capacity_of(&allocation, realization, params, CapacityModel::Exact)?;
    let power = total_power(&allocation, params);

    Ok(SolveReport {
        allocation,
        dual: report.dual,
        objective,
        objective_exact,
        trace: report.trace.clone(),
        converged: report.converged,
        power,
    })
}

/// Suboptimal feasible solution derived from a raw iterate `(p, n_t)`:
/// the antenna count is floored as in [`integerize`] and the power is
/// projected onto C1/C2 at the floored count. Returns the projected pair
/// and its asymptotic-model aggregate objective.
pub(crate) fn suboptimal_from_iterate(
    p: f64,
    n_t: f64,
    lg: f64,
    params: &SystemParams,
) -> (f64, f64, f64) {
    let n_int = n_t.floor().max(params.n_min as f64);
    let (p_proj, n_proj) = project_feasible(p, n_int, params);
    let alloc = Allocation::uniform(p_proj, n_proj, params.n_f, AllocationMode::Integer);
    let objective = asymptotic_objective(&alloc, lg, params);
    (p_proj, n_proj, objective)
}
