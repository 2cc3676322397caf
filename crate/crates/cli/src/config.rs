//! Flat `key = value` configuration files.
//!
//! One pair per line, `#` starts a comment. Unspecified keys fall back to
//! the standard defaults (128 subcarriers over 5 MHz, -118 dBm noise per
//! subcarrier, 500 m / 8 dB shadowing link, P0 = 40 dBm, P_AC = 30 dBm,
//! epsilon = 2.5, 10..500 antennas, P_max = 46 dBm, P_PG = 48 dBm).
//! Quantities conventionally quoted in dBm/dB are accepted as `*_dbm` /
//! `*_db` keys and converted to linear units here, at the boundary.

use std::path::PathBuf;
use std::str::FromStr;

use mimo_ra::montecarlo::SweepSpec;
use mimo_ra::params::dbm_to_watts;
use mimo_ra::solver::SolverConfig;
use mimo_ra::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Everything a command needs: system constants, solver controls, sweep
/// axes, and output routing.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: SystemParams,
    pub solver: SolverConfig,
    pub sweep: SweepSpec,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| format!("key '{key}': cannot parse '{value}': {e}"))
}

fn parse_dbm_list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    value
        .split(',')
        .map(|v| parse_value::<f64>(key, v.trim()).map(dbm_to_watts))
        .collect()
}

/// Parse a configuration file body into a validated [`RunConfig`].
/// Unknown keys, unparsable values, and violated invariants are errors
/// naming the key and the constraint.
pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    let mut params = SystemParams::default();

    let mut max_iterations = 50usize;
    let mut step_scale_1: Option<f64> = None;
    let mut step_scale_2: Option<f64> = None;
    let mut convergence_tol = 1e-6;
    let mut multiplier_floor = 1e-12;

    let mut trials = 1000usize;
    let mut base_seed = 0u64;
    let mut iteration_cap = 10usize;
    let mut ppg_sweep: Option<Vec<f64>> = None;
    let mut pmax_sweep: Option<Vec<f64>> = None;

    let mut output_path: Option<PathBuf> = None;
    let mut output_format = OutputFormat::Csv;

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected 'key = value', got '{line}'", idx + 1))?;
        let key = key.trim();
        let value = value.trim();

        match key {
            "n_f" => params.n_f = parse_value(key, value)?,
            "bandwidth_hz" => params.bandwidth_total = parse_value(key, value)?,
            "noise_dbm" => {
                params.noise_power_per_subcarrier = dbm_to_watts(parse_value(key, value)?)
            }
            "noise_w" => params.noise_power_per_subcarrier = parse_value(key, value)?,
            "p_max_dbm" => params.p_max = dbm_to_watts(parse_value(key, value)?),
            "p_max_w" => params.p_max = parse_value(key, value)?,
            "p_pg_dbm" => params.p_pg = dbm_to_watts(parse_value(key, value)?),
            "p_pg_w" => params.p_pg = parse_value(key, value)?,
            "p0_dbm" => params.p_0 = dbm_to_watts(parse_value(key, value)?),
            "p0_w" => params.p_0 = parse_value(key, value)?,
            "p_ac_dbm" => params.p_ac = dbm_to_watts(parse_value(key, value)?),
            "p_ac_w" => params.p_ac = parse_value(key, value)?,
            "epsilon" => params.epsilon = parse_value(key, value)?,
            "n_min" => params.n_min = parse_value(key, value)?,
            "n_max" => params.n_max = parse_value(key, value)?,
            "distance_m" => params.distance = parse_value(key, value)?,
            "carrier_hz" => params.carrier_freq = parse_value(key, value)?,
            "shadowing_sigma_db" => params.shadowing_sigma_db = parse_value(key, value)?,
            "pathloss_exponent" => params.pathloss_exponent = parse_value(key, value)?,

            "max_iterations" => max_iterations = parse_value(key, value)?,
            "step_scale_1" => step_scale_1 = Some(parse_value(key, value)?),
            "step_scale_2" => step_scale_2 = Some(parse_value(key, value)?),
            "convergence_tol" => convergence_tol = parse_value(key, value)?,
            "multiplier_floor" => multiplier_floor = parse_value(key, value)?,

            "trials" => trials = parse_value(key, value)?,
            "base_seed" => base_seed = parse_value(key, value)?,
            "iteration_cap" => iteration_cap = parse_value(key, value)?,
            "ppg_sweep_dbm" => ppg_sweep = Some(parse_dbm_list(key, value)?),
            "pmax_sweep_dbm" => pmax_sweep = Some(parse_dbm_list(key, value)?),

            "output_path" => output_path = Some(PathBuf::from(value)),
            "output_format" => {
                output_format = match value {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    other => {
                        return Err(format!(
                            "key 'output_format': expected csv or json, got '{other}'"
                        ))
                    }
                }
            }

            _ => return Err(format!("unknown key '{key}'")),
        }
    }

    params.validate().map_err(|e| e.to_string())?;

    let solver = SolverConfig {
        max_iterations,
        step_scale_1: step_scale_1.unwrap_or(1.0 / params.p_max),
        step_scale_2: step_scale_2.unwrap_or(1.0 / params.p_pg),
        convergence_tol,
        multiplier_floor,
    };
    solver.validate().map_err(|e| e.to_string())?;

    let sweep = SweepSpec {
        p_pg_values: ppg_sweep.unwrap_or_else(|| vec![params.p_pg]),
        p_max_values: pmax_sweep.unwrap_or_else(|| vec![params.p_max]),
        trials,
        base_seed,
        iteration_cap,
    };
    sweep.validate().map_err(|e| e.to_string())?;

    Ok(RunConfig {
        params,
        solver,
        sweep,
        output_path,
        output_format,
    })
}
