//! Command-line front end: configuration parsing, experiment
//! orchestration, and machine-readable results for plotting.
//!
//! Subcommands: `solve` (one drop, JSON report), `sweep` (Monte Carlo
//! budget sweep, CSV or JSON), `convergence` (per-iteration mean objective
//! against the relaxed bound, CSV), `oracle` (solver vs brute-force
//! comparison with stationarity and concavity checks, JSON).
//!
//! Exit codes: 0 success, 2 configuration/parse error, 3 infeasible
//! instance, 1 internal error.

mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mimo_ra::channel::sample_channel;
use mimo_ra::montecarlo::{convergence_trace, run_campaign};
use mimo_ra::oracle::{brute_force_chunk, hessian_eigenvalues, stationarity_residual, GridSpec};
use mimo_ra::params::dbm_to_watts;
use mimo_ra::solver::{integerize, solve_relaxed, subproblem_solution};
use mimo_ra::Error as CoreError;

use config::{parse_config, OutputFormat, RunConfig};

#[derive(Parser)]
#[command(
    name = "mimo-ra",
    version,
    about = "Massive-MIMO OFDM downlink power/antenna allocation: solver, oracle, and Monte Carlo sweeps"
)]
struct Cli {
    /// Configuration file (flat `key = value` lines, `#` comments).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Channel drops per sweep cell.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Write results to this path instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel drop and emit the floor-rounded report as JSON.
    Solve,
    /// Monte Carlo budget sweep: one CSV row (or JSON cell) per
    /// (P_PG, P_max) pair.
    Sweep {
        /// Comma-separated power-grid supply values, dBm.
        #[arg(long, value_delimiter = ',')]
        ppg_dbm: Option<Vec<f64>>,
        /// Comma-separated transmit allowance values, dBm.
        #[arg(long, value_delimiter = ',')]
        pmax_dbm: Option<Vec<f64>>,
    },
    /// Mean suboptimal objective per master iteration vs the converged
    /// relaxed bound, for a single budget cell.
    Convergence {
        /// Power-grid supply, dBm.
        #[arg(long)]
        ppg_dbm: Option<f64>,
        /// Transmit allowance, dBm.
        #[arg(long)]
        pmax_dbm: Option<f64>,
        /// Master iterations to trace.
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Compare the solver against the brute-force grid oracle on one
    /// instance; report the objective gap, stationarity residuals, and the
    /// capacity Hessian eigenvalues.
    Oracle {
        /// Log-spaced power grid points.
        #[arg(long, default_value_t = 200)]
        power_points: usize,
    },
}

enum CliError {
    Config(String),
    Infeasible(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Internal(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Infeasible(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParams(m) => CliError::Config(m),
            CoreError::Infeasible(m) => CliError::Infeasible(m),
            CoreError::Domain(m) => CliError::Internal(m),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut rc = parse_config(&text).map_err(CliError::Config)?;

    if let Some(seed) = cli.seed {
        rc.sweep.base_seed = seed;
    }
    if let Some(trials) = cli.trials {
        rc.sweep.trials = trials;
    }
    if let Some(out) = &cli.output {
        rc.output_path = Some(out.clone());
    }
    if let Some(f) = cli.format {
        rc.output_format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    Ok(rc)
}

fn emit(rc: &RunConfig, body: &str) -> Result<(), CliError> {
    match &rc.output_path {
        Some(path) => fs::write(path, body)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut rc = load_config(&cli)?;
    match cli.command {
        Command::Solve => cmd_solve(&rc),
        Command::Sweep { ppg_dbm, pmax_dbm } => {
            if let Some(v) = ppg_dbm {
                rc.sweep.p_pg_values = v.into_iter().map(dbm_to_watts).collect();
            }
            if let Some(v) = pmax_dbm {
                rc.sweep.p_max_values = v.into_iter().map(dbm_to_watts).collect();
            }
            cmd_sweep(&rc)
        }
        Command::Convergence {
            ppg_dbm,
            pmax_dbm,
            iterations,
        } => {
            if let Some(v) = ppg_dbm {
                rc.sweep.p_pg_values = vec![dbm_to_watts(v)];
            }
            if let Some(v) = pmax_dbm {
                rc.sweep.p_max_values = vec![dbm_to_watts(v)];
            }
            if let Some(n) = iterations {
                rc.sweep.iteration_cap = n;
            }
            cmd_convergence(&rc)
        }
        Command::Oracle { power_points } => cmd_oracle(&rc, power_points),
    }
}

fn cmd_solve(rc: &RunConfig) -> Result<(), CliError> {
    let seed = rc.sweep.base_seed;
    let realization = sample_channel(&rc.params, seed);
    let relaxed = solve_relaxed(&realization, &rc.params, &rc.solver)?;
    let integer = integerize(&relaxed, &realization, &rc.params)?;
    let mut body = serde_json::to_string_pretty(&integer)
        .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
    body.push('\n');
    emit(rc, &body)
}

fn cmd_sweep(rc: &RunConfig) -> Result<(), CliError> {
    let result = run_campaign(&rc.params, &rc.solver, &rc.sweep)?;
    let body = match rc.output_format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&result)
                .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut s = String::from(
                "p_pg_dbm,p_max_dbm,mean_se_bps_hz,stderr_se,mean_antennas,stderr_antennas,\
                 mean_power_ratio,stderr_ratio,infeasible_count,trials\n",
            );
            for c in &result.cells {
                s.push_str(&format!(
                    "{:.3},{:.3},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}\n",
                    c.p_pg_dbm,
                    c.p_max_dbm,
                    c.mean_se_bps_hz,
                    c.stderr_se,
                    c.mean_antennas,
                    c.stderr_antennas,
                    c.mean_power_ratio,
                    c.stderr_ratio,
                    c.infeasible_count,
                    c.trials
                ));
            }
            s
        }
    };
    emit(rc, &body)
}

fn cmd_convergence(rc: &RunConfig) -> Result<(), CliError> {
    let trace = convergence_trace(&rc.params, &rc.solver, &rc.sweep)?;
    let body = match rc.output_format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&trace)
                .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut s = String::from("iteration,mean_se_bps_hz,bound_se_bps_hz\n");
            for r in &trace.rows {
                s.push_str(&format!(
                    "{},{:.6},{:.6}\n",
                    r.iteration, r.mean_se_bps_hz, r.bound_se_bps_hz
                ));
            }
            s
        }
    };
    emit(rc, &body)
}

#[derive(Serialize)]
struct OracleReport {
    seed: u64,
    link_gain: f64,
    solver: SolverPoint,
    oracle: OraclePoint,
    /// |solver - oracle| / |oracle| on the asymptotic-model objective.
    objective_gap_relative: f64,
    stationarity: StationarityCheck,
    hessian: HessianCheck,
}

#[derive(Serialize)]
struct SolverPoint {
    p_w: f64,
    n_t: f64,
    objective_bps: f64,
    converged: bool,
}

#[derive(Serialize)]
struct OraclePoint {
    p_w: f64,
    n_t: u32,
    objective_bps: f64,
    power_points: usize,
    power_range_w: (f64, f64),
}

#[derive(Serialize)]
struct StationarityCheck {
    /// Analytic dL/dP at the final subproblem solution, and its size
    /// relative to the cancelled terms.
    d_l_d_p: f64,
    relative_p: f64,
    d_l_d_n: f64,
    relative_n: f64,
}

#[derive(Serialize)]
struct HessianCheck {
    eigenvalue_p: f64,
    eigenvalue_n: f64,
    negative_definite: bool,
}

fn cmd_oracle(rc: &RunConfig, power_points: usize) -> Result<(), CliError> {
    let params = &rc.params;
    let seed = rc.sweep.base_seed;
    let realization = sample_channel(params, seed);
    let lg = realization.link_gain();

    let report = solve_relaxed(&realization, params, &rc.solver)?;

    // Power range covering every optimal regime: the top end is the
    // largest per-subcarrier power either budget admits at the fewest
    // antennas.
    let hi = params
        .p_max
        .min((params.p_pg - params.p_0 - params.n_min as f64 * params.p_ac) / params.epsilon)
        / params.n_f as f64;
    if hi.is_nan() || hi <= 0.0 {
        return Err(CliError::Infeasible(
            "supply leaves no transmit power budget".into(),
        ));
    }
    let grid = GridSpec::dense(power_points, hi / 300.0, hi, params);
    let best = brute_force_chunk(params, lg, &grid)?;

    let gap = (report.objective - best.objective).abs() / best.objective.abs();

    let (p_sub, n_sub) = subproblem_solution(&report.dual, params, &rc.solver);
    let (d_p, d_n) = stationarity_residual(p_sub, n_sub, &report.dual, params)?;
    let scale_p = params.n_f as f64 * (report.dual.lambda + report.dual.beta * params.epsilon);
    let scale_n = report.dual.beta * params.p_ac;

    let p_final = report.allocation.power[0];
    let n_final = report.allocation.antennas[0];
    let (eig_p, eig_n) = hessian_eigenvalues(p_final.max(1e-300), n_final, params)?;

    let out = OracleReport {
        seed,
        link_gain: lg,
        solver: SolverPoint {
            p_w: p_final,
            n_t: n_final,
            objective_bps: report.objective,
            converged: report.converged,
        },
        oracle: OraclePoint {
            p_w: best.p,
            n_t: best.n_t,
            objective_bps: best.objective,
            power_points,
            power_range_w: grid.power_range,
        },
        objective_gap_relative: gap,
        stationarity: StationarityCheck {
            d_l_d_p: d_p,
            relative_p: if scale_p > 0.0 {
                (d_p / scale_p).abs()
            } else {
                f64::NAN
            },
            d_l_d_n: d_n,
            relative_n: if scale_n > 0.0 {
                (d_n / scale_n).abs()
            } else {
                f64::NAN
            },
        },
        hessian: HessianCheck {
            eigenvalue_p: eig_p,
            eigenvalue_n: eig_n,
            negative_definite: eig_p < 0.0 && eig_n < 0.0,
        },
    };

    let mut body = serde_json::to_string_pretty(&out)
        .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
    body.push('\n');
    emit(rc, &body)
}
