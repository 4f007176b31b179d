//! Experiment runner behind the `levy-epidemic` binary.
//!
//! Every task writes into an output directory: `summary.json` always, plus
//! `trajectory.csv` (simulate), `exit_profile.csv` (exit_prob) or one CSV per
//! panel and `verdicts.csv` (reproduce_figures).

pub mod config;
mod figures;
pub mod output;

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::analysis::{
    dynkin_generator_check, estimate_extinction, estimate_hitting_time, mc_exit_probability, solve_exit_probability,
    TestFunction,
};
use crate::error::{Error, Result};
use crate::integrator::simulate_path;
use crate::kernel::{compute_jump_integrals, RngStream};
use crate::models::{deterministic_equilibria, Model};
use crate::stability::{
    deterministic_threshold, dfe_verdict, find_lyapunov_constants, sis_dfe_condition_positive, LyapunovConstants,
};

pub use config::{ExperimentConfig, Task};
pub use figures::{reproduce_figures, FiguresReport, PanelReport, FIGURE_DT, FIGURE_STRIDE, FIGURE_T_END};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NumericalFailure { .. } => EXIT_NUMERICAL,
        Error::Io(_) => EXIT_IO,
        Error::Config(_) | Error::InvalidArgument(_) | Error::NotApplicable(_) | Error::Infeasible(_) => EXIT_CONFIG,
    }
}

/// One-line JSON description of an error for the diagnostic stream.
pub fn error_line(err: &Error) -> String {
    let kind = match err {
        Error::InvalidArgument(_) => "invalid_argument",
        Error::NotApplicable(_) => "not_applicable",
        Error::Infeasible(_) => "infeasible",
        Error::NumericalFailure { .. } => "numerical_failure",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
    };
    let mut value = json!({ "error": kind, "exit_code": exit_code(err), "message": err.to_string() });
    if let Error::NumericalFailure { condition_estimate, .. } = err {
        value["condition_estimate"] = json!(condition_estimate);
    }
    value.to_string()
}

/// Reads, validates and runs a config file.
pub fn run(config_path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<()> {
    let text = std::fs::read_to_string(config_path)?;
    let mut task = ExperimentConfig::from_toml_str(&text)?.resolve()?;
    if let Some(s) = seed {
        config::override_seed(&mut task, s);
    }
    execute(&task, out_dir)
}

#[derive(Serialize)]
struct Header<'a, T: Serialize> {
    task: &'a str,
    #[serde(flatten)]
    body: T,
}

fn write_summary<T: Serialize>(out_dir: &Path, task: &str, body: T) -> Result<()> {
    output::write_json(&out_dir.join("summary.json"), &Header { task, body })
}

fn model_json(model: &Model) -> serde_json::Value {
    match model {
        Model::Sis(p) => json!({ "kind": "sis", "params": p }),
        Model::Sirs(p) => json!({ "kind": "sirs", "params": p }),
    }
}

/// Runs a validated task into `out_dir`.
pub fn execute(task: &Task, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    match task {
        Task::Simulate { model, x0, sim } => {
            let traj = simulate_path(model, x0, sim, &mut RngStream::new(sim.seed, 0))?;
            output::write_trajectory_csv(&out_dir.join("trajectory.csv"), &traj)?;
            write_summary(
                out_dir,
                "simulate",
                json!({
                    "model": model_json(model),
                    "seed": sim.seed,
                    "t_end": sim.t_end,
                    "dt": sim.dt,
                    "rows": traj.times.len(),
                    "jump_count": traj.jump_marks.len(),
                    "terminal": traj.terminal(),
                    "clamp_count": traj.clamp_count,
                    "step_count": traj.step_count,
                    "max_sum_defect": traj.max_sum_defect,
                }),
            )
        }
        Task::Ensemble { model, x0, sim, n_paths, i_threshold, epsilon } => {
            let extinction = i_threshold
                .map(|thr| estimate_extinction(model, x0, sim, *n_paths, thr))
                .transpose()?;
            let hitting = epsilon
                .map(|eps| estimate_hitting_time(model, x0, eps, sim, *n_paths))
                .transpose()?;
            write_summary(
                out_dir,
                "ensemble",
                json!({
                    "model": model_json(model),
                    "seed": sim.seed,
                    "t_end": sim.t_end,
                    "dt": sim.dt,
                    "extinction": extinction,
                    "hitting_time": hitting,
                }),
            )
        }
        Task::Stability { model } => {
            let verdict = dfe_verdict(model)?;
            let ints = compute_jump_integrals(model.jumps());
            let phi = match model {
                Model::Sis(p) if ints.int_h >= 0.0 => sis_dfe_condition_positive(p)?.phi,
                _ => None,
            };
            let lyapunov = match model {
                Model::Sirs(p) => find_lyapunov_constants(p).ok(),
                Model::Sis(_) => None,
            };
            write_summary(
                out_dir,
                "stability",
                json!({
                    "model": model_json(model),
                    "condition_holds": verdict.condition_holds,
                    "threshold": verdict.threshold_value,
                    "margin": verdict.margin,
                    "detail": verdict.detail,
                    "branches": verdict.branches,
                    "phi": phi,
                    "jump_integrals": { "int_h": ints.int_h, "int_h_sq": ints.int_h_sq },
                    "deterministic_threshold": deterministic_threshold(model),
                    "equilibria": deterministic_equilibria(model),
                    "lyapunov_constants": lyapunov,
                }),
            )
        }
        Task::ExitProb { problem, x0, monte_carlo } => {
            let sol = solve_exit_probability(problem, *x0)?;
            output::write_exit_profile_csv(&out_dir.join("exit_profile.csv"), &sol)?;
            let mc = monte_carlo
                .as_ref()
                .map(|(sim, n)| mc_exit_probability(problem, *x0, sim, *n))
                .transpose()?;
            write_summary(
                out_dir,
                "exit_prob",
                json!({
                    "model": model_json(&Model::Sis(problem.params.clone())),
                    "x1": problem.x1,
                    "x2": problem.x2,
                    "x0": x0,
                    "grid_n": problem.grid_n,
                    "pi_up": sol.pi_up,
                    "condition_estimate": sol.condition_estimate,
                    "monte_carlo": mc,
                }),
            )
        }
        Task::GeneratorCheck { model, x, dt_probe, n_samples, seed } => {
            let test_fn = match model {
                Model::Sis(_) => TestFunction::SisG,
                Model::Sirs(p) => TestFunction::SirsF(find_lyapunov_constants(p).unwrap_or(LyapunovConstants {
                    c1: 1.0,
                    c2: 1.0,
                    c3: 1.0,
                    kappa: 0.0,
                })),
            };
            let check = dynkin_generator_check(model, x, test_fn, *dt_probe, *n_samples, *seed)?;
            write_summary(
                out_dir,
                "generator_check",
                json!({
                    "model": model_json(model),
                    "state": x,
                    "test_function": test_fn,
                    "dt_probe": dt_probe,
                    "seed": seed,
                    "mc_estimate": check.mc_estimate,
                    "standard_error": check.standard_error,
                    "analytic": check.analytic,
                    "z_score": check.z_score,
                    "n_samples": check.n_samples,
                }),
            )
        }
        Task::ReproduceFigures { seed } => reproduce_figures(out_dir, *seed).map(|_| ()),
    }
}
