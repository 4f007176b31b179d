//! Monte Carlo estimators and the two-sided exit-probability solver.
//!
//! Ensemble estimators run one path per [`RngStream`] index in parallel and
//! reduce the per-path results after sorting, so every summary is independent
//! of execution order and of the thread count.

pub mod banded;
mod dynkin;
mod exit;

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{invalid, Result};
use crate::integrator::{check_start, drive, SimConfig};
use crate::kernel::RngStream;
use crate::models::{Model, SimplexState};

pub use dynkin::{dynkin_generator_check, DynkinCheck, TestFunction};
pub use exit::{
    mc_exit_probability, solve_exit_probability, sweep_exit_probability, ExitEstimate, ExitProblem,
    ExitSolution, MIN_GRID_N,
};

/// Confidence level of every interval reported by this module.
pub const CONFIDENCE: f64 = 0.95;

/// Exact (Clopper–Pearson) two-sided interval for a binomial proportion.
pub fn clopper_pearson(successes: usize, trials: usize, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(invalid(format!("need 0 ≤ successes ≤ trials, trials > 0; got {successes}/{trials}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let alpha = 1.0 - confidence;
    let (k, n) = (successes as f64, trials as f64);
    let beta = |a: f64, b: f64| Beta::new(a, b).map_err(|e| invalid(e.to_string()));
    let low = if successes == 0 { 0.0 } else { beta(k, n - k + 1.0)?.inverse_cdf(alpha / 2.0) };
    let high = if successes == trials { 1.0 } else { beta(k + 1.0, n - k)?.inverse_cdf(1.0 - alpha / 2.0) };
    Ok((low.clamp(0.0, 1.0), high.clamp(0.0, 1.0)))
}

/// Linear-interpolation sample quantile (Hyndman–Fan type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

impl Quantiles {
    fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            q05: quantile_sorted(&v, 0.05),
            q50: quantile_sorted(&v, 0.5),
            q95: quantile_sorted(&v, 0.95),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtinctionEstimate {
    pub i_threshold: f64,
    pub extinct_count: usize,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingEstimate {
    pub epsilon: f64,
    pub hit_count: usize,
    /// Mean over paths that hit before `t_end`; `None` if none did.
    pub mean: Option<f64>,
    pub standard_error: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub n_paths: usize,
    pub extinction: Option<ExtinctionEstimate>,
    /// Quantiles of `I` at the end of each path (at the hitting time for
    /// hitting-time ensembles).
    pub terminal_quantiles: Quantiles,
    pub hitting: Option<HittingEstimate>,
    /// Paths that did not hit the target set before `t_end`.
    pub censored_count: usize,
    pub clamp_count: u64,
    pub step_count: u64,
    pub max_sum_defect: f64,
}

#[derive(Debug, Clone, Copy)]
struct PathResult {
    terminal_i: f64,
    hit_time: Option<f64>,
    clamp_count: u64,
    step_count: u64,
    max_sum_defect: f64,
}

fn run_streams<F>(streams: &[u64], seed: u64, per_path: F) -> Result<Vec<PathResult>>
where
    F: Fn(&mut RngStream) -> Result<PathResult> + Sync,
{
    streams
        .par_iter()
        .map(|&k| per_path(&mut RngStream::new(seed, k)))
        .collect()
}

struct Totals {
    clamp_count: u64,
    step_count: u64,
    max_sum_defect: f64,
    terminal: Quantiles,
}

fn totals(results: &[PathResult]) -> Totals {
    let terminal: Vec<f64> = results.iter().map(|r| r.terminal_i).collect();
    Totals {
        clamp_count: results.iter().map(|r| r.clamp_count).sum(),
        step_count: results.iter().map(|r| r.step_count).sum(),
        max_sum_defect: results.iter().map(|r| r.max_sum_defect).fold(0.0, f64::max),
        terminal: Quantiles::of(&terminal),
    }
}

fn stream_range(n_paths: usize) -> Vec<u64> {
    (0..n_paths as u64).collect()
}

/// Fraction of paths whose terminal `I` is below `i_threshold`, using streams
/// `(cfg.seed, 0..n_paths)`.
pub fn estimate_extinction(
    model: &Model,
    x0: &SimplexState,
    cfg: &SimConfig,
    n_paths: usize,
    i_threshold: f64,
) -> Result<EnsembleSummary> {
    estimate_extinction_streams(model, x0, cfg, &stream_range(n_paths), i_threshold)
}

/// [`estimate_extinction`] over an explicit list of stream indices.
pub fn estimate_extinction_streams(
    model: &Model,
    x0: &SimplexState,
    cfg: &SimConfig,
    streams: &[u64],
    i_threshold: f64,
) -> Result<EnsembleSummary> {
    if streams.is_empty() {
        return Err(invalid("n_paths must be at least 1"));
    }
    if !(i_threshold > 0.0 && i_threshold < 1.0) {
        return Err(invalid(format!("i_threshold must lie in (0, 1), got {i_threshold}")));
    }
    check_start(model, x0, false)?;
    cfg.validate()?;
    let results = run_streams(streams, cfg.seed, |stream| {
        let stats = drive(model, x0, cfg, stream, |_, _, _| ControlFlow::Continue(()))?;
        Ok(PathResult {
            terminal_i: stats.final_state.i(),
            hit_time: None,
            clamp_count: stats.clamp_count,
            step_count: stats.step_count,
            max_sum_defect: stats.max_sum_defect,
        })
    })?;
    let n = results.len();
    let extinct = results.iter().filter(|r| r.terminal_i < i_threshold).count();
    let (ci_low, ci_high) = clopper_pearson(extinct, n, CONFIDENCE)?;
    let t = totals(&results);
    Ok(EnsembleSummary {
        n_paths: n,
        extinction: Some(ExtinctionEstimate {
            i_threshold,
            extinct_count: extinct,
            fraction: extinct as f64 / n as f64,
            ci_low,
            ci_high,
        }),
        terminal_quantiles: t.terminal,
        hitting: None,
        censored_count: 0,
        clamp_count: t.clamp_count,
        step_count: t.step_count,
        max_sum_defect: t.max_sum_defect,
    })
}

/// First time `S ≥ 1 − epsilon`, including landings by a jump, over
/// `n_paths` paths. Paths still below the level at `t_end` are censored.
pub fn estimate_hitting_time(
    model: &Model,
    x0: &SimplexState,
    epsilon: f64,
    cfg: &SimConfig,
    n_paths: usize,
) -> Result<EnsembleSummary> {
    if n_paths == 0 {
        return Err(invalid("n_paths must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    check_start(model, x0, false)?;
    cfg.validate()?;
    let level = 1.0 - epsilon;
    let results = run_streams(&stream_range(n_paths), cfg.seed, |stream| {
        let mut hit = None;
        let stats = drive(model, x0, cfg, stream, |t, x, _| {
            if x.s() >= level {
                hit = Some(t);
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })?;
        Ok(PathResult {
            terminal_i: stats.final_state.i(),
            hit_time: hit,
            clamp_count: stats.clamp_count,
            step_count: stats.step_count,
            max_sum_defect: stats.max_sum_defect,
        })
    })?;
    let mut times: Vec<f64> = results.iter().filter_map(|r| r.hit_time).collect();
    times.sort_by(f64::total_cmp);
    let hits = times.len();
    let (mean, se) = if hits == 0 {
        (None, None)
    } else {
        let m = times.iter().sum::<f64>() / hits as f64;
        let se = if hits > 1 {
            let var = times.iter().map(|t| (t - m).powi(2)).sum::<f64>() / (hits - 1) as f64;
            (var / hits as f64).sqrt()
        } else {
            0.0
        };
        (Some(m), Some(se))
    };
    let z = 1.959_963_984_540_054;
    let t = totals(&results);
    Ok(EnsembleSummary {
        n_paths,
        extinction: None,
        terminal_quantiles: t.terminal,
        hitting: Some(HittingEstimate {
            epsilon,
            hit_count: hits,
            mean,
            standard_error: se,
            ci_low: mean.zip(se).map(|(m, s)| m - z * s),
            ci_high: mean.zip(se).map(|(m, s)| m + z * s),
        }),
        censored_count: n_paths - hits,
        clamp_count: t.clamp_count,
        step_count: t.step_count,
        max_sum_defect: t.max_sum_defect,
    })
}
