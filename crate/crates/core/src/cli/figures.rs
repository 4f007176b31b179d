//! Reproduction harness for the six built-in panels.

use std::path::Path;

use serde::Serialize;

use super::output::{write_json, write_trajectory_csv, write_verdicts_csv, VerdictRow};
use crate::error::Result;
use crate::integrator::{simulate_path, SimConfig};
use crate::kernel::RngStream;
use crate::models::{Model, SimplexState};
use crate::panels::builtin_panels;
use crate::stability::{dfe_verdict, StabilityVerdict};

pub const FIGURE_T_END: f64 = 500.0;
pub const FIGURE_DT: f64 = 1e-3;
pub const FIGURE_STRIDE: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelReport {
    pub panel: String,
    pub model: &'static str,
    pub master_seed: u64,
    pub stream_index: u64,
    pub csv: String,
    pub rows: usize,
    pub jump_count: usize,
    pub terminal: SimplexState,
    pub clamp_count: u64,
    pub step_count: u64,
    pub max_sum_defect: f64,
    pub verdict: StabilityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiguresReport {
    pub t_end: f64,
    pub dt: f64,
    pub record_stride: usize,
    pub panels: Vec<PanelReport>,
}

fn beta(model: &Model) -> f64 {
    match model {
        Model::Sis(p) => p.beta,
        Model::Sirs(p) => p.beta,
    }
}

/// Writes `<panel>.csv` for each panel, `verdicts.csv` and `summary.json`.
///
/// Without a seed each panel uses its own fixed seed and stream 0; with a
/// seed, panel `k` uses stream `k` of that seed.
pub fn reproduce_figures(out_dir: &Path, seed: Option<u64>) -> Result<FiguresReport> {
    std::fs::create_dir_all(out_dir)?;
    let mut panels = Vec::new();
    let mut rows = Vec::new();
    for (k, panel) in builtin_panels().into_iter().enumerate() {
        let (master_seed, stream_index) = match seed {
            Some(s) => (s, k as u64),
            None => (panel.seed, 0),
        };
        let cfg = SimConfig::new(FIGURE_T_END, FIGURE_DT, master_seed).with_stride(FIGURE_STRIDE);
        let traj = simulate_path(&panel.model, &panel.x0, &cfg, &mut RngStream::new(master_seed, stream_index))?;
        let csv = format!("{}.csv", panel.name);
        write_trajectory_csv(&out_dir.join(&csv), &traj)?;
        let verdict = dfe_verdict(&panel.model)?;
        rows.push(VerdictRow {
            panel: panel.name.to_string(),
            beta: beta(&panel.model),
            threshold: verdict.threshold_value,
            holds: verdict.condition_holds,
        });
        panels.push(PanelReport {
            panel: panel.name.to_string(),
            model: panel.model.name(),
            master_seed,
            stream_index,
            csv,
            rows: traj.times.len(),
            jump_count: traj.jump_marks.len(),
            terminal: *traj.terminal(),
            clamp_count: traj.clamp_count,
            step_count: traj.step_count,
            max_sum_defect: traj.max_sum_defect,
            verdict,
        });
    }
    write_verdicts_csv(&out_dir.join("verdicts.csv"), &rows)?;
    let report = FiguresReport {
        t_end: FIGURE_T_END,
        dt: FIGURE_DT,
        record_stride: FIGURE_STRIDE,
        panels,
    };
    write_json(&out_dir.join("summary.json"), &report)?;
    Ok(report)
}
