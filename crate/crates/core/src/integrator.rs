//! Jump-adapted Euler–Maruyama integration.
//!
//! The diffusion grid `0, dt, 2dt, …, t_end` is merged with the exact jump
//! times of the compound Poisson forcing. Between consecutive points the
//! state takes one Euler–Maruyama step; at a jump time the jump displacement
//! is evaluated on the left-limit state reached by that step.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernel::{sample_jump_events, RngStream};
use crate::models::{Model, SimplexState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Clamp each coordinate into `[0, 1]` and renormalise.
    #[default]
    Clamp,
    /// Discard the continuous part of the offending step.
    RejectStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    pub boundary_policy: BoundaryPolicy,
    pub record_stride: usize,
}

impl SimConfig {
    pub const DEFAULT_DT: f64 = 1e-3;

    pub fn new(t_end: f64, dt: f64, seed: u64) -> Self {
        Self {
            t_end,
            dt,
            seed,
            boundary_policy: BoundaryPolicy::Clamp,
            record_stride: 1,
        }
    }

    pub fn with_stride(mut self, record_stride: usize) -> Self {
        self.record_stride = record_stride;
        self
    }

    pub fn with_policy(mut self, policy: BoundaryPolicy) -> Self {
        self.boundary_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_end) {
            return Err(invalid(format!(
                "dt must lie in (0, t_end], got {} with t_end {}",
                self.dt, self.t_end
            )));
        }
        if self.record_stride == 0 {
            return Err(invalid("record_stride must be at least 1"));
        }
        Ok(())
    }

    /// Number of diffusion grid intervals; the last one may be shorter.
    pub fn grid_steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    fn grid_time(&self, k: usize, n: usize) -> f64 {
        if k >= n {
            self.t_end
        } else {
            k as f64 * self.dt
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    pub time: f64,
    pub mark: f64,
    pub pre_state: SimplexState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SimplexState>,
    /// Parallel to `times`: the row was recorded at a jump instant.
    pub jumped: Vec<bool>,
    pub jump_marks: Vec<JumpRecord>,
    pub clamp_count: u64,
    pub step_count: u64,
    /// Largest `|Σ coords − 1|` seen before the boundary policy ran.
    pub max_sum_defect: f64,
}

impl Trajectory {
    pub fn terminal(&self) -> &SimplexState {
        self.states.last().expect("a trajectory always holds its initial state")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: SimplexState,
    /// The boundary policy had to act.
    pub intervened: bool,
    /// `|Σ coords − 1|` before the policy ran.
    pub sum_defect: f64,
}

#[inline]
fn add(x: &mut [f64; 3], d: &[f64; 3]) {
    x[0] += d[0];
    x[1] += d[1];
    x[2] += d[2];
}

#[inline]
fn off_simplex(x: &[f64; 3], dim: usize) -> bool {
    x[..dim].iter().any(|c| !(0.0..=1.0).contains(c))
}

fn clamp_to_simplex(x: &mut [f64; 3], dim: usize) {
    for c in &mut x[..dim] {
        *c = c.clamp(0.0, 1.0);
    }
    let sum: f64 = x[..dim].iter().sum();
    if sum > 0.0 {
        for c in &mut x[..dim] {
            *c /= sum;
        }
    }
}

/// One sub-step: `drift·dt + diffusion·dW`, then the jumps with the given
/// marks (occurring at the end of the sub-step) applied to the left limit.
pub fn step(
    model: &Model,
    state: &SimplexState,
    dt: f64,
    dw: f64,
    jump_marks: &[f64],
    policy: BoundaryPolicy,
) -> StepOutcome {
    let dim = state.dim();
    let start = state.array();
    let mut x = start;
    if dt > 0.0 {
        add(&mut x, &model.continuous_increment(&start, dt, dw));
    }
    for &mark in jump_marks {
        let d = model.jump_increment(&x, mark);
        add(&mut x, &d);
    }
    let sum_defect = (x[..dim].iter().sum::<f64>() - 1.0).abs();
    let mut intervened = false;
    if off_simplex(&x, dim) {
        intervened = true;
        match policy {
            BoundaryPolicy::Clamp => clamp_to_simplex(&mut x, dim),
            BoundaryPolicy::RejectStep => {
                x = start;
                for &mark in jump_marks {
                    let d = model.jump_increment(&x, mark);
                    add(&mut x, &d);
                }
                if off_simplex(&x, dim) {
                    clamp_to_simplex(&mut x, dim);
                }
            }
        }
    }
    StepOutcome {
        state: SimplexState::raw(x, dim),
        intervened,
        sum_defect,
    }
}

/// What the driver reports to its observer.
#[derive(Debug, Clone, Copy)]
pub(crate) enum PathPoint {
    Start,
    Grid(usize),
    Jump { mark: f64, pre_state: SimplexState },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct PathStats {
    pub clamp_count: u64,
    pub step_count: u64,
    pub max_sum_defect: f64,
    pub final_time: f64,
    pub final_state: SimplexState,
    /// The observer asked to stop before `t_end`.
    pub stopped_early: bool,
}

pub(crate) fn check_start(model: &Model, x0: &SimplexState, allow_boundary: bool) -> Result<()> {
    model.validate()?;
    if x0.dim() != model.dim() {
        return Err(invalid(format!(
            "{} model needs a {}-coordinate state, got {}",
            model.name(),
            model.dim(),
            x0.dim()
        )));
    }
    if !allow_boundary && !x0.is_interior() && !model.is_deterministic() {
        return Err(invalid(format!(
            "stochastic runs must start inside the simplex, got {:?}",
            x0.coords()
        )));
    }
    Ok(())
}

/// Runs one path, calling `observe` at the start, at every grid point and at
/// every jump. The observer may stop the path early.
pub(crate) fn drive<F>(
    model: &Model,
    x0: &SimplexState,
    cfg: &SimConfig,
    stream: &mut RngStream,
    mut observe: F,
) -> Result<PathStats>
where
    F: FnMut(f64, &SimplexState, PathPoint) -> ControlFlow<()>,
{
    cfg.validate()?;
    let jumps = sample_jump_events(stream, model.jumps(), 0.0, cfg.t_end)?;
    let noisy = model.sigma() > 0.0;
    let n = cfg.grid_steps();
    let mut stats = PathStats {
        clamp_count: 0,
        step_count: 0,
        max_sum_defect: x0.sum_defect(),
        final_time: 0.0,
        final_state: *x0,
        stopped_early: false,
    };
    let mut x = *x0;
    let mut t = 0.0;

    let advance = |x: &mut SimplexState, h: f64, marks: &[f64], stream: &mut RngStream, stats: &mut PathStats| {
        let dw = if noisy && h > 0.0 { stream.brownian(h) } else { 0.0 };
        let out = step(model, x, h, dw, marks, cfg.boundary_policy);
        stats.step_count += 1;
        stats.clamp_count += out.intervened as u64;
        stats.max_sum_defect = stats.max_sum_defect.max(out.sum_defect);
        *x = out.state;
    };

    if observe(0.0, &x, PathPoint::Start).is_break() {
        stats.stopped_early = true;
        return Ok(stats);
    }
    let mut next_jump = 0;
    for k in 1..=n {
        let tk = cfg.grid_time(k, n);
        while next_jump < jumps.len() && jumps[next_jump].time <= tk {
            let ev = jumps[next_jump];
            next_jump += 1;
            // diffuse to the jump time, then jump from the left limit
            let pre = {
                let mut y = x;
                advance(&mut y, ev.time - t, &[], stream, &mut stats);
                y
            };
            let out = step(model, &pre, 0.0, 0.0, &[ev.mark], cfg.boundary_policy);
            stats.clamp_count += out.intervened as u64;
            stats.max_sum_defect = stats.max_sum_defect.max(out.sum_defect);
            x = out.state;
            t = ev.time;
            stats.final_time = t;
            stats.final_state = x;
            if observe(t, &x, PathPoint::Jump { mark: ev.mark, pre_state: pre }).is_break() {
                stats.stopped_early = true;
                return Ok(stats);
            }
        }
        let h = tk - t;
        if h > 0.0 {
            advance(&mut x, h, &[], stream, &mut stats);
            t = tk;
        }
        stats.final_time = t;
        stats.final_state = x;
        if observe(t, &x, PathPoint::Grid(k)).is_break() {
            stats.stopped_early = k < n;
            return Ok(stats);
        }
    }
    Ok(stats)
}

/// Simulates one path of the jump-diffusion from `x0`.
///
/// Rows are recorded every `record_stride` grid points, at every jump and at
/// `t_end`. The result depends only on the inputs and the stream.
pub fn simulate_path(
    model: &Model,
    x0: &SimplexState,
    cfg: &SimConfig,
    stream: &mut RngStream,
) -> Result<Trajectory> {
    check_start(model, x0, false)?;
    let n = cfg.grid_steps();
    let capacity = n / cfg.record_stride.max(1) + 2;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        jumped: Vec::with_capacity(capacity),
        jump_marks: Vec::new(),
        clamp_count: 0,
        step_count: 0,
        max_sum_defect: 0.0,
    };
    let stats = drive(model, x0, cfg, stream, |t, x, point| {
        match point {
            PathPoint::Start => {
                traj.times.push(t);
                traj.states.push(*x);
                traj.jumped.push(false);
            }
            PathPoint::Jump { mark, pre_state } => {
                traj.jump_marks.push(JumpRecord {
                    time: t,
                    mark,
                    pre_state,
                });
                traj.times.push(t);
                traj.states.push(*x);
                traj.jumped.push(true);
            }
            PathPoint::Grid(k) => {
                // a jump landing exactly on a grid time was already recorded
                let fresh = traj.times.last().is_none_or(|&last| last < t);
                if fresh && (k % cfg.record_stride == 0 || k == n) {
                    traj.times.push(t);
                    traj.states.push(*x);
                    traj.jumped.push(false);
                }
            }
        }
        ControlFlow::Continue(())
    })?;
    traj.clamp_count = stats.clamp_count;
    traj.step_count = stats.step_count;
    traj.max_sum_defect = stats.max_sum_defect;
    Ok(traj)
}
