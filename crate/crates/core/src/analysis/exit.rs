//! Probability that the SIS susceptible fraction leaves `(x1, x2)` upwards.
//!
//! The grid solver discretises
//! `α u′ + (γ²/2) u″ + ∫ [u(x + h(y)x(1 − x)) − u(x)] ν(dy) = 0` on `(x1, x2)`
//! with `u = 0` on `[0, x1]` and `u = 1` on `[x2, 1]`.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::Serialize;

use super::banded::BandMatrix;
use crate::error::{invalid, Error, Result};
use crate::integrator::{drive, SimConfig};
use crate::kernel::RngStream;
use crate::models::{sis_diffusion, sis_drift, Model, SimplexState, SisParams};

/// Smallest grid accepted by the solver.
pub const MIN_GRID_N: usize = 100;

/// Grid nodes closer than this fraction of a cell to `x1` or `x2` are
/// dropped in favour of the exact boundary point.
const BOUNDARY_SNAP: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct ExitProblem {
    pub x1: f64,
    pub x2: f64,
    pub grid_n: usize,
    pub params: SisParams,
}

impl ExitProblem {
    pub fn new(x1: f64, x2: f64, grid_n: usize, params: SisParams) -> Result<Self> {
        let p = Self { x1, x2, grid_n, params };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.x1 && self.x1 < self.x2 && self.x2 < 1.0) {
            return Err(invalid(format!("need 0 < x1 < x2 < 1, got x1={} x2={}", self.x1, self.x2)));
        }
        if self.grid_n == 0 {
            return Err(invalid("grid_n must be positive"));
        }
        self.params.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitSolution {
    /// Nodes `j / grid_n` together with `x1` and `x2`, ascending.
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub pi_up: f64,
    /// Ratio of the largest to the smallest pivot of the linear solve.
    pub condition_estimate: f64,
    #[serde(skip)]
    knots: Vec<f64>,
    #[serde(skip)]
    values: Vec<f64>,
    #[serde(skip)]
    x1: f64,
    #[serde(skip)]
    x2: f64,
}

/// Piecewise-linear `u` through `knots = [x1, …, x2]`, extended by 0 below
/// and 1 above.
fn interpolate(knots: &[f64], values: &[f64], x: f64) -> f64 {
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    if x <= first {
        return 0.0;
    }
    if x >= last {
        return 1.0;
    }
    let k = knots.partition_point(|&z| z <= x) - 1;
    let theta = (x - knots[k]) / (knots[k + 1] - knots[k]);
    (1.0 - theta) * values[k] + theta * values[k + 1]
}

impl ExitSolution {
    /// Interpolated exit probability at any `x ∈ [0, 1]`.
    pub fn value_at(&self, x: f64) -> f64 {
        if x <= self.x1 {
            0.0
        } else if x >= self.x2 {
            1.0
        } else {
            interpolate(&self.knots, &self.values, x)
        }
    }
}

struct Triplets {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Triplets {
    fn add(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.rows[i].push((j, v));
        }
    }
}

/// Solves for `u` on the grid and evaluates it at `x0`.
pub fn solve_exit_probability(prob: &ExitProblem, x0: f64) -> Result<ExitSolution> {
    prob.validate()?;
    if prob.grid_n < MIN_GRID_N {
        return Err(invalid(format!("grid_n must be at least {MIN_GRID_N}, got {}", prob.grid_n)));
    }
    if !(0.0..=1.0).contains(&x0) {
        return Err(invalid(format!("x0 must lie in [0, 1], got {x0}")));
    }
    let (x1, x2) = (prob.x1, prob.x2);
    let dx = 1.0 / prob.grid_n as f64;
    let nodes: Vec<f64> = (0..=prob.grid_n).map(|j| j as f64 * dx).collect();
    let interior: Vec<f64> = nodes
        .iter()
        .copied()
        .filter(|&x| x > x1 + BOUNDARY_SNAP * dx && x < x2 - BOUNDARY_SNAP * dx)
        .collect();
    let m = interior.len();
    if m == 0 {
        return Err(invalid(format!("no grid node lies inside ({x1}, {x2}); refine grid_n")));
    }
    let mut knots = Vec::with_capacity(m + 2);
    knots.push(x1);
    knots.extend_from_slice(&interior);
    knots.push(x2);

    let p = &prob.params;
    let jump_nodes = p.jumps.quadrature_nodes();
    let mut a = Triplets { rows: vec![Vec::new(); m] };
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        let z = knots[i + 1];
        let (hl, hr) = (z - knots[i], knots[i + 2] - z);
        let alpha = sis_drift(p, z);
        let d = 0.5 * sis_diffusion(p, z).powi(2);
        let c_left = (-alpha * hr + 2.0 * d) / (hl * (hl + hr));
        let c_right = (alpha * hl + 2.0 * d) / (hr * (hl + hr));
        let mut c_mid = alpha * (hr - hl) / (hl * hr) - 2.0 * d / (hl * hr);
        // left neighbour at x1 carries u = 0 and drops out
        if i > 0 {
            a.add(i, i - 1, c_left);
        }
        if i + 1 < m {
            a.add(i, i + 1, c_right);
        } else {
            rhs[i] -= c_right;
        }
        for &(h, w) in &jump_nodes {
            c_mid -= w;
            let target = z + h * z * (1.0 - z);
            if target <= x1 {
                continue;
            }
            if target >= x2 {
                rhs[i] -= w;
                continue;
            }
            let k = knots.partition_point(|&y| y <= target) - 1;
            let theta = (target - knots[k]) / (knots[k + 1] - knots[k]);
            for (knot, weight) in [(k, 1.0 - theta), (k + 1, theta)] {
                match knot {
                    0 => {}
                    j if j == m + 1 => rhs[i] -= w * weight,
                    j => a.add(i, j - 1, w * weight),
                }
            }
        }
        a.add(i, i, c_mid);
    }

    let (mut kl, mut ku) = (0, 0);
    for (i, row) in a.rows.iter().enumerate() {
        for &(j, _) in row {
            kl = kl.max(i.saturating_sub(j));
            ku = ku.max(j.saturating_sub(i));
        }
    }
    let mut band = BandMatrix::zeros(m, kl, ku);
    for (i, row) in a.rows.iter().enumerate() {
        for &(j, v) in row {
            band.add(i, j, v);
        }
    }
    let (sol, condition_estimate) = band.solve(rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            message: "non-finite exit probability".into(),
            condition_estimate,
        });
    }

    let mut values = Vec::with_capacity(m + 2);
    values.push(0.0);
    values.extend(sol.iter().map(|v| v.clamp(0.0, 1.0)));
    values.push(1.0);

    let mut grid: Vec<f64> = nodes.iter().copied().filter(|&x| x < x1).collect();
    grid.extend_from_slice(&knots);
    grid.extend(nodes.iter().copied().filter(|&x| x > x2));
    let u = grid.iter().map(|&x| interpolate(&knots, &values, x)).collect();
    let pi_up = interpolate(&knots, &values, x0);
    Ok(ExitSolution {
        grid,
        u,
        pi_up,
        condition_estimate,
        knots,
        values,
        x1,
        x2,
    })
}

/// Solves the exit problem for each `(x1, x2)` pair at a fixed `x0`.
pub fn sweep_exit_probability(
    params: &SisParams,
    x0: f64,
    intervals: &[(f64, f64)],
    grid_n: usize,
) -> Vec<Result<f64>> {
    intervals
        .iter()
        .map(|&(x1, x2)| {
            let prob = ExitProblem::new(x1, x2, grid_n, params.clone())?;
            Ok(solve_exit_probability(&prob, x0)?.pi_up)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitEstimate {
    /// Fraction of exited paths that left at or above `x2`.
    pub probability: f64,
    pub standard_error: f64,
    pub n_paths: usize,
    pub exited_count: usize,
    pub upper_count: usize,
    /// Paths still inside `(x1, x2)` at `t_end`, excluded from the estimate.
    pub censored_count: usize,
}

/// Simulates SIS paths from `S = x0` until `S` leaves `(x1, x2)`, using streams
/// `(cfg.seed, 0..n_paths)`.
pub fn mc_exit_probability(prob: &ExitProblem, x0: f64, cfg: &SimConfig, n_paths: usize) -> Result<ExitEstimate> {
    prob.validate()?;
    cfg.validate()?;
    if n_paths == 0 {
        return Err(invalid("n_paths must be at least 1"));
    }
    if !(prob.x1 < x0 && x0 < prob.x2) {
        return Err(invalid(format!("x0 must lie in ({}, {}), got {x0}", prob.x1, prob.x2)));
    }
    let model = Model::Sis(prob.params.clone());
    let start = SimplexState::sis(x0, 1.0 - x0)?;
    let outcomes: Vec<Option<bool>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|k| {
            let mut stream = RngStream::new(cfg.seed, k);
            let mut exit = None;
            drive(&model, &start, cfg, &mut stream, |_, x, _| {
                if x.s() >= prob.x2 {
                    exit = Some(true);
                } else if x.s() <= prob.x1 {
                    exit = Some(false);
                }
                if exit.is_some() {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            })?;
            Ok(exit)
        })
        .collect::<Result<_>>()?;
    let exited = outcomes.iter().filter(|o| o.is_some()).count();
    let upper = outcomes.iter().filter(|o| **o == Some(true)).count();
    let (probability, standard_error) = if exited == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let q = upper as f64 / exited as f64;
        (q, (q * (1.0 - q) / exited as f64).sqrt())
    };
    Ok(ExitEstimate {
        probability,
        standard_error,
        n_paths,
        exited_count: exited,
        upper_count: upper,
        censored_count: n_paths - exited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::JumpSpec;

    fn params(beta: f64, mu: f64, lambda: f64, sigma: f64, jumps: JumpSpec) -> SisParams {
        SisParams::new(beta, mu, lambda, sigma, jumps).unwrap()
    }

    #[test]
    fn absorbing_layers() {
        let prob = ExitProblem::new(0.2, 0.95, 200, params(0.1, 0.2, 0.3, 0.3, JumpSpec::none())).unwrap();
        assert_eq!(solve_exit_probability(&prob, 0.97).unwrap().pi_up, 1.0);
        assert_eq!(solve_exit_probability(&prob, 0.95).unwrap().pi_up, 1.0);
        assert_eq!(solve_exit_probability(&prob, 0.1).unwrap().pi_up, 0.0);
        assert_eq!(solve_exit_probability(&prob, 0.2).unwrap().pi_up, 0.0);
    }

    #[test]
    fn pure_noise_is_linear_in_scale() {
        // with β = μ = λ = 0 the drift vanishes and u is linear
        let prob = ExitProblem::new(0.3, 0.7, 400, params(0.0, 0.0, 0.0, 0.5, JumpSpec::none())).unwrap();
        let sol = solve_exit_probability(&prob, 0.5).unwrap();
        assert!((sol.pi_up - 0.5).abs() < 1e-10);
        for (x, u) in sol.grid.iter().zip(&sol.u) {
            let exact = ((x - 0.3) / 0.4).clamp(0.0, 1.0);
            assert!((u - exact).abs() < 1e-10, "{x} {u}");
        }
    }

    #[test]
    fn off_grid_boundaries_are_exact() {
        let prob = ExitProblem::new(0.3013, 0.6987, 100, params(0.0, 0.0, 0.0, 0.5, JumpSpec::none())).unwrap();
        let sol = solve_exit_probability(&prob, 0.5).unwrap();
        assert!((sol.pi_up - 0.5).abs() < 1e-10);
        assert!((sol.value_at(0.4) - (0.4 - 0.3013) / (0.6987 - 0.3013)).abs() < 1e-10);
    }

    #[test]
    fn solution_is_a_monotone_probability() {
        for h in [-0.3, 0.2] {
            let jumps = JumpSpec::constant(2.0, h).unwrap();
            let prob = ExitProblem::new(0.2, 0.9, 300, params(0.8, 0.1, 0.2, 0.6, jumps)).unwrap();
            let sol = solve_exit_probability(&prob, 0.5).unwrap();
            assert!(sol.u.iter().all(|u| (-1e-12..=1.0 + 1e-12).contains(u)));
            assert!(sol.u.windows(2).all(|w| w[1] >= w[0] - 1e-12));
            assert_eq!(sol.grid.len(), sol.u.len());
        }
    }

    #[test]
    fn degenerate_problem_reports_failure() {
        let prob = ExitProblem::new(0.3, 0.7, 100, params(0.0, 0.0, 0.0, 0.0, JumpSpec::none())).unwrap();
        match solve_exit_probability(&prob, 0.5) {
            Err(Error::NumericalFailure { condition_estimate, .. }) => assert!(condition_estimate.is_infinite()),
            other => panic!("expected numerical failure, got {other:?}"),
        }
    }

    #[test]
    fn validation() {
        let p = params(0.1, 0.2, 0.3, 0.3, JumpSpec::none());
        assert!(ExitProblem::new(0.5, 0.5, 200, p.clone()).is_err());
        assert!(ExitProblem::new(0.0, 0.5, 200, p.clone()).is_err());
        let small = ExitProblem::new(0.2, 0.8, 50, p.clone()).unwrap();
        assert!(solve_exit_probability(&small, 0.5).is_err());
        let prob = ExitProblem::new(0.2, 0.8, 200, p).unwrap();
        assert!(mc_exit_probability(&prob, 0.8, &SimConfig::new(1.0, 1e-3, 0), 10).is_err());
    }

    #[test]
    fn symmetric_case_is_fair() {
        let prob = ExitProblem::new(0.3, 0.7, 200, params(0.0, 0.0, 0.0, 1.0, JumpSpec::none())).unwrap();
        let est = mc_exit_probability(&prob, 0.5, &SimConfig::new(200.0, 1e-3, 4), 2000).unwrap();
        assert_eq!(est.censored_count, 0);
        assert!((est.probability - 0.5).abs() < 3.0 * est.standard_error, "{est:?}");
    }

    #[test]
    fn near_upper_boundary_with_little_noise() {
        let prob = ExitProblem::new(0.2, 0.8, 200, params(0.0, 0.0, 0.0, 0.01, JumpSpec::none())).unwrap();
        let est = mc_exit_probability(&prob, 0.799, &SimConfig::new(50.0, 1e-3, 1), 200).unwrap();
        assert!(est.probability > 0.95, "{est:?}");
        assert!(solve_exit_probability(&prob, 0.799).unwrap().pi_up > 0.99);
    }

    #[test]
    fn sweep_runs_each_interval() {
        let p = params(0.1, 0.2, 0.3, 0.3, JumpSpec::constant(1.0, -0.01).unwrap());
        let out = sweep_exit_probability(&p, 0.5, &[(0.2, 0.95), (0.1, 0.99), (0.6, 0.4)], 200);
        assert!(out[0].as_ref().unwrap() > &0.9);
        assert!(out[1].is_ok());
        assert!(out[2].is_err());
    }
}
