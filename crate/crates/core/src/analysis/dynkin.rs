//! One-step Monte Carlo estimate of a generator applied to a test function.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::integrator::{check_start, drive, SimConfig};
use crate::kernel::RngStream;
use crate::models::{Model, SimplexState};
use crate::stability::{sirs_generator_f, sirs_lyapunov_f, sis_generator_g, LyapunovConstants};

/// Test functions with a closed-form generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `g(x) = 1 − S` for the SIS model.
    SisG,
    /// `f(x) = c₁(S − 1)² + c₂I² + c₃R²` for the SIRS model.
    SirsF(LyapunovConstants),
}

impl TestFunction {
    fn value(&self, x: &SimplexState) -> f64 {
        match self {
            TestFunction::SisG => 1.0 - x.s(),
            TestFunction::SirsF(c) => sirs_lyapunov_f(c, x),
        }
    }

    fn analytic(&self, model: &Model, x: &SimplexState) -> Result<f64> {
        match (self, model) {
            (TestFunction::SisG, Model::Sis(p)) => Ok(sis_generator_g(p, x.s())),
            (TestFunction::SirsF(c), Model::Sirs(p)) => sirs_generator_f(p, c, x),
            _ => Err(invalid(format!("test function {self:?} does not apply to the {} model", model.name()))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynkinCheck {
    pub mc_estimate: f64,
    pub standard_error: f64,
    pub analytic: f64,
    pub z_score: f64,
    pub n_samples: usize,
}

/// Averages `(φ(X(dt_probe)) − φ(x)) / dt_probe` over `n_samples` one-step
/// paths (streams `(seed, 0..n_samples)`) and compares with the closed form.
pub fn dynkin_generator_check(
    model: &Model,
    x: &SimplexState,
    test_fn: TestFunction,
    dt_probe: f64,
    n_samples: usize,
    seed: u64,
) -> Result<DynkinCheck> {
    if n_samples < 2 {
        return Err(invalid("n_samples must be at least 2"));
    }
    if !(dt_probe > 0.0 && dt_probe.is_finite()) {
        return Err(invalid(format!("dt_probe must be positive, got {dt_probe}")));
    }
    check_start(model, x, true)?;
    let analytic = test_fn.analytic(model, x)?;
    let cfg = SimConfig::new(dt_probe, dt_probe, seed);
    let f0 = test_fn.value(x);
    let samples: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut stream = RngStream::new(seed, k);
            let stats = drive(model, x, &cfg, &mut stream, |_, _, _| ControlFlow::Continue(()))?;
            Ok((test_fn.value(&stats.final_state) - f0) / dt_probe)
        })
        .collect::<Result<_>>()?;
    let n = n_samples as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let diff = mean - analytic;
    let z_score = if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 * analytic.abs().max(1.0) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(DynkinCheck {
        mc_estimate: mean,
        standard_error: se,
        analytic,
        z_score,
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::JumpSpec;
    use crate::models::{SirsParams, SisParams};

    fn fig1a() -> SisParams {
        SisParams::new(0.1, 0.2, 0.3, 0.3, JumpSpec::constant(1.0, -0.01).unwrap()).unwrap()
    }

    #[test]
    fn noise_free_matches_directional_derivative() {
        let p = SisParams::new(0.1, 0.2, 0.3, 0.0, JumpSpec::none()).unwrap();
        let x = SimplexState::sis(0.6, 0.4).unwrap();
        let c = dynkin_generator_check(&Model::Sis(p), &x, TestFunction::SisG, 1e-3, 4, 0).unwrap();
        assert_eq!(c.standard_error, 0.0);
        assert!((c.mc_estimate + 0.176).abs() < 1e-3);
        assert!((c.analytic + 0.176).abs() < 1e-12);
    }

    #[test]
    fn sirs_noise_free_is_first_order_accurate() {
        let p = SirsParams::new(0.3, 0.29, 0.4, 0.0, JumpSpec::none()).unwrap();
        let c = LyapunovConstants { c1: 2.0, c2: 3.0, c3: 1.0, kappa: 0.1 };
        let x = SimplexState::sirs(0.3, 0.6, 0.1).unwrap();
        let m = Model::Sirs(p);
        let coarse = dynkin_generator_check(&m, &x, TestFunction::SirsF(c), 1e-2, 2, 0).unwrap();
        let fine = dynkin_generator_check(&m, &x, TestFunction::SirsF(c), 1e-3, 2, 0).unwrap();
        let (ec, ef) = ((coarse.mc_estimate - coarse.analytic).abs(), (fine.mc_estimate - fine.analytic).abs());
        assert!(ef < 1e-2 && ec / ef > 8.0, "{ec} {ef}");
    }

    #[test]
    fn boundary_state_gives_zero() {
        let x = SimplexState::sis(1.0, 0.0).unwrap();
        let c = dynkin_generator_check(&Model::Sis(fig1a()), &x, TestFunction::SisG, 1e-3, 100, 1).unwrap();
        assert_eq!((c.mc_estimate, c.analytic, c.z_score), (0.0, 0.0, 0.0));
    }

    #[test]
    fn fig1a_generator_agrees() {
        let x = SimplexState::sis(0.6, 0.4).unwrap();
        let c = dynkin_generator_check(&Model::Sis(fig1a()), &x, TestFunction::SisG, 1e-3, 20_000, 5).unwrap();
        assert!((c.analytic + 0.1736).abs() < 1e-12);
        assert!(c.z_score.abs() < 4.0, "{c:?}");
    }

    #[test]
    fn mismatched_test_function_rejected() {
        let x = SimplexState::sis(0.6, 0.4).unwrap();
        let c = LyapunovConstants { c1: 1.0, c2: 1.0, c3: 1.0, kappa: 0.1 };
        assert!(dynkin_generator_check(&Model::Sis(fig1a()), &x, TestFunction::SirsF(c), 1e-3, 10, 0).is_err());
    }
}
