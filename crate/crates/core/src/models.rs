//! SIS and SIRS coefficient functions and deterministic equilibria.
//!
//! The SIS system lives on the 2-simplex `S + I = 1` and is driven through
//! its one-dimensional reduction in `S`; the SIRS system lives on the
//! 3-simplex. Every coefficient vector sums to zero, so the flows conserve
//! the total population frequency.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::kernel::JumpSpec;

/// Tolerance on `|Σ coords − 1|` for a state to count as on the simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SisParams {
    pub beta: f64,
    pub mu: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub jumps: JumpSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SirsParams {
    pub beta: f64,
    pub lambda: f64,
    pub delta: f64,
    pub sigma: f64,
    pub jumps: JumpSpec,
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and non-negative, got {v}")))
    }
}

impl SisParams {
    pub fn new(beta: f64, mu: f64, lambda: f64, sigma: f64, jumps: JumpSpec) -> Result<Self> {
        let p = Self {
            beta,
            mu,
            lambda,
            sigma,
            jumps,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_rate("beta", self.beta)?;
        check_rate("mu", self.mu)?;
        check_rate("lambda", self.lambda)?;
        check_rate("sigma", self.sigma)
    }

    /// The same rates with the noise switched off.
    pub fn deterministic(&self) -> Self {
        Self {
            sigma: 0.0,
            jumps: JumpSpec::none(),
            ..self.clone()
        }
    }
}

impl SirsParams {
    pub fn new(beta: f64, lambda: f64, delta: f64, sigma: f64, jumps: JumpSpec) -> Result<Self> {
        let p = Self {
            beta,
            lambda,
            delta,
            sigma,
            jumps,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_rate("beta", self.beta)?;
        check_rate("lambda", self.lambda)?;
        check_rate("delta", self.delta)?;
        check_rate("sigma", self.sigma)?;
        if !self.jumps.is_nonnegative() {
            return Err(invalid("the SIRS jump function must be non-negative"));
        }
        Ok(())
    }

    pub fn deterministic(&self) -> Self {
        Self {
            sigma: 0.0,
            jumps: JumpSpec::none(),
            ..self.clone()
        }
    }
}

/// A point of the 2- or 3-simplex: `(S, I)` or `(S, I, R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexState {
    coords: [f64; 3],
    dim: usize,
}

impl Serialize for SimplexState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.coords())
    }
}

impl SimplexState {
    pub fn sis(s: f64, i: f64) -> Result<Self> {
        Self::from_slice(&[s, i])
    }

    pub fn sirs(s: f64, i: f64, r: f64) -> Result<Self> {
        Self::from_slice(&[s, i, r])
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        if !(coords.len() == 2 || coords.len() == 3) {
            return Err(invalid(format!(
                "state needs 2 (SIS) or 3 (SIRS) coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(invalid(format!("state {coords:?} has a coordinate outside [0, 1]")));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(invalid(format!("state {coords:?} sums to {sum}, not 1")));
        }
        let mut c = [0.0; 3];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self {
            coords: c,
            dim: coords.len(),
        })
    }

    /// Unvalidated constructor used inside the integrator.
    pub(crate) fn raw(coords: [f64; 3], dim: usize) -> Self {
        Self { coords, dim }
    }

    pub(crate) fn array(&self) -> [f64; 3] {
        self.coords
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.coords[0]
    }

    pub fn i(&self) -> f64 {
        self.coords[1]
    }

    /// Recovered fraction; zero for SIS states.
    pub fn r(&self) -> f64 {
        self.coords[2]
    }

    pub fn sum_defect(&self) -> f64 {
        (self.coords().iter().sum::<f64>() - 1.0).abs()
    }

    /// True when every coordinate is strictly positive.
    pub fn is_interior(&self) -> bool {
        self.coords().iter().all(|&c| c > 0.0)
    }
}

/// Drift of `S` in the one-dimensional SIS reduction.
pub fn sis_drift(p: &SisParams, s: f64) -> f64 {
    -p.beta * s * (1.0 - s) - p.mu * s + p.mu + p.lambda * (1.0 - s)
}

/// Diffusion coefficient of `S` in the one-dimensional SIS reduction.
pub fn sis_diffusion(p: &SisParams, s: f64) -> f64 {
    -p.sigma * s * (1.0 - s)
}

/// Displacement of `S` caused by a jump with the given mark.
pub fn sis_jump_amplitude(p: &SisParams, s: f64, mark: f64) -> f64 {
    p.jumps.eval(mark) * s * (1.0 - s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirsCoefficients {
    pub drift: [f64; 3],
    pub diffusion: [f64; 3],
    /// Zero when no mark is supplied.
    pub jump: [f64; 3],
}

pub fn sirs_coefficients(p: &SirsParams, x: &SimplexState, mark: Option<f64>) -> SirsCoefficients {
    let [s, i, r] = x.coords;
    let infection = p.beta * s * i;
    let recovery = p.lambda * i;
    let waning = p.delta * r;
    let noise = p.sigma * s * i;
    let jump = match mark {
        Some(y) => {
            let q = p.jumps.eval(y) * i;
            [0.0, -q, q]
        }
        None => [0.0; 3],
    };
    SirsCoefficients {
        drift: [-infection + waning, infection - recovery, recovery - waning],
        diffusion: [-noise, noise, 0.0],
        jump,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Sis(SisParams),
    Sirs(SirsParams),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Sis(_) => 2,
            Model::Sirs(_) => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Sis(_) => "sis",
            Model::Sirs(_) => "sirs",
        }
    }

    pub fn jumps(&self) -> &JumpSpec {
        match self {
            Model::Sis(p) => &p.jumps,
            Model::Sirs(p) => &p.jumps,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            Model::Sis(p) => p.sigma,
            Model::Sirs(p) => p.sigma,
        }
    }

    /// No Brownian and no jump forcing.
    pub fn is_deterministic(&self) -> bool {
        self.sigma() == 0.0 && self.jumps().total_mass() == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Sis(p) => p.validate(),
            Model::Sirs(p) => p.validate(),
        }
    }

    /// Euler–Maruyama increment `drift·dt + diffusion·dW` at `x`.
    #[inline]
    pub(crate) fn continuous_increment(&self, x: &[f64; 3], dt: f64, dw: f64) -> [f64; 3] {
        match self {
            Model::Sis(p) => {
                let [s, i, _] = *x;
                // net flow S → I; the S-equation is its negative
                let flow = (p.beta * s - p.lambda - p.mu) * i * dt + p.sigma * s * i * dw;
                [-flow, flow, 0.0]
            }
            Model::Sirs(p) => {
                let [s, i, r] = *x;
                let infection = p.beta * s * i * dt + p.sigma * s * i * dw;
                let recovery = p.lambda * i * dt;
                let waning = p.delta * r * dt;
                [-infection + waning, infection - recovery, recovery - waning]
            }
        }
    }

    /// State displacement of a jump applied to the left-limit state `x`.
    #[inline]
    pub(crate) fn jump_increment(&self, x: &[f64; 3], mark: f64) -> [f64; 3] {
        match self {
            Model::Sis(p) => {
                let a = p.jumps.eval(mark) * x[0] * x[1];
                [a, -a, 0.0]
            }
            Model::Sirs(p) => {
                let q = p.jumps.eval(mark) * x[1];
                [0.0, -q, q]
            }
        }
    }

    /// Deterministic drift vector at `x`.
    pub fn drift(&self, x: &SimplexState) -> [f64; 3] {
        self.continuous_increment(&x.coords, 1.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    DiseaseFreeStable,
    EndemicStable,
    /// The disease-free point once an endemic equilibrium exists.
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub state: SimplexState,
    pub kind: EquilibriumKind,
}

/// Fixed points of the noise-free system and their stability.
pub fn deterministic_equilibria(model: &Model) -> Vec<Equilibrium> {
    match model {
        Model::Sis(p) => {
            let dfe = SimplexState::raw([1.0, 0.0, 0.0], 2);
            let removal = p.mu + p.lambda;
            if p.beta > removal {
                let s = removal / p.beta;
                vec![
                    Equilibrium {
                        state: dfe,
                        kind: EquilibriumKind::Unstable,
                    },
                    Equilibrium {
                        state: SimplexState::raw([s, 1.0 - s, 0.0], 2),
                        kind: EquilibriumKind::EndemicStable,
                    },
                ]
            } else {
                vec![Equilibrium {
                    state: dfe,
                    kind: EquilibriumKind::DiseaseFreeStable,
                }]
            }
        }
        Model::Sirs(p) => {
            let dfe = SimplexState::raw([1.0, 0.0, 0.0], 3);
            if p.beta > p.lambda {
                let s = p.lambda / p.beta;
                let share = if p.lambda + p.delta > 0.0 {
                    p.lambda / (p.lambda + p.delta)
                } else {
                    0.0
                };
                let r = (1.0 - s) * share;
                vec![
                    Equilibrium {
                        state: dfe,
                        kind: EquilibriumKind::Unstable,
                    },
                    Equilibrium {
                        state: SimplexState::raw([s, 1.0 - s - r, r], 3),
                        kind: EquilibriumKind::EndemicStable,
                    },
                ]
            } else {
                vec![Equilibrium {
                    state: dfe,
                    kind: EquilibriumKind::DiseaseFreeStable,
                }]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig1a() -> SisParams {
        SisParams::new(0.1, 0.2, 0.3, 0.3, JumpSpec::constant(1.0, -0.01).unwrap()).unwrap()
    }

    fn fig3a() -> SirsParams {
        SirsParams::new(0.3, 0.29, 0.4, 0.1, JumpSpec::constant(1.0, 0.3).unwrap()).unwrap()
    }

    #[test]
    fn sis_drift_values() {
        let p = fig1a();
        assert_eq!(sis_drift(&p, 1.0), 0.0);
        assert!((sis_drift(&p, 0.6) - 0.176).abs() < 1e-15);
        let crit = SisParams::new(0.5, 0.2, 0.3, 0.0, JumpSpec::none()).unwrap();
        assert_eq!(sis_drift(&crit, 1.0), 0.0);
    }

    #[test]
    fn sis_diffusion_values() {
        let p = fig1a();
        assert_eq!(sis_diffusion(&p, 0.0), 0.0);
        assert_eq!(sis_diffusion(&p, 1.0), 0.0);
        assert!((sis_diffusion(&p, 0.5) + 0.075).abs() < 1e-15);
        assert_eq!(sis_diffusion(&p.deterministic(), 0.37), 0.0);
    }

    #[test]
    fn sis_jump_amplitude_values() {
        let p = fig1a();
        assert_eq!(sis_jump_amplitude(&p, 0.0, 3.0), 0.0);
        assert_eq!(sis_jump_amplitude(&p, 1.0, 3.0), 0.0);
        assert!((sis_jump_amplitude(&p, 0.6, 0.0) + 0.0024).abs() < 1e-15);
        assert_eq!(sis_jump_amplitude(&p, 0.5, 0.0), -0.01 / 4.0);
    }

    #[test]
    fn sirs_coefficients_values() {
        let p = fig3a();
        let e1 = SimplexState::sirs(1.0, 0.0, 0.0).unwrap();
        let c = sirs_coefficients(&p, &e1, Some(0.0));
        assert_eq!(c.drift, [0.0; 3]);
        assert_eq!(c.diffusion, [0.0; 3]);
        assert_eq!(c.jump, [0.0; 3]);

        let x = SimplexState::sirs(0.3, 0.6, 0.1).unwrap();
        let c = sirs_coefficients(&p, &x, None);
        for (got, want) in c.drift.iter().zip([-0.014, -0.12, 0.134]) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn reduced_sis_matches_full_flow() {
        let p = fig1a();
        for s in [0.05, 0.3, 0.6, 0.93] {
            let x = SimplexState::sis(s, 1.0 - s).unwrap();
            let inc = Model::Sis(p.clone()).drift(&x);
            assert!((inc[0] - sis_drift(&p, s)).abs() < 1e-15);
            assert!((inc[0] + inc[1]).abs() < 1e-16);
            let j = Model::Sis(p.clone()).jump_increment(&x.array(), 0.0);
            assert!((j[0] - sis_jump_amplitude(&p, s, 0.0)).abs() < 1e-16);
        }
    }

    #[test]
    fn sis_equilibria() {
        let p = SisParams::new(0.8, 0.1, 0.2, 0.3, JumpSpec::none()).unwrap();
        let eq = deterministic_equilibria(&Model::Sis(p.clone()));
        assert_eq!(eq.len(), 2);
        let endemic = &eq[1];
        assert_eq!(endemic.kind, EquilibriumKind::EndemicStable);
        assert!((endemic.state.s() - 0.375).abs() < 1e-15);
        assert!((endemic.state.i() - 0.625).abs() < 1e-15);
        let d = Model::Sis(p).drift(&endemic.state);
        assert!(d.iter().all(|v| v.abs() < 1e-12));

        let stable = fig1a();
        let eq = deterministic_equilibria(&Model::Sis(stable));
        assert_eq!(eq.len(), 1);
        assert_eq!(eq[0].kind, EquilibriumKind::DiseaseFreeStable);
        assert_eq!(eq[0].state.coords(), &[1.0, 0.0]);

        let zero = SisParams::new(0.0, 0.1, 0.2, 0.0, JumpSpec::none()).unwrap();
        assert_eq!(deterministic_equilibria(&Model::Sis(zero)).len(), 1);
    }

    #[test]
    fn sirs_equilibria() {
        let p = SirsParams::new(0.8, 0.1, 0.1, 0.2, JumpSpec::none()).unwrap();
        let eq = deterministic_equilibria(&Model::Sirs(p.clone()));
        let endemic = &eq[1];
        for (got, want) in endemic.state.coords().iter().zip([0.125, 0.4375, 0.4375]) {
            assert!((got - want).abs() < 1e-15);
        }
        let d = Model::Sirs(p).drift(&endemic.state);
        assert!(d.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn state_validation() {
        assert!(SimplexState::sis(0.6, 0.4).is_ok());
        assert!(SimplexState::sis(0.6, 0.5).is_err());
        assert!(SimplexState::sis(1.2, -0.2).is_err());
        assert!(SimplexState::from_slice(&[1.0]).is_err());
        assert!(SimplexState::sirs(0.3, 0.6, 0.1).unwrap().is_interior());
        assert!(!SimplexState::sis(1.0, 0.0).unwrap().is_interior());
    }

    #[test]
    fn sirs_rejects_negative_jump_function() {
        assert!(SirsParams::new(0.3, 0.29, 0.4, 0.1, JumpSpec::constant(1.0, -0.1).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn sirs_vectors_sum_to_zero(
            beta in 0.0f64..2.0, lambda in 0.0f64..2.0, delta in 0.0f64..2.0,
            sigma in 0.0f64..1.0, c in 0.0f64..0.99,
            a in 0.0f64..1.0, b in 0.0f64..1.0,
        ) {
            let p = SirsParams::new(beta, lambda, delta, sigma, JumpSpec::constant(1.0, c).unwrap()).unwrap();
            let (lo, hi) = (a.min(b), a.max(b));
            let x = SimplexState::raw([lo, hi - lo, 1.0 - hi], 3);
            let k = sirs_coefficients(&p, &x, Some(0.0));
            for v in [k.drift, k.diffusion, k.jump] {
                prop_assert!(v.iter().sum::<f64>().abs() < 1e-15);
            }
        }

        #[test]
        fn sis_full_drift_sum(beta in 0.0f64..2.0, mu in 0.0f64..1.0, lambda in 0.0f64..1.0, s in 0.0f64..1.0, i in 0.0f64..1.0) {
            // drift_S + drift_I = −μ(S+I) + μ off the simplex too
            let p = SisParams::new(beta, mu, lambda, 0.0, JumpSpec::none()).unwrap();
            let drift_s = -beta * s * i - mu * s + mu + lambda * i;
            let drift_i = beta * s * i - (lambda + mu) * i;
            prop_assert!((drift_s + drift_i - (-mu * (s + i) + mu)).abs() < 1e-14);
            // and the reduction agrees with the S-equation on the simplex
            prop_assert!((sis_drift(&p, s) - (-beta * s * (1.0 - s) - mu * s + mu + lambda * (1.0 - s))).abs() < 1e-15);
        }
    }
}
