//! Stability of the disease-free equilibrium.
//!
//! Closed-form threshold conditions for the stochastic SIS system (negative
//! mean jump, and the non-negative jump variant with its witness `φ`) and for
//! the stochastic SIRS system, together with the analytic generators of the
//! Lyapunov functions used to certify them.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernel::compute_jump_integrals;
use crate::models::{Model, SimplexState, SirsParams, SisParams};

/// Spacing of the grid searched for the witness `φ`.
pub const PHI_GRID_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdTerm {
    pub name: &'static str,
    pub value: f64,
}

fn term(name: &'static str, value: f64) -> ThresholdTerm {
    ThresholdTerm { name, value }
}

fn sum_terms(terms: &[ThresholdTerm]) -> f64 {
    terms.iter().map(|t| t.value).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub condition_holds: bool,
    pub threshold_value: f64,
    /// Positive exactly when the condition holds.
    pub margin: f64,
    /// Additive terms of the threshold; they sum to `threshold_value`.
    pub detail: Vec<ThresholdTerm>,
    /// Candidates of a `min`-type threshold (SIRS only).
    pub branches: Vec<ThresholdTerm>,
}

/// Verdict for non-negative jump functions plus the witness `φ ∈ (0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositiveJumpVerdict {
    #[serde(flatten)]
    pub verdict: StabilityVerdict,
    pub phi: Option<f64>,
}

/// SIS condition for a negative mean jump: `β < μ + λ + ∫h dν`.
pub fn sis_dfe_condition(p: &SisParams) -> Result<StabilityVerdict> {
    let ints = compute_jump_integrals(&p.jumps);
    if ints.int_h >= 0.0 {
        return Err(Error::NotApplicable(format!(
            "∫h dν = {} is not negative; use the non-negative jump condition",
            ints.int_h
        )));
    }
    let detail = vec![term("mu", p.mu), term("lambda", p.lambda), term("int_h", ints.int_h)];
    let threshold = sum_terms(&detail);
    let margin = threshold - p.beta;
    Ok(StabilityVerdict {
        condition_holds: margin > 0.0,
        threshold_value: threshold,
        margin,
        detail,
        branches: Vec::new(),
    })
}

/// SIS condition for a non-negative jump function: some `φ ∈ (0, 1)` with
/// `β < μ + λ + φ ∫h dν`.
///
/// The reported threshold is the `φ → 0⁺` value `μ + λ`; the margin is the
/// supremum over `φ`, `μ + λ + ∫h dν − β`, so it is positive exactly when a
/// witness exists. The witness is the smallest point of the `1e-6` grid that
/// satisfies the strict inequality.
pub fn sis_dfe_condition_positive(p: &SisParams) -> Result<PositiveJumpVerdict> {
    if !p.jumps.is_nonnegative() {
        return Err(Error::NotApplicable(
            "the jump function takes negative values on the mark support".into(),
        ));
    }
    let ints = compute_jump_integrals(&p.jumps);
    let detail = vec![term("mu", p.mu), term("lambda", p.lambda)];
    let base = sum_terms(&detail);
    let margin = base + ints.int_h - p.beta;
    let holds = margin > 0.0;
    let phi = if !holds {
        None
    } else if p.beta < base {
        Some(PHI_GRID_STEP)
    } else {
        let required = (p.beta - base) / ints.int_h;
        let mut k = (required / PHI_GRID_STEP).floor() as u64 + 1;
        while p.beta >= base + k as f64 * PHI_GRID_STEP * ints.int_h {
            k += 1;
        }
        let on_grid = k as f64 * PHI_GRID_STEP;
        if on_grid < 1.0 {
            Some(on_grid)
        } else {
            // margin is below the grid resolution
            Some(0.5 * (required + 1.0))
        }
    };
    Ok(PositiveJumpVerdict {
        verdict: StabilityVerdict {
            condition_holds: holds,
            threshold_value: base,
            margin,
            detail,
            branches: Vec::new(),
        },
        phi,
    })
}

/// SIRS condition: `β < min{λ + ∫j dν − ∫j²/2 dν − σ²/2, δ}`.
pub fn sirs_dfe_condition(p: &SirsParams) -> StabilityVerdict {
    let ints = compute_jump_integrals(&p.jumps);
    let noise_terms = vec![
        term("lambda", p.lambda),
        term("int_j", ints.int_h),
        term("neg_half_int_j_sq", -0.5 * ints.int_h_sq),
        term("neg_half_sigma_sq", -0.5 * p.sigma * p.sigma),
    ];
    let noise_branch = sum_terms(&noise_terms);
    let (threshold, detail) = if p.delta < noise_branch {
        (p.delta, vec![term("delta", p.delta)])
    } else {
        (noise_branch, noise_terms)
    };
    let margin = threshold - p.beta;
    StabilityVerdict {
        condition_holds: margin > 0.0,
        threshold_value: threshold,
        margin,
        detail,
        branches: vec![term("noise_adjusted_recovery", noise_branch), term("delta", p.delta)],
    }
}

/// Picks the applicable condition for a model.
///
/// SIS with a negative mean jump uses the negative-jump condition, SIS with a
/// non-negative jump function the `φ` variant; mixed-sign SIS jumps with a
/// non-negative mean have no verdict.
pub fn dfe_verdict(model: &Model) -> Result<StabilityVerdict> {
    match model {
        Model::Sis(p) => {
            if compute_jump_integrals(&p.jumps).int_h < 0.0 {
                sis_dfe_condition(p)
            } else {
                sis_dfe_condition_positive(p).map(|v| v.verdict)
            }
        }
        Model::Sirs(p) => Ok(sirs_dfe_condition(p)),
    }
}

/// Threshold of the noise-free system: `μ + λ` (SIS) or `λ` (SIRS).
pub fn deterministic_threshold(model: &Model) -> f64 {
    match model {
        Model::Sis(p) => p.mu + p.lambda,
        Model::Sirs(p) => p.lambda,
    }
}

/// Weights of `f(x) = c₁(x₁ − 1)² + c₂x₂² + c₃x₃²` and the slack `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub kappa: f64,
}

struct SirsBounds {
    /// `δ − β − 2κ`
    delta_gap: f64,
    /// `λ + ∫j dν − ∫j²/2 dν − σ²/2 − β`
    noise_gap: f64,
    int_j: f64,
    int_j_sq: f64,
}

fn sirs_bounds(p: &SirsParams, kappa: f64) -> SirsBounds {
    let ints = compute_jump_integrals(&p.jumps);
    SirsBounds {
        delta_gap: p.delta - p.beta - 2.0 * kappa,
        noise_gap: p.lambda + ints.int_h - 0.5 * ints.int_h_sq - 0.5 * p.sigma * p.sigma - p.beta,
        int_j: ints.int_h,
        int_j_sq: ints.int_h_sq,
    }
}

impl LyapunovConstants {
    /// Lower bound on `c₁` given `c₃` and `κ`.
    fn c1_bound(p: &SirsParams, c3: f64, b: &SirsBounds) -> f64 {
        c3 * (p.lambda + b.int_j) / b.delta_gap
    }

    /// Lower bound on `c₂` given `c₁` and `c₃`.
    fn c2_bound(p: &SirsParams, c1: f64, c3: f64, b: &SirsBounds) -> f64 {
        (c1 * (0.5 * p.sigma * p.sigma + p.beta) + c3 * b.int_j_sq) / b.noise_gap
    }

    /// Checks the inequalities that make `𝔏f ≤ −k f` go through.
    pub fn is_feasible(&self, p: &SirsParams) -> bool {
        let b = sirs_bounds(p, self.kappa);
        let positive = [self.c1, self.c2, self.c3, self.kappa].iter().all(|v| *v > 0.0);
        positive
            && b.delta_gap > 0.0
            && b.noise_gap > 0.0
            && self.c1 > Self::c1_bound(p, self.c3, &b)
            && self.c2 > Self::c2_bound(p, self.c1, self.c3, &b)
    }
}

/// Builds feasible constants: `κ = (δ − β)/4`, `c₃ = 1`, and `c₁`, `c₂` at
/// 1.01× their lower bounds.
pub fn find_lyapunov_constants(p: &SirsParams) -> Result<LyapunovConstants> {
    let verdict = sirs_dfe_condition(p);
    if !verdict.condition_holds {
        return Err(Error::Infeasible(format!(
            "β = {} is not below the SIRS threshold {}",
            p.beta, verdict.threshold_value
        )));
    }
    let kappa = (p.delta - p.beta) / 4.0;
    let c3 = 1.0;
    let b = sirs_bounds(p, kappa);
    // bounds can be zero (e.g. no recovery, no noise); stay strictly positive
    let above = |bound: f64| if bound > 0.0 { 1.01 * bound } else { 1e-6 };
    let c1 = above(LyapunovConstants::c1_bound(p, c3, &b));
    let c2 = above(LyapunovConstants::c2_bound(p, c1, c3, &b));
    let c = LyapunovConstants { c1, c2, c3, kappa };
    if !c.is_feasible(p) {
        return Err(Error::Infeasible(format!("constructed constants {c:?} fail the bounds")));
    }
    Ok(c)
}

/// Generator of `g(s) = 1 − s` for the reduced SIS process.
pub fn sis_generator_g(p: &SisParams, s: f64) -> f64 {
    let int_h = compute_jump_integrals(&p.jumps).int_h;
    -(-p.beta * s + p.mu + p.lambda + s * int_h) * (1.0 - s)
}

/// Generator of `f(x) = c₁(x₁ − 1)² + c₂x₂² + c₃x₃²` for the SIRS process.
///
/// The jump integrals only involve `∫j dν` and `∫j² dν` once
/// `c₂(x₂ − j x₂)² − c₂x₂²` and `c₃(x₃ + j x₂)² − c₃x₃²` are expanded.
pub fn sirs_generator_f(p: &SirsParams, c: &LyapunovConstants, x: &SimplexState) -> Result<f64> {
    if x.dim() != 3 {
        return Err(invalid("the SIRS generator needs a 3-coordinate state"));
    }
    let ints = compute_jump_integrals(&p.jumps);
    let (x1, x2, x3) = (x.s(), x.i(), x.r());
    let drift = [
        -p.beta * x1 * x2 + p.delta * x3,
        p.beta * x1 * x2 - p.lambda * x2,
        p.lambda * x2 - p.delta * x3,
    ];
    let first_order = drift[0] * 2.0 * c.c1 * (x1 - 1.0) + drift[1] * 2.0 * c.c2 * x2 + drift[2] * 2.0 * c.c3 * x3;
    let second_order = p.sigma * p.sigma * x1 * x1 * x2 * x2 * (c.c1 + c.c2);
    let jumps = c.c2 * x2 * x2 * (ints.int_h_sq - 2.0 * ints.int_h)
        + c.c3 * (2.0 * ints.int_h * x2 * x3 + ints.int_h_sq * x2 * x2);
    Ok(first_order + second_order + jumps)
}

/// `f(x) = c₁(x₁ − 1)² + c₂x₂² + c₃x₃²`.
pub fn sirs_lyapunov_f(c: &LyapunovConstants, x: &SimplexState) -> f64 {
    c.c1 * (x.s() - 1.0).powi(2) + c.c2 * x.i().powi(2) + c.c3 * x.r().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::JumpSpec;
    use proptest::prelude::*;

    fn sis(beta: f64, mu: f64, lambda: f64, sigma: f64, mass: f64, h: f64) -> SisParams {
        SisParams::new(beta, mu, lambda, sigma, JumpSpec::constant(mass, h).unwrap()).unwrap()
    }

    fn sirs(beta: f64, sigma: f64, lambda: f64, delta: f64, mass: f64, j: f64) -> SirsParams {
        SirsParams::new(beta, lambda, delta, sigma, JumpSpec::constant(mass, j).unwrap()).unwrap()
    }

    fn fig3a() -> SirsParams {
        sirs(0.3, 0.1, 0.29, 0.4, 1.0, 0.3)
    }

    #[test]
    fn negative_jump_condition_figures() {
        let v = sis_dfe_condition(&sis(0.1, 0.2, 0.3, 0.3, 1.0, -0.01)).unwrap();
        assert!(v.condition_holds);
        assert!((v.threshold_value - 0.49).abs() < 1e-12);
        let v = sis_dfe_condition(&sis(0.4, 0.15, 0.3, 0.3, 1.0, -0.1)).unwrap();
        assert!(!v.condition_holds);
        assert!((v.threshold_value - 0.35).abs() < 1e-12);
        assert!((sum_terms(&v.detail) - v.threshold_value).abs() < 1e-12);
    }

    #[test]
    fn zero_contact_rate_always_holds() {
        let v = sis_dfe_condition(&sis(0.0, 0.2, 0.3, 0.3, 1.0, -0.1)).unwrap();
        assert!(v.condition_holds);
        assert_eq!(v.margin, v.threshold_value);
    }

    #[test]
    fn negative_condition_rejects_nonnegative_mean() {
        let e = sis_dfe_condition(&sis(0.4, 0.1, 0.3, 0.3, 0.5, 0.1)).unwrap_err();
        assert!(matches!(e, Error::NotApplicable(_)));
        let e = sis_dfe_condition(&sis(0.4, 0.1, 0.3, 0.3, 0.0, -0.1)).unwrap_err();
        assert!(matches!(e, Error::NotApplicable(_)));
    }

    #[test]
    fn positive_jump_condition_fig1b() {
        let v = sis_dfe_condition_positive(&sis(0.4, 0.1, 0.3, 0.3, 0.5, 0.1)).unwrap();
        assert!(v.verdict.condition_holds);
        assert!((v.verdict.threshold_value - 0.4).abs() < 1e-12);
        let phi = v.phi.unwrap();
        assert!(phi > 0.0 && phi < 1.0);
        assert!(0.4 < 0.1 + 0.3 + phi * 0.05);
        // smallest grid point: the one below must fail
        let below = phi - PHI_GRID_STEP;
        assert!(below <= 0.0 || 0.4 >= 0.1 + 0.3 + below * 0.05);
    }

    #[test]
    fn positive_jump_condition_edges() {
        let v = sis_dfe_condition_positive(&sis(0.3, 0.1, 0.3, 0.3, 1.0, 0.0)).unwrap();
        assert!(v.verdict.condition_holds);
        assert_eq!(v.phi, Some(PHI_GRID_STEP));
        // β = μ + λ + ∫h dν: no φ < 1 works
        let v = sis_dfe_condition_positive(&sis(0.5, 0.1, 0.3, 0.3, 1.0, 0.1)).unwrap();
        assert!(!v.verdict.condition_holds);
        assert_eq!(v.phi, None);
        let v = sis_dfe_condition_positive(&sis(0.8, 0.1, 0.2, 0.3, 2.0, 0.1)).unwrap();
        assert!(!v.verdict.condition_holds);
        assert!((v.verdict.threshold_value - 0.3).abs() < 1e-12);
        let e = sis_dfe_condition_positive(&sis(0.1, 0.2, 0.3, 0.3, 1.0, -0.01)).unwrap_err();
        assert!(matches!(e, Error::NotApplicable(_)));
    }

    #[test]
    fn sirs_condition_figures() {
        let v = sirs_dfe_condition(&fig3a());
        assert!(v.condition_holds);
        assert!((v.threshold_value - 0.4).abs() < 1e-12);
        assert!((v.branches[0].value - 0.54).abs() < 1e-12);
        let v = sirs_dfe_condition(&sirs(0.8, 0.2, 0.1, 0.1, 0.5, 0.1));
        assert!(!v.condition_holds);
        assert!((v.threshold_value - 0.1).abs() < 1e-12);
        assert!((v.branches[0].value - 0.1275).abs() < 1e-12);
        let v = sirs_dfe_condition(&sirs(0.1, 0.0, 0.25, 0.7, 1.0, 0.0));
        assert!((v.threshold_value - 0.25).abs() < 1e-15);
        assert!((sum_terms(&v.detail) - v.threshold_value).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_constants_fig3a() {
        let p = fig3a();
        let c = find_lyapunov_constants(&p).unwrap();
        assert!((c.kappa - 0.025).abs() < 1e-15);
        assert_eq!(c.c3, 1.0);
        assert!(c.c1 > 11.8 && (c.c1 - 1.01 * 11.8).abs() < 1e-9);
        let c2_bound = (c.c1 * (0.005 + 0.3) + 0.09) / 0.24;
        assert!(c.c2 > c2_bound && (c.c2 - 1.01 * c2_bound).abs() < 1e-9);
        assert!(c.is_feasible(&p));
        let worse = LyapunovConstants { c1: 11.0, ..c };
        assert!(!worse.is_feasible(&p));
    }

    #[test]
    fn lyapunov_constants_infeasible_fig3b() {
        let e = find_lyapunov_constants(&sirs(0.8, 0.2, 0.1, 0.1, 0.5, 0.1)).unwrap_err();
        assert!(matches!(e, Error::Infeasible(_)));
    }

    #[test]
    fn sis_generator_values() {
        let p = sis(0.1, 0.2, 0.3, 0.3, 1.0, -0.01);
        assert_eq!(sis_generator_g(&p, 1.0), 0.0);
        assert!((sis_generator_g(&p, 0.6) + 0.1736).abs() < 1e-15);
    }

    #[test]
    fn sis_generator_negative_on_grid_when_condition_holds() {
        let p = sis(0.1, 0.2, 0.3, 0.3, 1.0, -0.01);
        let v = sis_dfe_condition(&p).unwrap();
        assert!(v.condition_holds);
        let int_h = -0.01;
        for k in 0..10_000 {
            let s = k as f64 / 10_000.0;
            let g = sis_generator_g(&p, s);
            assert!(g < 0.0, "L0 g({s}) = {g}");
            let bound = -(-p.beta + p.mu + p.lambda + int_h) * (1.0 - s);
            assert!(g <= bound + 1e-15);
        }
    }

    #[test]
    fn sirs_generator_vanishes_at_disease_free_point() {
        let p = fig3a();
        let c = find_lyapunov_constants(&p).unwrap();
        let e1 = SimplexState::sirs(1.0, 0.0, 0.0).unwrap();
        assert_eq!(sirs_generator_f(&p, &c, &e1).unwrap(), 0.0);
        assert_eq!(sirs_lyapunov_f(&c, &e1), 0.0);
    }

    #[test]
    fn sirs_generator_negative_on_interior_grid() {
        let p = fig3a();
        let c = find_lyapunov_constants(&p).unwrap();
        // 1035 interior points of a barycentric lattice with spacing 1/47
        let n = 47;
        let mut count = 0;
        for a in 1..n {
            for b in 1..(n - a) {
                let (x2, x3) = (a as f64 / n as f64, b as f64 / n as f64);
                let x = SimplexState::sirs(1.0 - x2 - x3, x2, x3).unwrap();
                let lf = sirs_generator_f(&p, &c, &x).unwrap();
                assert!(lf < 0.0, "𝔏f({:?}) = {lf}", x.coords());
                count += 1;
            }
        }
        assert!(count >= 1000);
    }

    #[test]
    fn sirs_generator_pure_drift_polynomial() {
        let p = sirs(0.7, 0.0, 0.2, 0.5, 1.0, 0.0);
        let c = LyapunovConstants {
            c1: 1.3,
            c2: 2.9,
            c3: 0.6,
            kappa: 0.1,
        };
        let (b, l, d) = (0.7, 0.2, 0.5);
        for (x1, x2) in [(0.2, 0.5), (0.61, 0.13), (0.05, 0.9)] {
            let x3 = 1.0 - x1 - x2;
            let x = SimplexState::sirs(x1, x2, x3).unwrap();
            let expanded = -2.0 * c.c1 * b * x1 * x1 * x2 + 2.0 * c.c1 * b * x1 * x2 + 2.0 * c.c1 * d * x1 * x3
                - 2.0 * c.c1 * d * x3
                + 2.0 * c.c2 * b * x1 * x2 * x2
                - 2.0 * c.c2 * l * x2 * x2
                + 2.0 * c.c3 * l * x2 * x3
                - 2.0 * c.c3 * d * x3 * x3;
            let got = sirs_generator_f(&p, &c, &x).unwrap();
            assert!((got - expanded).abs() < 1e-14, "{got} vs {expanded}");
        }
    }

    #[test]
    fn dfe_verdict_dispatch() {
        let v = dfe_verdict(&Model::Sis(sis(0.1, 0.2, 0.3, 0.3, 1.0, -0.01))).unwrap();
        assert!((v.threshold_value - 0.49).abs() < 1e-12);
        let v = dfe_verdict(&Model::Sis(sis(0.4, 0.1, 0.3, 0.3, 0.5, 0.1))).unwrap();
        assert!(v.condition_holds);
        assert_eq!(deterministic_threshold(&Model::Sis(sis(0.8, 0.1, 0.2, 0.3, 2.0, 0.1))), 0.1 + 0.2);
    }

    proptest! {
        #[test]
        fn margins_monotone_in_beta_and_lambda(
            beta in 0.0f64..1.0, mu in 0.0f64..0.5, lambda in 0.0f64..0.5,
            delta in 0.0f64..1.0, sigma in 0.0f64..0.5, h in 0.01f64..0.9, mass in 0.01f64..2.0,
            bump in 0.001f64..0.2,
        ) {
            let neg = |b: f64, l: f64| sis_dfe_condition(&sis(b, mu, l, sigma, mass, -h)).unwrap().margin;
            prop_assert!(neg(beta + bump, lambda) < neg(beta, lambda));
            prop_assert!(neg(beta, lambda + bump) > neg(beta, lambda));

            let pos = |b: f64, l: f64| sis_dfe_condition_positive(&sis(b, mu, l, sigma, mass, h)).unwrap().verdict.margin;
            prop_assert!(pos(beta + bump, lambda) < pos(beta, lambda));
            prop_assert!(pos(beta, lambda + bump) > pos(beta, lambda));

            let s = |b: f64, l: f64| sirs_dfe_condition(&sirs(b, sigma, l, delta, mass, h));
            prop_assert!(s(beta + bump, lambda).margin < s(beta, lambda).margin);
            // λ only moves the threshold while the noise-adjusted branch binds
            let base = s(beta, lambda);
            let raised = s(beta, lambda + bump);
            prop_assert!(raised.margin >= base.margin);
            if base.branches[0].value + bump <= delta {
                prop_assert!(raised.margin > base.margin);
            }
        }

        #[test]
        fn verdict_invariants(beta in 0.0f64..1.0, lambda in 0.0f64..0.5, delta in 0.0f64..1.0, sigma in 0.0f64..0.5, j in 0.0f64..0.9) {
            let v = sirs_dfe_condition(&sirs(beta, sigma, lambda, delta, 1.0, j));
            prop_assert_eq!(v.condition_holds, v.margin > 0.0);
            prop_assert!((sum_terms(&v.detail) - v.threshold_value).abs() < 1e-12);
            if v.condition_holds {
                let c = find_lyapunov_constants(&sirs(beta, sigma, lambda, delta, 1.0, j));
                if let Ok(c) = c {
                    prop_assert!(c.is_feasible(&sirs(beta, sigma, lambda, delta, 1.0, j)));
                }
            }
        }
    }
}
