#![allow(dead_code)]

use std::path::PathBuf;

use levy_epidemic::kernel::JumpSpec;
use levy_epidemic::models::SisParams;

pub fn sis(beta: f64, mu: f64, lambda: f64, sigma: f64, mass: f64, h: f64) -> SisParams {
    SisParams::new(beta, mu, lambda, sigma, JumpSpec::constant(mass, h).unwrap()).unwrap()
}

/// Exit probability of the jump-free SIS diffusion from its scale function.
///
/// With `c = μ + λ`, `2α/γ² = (2/σ²)(c − βy)/(y²(1 − y))` integrates to
/// `(c − β) ln(y/(1 − y)) − c/y`, so `s′` is explicit and only the outer
/// integral needs quadrature (composite Simpson).
pub fn scale_function_exit(beta: f64, mu: f64, lambda: f64, sigma: f64, x1: f64, x2: f64, x: f64) -> f64 {
    let c = mu + lambda;
    let log_scale = |y: f64| -(2.0 / (sigma * sigma)) * ((c - beta) * (y / (1.0 - y)).ln() - c / y);
    let shift = {
        let n = 1000;
        (0..=n)
            .map(|k| log_scale(x1 + (x2 - x1) * k as f64 / n as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let density = |y: f64| (log_scale(y) - shift).exp();
    let simpson = |a: f64, b: f64| {
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut acc = density(a) + density(b);
        for k in 1..n {
            acc += density(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    simpson(x1, x) / simpson(x1, x2)
}

pub fn binary() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_levy-epidemic"))
}
