//! The six built-in parameter sets used by the figure harness.

use crate::kernel::JumpSpec;
use crate::models::{Model, SimplexState, SirsParams, SisParams};

#[derive(Debug, Clone)]
pub struct Panel {
    pub name: &'static str,
    pub model: Model,
    pub x0: SimplexState,
    pub seed: u64,
}

fn sis(beta: f64, mu: f64, lambda: f64, sigma: f64, mass: f64, h: f64) -> Model {
    let jumps = JumpSpec::constant(mass, h).expect("built-in jump spec is valid");
    Model::Sis(SisParams::new(beta, mu, lambda, sigma, jumps).expect("built-in parameters are valid"))
}

fn sirs(beta: f64, sigma: f64, lambda: f64, delta: f64, mass: f64, j: f64) -> Model {
    let jumps = JumpSpec::constant(mass, j).expect("built-in jump spec is valid");
    Model::Sirs(SirsParams::new(beta, lambda, delta, sigma, jumps).expect("built-in parameters are valid"))
}

/// Panels `fig1a`, `fig1b`, `fig2a`, `fig2b`, `fig3a`, `fig3b` in that order.
pub fn builtin_panels() -> Vec<Panel> {
    let sis0 = SimplexState::sis(0.6, 0.4).expect("valid state");
    let sirs0 = SimplexState::sirs(0.3, 0.6, 0.1).expect("valid state");
    vec![
        Panel { name: "fig1a", model: sis(0.1, 0.2, 0.3, 0.3, 1.0, -0.01), x0: sis0, seed: 101 },
        Panel { name: "fig1b", model: sis(0.4, 0.1, 0.3, 0.3, 0.5, 0.1), x0: sis0, seed: 102 },
        Panel { name: "fig2a", model: sis(0.4, 0.15, 0.3, 0.3, 1.0, -0.1), x0: sis0, seed: 201 },
        Panel { name: "fig2b", model: sis(0.8, 0.1, 0.2, 0.3, 2.0, 0.1), x0: sis0, seed: 202 },
        Panel { name: "fig3a", model: sirs(0.3, 0.1, 0.29, 0.4, 1.0, 0.3), x0: sirs0, seed: 301 },
        Panel { name: "fig3b", model: sirs(0.8, 0.2, 0.1, 0.1, 0.5, 0.1), x0: sirs0, seed: 302 },
    ]
}

/// Looks up a built-in panel by name.
pub fn panel(name: &str) -> Option<Panel> {
    builtin_panels().into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_distinct_panels() {
        let panels = builtin_panels();
        assert_eq!(panels.len(), 6);
        for (k, p) in panels.iter().enumerate() {
            assert_eq!(p.x0.dim(), p.model.dim());
            assert!(panels[k + 1..].iter().all(|q| q.seed != p.seed && q.name != p.name));
        }
        assert!(panel("fig3b").is_some());
        assert!(panel("fig4").is_none());
    }
}
