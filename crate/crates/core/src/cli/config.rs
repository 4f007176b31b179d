//! TOML experiment configuration and its validation against model and task.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::analysis::ExitProblem;
use crate::error::{Error, Result};
use crate::integrator::{BoundaryPolicy, SimConfig};
use crate::kernel::{JumpFunction, JumpSpec, MarkDistribution};
use crate::models::{Model, SimplexState, SirsParams, SisParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Sis,
    Sirs,
    SisDeterministic,
    SirsDeterministic,
}

impl ModelKind {
    fn is_deterministic(self) -> bool {
        matches!(self, ModelKind::SisDeterministic | ModelKind::SirsDeterministic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Simulate,
    Ensemble,
    Stability,
    ExitProb,
    GeneratorCheck,
    ReproduceFigures,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

fn default_marks() -> MarkDistribution {
    MarkDistribution::PointMass { at: 0.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpsSection {
    pub mass: f64,
    #[serde(default = "default_marks")]
    pub mark_distribution: MarkDistribution,
    pub jump_function: JumpFunction,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_policy: Option<BoundaryPolicy>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_probe: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
}

/// The file format: top-level `task`, `model`, `initial`, then the
/// `[params]`, `[jumps]`, `[sim]` and `[options]` sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jumps: Option<JumpsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionsSection>,
}

/// A validated experiment, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Simulate {
        model: Model,
        x0: SimplexState,
        sim: SimConfig,
    },
    Ensemble {
        model: Model,
        x0: SimplexState,
        sim: SimConfig,
        n_paths: usize,
        i_threshold: Option<f64>,
        epsilon: Option<f64>,
    },
    Stability {
        model: Model,
    },
    ExitProb {
        problem: ExitProblem,
        x0: f64,
        monte_carlo: Option<(SimConfig, usize)>,
    },
    GeneratorCheck {
        model: Model,
        x: SimplexState,
        dt_probe: f64,
        n_samples: usize,
        seed: u64,
    },
    ReproduceFigures {
        seed: Option<u64>,
    },
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Names of the fields that are set, via the serialized form.
fn present_keys<T: Serialize>(section: &T) -> BTreeSet<String> {
    match serde_json::to_value(section) {
        Ok(serde_json::Value::Object(map)) => map.keys().cloned().collect(),
        _ => BTreeSet::new(),
    }
}

fn check_keys(section: &str, present: &BTreeSet<String>, required: &[&str], optional: &[&str], context: &str) -> Result<()> {
    for key in required {
        if !present.contains(*key) {
            return Err(config_err(format!("[{section}] needs `{key}` for {context}")));
        }
    }
    for key in present {
        if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
            return Err(config_err(format!("[{section}] key `{key}` is not used by {context}")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string().trim_end().replace('\n', " ")))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    fn model_kind(&self) -> Result<ModelKind> {
        self.model.ok_or_else(|| config_err(format!("task {:?} needs `model`", self.task)))
    }

    fn build_model(&self) -> Result<Model> {
        let kind = self.model_kind()?;
        let params = self.params.clone().unwrap_or_default();
        let present = present_keys(&params);
        let context = format!("model {kind:?}");
        let get = |k: Option<f64>| k.unwrap_or(0.0);
        let jumps = match (&self.jumps, kind.is_deterministic()) {
            (Some(_), true) => return Err(config_err("deterministic models take no [jumps] section")),
            (Some(j), false) => JumpSpec::new(j.mass, j.mark_distribution.clone(), j.jump_function.clone())
                .map_err(|e| config_err(format!("[jumps]: {e}")))?,
            (None, _) => JumpSpec::none(),
        };
        let model = match kind {
            ModelKind::Sis | ModelKind::SisDeterministic => {
                let required: &[&str] = if kind.is_deterministic() {
                    &["beta", "mu", "lambda"]
                } else {
                    &["beta", "mu", "lambda", "sigma"]
                };
                check_keys("params", &present, required, &[], &context)?;
                SisParams::new(get(params.beta), get(params.mu), get(params.lambda), get(params.sigma), jumps)
                    .map(Model::Sis)
            }
            ModelKind::Sirs | ModelKind::SirsDeterministic => {
                let required: &[&str] = if kind.is_deterministic() {
                    &["beta", "lambda", "delta"]
                } else {
                    &["beta", "lambda", "delta", "sigma"]
                };
                check_keys("params", &present, required, &[], &context)?;
                SirsParams::new(get(params.beta), get(params.lambda), get(params.delta), get(params.sigma), jumps)
                    .map(Model::Sirs)
            }
        };
        model.map_err(|e| config_err(format!("[params]: {e}")))
    }

    fn initial_state(&self, model: &Model) -> Result<SimplexState> {
        let coords = self
            .initial
            .as_ref()
            .ok_or_else(|| config_err(format!("task {:?} needs `initial`", self.task)))?;
        if coords.len() != model.dim() {
            return Err(config_err(format!(
                "`initial` needs {} coordinates for the {} model, got {}",
                model.dim(),
                model.name(),
                coords.len()
            )));
        }
        SimplexState::from_slice(coords).map_err(|e| config_err(format!("`initial`: {e}")))
    }

    fn sim_config(&self, required: &[&str], optional: &[&str]) -> Result<SimConfig> {
        let sim = self.sim.clone().unwrap_or_default();
        check_keys("sim", &present_keys(&sim), required, optional, &format!("task {:?}", self.task))?;
        let cfg = SimConfig {
            t_end: sim.t_end.unwrap_or(0.0),
            dt: sim.dt.unwrap_or(SimConfig::DEFAULT_DT),
            seed: sim.seed.unwrap_or(0),
            boundary_policy: sim.boundary_policy.unwrap_or_default(),
            record_stride: sim.record_stride.unwrap_or(1),
        };
        if required.contains(&"t_end") {
            cfg.validate().map_err(|e| config_err(format!("[sim]: {e}")))?;
        }
        Ok(cfg)
    }

    fn options(&self, required: &[&str], optional: &[&str]) -> Result<OptionsSection> {
        let opts = self.options.clone().unwrap_or_default();
        check_keys("options", &present_keys(&opts), required, optional, &format!("task {:?}", self.task))?;
        Ok(opts)
    }

    fn forbid(&self, what: &str, present: bool) -> Result<()> {
        if present {
            Err(config_err(format!("task {:?} does not use `{what}`", self.task)))
        } else {
            Ok(())
        }
    }

    /// Validates every key against the selected model and task.
    pub fn resolve(&self) -> Result<Task> {
        const SIM_ALL: [&str; 4] = ["dt", "seed", "record_stride", "boundary_policy"];
        const SIM_ENSEMBLE: [&str; 3] = ["dt", "seed", "boundary_policy"];
        match self.task {
            TaskKind::Simulate => {
                let model = self.build_model()?;
                let x0 = self.initial_state(&model)?;
                let sim = self.sim_config(&["t_end"], &SIM_ALL)?;
                self.options(&[], &[])?;
                Ok(Task::Simulate { model, x0, sim })
            }
            TaskKind::Ensemble => {
                let model = self.build_model()?;
                let x0 = self.initial_state(&model)?;
                let sim = self.sim_config(&["t_end"], &SIM_ENSEMBLE)?;
                let o = self.options(&["n_paths"], &["i_threshold", "epsilon"])?;
                if o.i_threshold.is_none() && o.epsilon.is_none() {
                    return Err(config_err("task Ensemble needs `i_threshold` or `epsilon` in [options]"));
                }
                Ok(Task::Ensemble {
                    model,
                    x0,
                    sim,
                    n_paths: o.n_paths.unwrap_or(0),
                    i_threshold: o.i_threshold,
                    epsilon: o.epsilon,
                })
            }
            TaskKind::Stability => {
                let model = self.build_model()?;
                self.forbid("initial", self.initial.is_some())?;
                self.forbid("[sim]", self.sim.is_some())?;
                self.options(&[], &[])?;
                Ok(Task::Stability { model })
            }
            TaskKind::ExitProb => {
                if self.model_kind()? != ModelKind::Sis {
                    return Err(config_err("task ExitProb needs model = \"sis\""));
                }
                let Model::Sis(params) = self.build_model()? else {
                    unreachable!("an SIS model kind builds an SIS model")
                };
                self.forbid("initial", self.initial.is_some())?;
                let o = self.options(&["x1", "x2", "x0", "grid_n"], &["n_paths"])?;
                let problem = ExitProblem::new(
                    o.x1.unwrap_or(0.0),
                    o.x2.unwrap_or(0.0),
                    o.grid_n.unwrap_or(0),
                    params,
                )
                .map_err(|e| config_err(format!("[options]: {e}")))?;
                let monte_carlo = match o.n_paths {
                    Some(n) => Some((self.sim_config(&["t_end"], &SIM_ENSEMBLE)?, n)),
                    None => {
                        self.forbid("[sim]", self.sim.is_some())?;
                        None
                    }
                };
                Ok(Task::ExitProb {
                    problem,
                    x0: o.x0.unwrap_or(0.0),
                    monte_carlo,
                })
            }
            TaskKind::GeneratorCheck => {
                let model = self.build_model()?;
                let x = self.initial_state(&model)?;
                let sim = self.sim_config(&[], &["seed"])?;
                let o = self.options(&["n_samples"], &["dt_probe"])?;
                Ok(Task::GeneratorCheck {
                    model,
                    x,
                    dt_probe: o.dt_probe.unwrap_or(SimConfig::DEFAULT_DT),
                    n_samples: o.n_samples.unwrap_or(0),
                    seed: sim.seed,
                })
            }
            TaskKind::ReproduceFigures => {
                self.forbid("model", self.model.is_some())?;
                self.forbid("initial", self.initial.is_some())?;
                self.forbid("[params]", self.params.is_some())?;
                self.forbid("[jumps]", self.jumps.is_some())?;
                self.forbid("[options]", self.options.is_some())?;
                let seed = self.sim.as_ref().and_then(|s| s.seed);
                self.sim_config(&[], &["seed"])?;
                Ok(Task::ReproduceFigures { seed })
            }
        }
    }
}

/// Overrides the master seed of a resolved task.
pub fn override_seed(task: &mut Task, new_seed: u64) {
    match task {
        Task::Simulate { sim, .. } | Task::Ensemble { sim, .. } => sim.seed = new_seed,
        Task::ExitProb { monte_carlo, .. } => {
            if let Some((sim, _)) = monte_carlo {
                sim.seed = new_seed;
            }
        }
        Task::GeneratorCheck { seed, .. } => *seed = new_seed,
        Task::ReproduceFigures { seed } => *seed = Some(new_seed),
        Task::Stability { .. } => {}
    }
}
