//! Run configuration: JSON schema, validation and problem assembly.
//!
//! The schema is strict: unknown keys are rejected, and every numeric
//! constraint of the solver is re-checked at parse time with a
//! field-path-labeled message.

use fracrothe::mms::{build_mms_spec, ManufacturedSolution};
use fracrothe::spaceop::Negated;
use fracrothe::stepper::{DelayHistory, ProblemSpec};
use fracrothe::{DirichletLaplacian1D, FractionalTerm, TimeGrid};
use serde::Deserialize;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub delay: f64,
    pub horizon: f64,
    pub subdivisions: usize,
    pub terms: Vec<TermConfig>,
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default)]
    pub history: Option<HistoryConfig>,
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub a: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    #[serde(default = "default_interior_nodes")]
    pub interior_nodes: usize,
    #[serde(default = "default_length")]
    pub length: f64,
    /// Fault injection: negate the operator. The negated operator is
    /// not accretive, so `verify` must fail on such a config.
    #[serde(default)]
    pub flip_sign: bool,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self {
            interior_nodes: default_interior_nodes(),
            length: default_length(),
            flip_sign: false,
        }
    }
}

fn default_interior_nodes() -> usize {
    64
}

fn default_length() -> f64 {
    1.0
}

fn default_mode() -> usize {
    1
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_gamma() -> f64 {
    2.0
}

fn default_beta() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum HistoryConfig {
    /// `chi(t, x) = amplitude * sin(k*pi*x/L)`, constant in time.
    SineMode {
        #[serde(default = "default_mode")]
        k: usize,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// `chi(t, x) = (c_0 + c_1 t + ...) * sin(pi*x/L)`.
    Polynomial { coefficients: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingConfig {
    /// `f(t, w) = w`.
    IdentityDelay,
    /// `f(t, w) = value` at every interior node.
    Constant { value: f64 },
    /// Manufactured solution `(|t|^gamma + beta) sin(k*pi*x/L)`; the
    /// history is derived from the exact solution and the `history`
    /// field must be omitted.
    Mms {
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_mode")]
        k: usize,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub trajectory_path: Option<PathBuf>,
    pub diagnostics_path: Option<PathBuf>,
}

#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    Validation(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "config parse error: {m}"),
            ConfigError::Validation(m) => write!(f, "config validation error: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parses and validates a JSON config.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig =
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    validate(&cfg).map_err(ConfigError::Validation)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), String> {
    if !(cfg.delay > 0.0) || !cfg.delay.is_finite() {
        return Err("delay must be positive and finite".into());
    }
    if !(cfg.horizon > 0.0) || !cfg.horizon.is_finite() {
        return Err("horizon must be positive and finite".into());
    }
    if cfg.delay > cfg.horizon {
        return Err("delay must not exceed horizon (the scheme requires nu <= T)".into());
    }
    if cfg.subdivisions == 0 {
        return Err("subdivisions must be >= 1".into());
    }
    let h = cfg.delay / cfg.subdivisions as f64;
    if h >= cfg.delay.min(1.0) {
        return Err(format!(
            "subdivisions = {} gives step h = {h} but h must be < min(1, delay) = {}",
            cfg.subdivisions,
            cfg.delay.min(1.0)
        ));
    }
    for (i, t) in cfg.terms.iter().enumerate() {
        if !(t.a >= 0.0) || !t.a.is_finite() {
            return Err(format!("terms[{i}].a must be nonnegative"));
        }
        if !(t.alpha > 0.0 && t.alpha < 1.0) {
            return Err(format!("terms[{i}].alpha must be in (0,1)"));
        }
    }
    if cfg.space.interior_nodes == 0 {
        return Err("space.interior_nodes must be >= 1".into());
    }
    if !(cfg.space.length > 0.0) || !cfg.space.length.is_finite() {
        return Err("space.length must be positive".into());
    }
    match &cfg.forcing {
        ForcingConfig::Mms { gamma, k, .. } => {
            if !(*gamma > 1.0) {
                return Err("forcing.gamma must be > 1".into());
            }
            if *k == 0 {
                return Err("forcing.k must be >= 1".into());
            }
            if cfg.history.is_some() {
                return Err(
                    "history must be omitted with forcing.preset = \"mms\" (the exact solution supplies it)"
                        .into(),
                );
            }
        }
        _ => {
            match &cfg.history {
                None => {
                    return Err(
                        "history is required unless forcing.preset = \"mms\"".into(),
                    )
                }
                Some(HistoryConfig::SineMode { k, amplitude }) => {
                    if *k == 0 {
                        return Err("history.k must be >= 1".into());
                    }
                    if !amplitude.is_finite() {
                        return Err("history.amplitude must be finite".into());
                    }
                }
                Some(HistoryConfig::Polynomial { coefficients }) => {
                    if coefficients.is_empty() {
                        return Err("history.coefficients must be non-empty".into());
                    }
                }
            }
        }
    }
    Ok(())
}

/// Fully assembled problem plus the pieces commands need afterwards.
pub struct BuiltProblem {
    pub spec: ProblemSpec,
    pub laplacian: DirichletLaplacian1D,
    pub mms: Option<ManufacturedSolution>,
}

impl RunConfig {
    pub fn terms(&self) -> Result<Vec<FractionalTerm>, fracrothe::Error> {
        self.terms
            .iter()
            .map(|t| FractionalTerm::new(t.a, t.alpha))
            .collect()
    }

    pub fn grid(&self) -> Result<TimeGrid, fracrothe::Error> {
        TimeGrid::new(self.delay, self.horizon, self.subdivisions)
    }

    /// Builds the problem, optionally overriding the subdivision count
    /// (used by convergence studies).
    pub fn build_with_subdivisions(&self, subdivisions: usize) -> anyhow::Result<BuiltProblem> {
        let grid = TimeGrid::new(self.delay, self.horizon, subdivisions)?;
        let terms = self.terms()?;
        let lap = DirichletLaplacian1D::new(self.space.interior_nodes, self.space.length)?;

        if let ForcingConfig::Mms { gamma, beta, k } = self.forcing {
            let ms = ManufacturedSolution::new(gamma, beta, k, self.space.length)?;
            let mut spec = build_mms_spec(&ms, terms, grid, self.space.interior_nodes)?;
            if self.space.flip_sign {
                spec.operator = Arc::new(Negated(lap.clone()));
            }
            return Ok(BuiltProblem {
                spec,
                laplacian: lap,
                mms: Some(ms),
            });
        }

        let length = self.space.length;
        let history_src: fracrothe::stepper::StateFn = match self
            .history
            .as_ref()
            .expect("validated: history present")
        {
            HistoryConfig::SineMode { k, amplitude } => {
                let shape =
                    lap.discretize(|x| (*k as f64 * std::f64::consts::PI * x / length).sin());
                let amp = *amplitude;
                Arc::new(move |_t| shape.iter().map(|s| amp * s).collect())
            }
            HistoryConfig::Polynomial { coefficients } => {
                let shape = lap.discretize(|x| (std::f64::consts::PI * x / length).sin());
                let coeffs = coefficients.clone();
                Arc::new(move |t: f64| {
                    let p = coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
                    shape.iter().map(|s| p * s).collect()
                })
            }
        };
        let history = DelayHistory::from_fn(&grid, history_src);

        let forcing: fracrothe::stepper::ForcingFn = match self.forcing {
            ForcingConfig::IdentityDelay => Arc::new(|_t, w: &[f64]| w.to_vec()),
            ForcingConfig::Constant { value } => {
                let dim = self.space.interior_nodes;
                Arc::new(move |_t, _w: &[f64]| vec![value; dim])
            }
            ForcingConfig::Mms { .. } => unreachable!("handled above"),
        };

        let operator: Arc<dyn fracrothe::SpatialOperator> = if self.space.flip_sign {
            Arc::new(Negated(lap.clone()))
        } else {
            Arc::new(lap.clone())
        };
        let spec = ProblemSpec::new(grid, terms, operator, forcing, history)?;
        Ok(BuiltProblem {
            spec,
            laplacian: lap,
            mms: None,
        })
    }

    pub fn build(&self) -> anyhow::Result<BuiltProblem> {
        self.build_with_subdivisions(self.subdivisions)
    }
}

/// Config equivalent of the delay-diffusion demo instance (heat
/// operator on `[0,1]`, delay and horizon `2*pi`, `f(t,w) = w`,
/// history `sin(pi x) (1 + (lambda_1 - 1)(t/(2 pi))^2)`). The quadratic
/// history is compatible with the equation at `t = 0`, so the solution
/// starts without a kink.
pub fn example51_config(subdivisions: usize, interior_nodes: usize) -> RunConfig {
    let two_pi = 2.0 * std::f64::consts::PI;
    let lambda_1 = DirichletLaplacian1D::new(interior_nodes, 1.0)
        .expect("valid interior node count")
        .eigenvalue(1);
    RunConfig {
        delay: two_pi,
        horizon: two_pi,
        subdivisions,
        terms: vec![TermConfig { a: 1.0, alpha: 0.5 }],
        space: SpaceConfig {
            interior_nodes,
            length: 1.0,
            flip_sign: false,
        },
        history: Some(HistoryConfig::Polynomial {
            coefficients: vec![1.0, 0.0, (lambda_1 - 1.0) / (two_pi * two_pi)],
        }),
        forcing: ForcingConfig::IdentityDelay,
        output: OutputConfig::default(),
        seed: 0,
    }
}
