//! Run configuration files and the three shipped presets.
//!
//! `hidden_layers` counts tanh layers only; the linear output layer is
//! implicit.

use std::path::{Path, PathBuf};

use fpinn_core::{Activation, NetworkConfig, Problem, ProblemKind, SchemeKind, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub hidden_layers: usize,
    pub neurons_per_layer: usize,
    #[serde(default)]
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollocationSpec {
    /// Nodes per axis, time last.
    pub points_per_axis: Vec<usize>,
    pub n_ic: usize,
    pub n_bc: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    pub lr_values: Vec<f64>,
    pub lr_change_iters: Vec<u64>,
    #[serde(default)]
    pub max_iters: Option<u64>,
    #[serde(default)]
    pub max_wall_seconds: Option<f64>,
    #[serde(default)]
    pub loss_tolerance: Option<f64>,
    #[serde(default = "default_log_every")]
    pub log_every: u64,
    /// Write an intermediate checkpoint every this many updates (multiple of `log_every`).
    #[serde(default)]
    pub checkpoint_every: Option<u64>,
}

fn default_log_every() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub alpha: f64,
    pub scheme: SchemeKind,
    /// Seeds network initialisation.
    pub seed: u64,
    pub network: NetworkSpec,
    pub collocation: CollocationSpec,
    pub train: TrainSpec,
    /// Held-out evaluation grid, nodes per axis, time last.
    pub eval_grid: Vec<usize>,
    /// Overrides the problem's default final time.
    #[serde(default)]
    pub time_window: Option<f64>,
    /// Relative paths resolve against `FPINN_OUTPUT_ROOT` when set.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

pub const PRESETS: [&str; 3] = ["fode", "fpde2d", "fpde3d"];

/// Hyperparameter presets for the three benchmarks.
///
/// fODE runs on an iteration budget; the PDE presets carry the 10 and 30
/// minute wall budgets of the original studies.
pub fn preset(name: &str) -> Option<RunConfig> {
    let kind: ProblemKind = name.parse().ok()?;
    let cfg = match kind {
        ProblemKind::Fode => RunConfig {
            problem: kind,
            alpha: 0.5,
            scheme: SchemeKind::Diethelm,
            seed: 0,
            network: NetworkSpec { hidden_layers: 3, neurons_per_layer: 10, activation: Activation::Tanh },
            collocation: CollocationSpec { points_per_axis: vec![30], n_ic: 30, n_bc: 0 },
            train: TrainSpec {
                lr_values: vec![0.01, 0.001, 0.0005],
                lr_change_iters: vec![200, 1000],
                max_iters: Some(5000),
                max_wall_seconds: None,
                loss_tolerance: None,
                log_every: 10,
                checkpoint_every: None,
            },
            eval_grid: vec![101],
            time_window: None,
            output_dir: None,
        },
        ProblemKind::Fpde2d => RunConfig {
            problem: kind,
            alpha: 0.5,
            scheme: SchemeKind::Diethelm,
            seed: 0,
            network: NetworkSpec { hidden_layers: 4, neurons_per_layer: 20, activation: Activation::Tanh },
            collocation: CollocationSpec { points_per_axis: vec![10, 10], n_ic: 100, n_bc: 100 },
            train: TrainSpec {
                lr_values: vec![0.01, 0.005, 0.001],
                lr_change_iters: vec![2000, 5000],
                max_iters: None,
                max_wall_seconds: Some(600.0),
                loss_tolerance: None,
                log_every: 100,
                checkpoint_every: None,
            },
            eval_grid: vec![41, 101],
            time_window: None,
            output_dir: None,
        },
        ProblemKind::Fpde3d => RunConfig {
            problem: kind,
            alpha: 0.5,
            scheme: SchemeKind::Diethelm,
            seed: 0,
            network: NetworkSpec { hidden_layers: 4, neurons_per_layer: 20, activation: Activation::Tanh },
            collocation: CollocationSpec { points_per_axis: vec![5, 5, 5], n_ic: 5, n_bc: 25 },
            train: TrainSpec {
                lr_values: vec![0.01, 0.005, 0.001],
                lr_change_iters: vec![2000, 5000],
                max_iters: None,
                max_wall_seconds: Some(1800.0),
                loss_tolerance: None,
                log_every: 100,
                checkpoint_every: None,
            },
            eval_grid: vec![21, 21, 51],
            time_window: None,
            output_dir: None,
        },
    };
    Some(cfg)
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, Vec<String>> {
        serde_json::from_str(text).map_err(|e| vec![format!("config: {e}")])
    }

    pub fn load(path: &Path) -> Result<Self, Vec<String>> {
        let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
        RunConfig::from_json(&text).map_err(|errs| errs.into_iter().map(|e| format!("{}: {e}", path.display())).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn t_final(&self) -> f64 {
        self.time_window.unwrap_or_else(|| self.problem.default_time_window())
    }

    pub fn network_config(&self) -> NetworkConfig {
        NetworkConfig {
            input_dim: self.problem.input_dim(),
            hidden_layers: self.network.hidden_layers,
            neurons_per_layer: self.network.neurons_per_layer,
            activation: self.network.activation,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr_values: self.train.lr_values.clone(),
            lr_change_iters: self.train.lr_change_iters.clone(),
            max_iters: self.train.max_iters,
            max_wall_seconds: self.train.max_wall_seconds,
            seed: self.seed,
            scheme_kind: self.scheme,
            loss_tolerance: self.train.loss_tolerance,
            log_every: self.train.log_every,
        }
    }

    pub fn build_problem(&self) -> fpinn_core::Result<Problem> {
        Problem::with_time_window(self.problem, self.alpha, self.t_final())
    }

    /// Every violated constraint; empty when the config can run.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            errs.push(format!("alpha must lie in (0, 1) (got {})", self.alpha));
        }
        if let Some(t) = self.time_window {
            if !(t > 0.0 && t.is_finite()) {
                errs.push(format!("time_window must be positive (got {t})"));
            }
        }
        if self.network.hidden_layers == 0 {
            errs.push("network.hidden_layers must be positive".into());
        }
        if self.network.neurons_per_layer == 0 {
            errs.push("network.neurons_per_layer must be positive".into());
        }

        let dim = self.problem.input_dim();
        let c = &self.collocation;
        if c.points_per_axis.len() != dim {
            errs.push(format!(
                "collocation.points_per_axis needs {dim} entries for {} (got {})",
                self.problem.name(),
                c.points_per_axis.len()
            ));
        } else {
            let (space, time) = c.points_per_axis.split_at(dim - 1);
            if space.iter().any(|&n| n < 2) {
                errs.push("collocation.points_per_axis: spatial counts must be at least 2".into());
            }
            if time[0] < 2 {
                errs.push("collocation.points_per_axis: time count must be at least 2".into());
            }
        }
        if self.problem == ProblemKind::Fode && c.n_bc != 0 {
            errs.push("collocation.n_bc must be 0 for fode (no boundary)".into());
        }

        errs.extend(self.train_config().problems().into_iter().map(|e| format!("train: {e}")));
        if let Some(k) = self.train.checkpoint_every {
            if k == 0 || self.train.log_every == 0 || k % self.train.log_every != 0 {
                errs.push(format!("train.checkpoint_every must be a positive multiple of log_every (got {k})"));
            }
        }

        if self.eval_grid.len() != dim {
            errs.push(format!("eval_grid needs {dim} entries (got {})", self.eval_grid.len()));
        } else {
            if self.eval_grid.contains(&0) {
                errs.push("eval_grid counts must be positive".into());
            }
            if self.eval_grid[dim - 1] < 2 {
                errs.push("eval_grid needs at least 2 time nodes".into());
            }
        }
        errs
    }

    /// Output directory after applying the `FPINN_OUTPUT_ROOT` override.
    pub fn resolved_output_dir(&self) -> PathBuf {
        let dir = self
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("runs/{}-{}-s{}", self.problem.name(), self.scheme.name(), self.seed)));
        resolve_output(&dir)
    }
}

pub const OUTPUT_ROOT_ENV: &str = "FPINN_OUTPUT_ROOT";

pub fn resolve_output(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}
