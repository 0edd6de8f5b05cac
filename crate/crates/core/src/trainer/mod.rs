//! Loss assembly, Adam with a step learning-rate schedule, and
//! budget-controlled training.

mod evaluate;
mod loss;
mod optim;

use alloc::vec;
use alloc::vec::Vec;

pub use evaluate::{evaluate, slice_metrics, slice_table, EvalRow, Evaluation, SliceMetrics};
pub use loss::{fused_loss_and_grad, loss, tape_loss_and_grad, FusedLoss, LossParts};
pub use optim::{Adam, StepSchedule};

use crate::caputo::{CaputoScheme, SchemeKind};
use crate::collocation::CollocationSet;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::numerics::ErrorMetrics;
use crate::problems::Problem;

/// Optimiser schedule, budgets and stopping rule.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TrainConfig {
    pub lr_values: Vec<f64>,
    pub lr_change_iters: Vec<u64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub max_iters: Option<u64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub max_wall_seconds: Option<f64>,
    /// Recorded with the run; full-batch Adam itself draws no randomness.
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    pub scheme_kind: SchemeKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub loss_tolerance: Option<f64>,
    /// Trace every `log_every` updates (first and last evaluations always logged).
    #[cfg_attr(feature = "serde", serde(default = "default_log_every"))]
    pub log_every: u64,
}

#[cfg(feature = "serde")]
fn default_log_every() -> u64 {
    100
}

impl TrainConfig {
    /// All violated constraints, empty when valid.
    pub fn problems(&self) -> Vec<alloc::string::String> {
        let mut out = Vec::new();
        if let Err(e) = StepSchedule::new(self.lr_values.clone(), self.lr_change_iters.clone()) {
            out.push(alloc::format!("{e}"));
        }
        if self.max_iters.is_none() && self.max_wall_seconds.is_none() {
            out.push("at least one of max_iters or max_wall_seconds must be set".into());
        }
        if self.max_iters == Some(0) {
            out.push("max_iters must be positive".into());
        }
        if let Some(w) = self.max_wall_seconds {
            if !(w > 0.0) {
                out.push(alloc::format!("max_wall_seconds must be positive (got {w})"));
            }
        }
        if let Some(t) = self.loss_tolerance {
            if !(t > 0.0) {
                out.push(alloc::format!("loss_tolerance must be positive (got {t})"));
            }
        }
        if self.log_every == 0 {
            out.push("log_every must be positive".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.problems().into_iter().next() {
            None => Ok(()),
            Some(msg) => Err(Error::InvalidArgument(msg)),
        }
    }
}

/// Source of elapsed time for wall-clock budgets.
pub trait Clock {
    fn elapsed_seconds(&self) -> f64;
    /// Whether the clock advances; a frozen clock cannot enforce a wall budget.
    fn measures_time(&self) -> bool {
        true
    }
}

/// A clock that never advances: iteration budgets only.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn elapsed_seconds(&self) -> f64 {
        0.0
    }
    fn measures_time(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceEntry {
    /// Updates applied before this loss evaluation.
    pub iter: u64,
    pub loss: LossParts,
    /// Rate used by the next update.
    pub lr: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StopReason {
    MaxIterations,
    WallClock,
    LossTolerance,
    NonFiniteLoss,
}

/// Outcome of a generic optimisation run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub iterations: u64,
    pub wall_seconds: f64,
    pub trace: Vec<TraceEntry>,
    /// Loss at the final parameters.
    pub final_loss: LossParts,
    pub stop_reason: StopReason,
}

/// Minimises `objective` with Adam under `config`'s schedule and budgets.
///
/// `objective(params, grad)` returns the loss parts and writes the gradient.
/// Each loop turn evaluates the loss, logs, checks the stopping rules and
/// only then updates, so the last trace entry always belongs to the
/// returned parameters. A non-finite loss stops the run without applying
/// the offending update.
pub fn optimize<F, C, O>(params: &mut [f64], mut objective: F, config: &TrainConfig, clock: &C, mut observer: O) -> Result<OptimizeOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> LossParts,
    C: Clock + ?Sized,
    O: FnMut(&TraceEntry, &[f64]),
{
    config.validate()?;
    if config.max_iters.is_none() && !clock.measures_time() {
        return Err(Error::invalid("a wall-clock budget needs a running clock"));
    }
    let schedule = StepSchedule::new(config.lr_values.clone(), config.lr_change_iters.clone())?;
    let mut adam = Adam::new(params.len());
    let mut grad = vec![0.0; params.len()];
    let mut trace = Vec::new();
    let mut iter = 0u64;
    loop {
        let parts = objective(params, &mut grad);
        let elapsed = clock.elapsed_seconds();
        let stop = if !parts.is_finite() {
            Some(StopReason::NonFiniteLoss)
        } else if config.loss_tolerance.is_some_and(|tol| parts.total <= tol) {
            Some(StopReason::LossTolerance)
        } else if config.max_iters.is_some_and(|m| iter >= m) {
            Some(StopReason::MaxIterations)
        } else if config.max_wall_seconds.is_some_and(|w| clock.measures_time() && elapsed >= w) {
            Some(StopReason::WallClock)
        } else {
            None
        };
        let lr = schedule.rate(iter + 1);
        if stop.is_some() || iter % config.log_every == 0 {
            let entry = TraceEntry { iter, loss: parts, lr, elapsed_s: elapsed };
            observer(&entry, params);
            trace.push(entry);
        }
        if let Some(stop_reason) = stop {
            return Ok(OptimizeOutcome { iterations: iter, wall_seconds: elapsed, trace, final_loss: parts, stop_reason });
        }
        adam.step(params, &grad, lr);
        iter += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations: u64,
    pub wall_seconds: f64,
    pub loss_trace: Vec<TraceEntry>,
    pub final_loss: LossParts,
    /// Against the analytical solution on the held-out evaluation grid.
    pub final_metrics: ErrorMetrics,
    pub stop_reason: StopReason,
}

/// Trains `network` on `problem` over `colloc` until a budget, the loss
/// tolerance or a non-finite loss stops it.
///
/// `eval_counts` sizes the held-out evaluation grid (per axis, time last).
/// The observer sees every logged trace entry with the current parameters.
pub fn train<C, O>(
    network: &mut Network,
    problem: &Problem,
    colloc: &CollocationSet,
    config: &TrainConfig,
    eval_counts: &[usize],
    clock: &C,
    observer: O,
) -> Result<TrainReport>
where
    C: Clock + ?Sized,
    O: FnMut(&TraceEntry, &[f64]),
{
    if network.config().input_dim != problem.input_dim() {
        return Err(Error::DimensionMismatch { expected: problem.input_dim(), found: network.config().input_dim });
    }
    let scheme = build_scheme(config.scheme_kind, problem, colloc)?;
    let mut fused = FusedLoss::new(problem, colloc, &scheme)?;
    let mut scratch = network.clone();
    let mut params = network.params().to_vec();
    let outcome = optimize(
        &mut params,
        |p, g| {
            scratch.params_mut().copy_from_slice(p);
            fused.evaluate(&scratch, Some(g))
        },
        config,
        clock,
        observer,
    )?;
    network.params_mut().copy_from_slice(&params);
    let final_metrics = evaluate(network, problem, eval_counts)?.metrics;
    Ok(TrainReport {
        iterations: outcome.iterations,
        wall_seconds: outcome.wall_seconds,
        loss_trace: outcome.trace,
        final_loss: outcome.final_loss,
        final_metrics,
        stop_reason: outcome.stop_reason,
    })
}

/// Iteration-budget training with no clock and no observer.
pub fn train_iterations(
    network: &mut Network,
    problem: &Problem,
    colloc: &CollocationSet,
    config: &TrainConfig,
    eval_counts: &[usize],
) -> Result<TrainReport> {
    train(network, problem, colloc, config, eval_counts, &FrozenClock, |_, _| {})
}

/// The Caputo operator matching a collocation set's time grid.
pub fn build_scheme(kind: SchemeKind, problem: &Problem, colloc: &CollocationSet) -> Result<CaputoScheme> {
    if colloc.kind() != problem.kind() {
        return Err(Error::invalid("collocation set was built for a different problem"));
    }
    CaputoScheme::new(kind, problem.alpha(), *colloc.time_grid())
}
