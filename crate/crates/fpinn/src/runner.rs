//! One training run from a [`RunConfig`] to files on disk.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use fpinn_core::trainer::{self, evaluate, slice_table, Clock, EvalRow, TrainReport};
use fpinn_core::{error_metrics, CollocationSet, ErrorMetrics, Field, LossParts, Network, Problem, StopReason};
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::output::{self, TraceWriter};

/// Config problems found before any compute; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError(pub Vec<String>);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for e in &self.0 {
            write!(f, "\n  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        WallClock(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed_seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceSummary {
    pub t: f64,
    pub rel_l2: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub config: RunConfig,
    pub iterations: u64,
    pub wall_seconds: f64,
    pub stop_reason: StopReason,
    pub final_loss: LossParts,
    pub metrics: ErrorMetrics,
    /// At the standard reporting times that fall inside the time window.
    pub report_slices: Vec<SliceSummary>,
}

impl RunSummary {
    pub fn slice_at(&self, t: f64) -> Option<&SliceSummary> {
        self.report_slices.iter().find(|s| (s.t - t).abs() < 1e-9)
    }
}

pub struct RunOutcome {
    pub summary: RunSummary,
    pub report: TrainReport,
    pub network: Network,
    pub out_dir: PathBuf,
}

/// Reporting times inside `[0, t_final]`.
pub fn report_times(problem: &Problem) -> Vec<f64> {
    let t_final = problem.domain().t_final();
    problem.kind().report_times().iter().copied().filter(|&t| t <= t_final + 1e-12).collect()
}

fn slice_file_name(t: f64) -> String {
    format!("slice_t{t}.csv")
}

/// Validates, trains and writes all artifacts into `out_dir`.
///
/// Files: `config.json`, `collocation.csv`, `trace.csv`, `checkpoint.json`
/// (plus `checkpoints/iter_N.json` when requested), `eval.csv`,
/// `slices.csv`, one `slice_t*.csv` per reporting time and `summary.json`.
pub fn run(config: &RunConfig, out_dir: &Path, clock: &dyn Clock) -> anyhow::Result<RunOutcome> {
    let errs = config.validate();
    if !errs.is_empty() {
        return Err(ValidationError(errs).into());
    }
    let problem = config.build_problem()?;
    let c = &config.collocation;
    let colloc = CollocationSet::build(&problem, &c.points_per_axis, c.n_ic, c.n_bc)?;
    let mut network = Network::init(config.network_config())?;

    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    std::fs::write(out_dir.join("config.json"), config.to_json() + "\n")?;
    output::write_collocation(&out_dir.join("collocation.csv"), &colloc)?;

    let mut trace = TraceWriter::create(&out_dir.join("trace.csv"))?;
    let ck_dir = out_dir.join("checkpoints");
    if config.train.checkpoint_every.is_some() {
        std::fs::create_dir_all(&ck_dir)?;
    }
    let mut observer_err: Option<anyhow::Error> = None;
    let ck_every = config.train.checkpoint_every;
    let net_cfg = *network.config();
    let report = trainer::train(
        &mut network,
        &problem,
        &colloc,
        &config.train_config(),
        &config.eval_grid,
        clock,
        |entry, params| {
            if observer_err.is_some() {
                return;
            }
            let mut step = || -> anyhow::Result<()> {
                trace.push(entry)?;
                if let Some(k) = ck_every {
                    if entry.iter > 0 && entry.iter % k == 0 {
                        let snap = Network::from_params(net_cfg, params.to_vec())?;
                        Checkpoint::new(&snap, Some(&problem), Some(entry.iter))
                            .save(&ck_dir.join(format!("iter_{}.json", entry.iter)))?;
                    }
                }
                Ok(())
            };
            observer_err = step().err();
        },
    )?;
    if let Some(e) = observer_err {
        return Err(e.context("writing training artifacts"));
    }
    trace.finish()?;

    Checkpoint::new(&network, Some(&problem), Some(report.iterations)).save(&out_dir.join("checkpoint.json"))?;
    let eval = evaluate(&network, &problem, &config.eval_grid)?;
    output::write_eval(&out_dir.join("eval.csv"), problem.kind(), &eval.rows)?;
    output::write_slice_metrics(&out_dir.join("slices.csv"), &eval.slices)?;

    let spatial = &config.eval_grid[..config.eval_grid.len() - 1];
    let mut report_slices = Vec::new();
    for t in report_times(&problem) {
        let rows = slice_table(&network, &problem, spatial, t)?;
        output::write_eval(&out_dir.join(slice_file_name(t)), problem.kind(), &rows)?;
        let m = metrics_of(&rows)?;
        report_slices.push(SliceSummary { t, rel_l2: m.rel_l2, max_abs: m.max_abs });
    }

    let summary = RunSummary {
        config: config.clone(),
        iterations: report.iterations,
        wall_seconds: report.wall_seconds,
        stop_reason: report.stop_reason,
        final_loss: report.final_loss,
        metrics: report.final_metrics,
        report_slices,
    };
    output::write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(RunOutcome { summary, report, network, out_dir: out_dir.to_path_buf() })
}

/// Comparison rows over the Cartesian product of explicit per-axis nodes (time last).
pub fn grid_table(field: &dyn Field, problem: &Problem, axes: &[Vec<f64>]) -> anyhow::Result<Vec<EvalRow>> {
    if axes.len() != problem.input_dim() {
        anyhow::bail!("expected {} axes, got {}", problem.input_dim(), axes.len());
    }
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    // time-major like the core evaluation tables
    let (space, time) = axes.split_at(axes.len() - 1);
    for axis in space {
        points = points.iter().flat_map(|p| axis.iter().map(move |&v| [p.as_slice(), &[v]].concat())).collect();
    }
    let mut rows = Vec::with_capacity(points.len() * time[0].len());
    for &t in &time[0] {
        for x in &points {
            let mut coords = x.clone();
            coords.push(t);
            let predicted = field.value(&coords);
            let exact = problem.analytical(&coords);
            rows.push(EvalRow { coords, predicted, exact, abs_error: (predicted - exact).abs() });
        }
    }
    Ok(rows)
}

pub fn metrics_of(rows: &[EvalRow]) -> anyhow::Result<ErrorMetrics> {
    let p: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.exact).collect();
    Ok(error_metrics(&p, &e)?)
}
