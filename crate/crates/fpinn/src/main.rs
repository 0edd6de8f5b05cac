use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use fpinn::caputo_eval;
use fpinn::checkpoint::{Checkpoint, ProblemMeta};
use fpinn::config::{preset, resolve_output, RunConfig, PRESETS};
use fpinn::output::{self, write_json};
use fpinn::runner::{self, grid_table, metrics_of, ValidationError, WallClock};
use fpinn::sweep::{run_sweep, SweepSpec};
use fpinn_core::collocation::linspace;
use fpinn_core::problems::Analytical;
use fpinn_core::{Field, ProblemKind, SchemeKind, StopReason};

#[derive(Parser)]
#[command(name = "fpinn", version, about = "Fractional PINN solver and benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discrete Caputo derivative of t^p or of sampled data.
    CaputoEval(CaputoEvalArgs),
    /// Train a network from a config file or preset.
    Train(TrainArgs),
    /// Evaluate a checkpoint against the analytical solution.
    Eval(EvalArgs),
    /// Run a one-axis parameter sweep.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CaputoEvalArgs {
    #[arg(long, default_value = "diethelm")]
    scheme: SchemeKind,
    #[arg(long)]
    alpha: f64,
    /// Differentiate t^P.
    #[arg(long, value_name = "P", conflicts_with = "samples", required_unless_present = "samples")]
    monomial: Option<f64>,
    /// CSV with header `t,u` on a uniform grid.
    #[arg(long, value_name = "FILE")]
    samples: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    #[arg(long, default_value_t = 1.0)]
    t_final: f64,
    /// Print the error at t_final over successive halvings of h and the fitted order.
    #[arg(long, requires = "monomial")]
    order: bool,
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_parser = PRESETS)]
    preset: Option<String>,
    #[arg(long)]
    scheme: Option<SchemeKind>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long)]
    max_wall_seconds: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the effective config and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, required_unless_present = "oracle")]
    checkpoint: Option<PathBuf>,
    /// Evaluate the analytical solution itself (error columns are zero).
    #[arg(long)]
    oracle: bool,
    /// Problem when the checkpoint carries none, or with --oracle.
    #[arg(long)]
    problem: Option<ProblemKind>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long)]
    t_final: Option<f64>,
    /// Nodes per axis, time last, e.g. `41,101`.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Pin an axis to one value, e.g. `x=1` or `t=0.1`; repeatable.
    #[arg(long = "fix", value_name = "AXIS=VALUE")]
    fixes: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::CaputoEval(a) => caputo_eval_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            if let Some(v) = e.downcast_ref::<ValidationError>() {
                eprintln!("error: {v}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(vec![msg.into()]).into()
}

fn caputo_eval_cmd(a: CaputoEvalArgs) -> anyhow::Result<ExitCode> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1) (got {})", a.alpha)));
    }
    if !(a.h > 0.0) {
        return Err(invalid(format!("h must be positive (got {})", a.h)));
    }
    let mut sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    if let Some(p) = a.monomial {
        if a.order {
            let (table, order) = caputo_eval::order_study(a.scheme, a.alpha, p, a.h, a.t_final, a.levels)?;
            caputo_eval::write_order(&mut sink, &table)?;
            eprintln!("observed order {order:.4} (theory {:.4})", 2.0 - a.alpha);
        } else {
            let rows = caputo_eval::derivative_of_monomial(a.scheme, a.alpha, p, a.h, a.t_final)?;
            caputo_eval::write_rows(&mut sink, &rows)?;
        }
    } else if let Some(path) = &a.samples {
        let (h, values) = caputo_eval::read_samples(path)?;
        let rows = caputo_eval::derivative_of_samples(a.scheme, a.alpha, h, &values)?;
        caputo_eval::write_rows(&mut sink, &rows)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn train_cmd(a: TrainArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = match (&a.config, &a.preset) {
        (Some(path), _) => RunConfig::load(path).map_err(ValidationError)?,
        (None, Some(name)) => preset(name).ok_or_else(|| invalid(format!("unknown preset '{name}'")))?,
        (None, None) => unreachable!("clap enforces one source"),
    };
    if let Some(s) = a.scheme {
        cfg.scheme = s;
    }
    if let Some(x) = a.alpha {
        cfg.alpha = x;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.max_iters {
        cfg.train.max_iters = Some(n);
        if a.max_wall_seconds.is_none() {
            cfg.train.max_wall_seconds = None;
        }
    }
    if let Some(w) = a.max_wall_seconds {
        cfg.train.max_wall_seconds = Some(w);
    }
    if let Some(o) = a.out {
        cfg.output_dir = Some(o);
    }
    if a.print_config {
        println!("{}", cfg.to_json());
        return Ok(ExitCode::SUCCESS);
    }
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(ValidationError(errs).into());
    }
    let dir = cfg.resolved_output_dir();
    let clock = WallClock::start();
    let outcome = runner::run(&cfg, &dir, &clock)?;
    let s = &outcome.summary;
    println!(
        "{}: {} iterations in {:.1}s ({:?}), phi_total {:.3e}, rel_l2 {:.3e}",
        cfg.problem.name(),
        s.iterations,
        s.wall_seconds,
        s.stop_reason,
        s.final_loss.total,
        s.metrics.rel_l2
    );
    for sl in &s.report_slices {
        println!("  t = {}: rel_l2 {:.3e}, max_abs {:.3e}", sl.t, sl.rel_l2, sl.max_abs);
    }
    println!("artifacts in {}", dir.display());
    if s.stop_reason == StopReason::NonFiniteLoss {
        eprintln!("error: training diverged (non-finite loss after {} iterations)", s.iterations);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn default_grid(kind: ProblemKind) -> Vec<usize> {
    preset(kind.name()).expect("every kind has a preset").eval_grid
}

fn eval_cmd(a: EvalArgs) -> anyhow::Result<ExitCode> {
    let ck = a.checkpoint.as_ref().map(|p| Checkpoint::load(p)).transpose()?;
    let meta = match (ck.as_ref().and_then(|c| c.problem), a.problem) {
        (Some(m), None) => m,
        (Some(m), Some(k)) if m.kind == k => m,
        (Some(m), Some(k)) => return Err(invalid(format!("checkpoint is for {} but --problem is {}", m.kind.name(), k.name()))),
        (None, Some(kind)) => ProblemMeta { kind, alpha: a.alpha, t_final: a.t_final.unwrap_or_else(|| kind.default_time_window()) },
        (None, None) => return Err(invalid("checkpoint has no problem metadata; pass --problem")),
    };
    let problem = meta.build().map_err(|e| invalid(e.to_string()))?;
    let network = ck.as_ref().map(|c| c.network()).transpose()?;
    if let Some(n) = &network {
        if n.config().input_dim != problem.input_dim() {
            return Err(invalid(format!("network takes {} inputs, {} needs {}", n.config().input_dim, meta.kind.name(), problem.input_dim())));
        }
    }
    let oracle = Analytical(&problem);
    let field: &dyn Field = match (&network, a.oracle) {
        (_, true) => &oracle,
        (Some(n), false) => n,
        (None, false) => unreachable!("clap requires a checkpoint without --oracle"),
    };

    let names = output::axis_names(meta.kind);
    let counts = a.grid.unwrap_or_else(|| default_grid(meta.kind));
    if counts.len() != names.len() || counts.contains(&0) {
        return Err(invalid(format!("--grid needs {} positive counts ({})", names.len(), names.join(","))));
    }
    let mut bounds: Vec<(f64, f64)> = problem.domain().spatial().to_vec();
    bounds.push((0.0, problem.domain().t_final()));
    let mut axes: Vec<Vec<f64>> = bounds.iter().zip(&counts).map(|(&(lo, hi), &n)| linspace(lo, hi, n)).collect();
    for f in &a.fixes {
        let (name, value) = f.split_once('=').ok_or_else(|| invalid(format!("--fix expects AXIS=VALUE, got '{f}'")))?;
        let k = names.iter().position(|n| *n == name.trim()).ok_or_else(|| invalid(format!("unknown axis '{name}' for {}", meta.kind.name())))?;
        let v: f64 = value.trim().parse().map_err(|_| invalid(format!("--fix {name}: bad value '{value}'")))?;
        axes[k] = vec![v];
    }

    let rows = grid_table(field, &problem, &axes)?;
    let metrics = metrics_of(&rows)?;
    let out = resolve_output(&a.out);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    output::write_eval(&out.join("eval.csv"), meta.kind, &rows)?;
    write_json(&out.join("metrics.json"), &metrics)?;
    println!("{} points: rel_l2 {:.3e}, max_abs {:.3e}", metrics.n_points, metrics.rel_l2, metrics.max_abs);
    Ok(ExitCode::SUCCESS)
}

fn sweep_cmd(a: SweepArgs) -> anyhow::Result<ExitCode> {
    let spec = SweepSpec::load(&a.spec).map_err(ValidationError)?;
    let dir = a
        .out
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("sweeps/{}-{}", spec.base.problem.name(), spec.axis.name())));
    let dir = resolve_output(&dir);
    let result = run_sweep(&spec, &dir, a.jobs.max(1))?;
    for c in &result.children {
        match &c.outcome {
            Ok(s) => println!("[{}] {} = {}: phi_total {:.3e}, rel_l2 {:.3e}", c.index, spec.axis.name(), c.value, s.final_loss.total, s.metrics.rel_l2),
            Err(e) => println!("[{}] {} = {}: FAILED {e}", c.index, spec.axis.name(), c.value),
        }
    }
    println!("summary in {}", dir.join("summary.csv").display());
    match result.failures() {
        0 => Ok(ExitCode::SUCCESS),
        n => Err(anyhow!("{n} of {} sweep children failed", result.children.len())),
    }
}
