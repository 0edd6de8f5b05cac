//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 6 to 8 train several networks for tens of thousands of
//! iterations (minutes in total); set `FPINN_SKIP_SLOW=1` to skip them.

use std::process::ExitCode;
use std::time::Instant;

use anyhow::{ensure, Context};
use fpinn::config::preset;
use fpinn::runner::{run, RunSummary, WallClock};
use fpinn::RunConfig;
use fpinn_core::caputo::{exact_caputo_monomial, observed_order, SchemeKind};
use fpinn_core::collocation::CollocationSet;
use fpinn_core::numerics::gamma;
use fpinn_core::problems::{residual, source_3d_uncorrected, Analytical, ProblemKind};
use fpinn_core::trainer::{build_scheme, fused_loss_and_grad, loss, tape_loss_and_grad};
use fpinn_core::{CaputoScheme, Network, NetworkConfig, Problem, TimeGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> anyhow::Result<Verdict> {
    Ok(Verdict { pass, detail: detail.into() })
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn c1_convergence_order() -> anyhow::Result<Verdict> {
    let hs = [0.02, 0.01, 0.005, 0.0025];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for alpha in [0.25, 0.5, 0.75] {
        for kind in [SchemeKind::Diethelm, SchemeKind::L1] {
            let p = observed_order(kind, alpha, 2.0, 1.0, &hs)?;
            worst = worst.max((p - (2.0 - alpha)).abs());
            parts.push(format!("{}@{alpha}={p:.3}", kind.name()));
        }
    }
    verdict(worst <= 0.2, format!("max |p - (2-a)| = {worst:.3} <= 0.2; {}", parts.join(" ")))
}

fn c2_exact_value() -> anyhow::Result<Verdict> {
    let target = 8.0 / (3.0 * std::f64::consts::PI.sqrt());
    ensure!((target - 1.504_505_556_1).abs() < 1e-10);
    ensure!((exact_caputo_monomial(2.0, 0.5, 1.0)? - target).abs() < 1e-13);
    let grid = TimeGrid::new(0.005, 200)?;
    let values: Vec<f64> = grid.nodes().map(|t| t * t).collect();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for kind in [SchemeKind::Diethelm, SchemeKind::L1] {
        let d = CaputoScheme::new(kind, 0.5, grid)?.apply(&values, 200)?;
        worst = worst.max((d - target).abs());
        parts.push(format!("{}={d:.7}", kind.name()));
    }
    verdict(worst <= 5e-4, format!("|D - 8/(3 sqrt pi)| = {worst:.2e} <= 5e-4; {}", parts.join(" ")))
}

fn c3_manufactured() -> anyhow::Result<Verdict> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, space) in [(ProblemKind::Fode, vec![]), (ProblemKind::Fpde2d, vec![11]), (ProblemKind::Fpde3d, vec![5, 5])] {
        let problem = Problem::new(kind, 0.5)?;
        let field = Analytical(&problem);
        let (n_ic, n_bc) = match kind {
            ProblemKind::Fode => (30, 0),
            ProblemKind::Fpde2d => (100, 100),
            ProblemKind::Fpde3d => (5, 25),
        };
        let mut log_h = Vec::new();
        let mut log_rms = Vec::new();
        let mut log_max = Vec::new();
        for n_t in [11usize, 21, 41, 81] {
            let mut counts = space.clone();
            counts.push(n_t);
            let colloc = CollocationSet::build(&problem, &counts, n_ic, n_bc)?;
            let scheme = build_scheme(SchemeKind::Diethelm, &problem, &colloc)?;
            let parts_ = loss(&field, &problem, &colloc, &scheme)?;
            // boundary targets are O(1), so an absolute 1e-12 is a relative one
            ok &= parts_.ic <= 1e-12 && parts_.bc <= 1e-12;
            let res = residual(&problem, &field, &scheme, &colloc)?;
            log_h.push(colloc.time_grid().h().ln());
            log_rms.push(parts_.eq.sqrt().ln());
            log_max.push(res.iter().fold(0.0f64, |m, r| m.max(r.abs())).ln());
        }
        let p_rms = ls_slope(&log_h, &log_rms);
        let p_max = ls_slope(&log_h, &log_max);
        ok &= p_rms >= 1.3 && p_max >= 1.3;
        parts.push(format!("{}: order rms {p_rms:.2}, max {p_max:.2}", kind.name()));
    }
    verdict(ok, format!("phi_ic = phi_bc = 0, residual order >= 1.3; {}", parts.join("; ")))
}

fn c4_gradients() -> anyhow::Result<Verdict> {
    let cases = [
        (ProblemKind::Fode, vec![16], 4, 0),
        (ProblemKind::Fpde2d, vec![4, 5], 2, 2),
        (ProblemKind::Fpde3d, vec![2, 2, 4], 2, 1),
    ];
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (i, (kind, counts, n_ic, n_bc)) in cases.into_iter().enumerate() {
        let problem = Problem::new(kind, 0.5)?;
        let colloc = CollocationSet::build(&problem, &counts, n_ic, n_bc)?;
        let n_points = colloc.eq_points().len() + colloc.ic_points().len() + colloc.bc_points().len();
        ensure!(n_points <= 20, "{} uses {n_points} points", kind.name());
        let scheme = build_scheme(SchemeKind::Diethelm, &problem, &colloc)?;
        let net = Network::init(NetworkConfig::new(problem.input_dim(), 2, 4, 100 + i as u64))?;
        let (_, g_fused) = fused_loss_and_grad(&net, &problem, &colloc, &scheme)?;
        let (_, g_tape) = tape_loss_and_grad(&net, &problem, &colloc, &scheme)?;

        // fourth-order central differences of the pointwise loss
        let h = 1e-3;
        let mut probe = net.clone();
        let at = |probe: &mut Network, j: usize, v: f64| -> anyhow::Result<f64> {
            probe.params_mut()[j] = v;
            Ok(loss(&*probe, &problem, &colloc, &scheme)?.total)
        };
        for j in 0..net.params().len() {
            let x = net.params()[j];
            let fd = (-at(&mut probe, j, x + 2.0 * h)? + 8.0 * at(&mut probe, j, x + h)? - 8.0 * at(&mut probe, j, x - h)?
                + at(&mut probe, j, x - 2.0 * h)?)
                / (12.0 * h);
            probe.params_mut()[j] = x;
            for g in [g_fused[j], g_tape[j]] {
                worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-6));
            }
            checked += 1;
        }
    }
    verdict(worst <= 1e-5, format!("{checked} components on 3 problems, max rel err {worst:.2e} <= 1e-5"))
}

fn with_budget(mut cfg: RunConfig, iters: u64) -> RunConfig {
    cfg.train.max_iters = Some(iters);
    cfg.train.max_wall_seconds = None;
    cfg
}

fn run_in(dir: &std::path::Path, cfg: &RunConfig) -> anyhow::Result<RunSummary> {
    Ok(run(cfg, dir, &WallClock::start())?.summary)
}

fn c5_fode_end_to_end() -> anyhow::Result<Verdict> {
    let cfg = preset("fode").context("preset")?;
    ensure!(cfg.train.max_iters == Some(5000) && cfg.eval_grid == [101]);
    let dir = tempfile::tempdir()?;
    let s = run_in(dir.path(), &cfg)?;
    verdict(
        s.iterations == 5000 && s.metrics.rel_l2 <= 1e-2,
        format!("rel_l2 = {:.2e} <= 1e-2 after {} iterations ({:.1}s)", s.metrics.rel_l2, s.iterations, s.wall_seconds),
    )
}

fn c6_2d_end_to_end() -> anyhow::Result<Verdict> {
    let mut cfg = with_budget(preset("fpde2d").context("preset")?, 100_000);
    cfg.train.loss_tolerance = Some(1e-5);
    cfg.train.log_every = 1000;
    let dir = tempfile::tempdir()?;
    let s = run_in(dir.path(), &cfg)?;
    let e01 = s.slice_at(0.1).context("slice 0.1")?.rel_l2;
    let e10 = s.slice_at(1.0).context("slice 1.0")?.rel_l2;
    verdict(
        s.final_loss.total <= 1e-5 && e10 <= 5e-2 && e01 > e10,
        format!(
            "phi_total = {:.2e} <= 1e-5 at {} iterations; rel_l2(t=1.0) = {e10:.2e} <= 5e-2; rel_l2(t=0.1) = {e01:.2e} > rel_l2(t=1.0)",
            s.final_loss.total, s.iterations
        ),
    )
}

const C7_ITERS: u64 = 10_000;

fn c7_point_distribution() -> anyhow::Result<Verdict> {
    let base = with_budget(preset("fpde3d").context("preset")?, C7_ITERS);
    let dir = tempfile::tempdir()?;
    let mut err = Vec::new();
    for pts in [[5, 5, 5], [5, 5, 40], [40, 40, 5]] {
        let mut cfg = base.clone();
        cfg.collocation.points_per_axis = pts.to_vec();
        let s = run_in(&dir.path().join(format!("{pts:?}")), &cfg)?;
        err.push(s.slice_at(0.1).context("slice 0.1")?.rel_l2);
    }
    let (e555, e5540, e40405) = (err[0], err[1], err[2]);
    let time_helps = e5540 < e555;
    let space_not_comparable = e40405 > e5540 && e40405 >= 0.5 * e555;
    verdict(
        time_helps && space_not_comparable,
        format!(
            "rel_l2(t=0.1) after {C7_ITERS} iterations: (5,5,5) {e555:.3e}, (5,5,40) {e5540:.3e}, (40,40,5) {e40405:.3e}; \
             need (5,5,40) < (5,5,5), (40,40,5) > (5,5,40) and (40,40,5) >= 0.5*(5,5,5)"
        ),
    )
}

const C8_ITERS: u64 = 20_000;

fn c8_scheme_comparison() -> anyhow::Result<Verdict> {
    let base = with_budget(preset("fpde3d").context("preset")?, C8_ITERS);
    let dir = tempfile::tempdir()?;
    let mut phi = Vec::new();
    for kind in [SchemeKind::Diethelm, SchemeKind::L1] {
        let mut cfg = base.clone();
        cfg.scheme = kind;
        phi.push(run_in(&dir.path().join(kind.name()), &cfg)?.final_loss.total);
    }
    let (d, l) = (phi[0], phi[1]);
    verdict(
        d <= 1e-4 && l <= 1e-4 && (l <= d || l <= 3.0 * d),
        format!("phi_total after {C8_ITERS} iterations: diethelm {d:.2e}, l1 {l:.2e}; both <= 1e-4, l1 <= 3x diethelm"),
    )
}

fn c9_determinism() -> anyhow::Result<Verdict> {
    let mut cfg = preset("fode").context("preset")?;
    cfg.train.log_every = 1;
    let dirs = [tempfile::tempdir()?, tempfile::tempdir()?];
    for d in &dirs {
        run_in(d.path(), &cfg)?;
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f));
    // trace rows minus the wall-clock column
    let strip = |bytes: Vec<u8>| -> Vec<String> {
        String::from_utf8_lossy(&bytes).lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string()).collect()
    };
    let trace_a = strip(read(&dirs[0], "trace.csv")?);
    let trace_b = strip(read(&dirs[1], "trace.csv")?);
    let same_trace = trace_a == trace_b && trace_a.len() == 5002;
    let same_ck = read(&dirs[0], "checkpoint.json")? == read(&dirs[1], "checkpoint.json")?;
    let same_eval = read(&dirs[0], "eval.csv")? == read(&dirs[1], "eval.csv")?;
    verdict(
        same_trace && same_ck && same_eval,
        format!(
            "{} trace rows identical: {same_trace}; checkpoint bytes identical: {same_ck}; eval table identical: {same_eval}",
            trace_a.len().saturating_sub(1)
        ),
    )
}

fn c10_source_correction() -> anyhow::Result<Verdict> {
    let alpha = 0.5;
    let problem = Problem::new(ProblemKind::Fpde3d, alpha)?;
    let n = 2000;
    let grid = TimeGrid::covering(problem.domain().t_final(), n)?;
    let scheme = CaputoScheme::new(SchemeKind::Diethelm, alpha, grid)?;
    let frac = gamma(3.0)? / gamma(3.0 - alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut within, mut violated) = (0, 0);
    let (mut worst_ok, mut worst_bound, mut min_ratio_bad) = (0.0f64, 0.0f64, f64::INFINITY);
    let points = 1000;
    for _ in 0..points {
        let x = 2.0 * rng.random::<f64>();
        let y = 2.0 * rng.random::<f64>();
        let r = rng.random_range(1..=n);
        let t = grid.node(r);
        let history: Vec<f64> = (0..=r).map(|k| problem.analytical(&[x, y, grid.node(k)])).collect();
        let d = scheme.apply_history(&history)?;
        let u = history[r];
        let lap = problem.analytical_second_derivative(&[x, y, t], 0) + problem.analytical_second_derivative(&[x, y, t], 1);
        let s = x * (2.0 - x) + y * (2.0 - y);
        // u = s·t², so the discrete operator misses the exact one by exactly s·(D_h t² − D t²)
        let t2: Vec<f64> = (0..=r).map(|k| grid.node(k).powi(2)).collect();
        let bound = s.abs() * (scheme.apply_history(&t2)? - frac * t.powf(2.0 - alpha)).abs() * (1.0 + 1e-9) + 1e-12;
        worst_bound = worst_bound.max(bound);
        let res_ok = d + u - lap - problem.source(&[x, y, t]);
        let res_bad = d + u - lap - source_3d_uncorrected(x, y, t, alpha)?;
        if res_ok.abs() <= bound {
            within += 1;
        }
        worst_ok = worst_ok.max(res_ok.abs() / bound);
        if res_bad.abs() > bound {
            violated += 1;
            min_ratio_bad = min_ratio_bad.min(res_bad.abs() / bound);
        }
    }
    verdict(
        within == points && violated * 100 >= 95 * points,
        format!(
            "implemented source: {within}/{points} within the scheme bound (max bound {worst_bound:.1e}, max |Res|/bound {worst_ok:.3}); \
             printed source: {violated}/{points} exceed it (smallest excess {min_ratio_bad:.1e}x)"
        ),
    )
}

fn main() -> ExitCode {
    let skip_slow = std::env::var_os("FPINN_SKIP_SLOW").is_some_and(|v| v != "0");
    type Check = fn() -> anyhow::Result<Verdict>;
    let criteria: [(u32, &str, bool, Check); 10] = [
        (1, "convergence order of both schemes", false, c1_convergence_order),
        (2, "exact value of D^0.5 t^2 at t = 1", false, c2_exact_value),
        (3, "manufactured-solution residual", false, c3_manufactured),
        (4, "loss gradient vs finite differences", false, c4_gradients),
        (5, "fODE end to end", false, c5_fode_end_to_end),
        (6, "2D end to end", true, c6_2d_end_to_end),
        (7, "3D point-distribution ordering", true, c7_point_distribution),
        (8, "Diethelm vs L1 on the 3D preset", true, c8_scheme_comparison),
        (9, "bitwise determinism", false, c9_determinism),
        (10, "3D source correction", false, c10_source_correction),
    ];
    let mut failed = 0;
    for (id, name, slow, check) in criteria {
        if slow && skip_slow {
            println!("SKIP [{id:>2}] {name}: FPINN_SKIP_SLOW is set");
            continue;
        }
        let start = Instant::now();
        let (tag, detail) = match check() {
            Ok(v) if v.pass => ("PASS", v.detail),
            Ok(v) => ("FAIL", v.detail),
            Err(e) => ("FAIL", format!("error: {e:#}")),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} [{id:>2}] {name} ({:.1}s): {detail}", start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
