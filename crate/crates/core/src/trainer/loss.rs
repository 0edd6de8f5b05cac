//! The composite loss `φ = φ_eq + φ_ic + φ_bc`.
//!
//! Three routes compute it:
//!
//! * [`loss`] evaluates any [`Field`] pointwise in plain reals (reference).
//! * [`tape_loss_and_grad`] records the loss on a [`Tape`] with jets of tape
//!   variables for the spatial derivatives.
//! * [`FusedLoss`] batches all network evaluations and back-propagates by
//!   hand through the jet forward pass. This is the training route.

use alloc::vec;
use alloc::vec::Vec;

use crate::caputo::{apply_row, CaputoScheme};
use crate::collocation::CollocationSet;
use crate::diff::{grad, DualJet2, Scalar, Tape, Var};
use crate::error::{Error, Result};
use crate::network::{BatchWorkspace, Network};
use crate::problems::{residual, Field, Problem};

/// Loss components; `total` is their plain sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossParts {
    pub eq: f64,
    pub ic: f64,
    pub bc: f64,
    pub total: f64,
}

impl LossParts {
    pub fn new(eq: f64, ic: f64, bc: f64) -> Self {
        LossParts { eq, ic, bc, total: eq + ic + bc }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

fn mean_sq(it: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in it {
        sum += v * v;
        n += 1;
    }
    if n == 0 { 0.0 } else { sum / n as f64 }
}

fn check_dims(network_dim: usize, problem: &Problem, colloc: &CollocationSet, scheme: &CaputoScheme) -> Result<()> {
    if network_dim != problem.input_dim() {
        return Err(Error::DimensionMismatch { expected: problem.input_dim(), found: network_dim });
    }
    if colloc.kind() != problem.kind() {
        return Err(Error::invalid("collocation set was built for a different problem"));
    }
    let (g, s) = (colloc.time_grid(), scheme.grid());
    if g.n_steps() != s.n_steps() || g.h() != s.h() {
        return Err(Error::invalid("scheme grid does not match the collocation time grid"));
    }
    Ok(())
}

/// Mean-squared residual, initial and boundary mismatch of `field`.
pub fn loss(field: &dyn Field, problem: &Problem, colloc: &CollocationSet, scheme: &CaputoScheme) -> Result<LossParts> {
    check_dims(problem.input_dim(), problem, colloc, scheme)?;
    let res = residual(problem, field, scheme, colloc)?;
    let eq = mean_sq(res.into_iter());
    let ic = mean_sq(colloc.ic_points().iter().map(|x| {
        let mut p = x.clone();
        p.push(0.0);
        field.value(&p) - problem.ic(x)
    }));
    let bc = mean_sq(colloc.bc_points().iter().map(|b| field.value(&b.coords) - problem.bc(b.face, &b.coords)));
    Ok(LossParts::new(eq, ic, bc))
}

/// Loss components and parameter gradient recorded on a reverse-mode tape.
///
/// Slow (one tape node per scalar operation); meant for cross-checking the
/// fused route on small networks.
pub fn tape_loss_and_grad(
    network: &Network,
    problem: &Problem,
    colloc: &CollocationSet,
    scheme: &CaputoScheme,
) -> Result<(LossParts, Vec<f64>)> {
    check_dims(network.config().input_dim, problem, colloc, scheme)?;
    let mut parts = LossParts::default();
    let (_, g) = grad(
        |tape, params| {
            let (eq, ic, bc) = record_loss(tape, network, params, problem, colloc, scheme);
            parts = LossParts::new(eq.value(), ic.value(), bc.value());
            eq + ic + bc
        },
        network.params(),
    );
    Ok((parts, g))
}

fn record_loss<'t>(
    tape: &'t Tape,
    network: &Network,
    params: &[Var<'t>],
    problem: &Problem,
    colloc: &CollocationSet,
    scheme: &CaputoScheme,
) -> (Var<'t>, Var<'t>, Var<'t>) {
    let grid = colloc.time_grid();
    let k = problem.spatial_dim();
    let eval_plain = |coords: &[f64]| {
        let input: Vec<Var<'t>> = coords.iter().map(|&c| tape.constant(c)).collect();
        network.forward_with(params, &input)
    };

    // per column: value history and per-node Laplacian
    let mut values: Vec<Vec<Var<'t>>> = Vec::with_capacity(colloc.columns().len());
    let mut laplacians: Vec<Vec<Option<Var<'t>>>> = Vec::with_capacity(colloc.columns().len());
    for x in colloc.columns() {
        let mut col_v = Vec::with_capacity(grid.n_nodes());
        let mut col_l = Vec::with_capacity(grid.n_nodes());
        for t in grid.nodes() {
            let mut coords = x.clone();
            coords.push(t);
            if k == 0 {
                col_v.push(eval_plain(&coords));
                col_l.push(None);
                continue;
            }
            let mut value = None;
            let mut lap: Option<Var<'t>> = None;
            for axis in 0..k {
                let input: Vec<DualJet2<Var<'t>>> = coords
                    .iter()
                    .enumerate()
                    .map(|(d, &c)| {
                        let v = tape.constant(c);
                        if d == axis { DualJet2::variable(v) } else { DualJet2::constant(v) }
                    })
                    .collect();
                let jet = network.forward_with(params, &input);
                value.get_or_insert(jet.value);
                lap = Some(match lap {
                    None => jet.d2,
                    Some(l) => l + jet.d2,
                });
            }
            col_v.push(value.unwrap());
            col_l.push(lap);
        }
        values.push(col_v);
        laplacians.push(col_l);
    }

    let mut eq_sum = tape.constant(0.0);
    for eq in colloc.eq_points() {
        let hist = &values[eq.column][..=eq.r];
        let d = tape.caputo(scheme, hist).expect("history matches grid");
        let mut res = d + hist[eq.r];
        if let Some(l) = laplacians[eq.column][eq.r] {
            res = res - l;
        }
        let res = res.add_const(-problem.source(&eq.coords));
        eq_sum = eq_sum + res * res;
    }
    let eq = mean_var(tape, eq_sum, colloc.eq_points().len());

    let mut ic_sum = tape.constant(0.0);
    for x in colloc.ic_points() {
        let mut coords = x.clone();
        coords.push(0.0);
        let d = eval_plain(&coords).add_const(-problem.ic(x));
        ic_sum = ic_sum + d * d;
    }
    let ic = mean_var(tape, ic_sum, colloc.ic_points().len());

    let mut bc_sum = tape.constant(0.0);
    for b in colloc.bc_points() {
        let d = eval_plain(&b.coords).add_const(-problem.bc(b.face, &b.coords));
        bc_sum = bc_sum + d * d;
    }
    let bc = mean_var(tape, bc_sum, colloc.bc_points().len());
    (eq, ic, bc)
}

fn mean_var<'t>(tape: &'t Tape, sum: Var<'t>, n: usize) -> Var<'t> {
    if n == 0 { tape.constant(0.0) } else { sum.scale(1.0 / n as f64) }
}

/// Batched loss and gradient for one `(problem, collocation, scheme)` triple.
///
/// The network is evaluated once per grid node (every column at every time
/// node, including `t = 0`) with jets along the spatial axes, and once per
/// initial/boundary point without jets. Residuals of a column depend only
/// on that column, so the grid is swept in blocks of whole columns that
/// stay cache resident through forward, residual and backward.
#[derive(Debug)]
pub struct FusedLoss<'a> {
    scheme: &'a CaputoScheme,
    axes: Vec<usize>,
    n_nodes: usize,
    cols_per_block: usize,
    grid_inputs: Vec<f64>,
    // (equation index, r, source) grouped by column; col_eq[c]..col_eq[c + 1]
    eq_by_col: Vec<(usize, usize, f64)>,
    col_eq: Vec<usize>,
    n_eq: usize,
    bd_inputs: Vec<f64>,
    bd_targets: Vec<f64>,
    n_ic: usize,
    n_bc: usize,
    ws_grid: BatchWorkspace,
    ws_bd: BatchWorkspace,
    adj_grid: Vec<f64>,
    adj_bd: Vec<f64>,
    residuals: Vec<f64>,
}

// grid points per block
const BLOCK_POINTS: usize = 256;

impl<'a> FusedLoss<'a> {
    pub fn new(problem: &Problem, colloc: &CollocationSet, scheme: &'a CaputoScheme) -> Result<Self> {
        check_dims(problem.input_dim(), problem, colloc, scheme)?;
        let grid = colloc.time_grid();
        let n_nodes = grid.n_nodes();
        let n_cols = colloc.columns().len();
        let mut grid_inputs = Vec::with_capacity(n_cols * n_nodes * problem.input_dim());
        for x in colloc.columns() {
            for t in grid.nodes() {
                grid_inputs.extend_from_slice(x);
                grid_inputs.push(t);
            }
        }

        let mut per_col: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n_cols];
        for (i, e) in colloc.eq_points().iter().enumerate() {
            per_col[e.column].push((i, e.r, problem.source(&e.coords)));
        }
        let mut col_eq = Vec::with_capacity(n_cols + 1);
        col_eq.push(0);
        let mut eq_by_col = Vec::with_capacity(colloc.eq_points().len());
        for list in per_col {
            eq_by_col.extend(list);
            col_eq.push(eq_by_col.len());
        }

        let mut bd_inputs = Vec::new();
        let mut bd_targets = Vec::new();
        for x in colloc.ic_points() {
            bd_inputs.extend_from_slice(x);
            bd_inputs.push(0.0);
            bd_targets.push(problem.ic(x));
        }
        for b in colloc.bc_points() {
            bd_inputs.extend_from_slice(&b.coords);
            bd_targets.push(problem.bc(b.face, &b.coords));
        }

        Ok(FusedLoss {
            scheme,
            axes: (0..problem.spatial_dim()).collect(),
            n_nodes,
            cols_per_block: (BLOCK_POINTS / n_nodes).max(1),
            grid_inputs,
            eq_by_col,
            col_eq,
            n_eq: colloc.eq_points().len(),
            bd_inputs,
            bd_targets,
            n_ic: colloc.ic_points().len(),
            n_bc: colloc.bc_points().len(),
            ws_grid: BatchWorkspace::new(),
            ws_bd: BatchWorkspace::new(),
            adj_grid: Vec::new(),
            adj_bd: Vec::new(),
            residuals: vec![0.0; colloc.eq_points().len()],
        })
    }

    /// Residuals from the most recent evaluation, in collocation order.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Loss components; with `grad` given, overwrites it with `∂φ/∂θ`.
    pub fn evaluate(&mut self, network: &Network, mut grad: Option<&mut [f64]>) -> LossParts {
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        let k = self.axes.len();
        let dim = k + 1;
        let n_nodes = self.n_nodes;
        let n_cols = self.col_eq.len() - 1;
        let scale = if self.n_eq == 0 { 0.0 } else { 2.0 / self.n_eq as f64 };

        let mut c0 = 0;
        while c0 < n_cols {
            let c1 = (c0 + self.cols_per_block).min(n_cols);
            let inputs = &self.grid_inputs[c0 * n_nodes * dim..c1 * n_nodes * dim];
            network.batch_forward(inputs, &self.axes, &mut self.ws_grid);
            let n_points = self.ws_grid.n_points();
            let values = self.ws_grid.values();
            for c in c0..c1 {
                let base = (c - c0) * n_nodes;
                let hist = &values[base..base + n_nodes];
                for &(i, r, f) in &self.eq_by_col[self.col_eq[c]..self.col_eq[c + 1]] {
                    let d = apply_row(self.scheme.row(r).expect("r within grid"), hist);
                    let mut lap = 0.0;
                    for a in 0..k {
                        lap += self.ws_grid.d2(a)[base + r];
                    }
                    self.residuals[i] = d + hist[r] - lap - f;
                }
            }

            if let Some(g) = grad.as_deref_mut() {
                self.adj_grid.clear();
                self.adj_grid.resize(n_points * (1 + 2 * k), 0.0);
                for c in c0..c1 {
                    let base = (c - c0) * n_nodes;
                    for &(i, r, _) in &self.eq_by_col[self.col_eq[c]..self.col_eq[c + 1]] {
                        let a = scale * self.residuals[i];
                        let row = self.scheme.row(r).expect("r within grid");
                        for (j, w) in row.iter().enumerate() {
                            self.adj_grid[base + j] += a * w;
                        }
                        self.adj_grid[base + r] += a;
                        for ax in 0..k {
                            self.adj_grid[n_points * (2 + 2 * ax) + base + r] -= a;
                        }
                    }
                }
                network.batch_backward(&mut self.ws_grid, &self.adj_grid, g);
            }
            c0 = c1;
        }
        let eq = mean_sq(self.residuals.iter().copied());

        let (ic, bc) = if self.bd_targets.is_empty() {
            (0.0, 0.0)
        } else {
            network.batch_forward(&self.bd_inputs, &[], &mut self.ws_bd);
            let u = self.ws_bd.values();
            let ic = mean_sq((0..self.n_ic).map(|i| u[i] - self.bd_targets[i]));
            let bc = mean_sq((self.n_ic..self.n_ic + self.n_bc).map(|i| u[i] - self.bd_targets[i]));
            (ic, bc)
        };

        if let (Some(g), false) = (grad, self.bd_targets.is_empty()) {
            let u = self.ws_bd.values();
            self.adj_bd.clear();
            self.adj_bd.extend(u.iter().zip(&self.bd_targets).enumerate().map(|(i, (u, t))| {
                let n = if i < self.n_ic { self.n_ic } else { self.n_bc };
                2.0 * (u - t) / n as f64
            }));
            network.batch_backward(&mut self.ws_bd, &self.adj_bd, g);
        }
        LossParts::new(eq, ic, bc)
    }
}

/// Convenience wrapper: fused loss and gradient in one call.
pub fn fused_loss_and_grad(
    network: &Network,
    problem: &Problem,
    colloc: &CollocationSet,
    scheme: &CaputoScheme,
) -> Result<(LossParts, Vec<f64>)> {
    check_dims(network.config().input_dim, problem, colloc, scheme)?;
    let mut fused = FusedLoss::new(problem, colloc, scheme)?;
    let mut g = vec![0.0; network.params().len()];
    let parts = fused.evaluate(network, Some(&mut g));
    Ok((parts, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caputo::SchemeKind;
    use crate::network::NetworkConfig;
    use crate::problems::ProblemKind;

    fn setup(kind: ProblemKind, counts: &[usize], n_ic: usize, n_bc: usize, seed: u64) -> (Problem, CollocationSet, CaputoScheme, Network) {
        let p = Problem::new(kind, 0.5).unwrap();
        let c = CollocationSet::build(&p, counts, n_ic, n_bc).unwrap();
        let s = CaputoScheme::new(SchemeKind::Diethelm, 0.5, *c.time_grid()).unwrap();
        let net = Network::init(NetworkConfig::new(p.input_dim(), 2, 5, seed)).unwrap();
        (p, c, s, net)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    fn all_routes_agree(kind: ProblemKind, counts: &[usize], n_ic: usize, n_bc: usize) {
        let (p, c, s, net) = setup(kind, counts, n_ic, n_bc, 5);
        let reference = loss(&net, &p, &c, &s).unwrap();
        let (fused, g_fused) = fused_loss_and_grad(&net, &p, &c, &s).unwrap();
        let (taped, g_tape) = tape_loss_and_grad(&net, &p, &c, &s).unwrap();
        for (a, b) in [(reference.eq, fused.eq), (reference.ic, fused.ic), (reference.bc, fused.bc), (taped.total, fused.total)] {
            assert!(rel(a, b) < 1e-12, "{a} vs {b}");
        }
        for (a, b) in g_fused.iter().zip(&g_tape) {
            assert!(rel(*a, *b) < 1e-10, "{a} vs {b}");
        }

        // central differences on the reference loss
        let h = 1e-6;
        let mut probe = net.clone();
        for i in (0..g_fused.len()).step_by(3) {
            let base = net.params()[i];
            probe.params_mut()[i] = base + h;
            let up = loss(&probe, &p, &c, &s).unwrap().total;
            probe.params_mut()[i] = base - h;
            let dn = loss(&probe, &p, &c, &s).unwrap().total;
            probe.params_mut()[i] = base;
            let fd = (up - dn) / (2.0 * h);
            assert!(rel(g_fused[i], fd) < 1e-5, "param {i}: {} vs {fd}", g_fused[i]);
        }
    }

    #[test]
    fn gradient_routes_agree_fode() {
        all_routes_agree(ProblemKind::Fode, &[8], 4, 0);
    }

    #[test]
    fn gradient_routes_agree_2d() {
        all_routes_agree(ProblemKind::Fpde2d, &[4, 5], 3, 6);
    }

    #[test]
    fn gradient_routes_agree_3d() {
        all_routes_agree(ProblemKind::Fpde3d, &[3, 3, 4], 2, 2);
    }

    #[test]
    fn blocked_sweep_matches_tape() {
        // 144 columns × 3 nodes spans several blocks
        let (p, c, s, net) = setup(ProblemKind::Fpde3d, &[12, 12, 3], 3, 4, 17);
        let mut fused = FusedLoss::new(&p, &c, &s).unwrap();
        assert!(fused.cols_per_block < c.columns().len());
        let mut g = vec![0.0; net.params().len()];
        let parts = fused.evaluate(&net, Some(&mut g));
        let (taped, g_tape) = tape_loss_and_grad(&net, &p, &c, &s).unwrap();
        assert!(rel(parts.total, taped.total) < 1e-12);
        for (a, b) in g.iter().zip(&g_tape) {
            assert!(rel(*a, *b) < 1e-10, "{a} vs {b}");
        }
        // a second call reuses the workspaces
        let mut g2 = vec![1.0; g.len()];
        assert_eq!(fused.evaluate(&net, Some(&mut g2)), parts);
        assert_eq!(g, g2);
    }

    #[test]
    fn fused_residuals_match_reference() {
        let (p, c, s, net) = setup(ProblemKind::Fpde2d, &[4, 6], 2, 2, 9);
        let mut fused = FusedLoss::new(&p, &c, &s).unwrap();
        fused.evaluate(&net, None);
        let reference = residual(&p, &net, &s, &c).unwrap();
        assert_eq!(fused.residuals().len(), reference.len());
        for (a, b) in fused.residuals().iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let (p, c, s, _) = setup(ProblemKind::Fpde2d, &[4, 6], 2, 2, 9);
        let wrong = Network::init(NetworkConfig::new(1, 1, 3, 0)).unwrap();
        assert!(fused_loss_and_grad(&wrong, &p, &c, &s).is_err());
        let other = CaputoScheme::new(SchemeKind::L1, 0.5, crate::TimeGrid::new(0.1, 3).unwrap()).unwrap();
        assert!(loss(&wrong, &p, &c, &other).is_err());
    }
}
