use alloc::vec::Vec;

use crate::collocation::linspace;
use crate::error::{Error, Result};
use crate::numerics::{error_metrics, ErrorMetrics};
use crate::problems::{Field, Problem};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    /// Full coordinates, time last.
    pub coords: Vec<f64>,
    pub predicted: f64,
    pub exact: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceMetrics {
    pub t: f64,
    pub metrics: ErrorMetrics,
}

/// Dense comparison of a field against the analytical solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Time-major, then lexicographic in space.
    pub rows: Vec<EvalRow>,
    pub metrics: ErrorMetrics,
    /// One entry per time node of the evaluation grid.
    pub slices: Vec<SliceMetrics>,
}

fn spatial_nodes(problem: &Problem, spatial_counts: &[usize]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = alloc::vec![Vec::new()];
    for (&(lo, hi), &n) in problem.domain().spatial().iter().zip(spatial_counts) {
        let axis = linspace(lo, hi, n);
        out = out
            .iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

fn slice_rows(field: &dyn Field, problem: &Problem, spatial: &[Vec<f64>], t: f64) -> Vec<EvalRow> {
    spatial
        .iter()
        .map(|x| {
            let mut coords = x.clone();
            coords.push(t);
            let predicted = field.value(&coords);
            let exact = problem.analytical(&coords);
            EvalRow { coords, predicted, exact, abs_error: libm::fabs(predicted - exact) }
        })
        .collect()
}

fn metrics_of(rows: &[EvalRow]) -> Result<ErrorMetrics> {
    let p: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.exact).collect();
    error_metrics(&p, &e)
}

fn check_counts(problem: &Problem, counts: &[usize], expected: usize) -> Result<()> {
    if counts.len() != expected {
        return Err(Error::DimensionMismatch { expected, found: counts.len() });
    }
    if counts.iter().any(|&n| n < 1) {
        return Err(Error::invalid("evaluation grid counts must be positive"));
    }
    let _ = problem;
    Ok(())
}

/// Evaluates `field` on a uniform grid with `counts` nodes per axis (time last).
pub fn evaluate(field: &dyn Field, problem: &Problem, counts: &[usize]) -> Result<Evaluation> {
    check_counts(problem, counts, problem.input_dim())?;
    let n_t = counts[counts.len() - 1];
    if n_t < 2 {
        return Err(Error::invalid("evaluation grid needs at least 2 time nodes"));
    }
    let spatial = spatial_nodes(problem, &counts[..counts.len() - 1]);
    let mut rows = Vec::with_capacity(spatial.len() * n_t);
    let mut slices = Vec::with_capacity(n_t);
    for t in linspace(0.0, problem.domain().t_final(), n_t) {
        let slice = slice_rows(field, problem, &spatial, t);
        slices.push(SliceMetrics { t, metrics: metrics_of(&slice)? });
        rows.extend(slice);
    }
    let metrics = metrics_of(&rows)?;
    Ok(Evaluation { rows, metrics, slices })
}

/// Comparison table at one time `t` over a uniform spatial grid.
pub fn slice_table(field: &dyn Field, problem: &Problem, spatial_counts: &[usize], t: f64) -> Result<Vec<EvalRow>> {
    check_counts(problem, spatial_counts, problem.spatial_dim())?;
    if !(t >= 0.0) {
        return Err(Error::Domain { name: "t", value: t });
    }
    Ok(slice_rows(field, problem, &spatial_nodes(problem, spatial_counts), t))
}

/// Error metrics of the slice at time `t`.
pub fn slice_metrics(field: &dyn Field, problem: &Problem, spatial_counts: &[usize], t: f64) -> Result<ErrorMetrics> {
    metrics_of(&slice_table(field, problem, spatial_counts, t)?)
}
