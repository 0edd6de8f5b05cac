//! Tensor-product collocation sets.
//!
//! Each axis is sampled uniformly with both endpoints included. Equation
//! points are the full Cartesian product minus the `t = 0` slice (the
//! discrete Caputo operator needs at least one earlier node), ordered
//! time-major and then lexicographically in space. Every spatial location
//! forms a *column* whose history on the shared time grid feeds the
//! fractional derivative.
//!
//! Initial and boundary counts are interpreted per dimension:
//!
//! * fODE: `n_ic` replicated points at `t = 0`; no boundary.
//! * 2D: `n_ic` points along `x`; `n_bc` in total, split evenly over the
//!   faces `x = 0`, `x = 2` with the remainder going to the earlier faces.
//!   Each face gets a uniform sampling of `t ∈ [0, T]`.
//! * 3D: an `n_ic × n_ic` grid over `(x, y)`; `n_bc` points *per face*,
//!   arranged as an `a × b` grid over (free spatial axis × time) with
//!   `a ≤ b` the most nearly square factorisation of `n_bc`.

use alloc::vec::Vec;

use crate::caputo::TimeGrid;
use crate::error::{Error, Result};
pub use crate::problems::Face;
use crate::problems::{Problem, ProblemKind};

/// An equation-residual point at time index `r ≥ 1` of spatial column `column`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqPoint {
    pub column: usize,
    pub r: usize,
    /// Full coordinates, time last.
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcPoint {
    pub face: Face,
    /// Full coordinates, time last.
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSet {
    kind: ProblemKind,
    time_grid: TimeGrid,
    points_per_axis: Vec<usize>,
    columns: Vec<Vec<f64>>,
    eq_points: Vec<EqPoint>,
    ic_points: Vec<Vec<f64>>,
    bc_points: Vec<BcPoint>,
}

/// `n` uniformly spaced nodes on `[lo, hi]`, endpoints included; a single node sits at the midpoint.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![0.5 * (lo + hi)],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { hi } else { lo + i as f64 * step }).collect()
        }
    }
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = alloc::vec![Vec::new()];
    for axis in axes {
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

/// Most nearly square `(a, b)` with `a·b = n`, `a ≤ b`.
fn square_factors(n: usize) -> (usize, usize) {
    let mut a = libm::sqrt(n as f64) as usize;
    while a > 1 && n % a != 0 {
        a -= 1;
    }
    let a = a.max(1);
    (a, n / a)
}

impl CollocationSet {
    /// `points_per_axis` lists spatial counts first and the time count last.
    pub fn build(problem: &Problem, points_per_axis: &[usize], n_ic: usize, n_bc: usize) -> Result<Self> {
        let kind = problem.kind();
        let dim = problem.input_dim();
        if points_per_axis.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: points_per_axis.len() });
        }
        if let Some(&n) = points_per_axis.iter().find(|&&n| n < 2) {
            return Err(Error::invalid(alloc::format!("every axis needs at least 2 collocation points (got {n})")));
        }
        let n_t = points_per_axis[dim - 1];
        let t_final = problem.domain().t_final();
        let time_grid = TimeGrid::covering(t_final, n_t - 1)?;
        let box_ = problem.domain().spatial();

        let spatial_axes: Vec<Vec<f64>> = box_
            .iter()
            .zip(points_per_axis)
            .map(|(&(lo, hi), &n)| linspace(lo, hi, n))
            .collect();
        let columns = cartesian(&spatial_axes);

        let mut eq_points = Vec::with_capacity(columns.len() * (n_t - 1));
        for r in 1..n_t {
            let t = time_grid.node(r);
            for (c, x) in columns.iter().enumerate() {
                let mut coords = x.clone();
                coords.push(t);
                eq_points.push(EqPoint { column: c, r, coords });
            }
        }

        let ic_points = match kind {
            ProblemKind::Fode => alloc::vec![Vec::new(); n_ic],
            ProblemKind::Fpde2d => cartesian(&[linspace(box_[0].0, box_[0].1, n_ic)]),
            ProblemKind::Fpde3d => {
                cartesian(&[linspace(box_[0].0, box_[0].1, n_ic), linspace(box_[1].0, box_[1].1, n_ic)])
            }
        };
        let ic_points = if n_ic == 0 { Vec::new() } else { ic_points };

        let faces = kind.faces();
        let mut bc_points = Vec::new();
        match kind {
            ProblemKind::Fode => {
                if n_bc > 0 {
                    return Err(Error::invalid("the fODE has no boundary; n_bc must be 0"));
                }
            }
            ProblemKind::Fpde2d => {
                let base = n_bc / faces.len();
                let extra = n_bc % faces.len();
                for (i, &face) in faces.iter().enumerate() {
                    let m = base + usize::from(i < extra);
                    let x = problem.domain().face_coordinate(face);
                    for t in linspace(0.0, t_final, m) {
                        bc_points.push(BcPoint { face, coords: alloc::vec![x, t] });
                    }
                }
            }
            ProblemKind::Fpde3d => {
                if n_bc > 0 {
                    let (a, b) = square_factors(n_bc);
                    for &face in faces {
                        let free = 1 - face.axis();
                        let (lo, hi) = box_[free];
                        let fixed = problem.domain().face_coordinate(face);
                        for t in linspace(0.0, t_final, b) {
                            for s in linspace(lo, hi, a) {
                                let mut coords = alloc::vec![0.0; 3];
                                coords[face.axis()] = fixed;
                                coords[free] = s;
                                coords[2] = t;
                                bc_points.push(BcPoint { face, coords });
                            }
                        }
                    }
                }
            }
        }

        Ok(CollocationSet {
            kind,
            time_grid,
            points_per_axis: points_per_axis.to_vec(),
            columns,
            eq_points,
            ic_points,
            bc_points,
        })
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn points_per_axis(&self) -> &[usize] {
        &self.points_per_axis
    }

    /// Spatial coordinates of each column (empty vectors for the fODE).
    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn eq_points(&self) -> &[EqPoint] {
        &self.eq_points
    }

    /// Spatial coordinates of the initial-condition points (`t = 0` implied).
    pub fn ic_points(&self) -> &[Vec<f64>] {
        &self.ic_points
    }

    pub fn bc_points(&self) -> &[BcPoint] {
        &self.bc_points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(kind: ProblemKind) -> Problem {
        Problem::new(kind, 0.5).unwrap()
    }

    #[test]
    fn counts_2d_figure_layout() {
        let c = CollocationSet::build(&problem(ProblemKind::Fpde2d), &[10, 10], 100, 100).unwrap();
        assert_eq!(c.eq_points().len(), 90);
        assert_eq!(c.ic_points().len(), 100);
        assert_eq!(c.bc_points().len(), 100);
        assert_eq!(c.bc_points().iter().filter(|b| b.face == Face::XLo).count(), 50);
        assert_eq!(c.bc_points().iter().filter(|b| b.face == Face::XHi).count(), 50);
    }

    #[test]
    fn counts_fode() {
        let c = CollocationSet::build(&problem(ProblemKind::Fode), &[30], 30, 0).unwrap();
        assert_eq!(c.eq_points().len(), 29);
        assert_eq!(c.ic_points().len(), 30);
        assert!(c.bc_points().is_empty());
        assert!(CollocationSet::build(&problem(ProblemKind::Fode), &[30], 30, 4).is_err());
    }

    #[test]
    fn counts_3d() {
        let c = CollocationSet::build(&problem(ProblemKind::Fpde3d), &[5, 5, 5], 5, 25).unwrap();
        assert_eq!(c.eq_points().len(), 100);
        assert_eq!(c.ic_points().len(), 25);
        assert_eq!(c.bc_points().len(), 100);
        assert_eq!(c.columns().len(), 25);
    }

    #[test]
    fn odd_bc_split_goes_to_first_face() {
        let c = CollocationSet::build(&problem(ProblemKind::Fpde2d), &[4, 4], 3, 7).unwrap();
        assert_eq!(c.bc_points().iter().filter(|b| b.face == Face::XLo).count(), 4);
        assert_eq!(c.bc_points().iter().filter(|b| b.face == Face::XHi).count(), 3);
    }

    #[test]
    fn square_factorisation() {
        assert_eq!(square_factors(25), (5, 5));
        assert_eq!(square_factors(12), (3, 4));
        assert_eq!(square_factors(7), (1, 7));
        assert_eq!(square_factors(1), (1, 1));
    }

    #[test]
    fn invalid_counts() {
        let p = problem(ProblemKind::Fpde2d);
        assert!(CollocationSet::build(&p, &[10], 1, 1).is_err());
        assert!(CollocationSet::build(&p, &[10, 1], 1, 1).is_err());
        assert!(CollocationSet::build(&p, &[1, 10], 1, 1).is_err());
    }

    #[test]
    fn structural_invariants() {
        let p = problem(ProblemKind::Fpde3d);
        let c = CollocationSet::build(&p, &[4, 3, 6], 3, 6).unwrap();
        let g = c.time_grid();
        assert_eq!(g.h(), 0.5 / 5.0);
        for eq in c.eq_points() {
            assert!(eq.r >= 1);
            assert_eq!(eq.coords[2], g.node(eq.r));
            assert_eq!(&eq.coords[..2], c.columns()[eq.column].as_slice());
        }
        // time-major, lexicographic ordering
        for w in c.eq_points().windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert!(a.r < b.r || (a.r == b.r && a.coords[..2] < b.coords[..2]));
        }
        for b in c.bc_points() {
            assert_eq!(b.coords[b.face.axis()], p.domain().face_coordinate(b.face));
        }
        let again = CollocationSet::build(&p, &[4, 3, 6], 3, 6).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn uniform_spacing() {
        let xs = linspace(0.0, 2.0, 9);
        assert_eq!(xs[0], 0.0);
        assert_eq!(xs[8], 2.0);
        for w in xs.windows(2) {
            assert!((w[1] - w[0] - 0.25).abs() < 1e-15);
        }
    }
}
