//! The three benchmark fractional equations.
//!
//! | kind     | equation                                   | solution                  | window    |
//! |----------|--------------------------------------------|---------------------------|-----------|
//! | `Fode`   | `D^α u = −u + t² + 8/(3√π) t^{3/2}`        | `t²`                      | `[0, 1]`  |
//! | `Fpde2d` | `D^α u + u = u_xx + f(x,t)`, `x ∈ [0,2]`   | `t² x(2−x)`               | `[0, 1]`  |
//! | `Fpde3d` | `D^α u + u = u_xx + u_yy + f`, `x,y ∈ [0,2]` | `t²[x(2−x) + y(2−y)]`   | `[0, 0.5]`|
//!
//! The 3D source is the one consistent with its stated solution: the
//! fractional term is `2/Γ(3−α) t^{2−α} [x(2−x) + y(2−y)]`.
//! [`source_3d_uncorrected`] keeps the variant with an extra `x(2−x)` factor
//! on that term for comparison; the stated solution does not satisfy it.

use alloc::vec::Vec;

use crate::caputo::{apply_row, check_alpha, CaputoScheme};
use crate::collocation::CollocationSet;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::numerics::gamma_unchecked;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ProblemKind {
    Fode,
    Fpde2d,
    Fpde3d,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Fode => "fode",
            ProblemKind::Fpde2d => "fpde2d",
            ProblemKind::Fpde3d => "fpde3d",
        }
    }

    /// Network input dimension (spatial axes plus time).
    pub fn input_dim(self) -> usize {
        self.spatial_dim() + 1
    }

    pub fn spatial_dim(self) -> usize {
        match self {
            ProblemKind::Fode => 0,
            ProblemKind::Fpde2d => 1,
            ProblemKind::Fpde3d => 2,
        }
    }

    pub fn default_time_window(self) -> f64 {
        match self {
            ProblemKind::Fode | ProblemKind::Fpde2d => 1.0,
            ProblemKind::Fpde3d => 0.5,
        }
    }

    /// Times at which per-slice errors are reported by default.
    pub fn report_times(self) -> &'static [f64] {
        match self {
            ProblemKind::Fode | ProblemKind::Fpde2d => &[0.1, 0.5, 1.0],
            ProblemKind::Fpde3d => &[0.1, 0.3, 0.5],
        }
    }

    /// Boundary faces in their fixed enumeration order.
    pub fn faces(self) -> &'static [Face] {
        match self {
            ProblemKind::Fode => &[],
            ProblemKind::Fpde2d => &[Face::XLo, Face::XHi],
            ProblemKind::Fpde3d => &[Face::XLo, Face::XHi, Face::YLo, Face::YHi],
        }
    }
}

impl core::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fode" => Ok(ProblemKind::Fode),
            "fpde2d" => Ok(ProblemKind::Fpde2d),
            "fpde3d" => Ok(ProblemKind::Fpde3d),
            _ => Err(Error::invalid(alloc::format!("unknown problem '{s}' (expected fode, fpde2d or fpde3d)"))),
        }
    }
}

/// A boundary face of the spatial box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    XLo,
    XHi,
    YLo,
    YHi,
}

impl Face {
    pub fn axis(self) -> usize {
        match self {
            Face::XLo | Face::XHi => 0,
            Face::YLo | Face::YHi => 1,
        }
    }

    pub fn is_upper(self) -> bool {
        matches!(self, Face::XHi | Face::YHi)
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::XLo => "x_lo",
            Face::XHi => "x_hi",
            Face::YLo => "y_lo",
            Face::YHi => "y_hi",
        }
    }
}

/// Spatial box and time window `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    spatial: Vec<(f64, f64)>,
    t_final: f64,
}

impl Domain {
    pub fn new(spatial: Vec<(f64, f64)>, t_final: f64) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::Domain { name: "t_final", value: t_final });
        }
        if spatial.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(Error::invalid("spatial interval needs lo < hi"));
        }
        Ok(Domain { spatial, t_final })
    }

    pub fn spatial(&self) -> &[(f64, f64)] {
        &self.spatial
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn face_coordinate(&self, face: Face) -> f64 {
        let (lo, hi) = self.spatial[face.axis()];
        if face.is_upper() { hi } else { lo }
    }
}

/// One benchmark problem at a given fractional order and time window.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    kind: ProblemKind,
    alpha: f64,
    domain: Domain,
}

/// A differentiable scalar field over problem coordinates: a network, or
/// the analytical solution standing in for one.
pub trait Field {
    fn value(&self, point: &[f64]) -> f64;
    fn second_derivative(&self, point: &[f64], axis: usize) -> f64;
}

impl Field for Network {
    fn value(&self, point: &[f64]) -> f64 {
        self.forward(point).expect("point dimension checked by caller")
    }

    fn second_derivative(&self, point: &[f64], axis: usize) -> f64 {
        self.forward_jet(point, axis).expect("point dimension checked by caller").d2
    }
}

/// The analytical solution of a problem as a [`Field`].
#[derive(Debug, Clone, Copy)]
pub struct Analytical<'p>(pub &'p Problem);

impl Field for Analytical<'_> {
    fn value(&self, point: &[f64]) -> f64 {
        self.0.analytical(point)
    }

    fn second_derivative(&self, point: &[f64], axis: usize) -> f64 {
        self.0.analytical_second_derivative(point, axis)
    }
}

#[inline]
fn bump(x: f64) -> f64 {
    x * (2.0 - x)
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 { Ok(()) } else { Err(Error::Domain { name: "t", value: t }) }
}

/// `t² + 8/(3√π) t^{3/2}`.
pub fn source_fode(t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(t * t + 8.0 / (3.0 * libm::sqrt(core::f64::consts::PI)) * libm::pow(t, 1.5))
}

/// `2/Γ(3−α) x(2−x) t^{2−α} + t² x(2−x) + 2t²`.
pub fn source_2d(x: f64, t: f64, alpha: f64) -> Result<f64> {
    check_time(t)?;
    check_alpha(alpha)?;
    let bx = bump(x);
    Ok(2.0 / gamma_unchecked(3.0 - alpha) * bx * libm::pow(t, 2.0 - alpha) + t * t * bx + 2.0 * t * t)
}

/// `2/Γ(3−α) t^{2−α} [x(2−x) + y(2−y)] + t² [x(2−x) + y(2−y)] + 4t²`.
pub fn source_3d(x: f64, y: f64, t: f64, alpha: f64) -> Result<f64> {
    check_time(t)?;
    check_alpha(alpha)?;
    let s = bump(x) + bump(y);
    Ok(2.0 / gamma_unchecked(3.0 - alpha) * libm::pow(t, 2.0 - alpha) * s + t * t * s + 4.0 * t * t)
}

/// The 3D source with an additional `x(2−x)` factor on the fractional term.
pub fn source_3d_uncorrected(x: f64, y: f64, t: f64, alpha: f64) -> Result<f64> {
    check_time(t)?;
    check_alpha(alpha)?;
    let s = bump(x) + bump(y);
    Ok(2.0 / gamma_unchecked(3.0 - alpha) * bump(x) * libm::pow(t, 2.0 - alpha) * s + t * t * s + 4.0 * t * t)
}

impl Problem {
    /// Problem on its default time window.
    pub fn new(kind: ProblemKind, alpha: f64) -> Result<Self> {
        Problem::with_time_window(kind, alpha, kind.default_time_window())
    }

    pub fn with_time_window(kind: ProblemKind, alpha: f64, t_final: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let spatial = alloc::vec![(0.0, 2.0); kind.spatial_dim()];
        Ok(Problem { kind, alpha, domain: Domain::new(spatial, t_final)? })
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn input_dim(&self) -> usize {
        self.kind.input_dim()
    }

    pub fn spatial_dim(&self) -> usize {
        self.kind.spatial_dim()
    }

    pub fn faces(&self) -> &'static [Face] {
        self.kind.faces()
    }

    /// Source term `f` at `point` (time last). `t` is clamped to be non-negative.
    pub fn source(&self, point: &[f64]) -> f64 {
        let t = point[point.len() - 1].max(0.0);
        match self.kind {
            ProblemKind::Fode => source_fode(t),
            ProblemKind::Fpde2d => source_2d(point[0], t, self.alpha),
            ProblemKind::Fpde3d => source_3d(point[0], point[1], t, self.alpha),
        }
        .expect("alpha validated at construction")
    }

    pub fn analytical(&self, point: &[f64]) -> f64 {
        let t = point[point.len() - 1];
        match self.kind {
            ProblemKind::Fode => t * t,
            ProblemKind::Fpde2d => t * t * bump(point[0]),
            ProblemKind::Fpde3d => t * t * (bump(point[0]) + bump(point[1])),
        }
    }

    /// Exact `∂²u/∂x_axis²` of the analytical solution.
    pub fn analytical_second_derivative(&self, point: &[f64], axis: usize) -> f64 {
        let t = point[point.len() - 1];
        if axis < self.spatial_dim() { -2.0 * t * t } else { 2.0 }
    }

    /// Initial condition `u(X, 0)`; zero for every benchmark.
    pub fn ic(&self, _spatial: &[f64]) -> f64 {
        0.0
    }

    /// Boundary value on `face` at `point` (full coordinates, time last).
    pub fn bc(&self, face: Face, point: &[f64]) -> f64 {
        let t = point[point.len() - 1];
        match self.kind {
            ProblemKind::Fode => 0.0,
            ProblemKind::Fpde2d => 0.0,
            ProblemKind::Fpde3d => {
                // u(0,y,t) = u(2,y,t) = t² y(2−y); u(x,0,t) = u(x,2,t) = t² x(2−x)
                let free = point[1 - face.axis()];
                t * t * bump(free)
            }
        }
    }

    fn check_field_inputs(&self, colloc: &CollocationSet, scheme: &CaputoScheme) -> Result<()> {
        if colloc.kind() != self.kind {
            return Err(Error::invalid("collocation set was built for a different problem"));
        }
        let (g, s) = (colloc.time_grid(), scheme.grid());
        if g.n_steps() != s.n_steps() || g.h() != s.h() {
            return Err(Error::invalid("scheme grid does not match the collocation time grid"));
        }
        Ok(())
    }
}

/// Residual at `(spatial, t_r)` given the field's history `u(spatial, t_0..=t_r)`
/// and its spatial Laplacian at `t_r`.
pub fn residual_at(problem: &Problem, scheme: &CaputoScheme, spatial: &[f64], history: &[f64], laplacian: f64) -> Result<f64> {
    if spatial.len() != problem.spatial_dim() {
        return Err(Error::DimensionMismatch { expected: problem.spatial_dim(), found: spatial.len() });
    }
    if history.len() < 2 || history.len() > scheme.grid().n_nodes() {
        return Err(Error::invalid(alloc::format!(
            "residual needs the history t_0..t_r with 1 <= r <= {} (got {} values)",
            scheme.grid().n_steps(),
            history.len()
        )));
    }
    let r = history.len() - 1;
    let mut point = spatial.to_vec();
    point.push(scheme.grid().node(r));
    let d = scheme.apply_history(history)?;
    Ok(d + history[r] - laplacian - problem.source(&point))
}

/// Residuals at every equation point of `colloc`, in its order.
pub fn residual(problem: &Problem, field: &dyn Field, scheme: &CaputoScheme, colloc: &CollocationSet) -> Result<Vec<f64>> {
    residual_with_source(problem, field, scheme, colloc, |p| problem.source(p))
}

/// [`residual`] with an arbitrary source term in place of the problem's.
pub fn residual_with_source(
    problem: &Problem,
    field: &dyn Field,
    scheme: &CaputoScheme,
    colloc: &CollocationSet,
    source: impl Fn(&[f64]) -> f64,
) -> Result<Vec<f64>> {
    problem.check_field_inputs(colloc, scheme)?;
    let grid = colloc.time_grid();
    let histories: Vec<Vec<f64>> = colloc
        .columns()
        .iter()
        .map(|x| {
            let mut point = x.clone();
            point.push(0.0);
            grid.nodes()
                .map(|t| {
                    *point.last_mut().unwrap() = t;
                    field.value(&point)
                })
                .collect()
        })
        .collect();
    Ok(colloc
        .eq_points()
        .iter()
        .map(|eq| {
            let hist = &histories[eq.column];
            let row = scheme.row(eq.r).expect("r validated by collocation");
            let d = apply_row(row, hist);
            let lap: f64 = (0..problem.spatial_dim()).map(|a| field.second_derivative(&eq.coords, a)).sum();
            d + hist[eq.r] - lap - source(&eq.coords)
        })
        .collect())
}
