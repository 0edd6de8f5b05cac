//! Discrete Caputo fractional derivatives on uniform time grids.
//!
//! Two classical schemes are provided, the Diethelm finite-difference
//! quadrature and the L1 piecewise-linear approximation. Both are folded
//! into a triangular weight table so that
//!
//! ```text
//! D^α f(t_r) ≈ Σ_{j=0..r} w[r][j] · f(t_j)
//! ```
//!
//! with all prefactors absorbed. Application is done in difference form,
//! `Σ_{j≥1} w[r][j] (f_j − f_0)`, which annihilates constants exactly.
//! `w[r][0]` is stored as `−Σ_{j≥1} w[r][j]` so that the row is the exact
//! linear functional that [`CaputoScheme::apply`] evaluates.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::{gamma_unchecked, ls_slope};

/// Uniform grid `t_n = n·h`, `n = 0..=N`, starting at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeGrid {
    h: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(h: f64, n_steps: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Domain { name: "h", value: h });
        }
        if n_steps == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        Ok(TimeGrid { h, n_steps })
    }

    /// Grid with `n_steps` equal steps covering `[0, t_final]`.
    pub fn covering(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::Domain { name: "t_final", value: t_final });
        }
        if n_steps == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        Ok(TimeGrid { h: t_final / n_steps as f64, n_steps })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    /// `t_n`, generated by multiplication so that `t_N = N·h` exactly.
    pub fn node(&self, n: usize) -> f64 {
        n as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |n| self.node(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SchemeKind {
    Diethelm,
    L1,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Diethelm => "diethelm",
            SchemeKind::L1 => "l1",
        }
    }
}

impl core::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "diethelm" => Ok(SchemeKind::Diethelm),
            "l1" => Ok(SchemeKind::L1),
            _ => Err(Error::invalid(alloc::format!("unknown scheme '{s}' (expected diethelm or l1)"))),
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { name: "alpha", value: alpha })
    }
}

/// Diethelm quadrature coefficient `a_{n, n_r}` (unscaled).
pub fn diethelm_coefficient(n: usize, n_r: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if n_r == 0 || n > n_r {
        return Err(Error::invalid(alloc::format!("diethelm coefficient needs 0 <= n <= n_r, n_r >= 1 (n = {n}, n_r = {n_r})")));
    }
    Ok(diethelm_raw(n, n_r, alpha))
}

fn diethelm_raw(n: usize, n_r: usize, alpha: f64) -> f64 {
    let e = 1.0 - alpha;
    let pw = |k: usize| if k == 0 { 0.0 } else { libm::pow(k as f64, e) };
    if n == 0 {
        1.0
    } else if n < n_r {
        pw(n + 1) - 2.0 * pw(n) + pw(n - 1)
    } else {
        e * libm::pow(n_r as f64, -alpha) - pw(n_r) + pw(n_r - 1)
    }
}

/// L1 coefficient `b_n = ((n+1)^{1−α} − n^{1−α}) / Γ(2−α)`.
pub fn l1_coefficient(n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(l1_raw(n, alpha, gamma_unchecked(2.0 - alpha)))
}

fn l1_raw(n: usize, alpha: f64, gamma_2ma: f64) -> f64 {
    let e = 1.0 - alpha;
    let lo = if n == 0 { 0.0 } else { libm::pow(n as f64, e) };
    (libm::pow((n + 1) as f64, e) - lo) / gamma_2ma
}

/// Precomputed discrete Caputo operator for one `(kind, α, grid)`.
#[derive(Debug, Clone)]
pub struct CaputoScheme {
    kind: SchemeKind,
    alpha: f64,
    grid: TimeGrid,
    weights: Vec<f64>,
    row_start: Vec<usize>,
}

impl CaputoScheme {
    pub fn new(kind: SchemeKind, alpha: f64, grid: TimeGrid) -> Result<Self> {
        check_alpha(alpha)?;
        let n = grid.n_steps();
        let g = gamma_unchecked(2.0 - alpha);
        let h_pow = libm::pow(grid.h(), -alpha);

        let mut row_start = Vec::with_capacity(n + 1);
        row_start.push(0);
        let mut weights = Vec::with_capacity((n + 1) * (n + 2) / 2);
        // row r = 0 is empty, the operator is undefined there
        for r in 1..=n {
            row_start.push(weights.len());
            let base = weights.len();
            weights.push(0.0);
            match kind {
                SchemeKind::Diethelm => {
                    let scale = h_pow / g;
                    for j in 1..=r {
                        weights.push(scale * diethelm_raw(r - j, r, alpha));
                    }
                }
                SchemeKind::L1 => {
                    let b: Vec<f64> = (0..r).map(|k| l1_raw(k, alpha, g)).collect();
                    for j in 1..r {
                        let k = r - j;
                        weights.push(h_pow * (b[k] - b[k - 1]));
                    }
                    weights.push(h_pow * b[0]);
                }
            }
            let tail: f64 = weights[base + 1..].iter().sum();
            weights[base] = -tail;
        }
        Ok(CaputoScheme { kind, alpha, grid, weights, row_start })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Folded weights `w[r][0..=r]`.
    pub fn row(&self, r: usize) -> Result<&[f64]> {
        self.check_row(r)?;
        let start = self.row_start[r];
        Ok(&self.weights[start..start + r + 1])
    }

    fn check_row(&self, r: usize) -> Result<()> {
        if r == 0 || r > self.grid.n_steps() {
            return Err(Error::invalid(alloc::format!(
                "caputo row index must lie in 1..={} (got {r})",
                self.grid.n_steps()
            )));
        }
        Ok(())
    }

    /// Discrete Caputo derivative at `t_r` from samples on all `N + 1` nodes.
    pub fn apply(&self, values: &[f64], r: usize) -> Result<f64> {
        if values.len() != self.grid.n_nodes() {
            return Err(Error::DimensionMismatch { expected: self.grid.n_nodes(), found: values.len() });
        }
        let row = self.row(r)?;
        Ok(apply_row(row, values))
    }

    /// Like [`apply`](Self::apply) but only needs the history `f_0..=f_r`.
    pub fn apply_history(&self, history: &[f64]) -> Result<f64> {
        let r = history.len().checked_sub(1).ok_or_else(|| Error::invalid("empty history"))?;
        let row = self.row(r)?;
        Ok(apply_row(row, history))
    }
}

#[inline]
pub(crate) fn apply_row(row: &[f64], values: &[f64]) -> f64 {
    let f0 = values[0];
    let mut acc = 0.0;
    for j in 1..row.len() {
        acc += row[j] * (values[j] - f0);
    }
    acc
}

/// Closed-form Caputo derivative of `t^p`; `p = 0` is the constant case.
pub fn exact_caputo_monomial(p: f64, alpha: f64, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(t >= 0.0) {
        return Err(Error::Domain { name: "t", value: t });
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain { name: "p", value: p });
    }
    Ok(gamma_unchecked(p + 1.0) / gamma_unchecked(p + 1.0 - alpha) * libm::pow(t, p - alpha))
}

/// One row of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub h: f64,
    pub approx: f64,
    pub exact: f64,
    pub error: f64,
}

/// Discrete vs exact Caputo derivative of `t^p` at `t_final` for each `h`.
pub fn convergence_table(
    kind: SchemeKind,
    alpha: f64,
    p: f64,
    t_final: f64,
    hs: &[f64],
) -> Result<Vec<ConvergencePoint>> {
    let exact = exact_caputo_monomial(p, alpha, t_final)?;
    hs.iter()
        .map(|&h| {
            let n = steps_for(t_final, h)?;
            let grid = TimeGrid::new(h, n)?;
            let scheme = CaputoScheme::new(kind, alpha, grid)?;
            let values: Vec<f64> = grid.nodes().map(|t| libm::pow(t, p)).collect();
            let approx = scheme.apply(&values, n)?;
            Ok(ConvergencePoint { h, approx, exact, error: libm::fabs(approx - exact) })
        })
        .collect()
}

fn steps_for(t_final: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) {
        return Err(Error::Domain { name: "h", value: h });
    }
    let n = libm::round(t_final / h);
    if n < 1.0 || libm::fabs(n * h - t_final) > 1e-9 * t_final.max(1.0) {
        return Err(Error::invalid(alloc::format!("h = {h} does not divide t_final = {t_final}")));
    }
    Ok(n as usize)
}

/// Least-squares slope of `log(error)` against `log(h)` over a halving sequence.
pub fn observed_order(kind: SchemeKind, alpha: f64, p: f64, t_final: f64, hs: &[f64]) -> Result<f64> {
    if hs.len() < 3 {
        return Err(Error::invalid("observed order needs at least 3 grid resolutions"));
    }
    for w in hs.windows(2) {
        if libm::fabs(w[1] - 0.5 * w[0]) > 1e-12 * w[0] {
            return Err(Error::invalid("grid spacings must form a halving sequence"));
        }
    }
    let table = convergence_table(kind, alpha, p, t_final, hs)?;
    let xs: Vec<f64> = table.iter().map(|c| libm::log(c.h)).collect();
    let ys: Vec<f64> = table.iter().map(|c| libm::log(c.error)).collect();
    Ok(ls_slope(&xs, &ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const HS: [f64; 4] = [0.02, 0.01, 0.005, 0.0025];

    fn close(a: f64, b: f64, tol: f64) -> bool {
        libm::fabs(a - b) <= tol
    }

    #[test]
    fn diethelm_coefficient_examples() {
        assert_eq!(diethelm_coefficient(0, 2, 0.5).unwrap(), 1.0);
        // 2^0.5 − 2·1 + 0
        assert!(close(diethelm_coefficient(1, 2, 0.5).unwrap(), -0.585_786_437_6, 1e-10));
        // 0.5·2^-0.5 − 2^0.5 + 1
        assert!(close(diethelm_coefficient(2, 2, 0.5).unwrap(), -0.060_660_171_8, 1e-10));
    }

    #[test]
    fn diethelm_coefficient_errors() {
        assert!(diethelm_coefficient(3, 2, 0.5).is_err());
        assert!(diethelm_coefficient(0, 0, 0.5).is_err());
        assert!(diethelm_coefficient(0, 2, 1.0).is_err());
        assert!(diethelm_coefficient(0, 2, 0.0).is_err());
    }

    #[test]
    fn l1_coefficient_examples() {
        assert!(close(l1_coefficient(0, 0.5).unwrap(), 1.128_379_167_1, 1e-10));
        assert!(close(l1_coefficient(1, 0.5).unwrap(), 0.467_389_954_5, 1e-10));
        assert!(l1_coefficient(100_000, 0.5).unwrap() < 1e-2);
        assert!(l1_coefficient(0, -0.1).is_err());
    }

    #[test]
    fn l1_coefficients_positive_and_decreasing() {
        for i in 1..20 {
            let alpha = i as f64 / 20.0;
            let mut prev = f64::INFINITY;
            for n in 0..500 {
                let b = l1_coefficient(n, alpha).unwrap();
                assert!(b > 0.0 && b < prev, "alpha = {alpha}, n = {n}");
                prev = b;
            }
        }
    }

    #[test]
    fn l1_first_row_weights() {
        let s = CaputoScheme::new(SchemeKind::L1, 0.5, TimeGrid::new(1.0, 3).unwrap()).unwrap();
        let row = s.row(1).unwrap();
        assert_eq!(row.len(), 2);
        assert!(close(row[0], -1.128_379_167_1, 1e-10));
        assert!(close(row[1], 1.128_379_167_1, 1e-10));
    }

    #[test]
    fn rows_have_r_plus_one_entries() {
        let s = CaputoScheme::new(SchemeKind::Diethelm, 0.3, TimeGrid::new(0.1, 7).unwrap()).unwrap();
        for r in 1..=7 {
            assert_eq!(s.row(r).unwrap().len(), r + 1);
        }
        assert!(s.row(0).is_err());
        assert!(s.row(8).is_err());
    }

    #[test]
    fn constants_annihilated_exactly() {
        for kind in [SchemeKind::Diethelm, SchemeKind::L1] {
            let s = CaputoScheme::new(kind, 0.5, TimeGrid::new(0.01, 50).unwrap()).unwrap();
            let v = vec![5.0; 51];
            for r in 1..=50 {
                assert_eq!(s.apply(&v, r).unwrap(), 0.0);
            }
            let z = vec![0.0; 51];
            assert_eq!(s.apply(&z, 17).unwrap(), 0.0);
        }
    }

    #[test]
    fn linear_function_matches_exact() {
        let grid = TimeGrid::new(0.01, 100).unwrap();
        let t: Vec<f64> = grid.nodes().collect();
        let exact = exact_caputo_monomial(1.0, 0.5, 1.0).unwrap();
        assert!(close(exact, 1.128_379_167_1, 1e-9));
        for kind in [SchemeKind::Diethelm, SchemeKind::L1] {
            let s = CaputoScheme::new(kind, 0.5, grid).unwrap();
            assert!(close(s.apply(&t, 100).unwrap(), exact, 2e-2));
        }
    }

    #[test]
    fn t_squared_at_one() {
        let grid = TimeGrid::new(0.01, 100).unwrap();
        let v: Vec<f64> = grid.nodes().map(|t| t * t).collect();
        for kind in [SchemeKind::Diethelm, SchemeKind::L1] {
            let s = CaputoScheme::new(kind, 0.5, grid).unwrap();
            assert!(close(s.apply(&v, 100).unwrap(), 1.504_505_556_1, 1e-3));
        }
    }

    #[test]
    fn apply_is_linear() {
        let grid = TimeGrid::new(0.02, 50).unwrap();
        let s = CaputoScheme::new(SchemeKind::L1, 0.5, grid).unwrap();
        let sq: Vec<f64> = grid.nodes().map(|t| t * t).collect();
        let lin: Vec<f64> = grid.nodes().collect();
        let (a, b) = (3.7, -1.3);
        let mix: Vec<f64> = sq.iter().zip(&lin).map(|(x, y)| a * x + b * y).collect();
        for r in 1..=50 {
            let lhs = s.apply(&mix, r).unwrap();
            let rhs = a * s.apply(&sq, r).unwrap() + b * s.apply(&lin, r).unwrap();
            assert!(libm::fabs(lhs - rhs) <= 1e-12 * libm::fabs(rhs).max(1.0));
        }
    }

    #[test]
    fn apply_errors() {
        let s = CaputoScheme::new(SchemeKind::L1, 0.5, TimeGrid::new(0.1, 10).unwrap()).unwrap();
        let v = vec![1.0; 11];
        assert!(s.apply(&v, 0).is_err());
        assert!(s.apply(&v[..10], 3).is_err());
        assert!(s.apply_history(&[]).is_err());
        assert!(CaputoScheme::new(SchemeKind::L1, 1.0, TimeGrid::new(0.1, 10).unwrap()).is_err());
    }

    #[test]
    fn history_matches_full_application() {
        let grid = TimeGrid::new(0.05, 20).unwrap();
        let s = CaputoScheme::new(SchemeKind::Diethelm, 0.4, grid).unwrap();
        let v: Vec<f64> = grid.nodes().map(|t| libm::exp(t)).collect();
        for r in 1..=20 {
            assert_eq!(s.apply(&v, r).unwrap(), s.apply_history(&v[..=r]).unwrap());
        }
    }

    #[test]
    fn monomial_oracle() {
        assert!(close(exact_caputo_monomial(2.0, 0.5, 1.0).unwrap(), 1.504_505_556_1, 1e-9));
        assert_eq!(exact_caputo_monomial(0.0, 0.3, 0.7).unwrap(), 0.0);
        assert!(close(exact_caputo_monomial(2.0, 0.5, 0.25).unwrap(), 0.188_063_194_5, 1e-9));
        assert!(exact_caputo_monomial(0.5, 0.5, 1.0).is_err());
    }

    /// Independent oracle: the Caputo integral for `t^p` evaluated by
    /// quadrature after the substitution `x = t − s²`, which removes the
    /// `(t − x)^{-α}` singularity for α = 1/2.
    #[test]
    fn monomial_oracle_matches_quadrature() {
        let (p, t) = (2.0, 0.25);
        let n = 200_000;
        let smax = libm::sqrt(t);
        let ds = smax / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let s = (i as f64 + 0.5) * ds;
            let x = t - s * s;
            // f'(x)/(t−x)^{1/2} dx = p x^{p−1}/s · 2s ds
            acc += 2.0 * p * libm::pow(x, p - 1.0) * ds;
        }
        let quad = acc / gamma_unchecked(0.5);
        assert!(close(quad, exact_caputo_monomial(p, 0.5, t).unwrap(), 1e-9));
    }

    #[test]
    fn observed_orders() {
        for kind in [SchemeKind::Diethelm, SchemeKind::L1] {
            let o = observed_order(kind, 0.5, 2.0, 1.0, &HS).unwrap();
            assert!((1.3..=1.7).contains(&o), "{kind:?}: {o}");
            let o = observed_order(kind, 0.9, 2.0, 1.0, &HS).unwrap();
            assert!((0.9..=1.3).contains(&o), "{kind:?}: {o}");
            for alpha in [0.25, 0.5, 0.75] {
                let o = observed_order(kind, alpha, 2.0, 1.0, &HS).unwrap();
                assert!(libm::fabs(o - (2.0 - alpha)) <= 0.2, "{kind:?} alpha {alpha}: {o}");
            }
        }
    }

    #[test]
    fn observed_order_errors() {
        assert!(observed_order(SchemeKind::L1, 0.5, 2.0, 1.0, &HS[..2]).is_err());
        assert!(observed_order(SchemeKind::L1, 0.5, 2.0, 1.0, &[0.02, 0.01, 0.004]).is_err());
        assert!(observed_order(SchemeKind::L1, 0.5, 2.0, 1.0, &[0.3, 0.15, 0.075]).is_err());
    }

    #[test]
    fn schemes_agree() {
        let grid = TimeGrid::new(0.005, 200).unwrap();
        let v: Vec<f64> = grid.nodes().map(|t| t * t).collect();
        let d = CaputoScheme::new(SchemeKind::Diethelm, 0.5, grid).unwrap().apply(&v, 200).unwrap();
        let l = CaputoScheme::new(SchemeKind::L1, 0.5, grid).unwrap().apply(&v, 200).unwrap();
        assert!(libm::fabs(d - l) <= 5e-3);
    }

    #[test]
    fn grid_nodes_by_multiplication() {
        let g = TimeGrid::covering(1.0, 9).unwrap();
        assert_eq!(g.node(9), 9.0 * (1.0 / 9.0));
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(0.1, 0).is_err());
    }
}
