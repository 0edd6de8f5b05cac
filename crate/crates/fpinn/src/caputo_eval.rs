//! Discrete Caputo derivatives of monomials or sampled data.

use std::path::Path;

use anyhow::{bail, Context};
use fpinn_core::caputo::{convergence_table, exact_caputo_monomial, observed_order, ConvergencePoint};
use fpinn_core::{CaputoScheme, SchemeKind, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeRow {
    pub t: f64,
    pub discrete: f64,
    pub exact: Option<f64>,
}

/// Uniformly spaced samples `(h, u_0..u_N)` from a CSV with columns `t,u`.
///
/// The first sample is taken as the lower terminal of the derivative.
pub fn read_samples(path: &Path) -> anyhow::Result<(f64, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "u" {
        bail!("{}: expected header 't,u'", path.display());
    }
    let mut ts = Vec::new();
    let mut us = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        let parse = |k: usize| -> anyhow::Result<f64> {
            rec[k].trim().parse::<f64>().with_context(|| format!("{}: row {}: bad number '{}'", path.display(), i + 2, &rec[k]))
        };
        ts.push(parse(0)?);
        us.push(parse(1)?);
    }
    if ts.len() < 2 {
        bail!("{}: need at least 2 samples", path.display());
    }
    let h = ts[1] - ts[0];
    if !(h > 0.0) {
        bail!("{}: t must be increasing", path.display());
    }
    for (n, w) in ts.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            bail!("{}: samples must be uniformly spaced (gap at row {})", path.display(), n + 3);
        }
    }
    Ok((h, us))
}

/// Derivative at every node after the first; `t` is measured from the first node.
pub fn derivative_of_samples(kind: SchemeKind, alpha: f64, h: f64, values: &[f64]) -> anyhow::Result<Vec<DerivativeRow>> {
    let grid = TimeGrid::new(h, values.len() - 1)?;
    let scheme = CaputoScheme::new(kind, alpha, grid)?;
    (1..values.len())
        .map(|r| Ok(DerivativeRow { t: grid.node(r), discrete: scheme.apply(values, r)?, exact: None }))
        .collect()
}

pub fn derivative_of_monomial(kind: SchemeKind, alpha: f64, p: f64, h: f64, t_final: f64) -> anyhow::Result<Vec<DerivativeRow>> {
    let n = (t_final / h).round();
    if n < 1.0 || (n * h - t_final).abs() > 1e-9 * t_final.max(1.0) {
        bail!("h = {h} does not divide t_final = {t_final}");
    }
    let grid = TimeGrid::new(h, n as usize)?;
    let values: Vec<f64> = grid.nodes().map(|t| t.powf(p)).collect();
    let mut rows = derivative_of_samples(kind, alpha, h, &values)?;
    for r in &mut rows {
        r.exact = Some(exact_caputo_monomial(p, alpha, r.t)?);
    }
    Ok(rows)
}

/// Error at `t_final` for `levels` successive halvings of `h`, and the fitted order.
pub fn order_study(kind: SchemeKind, alpha: f64, p: f64, h: f64, t_final: f64, levels: usize) -> anyhow::Result<(Vec<ConvergencePoint>, f64)> {
    let hs: Vec<f64> = (0..levels).map(|k| h / f64::powi(2.0, k as i32)).collect();
    let table = convergence_table(kind, alpha, p, t_final, &hs)?;
    let order = observed_order(kind, alpha, p, t_final, &hs)?;
    Ok((table, order))
}

pub fn write_rows<W: std::io::Write>(out: W, rows: &[DerivativeRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let with_exact = rows.iter().any(|r| r.exact.is_some());
    if with_exact {
        w.write_record(["t", "discrete", "exact", "abs_error"])?;
    } else {
        w.write_record(["t", "discrete"])?;
    }
    for r in rows {
        match r.exact {
            Some(e) => w.write_record([r.t.to_string(), r.discrete.to_string(), e.to_string(), (r.discrete - e).abs().to_string()])?,
            None => w.write_record([r.t.to_string(), r.discrete.to_string()])?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_order<W: std::io::Write>(out: W, table: &[ConvergencePoint]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "discrete", "exact", "abs_error"])?;
    for c in table {
        w.write_record([c.h.to_string(), c.approx.to_string(), c.exact.to_string(), c.error.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
