//! CSV tables. Every file has a header row and a fixed column order.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use fpinn_core::trainer::{EvalRow, SliceMetrics, TraceEntry};
use fpinn_core::{CollocationSet, ProblemKind};

pub fn axis_names(kind: ProblemKind) -> &'static [&'static str] {
    match kind {
        ProblemKind::Fode => &["t"],
        ProblemKind::Fpde2d => &["x", "t"],
        ProblemKind::Fpde3d => &["x", "y", "t"],
    }
}

fn create(path: &Path) -> anyhow::Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

/// Loss trace streamed row by row as training proceeds.
pub struct TraceWriter {
    inner: csv::Writer<File>,
}

pub const TRACE_HEADER: [&str; 7] = ["iter", "phi_eq", "phi_ic", "phi_bc", "phi_total", "lr", "elapsed_s"];

impl TraceWriter {
    pub fn create(path: &Path) -> anyhow::Result<Self> {
        let mut inner = create(path)?;
        inner.write_record(TRACE_HEADER)?;
        Ok(TraceWriter { inner })
    }

    pub fn push(&mut self, e: &TraceEntry) -> anyhow::Result<()> {
        let l = &e.loss;
        self.inner.write_record([
            e.iter.to_string(),
            l.eq.to_string(),
            l.ic.to_string(),
            l.bc.to_string(),
            l.total.to_string(),
            e.lr.to_string(),
            format!("{:.3}", e.elapsed_s),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_eval(path: &Path, kind: ProblemKind, rows: &[EvalRow]) -> anyhow::Result<()> {
    let mut w = create(path)?;
    let mut header: Vec<&str> = axis_names(kind).to_vec();
    header.extend(["u_nn", "u_exact", "abs_error"]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec: Vec<String> = r.coords.iter().map(f64::to_string).collect();
        rec.extend([r.predicted.to_string(), r.exact.to_string(), r.abs_error.to_string()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_slice_metrics(path: &Path, slices: &[SliceMetrics]) -> anyhow::Result<()> {
    let mut w = create(path)?;
    w.write_record(["t", "rel_l2", "max_abs", "n_points"])?;
    for s in slices {
        w.write_record([s.t.to_string(), s.metrics.rel_l2.to_string(), s.metrics.max_abs.to_string(), s.metrics.n_points.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// All collocation points, one per row, tagged by set.
pub fn write_collocation(path: &Path, colloc: &CollocationSet) -> anyhow::Result<()> {
    let kind = colloc.kind();
    let mut w = create(path)?;
    let mut header = vec!["set", "tag"];
    header.extend(axis_names(kind));
    w.write_record(&header)?;
    for e in colloc.eq_points() {
        let mut rec = vec!["eq".to_string(), e.column.to_string()];
        rec.extend(e.coords.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    for x in colloc.ic_points() {
        let mut rec = vec!["ic".to_string(), String::new()];
        rec.extend(x.iter().map(f64::to_string));
        rec.push("0".into());
        w.write_record(&rec)?;
    }
    for b in colloc.bc_points() {
        let mut rec = vec!["bc".to_string(), b.face.name().to_string()];
        rec.extend(b.coords.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}
