//! One-axis parameter sweeps over a base run configuration.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, Context};
use fpinn_core::trainer::slice_table;
use fpinn_core::SchemeKind;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::output::axis_names;
use crate::runner::{self, report_times, RunSummary, ValidationError, WallClock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Same count on every axis.
    CollocAllDims,
    CollocTimeOnly,
    /// Same count on every spatial axis.
    CollocSpaceOnly,
    TimeWindow,
    /// `max_wall_seconds`.
    WallBudget,
    /// `[hidden_layers, neurons_per_layer]`.
    Architecture,
    Scheme,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::CollocAllDims => "colloc_all_dims",
            SweepAxis::CollocTimeOnly => "colloc_time_only",
            SweepAxis::CollocSpaceOnly => "colloc_space_only",
            SweepAxis::TimeWindow => "time_window",
            SweepAxis::WallBudget => "wall_budget",
            SweepAxis::Architecture => "architecture",
            SweepAxis::Scheme => "scheme",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub axis: SweepAxis,
    pub values: Vec<Value>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn as_count(v: &Value) -> Result<usize, String> {
    v.as_u64().filter(|&n| n >= 2).map(|n| n as usize).ok_or_else(|| format!("expected an integer count >= 2, got {v}"))
}

fn as_positive(v: &Value) -> Result<f64, String> {
    v.as_f64().filter(|&x| x > 0.0 && x.is_finite()).ok_or_else(|| format!("expected a positive number, got {v}"))
}

/// The base config with `value` substituted on `axis` and nothing else changed.
pub fn apply(base: &RunConfig, axis: SweepAxis, value: &Value) -> Result<RunConfig, String> {
    let mut c = base.clone();
    let counts = &mut c.collocation.points_per_axis;
    match axis {
        SweepAxis::CollocAllDims => {
            let n = as_count(value)?;
            counts.iter_mut().for_each(|k| *k = n);
        }
        SweepAxis::CollocTimeOnly => {
            let n = as_count(value)?;
            *counts.last_mut().ok_or("base has no collocation axes")? = n;
        }
        SweepAxis::CollocSpaceOnly => {
            let n = as_count(value)?;
            if counts.len() < 2 {
                return Err(format!("{} has no spatial axes", base.problem.name()));
            }
            let k = counts.len() - 1;
            counts[..k].iter_mut().for_each(|s| *s = n);
        }
        SweepAxis::TimeWindow => c.time_window = Some(as_positive(value)?),
        SweepAxis::WallBudget => c.train.max_wall_seconds = Some(as_positive(value)?),
        SweepAxis::Architecture => {
            let pair = value
                .as_array()
                .filter(|a| a.len() == 2)
                .and_then(|a| Some((a[0].as_u64()?, a[1].as_u64()?)))
                .filter(|&(l, n)| l > 0 && n > 0)
                .ok_or_else(|| format!("expected [hidden_layers, neurons] with positive entries, got {value}"))?;
            c.network.hidden_layers = pair.0 as usize;
            c.network.neurons_per_layer = pair.1 as usize;
        }
        SweepAxis::Scheme => {
            let s = value.as_str().ok_or_else(|| format!("expected a scheme name, got {value}"))?;
            c.scheme = s.parse::<SchemeKind>().map_err(|e| e.to_string())?;
        }
    }
    Ok(c)
}

/// Short filesystem-safe label for a sweep value.
pub fn label(value: &Value) -> String {
    let raw = match value {
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(label).collect::<Vec<_>>().join("x"),
        v => v.to_string(),
    };
    raw.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self, Vec<String>> {
        let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
        serde_json::from_str(&text).map_err(|e| vec![format!("{}: {e}", path.display())])
    }

    /// Children in value order, or every problem found.
    pub fn children(&self) -> Result<Vec<RunConfig>, Vec<String>> {
        let mut errs: Vec<String> = self.base.validate().into_iter().map(|e| format!("base: {e}")).collect();
        if self.values.is_empty() {
            errs.push("values must not be empty".into());
        }
        let mut out = Vec::new();
        for (i, v) in self.values.iter().enumerate() {
            match apply(&self.base, self.axis, v) {
                Ok(c) => {
                    errs.extend(c.validate().into_iter().map(|e| format!("values[{i}]: {e}")));
                    out.push(c);
                }
                Err(e) => errs.push(format!("values[{i}]: {e}")),
            }
        }
        if errs.is_empty() { Ok(out) } else { Err(errs) }
    }
}

pub struct ChildResult {
    pub index: usize,
    pub value: Value,
    pub out_dir: PathBuf,
    pub outcome: Result<RunSummary, String>,
}

pub struct SweepResult {
    pub children: Vec<ChildResult>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.children.iter().filter(|c| c.outcome.is_err()).count()
    }
}

/// Runs every child (up to `jobs` at once) and writes `summary.csv` plus
/// one `comparison_t*.csv` per reporting time into `out_dir`.
///
/// A failing child is recorded and the sweep carries on.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path, jobs: usize) -> anyhow::Result<SweepResult> {
    let children = spec.children().map_err(ValidationError)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    std::fs::write(out_dir.join("spec.json"), serde_json::to_string_pretty(spec)? + "\n")?;

    let dirs: Vec<PathBuf> = spec
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| out_dir.join(format!("{i:03}_{}_{}", spec.axis.name(), label(v))))
        .collect();
    type Slot = Option<(Result<RunSummary, String>, Vec<Vec<fpinn_core::trainer::EvalRow>>)>;
    let slots: Mutex<Vec<Slot>> = Mutex::new((0..children.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = jobs.clamp(1, children.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= children.len() {
                    break;
                }
                let result = run_child(&children[i], &dirs[i]);
                slots.lock().expect("no panics while locked")[i] = Some(result);
            });
        }
    });

    let slots = slots.into_inner().expect("workers joined");
    let mut results = Vec::with_capacity(children.len());
    let mut tables = Vec::with_capacity(children.len());
    for (i, slot) in slots.into_iter().enumerate() {
        let (outcome, rows) = slot.unwrap_or_else(|| (Err("child did not run".into()), Vec::new()));
        results.push(ChildResult { index: i, value: spec.values[i].clone(), out_dir: dirs[i].clone(), outcome });
        tables.push(rows);
    }
    let result = SweepResult { children: results };
    write_summary(&out_dir.join("summary.csv"), spec, &result)?;
    write_comparisons(out_dir, spec, &result, &tables)?;
    Ok(result)
}

fn run_child(config: &RunConfig, dir: &Path) -> (Result<RunSummary, String>, Vec<Vec<fpinn_core::trainer::EvalRow>>) {
    let clock = WallClock::start();
    match runner::run(config, dir, &clock) {
        Ok(outcome) => {
            let problem = config.build_problem().expect("validated");
            let spatial = &config.eval_grid[..config.eval_grid.len() - 1];
            let inside = report_times(&problem);
            let rows = config
                .problem
                .report_times()
                .iter()
                .map(|t| match inside.contains(t) {
                    true => slice_table(&outcome.network, &problem, spatial, *t).unwrap_or_default(),
                    false => Vec::new(),
                })
                .collect();
            (Ok(outcome.summary), rows)
        }
        Err(e) => (Err(format!("{e:#}")), Vec::new()),
    }
}

const SUMMARY_FIXED: [&str; 14] = [
    "index",
    "axis",
    "value",
    "status",
    "error",
    "iterations",
    "wall_seconds",
    "stop_reason",
    "phi_eq",
    "phi_ic",
    "phi_bc",
    "phi_total",
    "rel_l2",
    "max_abs",
];

fn write_summary(path: &Path, spec: &SweepSpec, result: &SweepResult) -> anyhow::Result<()> {
    let times = spec.base.problem.report_times();
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header: Vec<String> = SUMMARY_FIXED.iter().map(|s| s.to_string()).collect();
    header.extend(times.iter().map(|t| format!("rel_l2_t{t}")));
    w.write_record(&header)?;
    for c in &result.children {
        let mut rec = vec![c.index.to_string(), spec.axis.name().to_string(), c.value.to_string()];
        match &c.outcome {
            Ok(s) => {
                let stop = serde_json::to_value(s.stop_reason)?;
                rec.extend([
                    "ok".to_string(),
                    String::new(),
                    s.iterations.to_string(),
                    format!("{:.3}", s.wall_seconds),
                    stop.as_str().unwrap_or_default().to_string(),
                    s.final_loss.eq.to_string(),
                    s.final_loss.ic.to_string(),
                    s.final_loss.bc.to_string(),
                    s.final_loss.total.to_string(),
                    s.metrics.rel_l2.to_string(),
                    s.metrics.max_abs.to_string(),
                ]);
                rec.extend(times.iter().map(|&t| s.slice_at(t).map(|x| x.rel_l2.to_string()).unwrap_or_default()));
            }
            Err(e) => {
                rec.extend(["failed".to_string(), e.replace('\n', " ")]);
                rec.resize(header.len(), String::new());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_comparisons(
    out_dir: &Path,
    spec: &SweepSpec,
    result: &SweepResult,
    tables: &[Vec<Vec<fpinn_core::trainer::EvalRow>>],
) -> anyhow::Result<()> {
    let kind = spec.base.problem;
    for (k, &t) in kind.report_times().iter().enumerate() {
        let path = out_dir.join(format!("comparison_t{t}.csv"));
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut header = vec!["index", "value"];
        header.extend(axis_names(kind));
        header.extend(["u_nn", "u_exact", "abs_error"]);
        w.write_record(&header)?;
        for (c, rows) in result.children.iter().zip(tables) {
            let Some(rows) = rows.get(k) else { continue };
            for r in rows {
                let mut rec = vec![c.index.to_string(), c.value.to_string()];
                rec.extend(r.coords.iter().map(f64::to_string));
                rec.extend([r.predicted.to_string(), r.exact.to_string(), r.abs_error.to_string()]);
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

/// Leaf paths at which two JSON documents differ.
pub fn json_diff(a: &Value, b: &Value) -> Vec<String> {
    fn walk(a: &Value, b: &Value, path: &str, out: &mut Vec<String>) {
        match (a, b) {
            (Value::Object(x), Value::Object(y)) => {
                let mut keys: Vec<&String> = x.keys().chain(y.keys()).collect();
                keys.sort();
                keys.dedup();
                for k in keys {
                    let p = format!("{path}/{k}");
                    walk(x.get(k).unwrap_or(&Value::Null), y.get(k).unwrap_or(&Value::Null), &p, out);
                }
            }
            (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
                for (i, (u, v)) in x.iter().zip(y).enumerate() {
                    walk(u, v, &format!("{path}/{i}"), out);
                }
            }
            _ if a != b => out.push(path.to_string()),
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(a, b, "", &mut out);
    out
}

/// JSON paths an axis is allowed to touch.
pub fn axis_paths(axis: SweepAxis) -> &'static [&'static str] {
    match axis {
        SweepAxis::CollocAllDims | SweepAxis::CollocTimeOnly | SweepAxis::CollocSpaceOnly => &["/collocation/points_per_axis"],
        SweepAxis::TimeWindow => &["/time_window"],
        SweepAxis::WallBudget => &["/train/max_wall_seconds"],
        SweepAxis::Architecture => &["/network/hidden_layers", "/network/neurons_per_layer"],
        SweepAxis::Scheme => &["/scheme"],
    }
}

/// Checks that `child` differs from `base` only on `axis`.
pub fn check_child(base: &RunConfig, child: &RunConfig, axis: SweepAxis) -> anyhow::Result<()> {
    let diff = json_diff(&serde_json::to_value(base)?, &serde_json::to_value(child)?);
    let allowed = axis_paths(axis);
    match diff.iter().find(|p| !allowed.iter().any(|a| p.starts_with(a))) {
        Some(p) => Err(anyhow!("child differs from base outside {} at {p}", axis.name())),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;
    use serde_json::json;

    #[test]
    fn children_touch_only_their_axis() {
        let cases = [
            ("fpde3d", SweepAxis::CollocTimeOnly, vec![json!(5), json!(20), json!(40)]),
            ("fpde3d", SweepAxis::CollocSpaceOnly, vec![json!(10), json!(40)]),
            ("fpde2d", SweepAxis::CollocAllDims, vec![json!(10), json!(20), json!(50)]),
            ("fpde2d", SweepAxis::TimeWindow, vec![json!(1.0), json!(0.5)]),
            ("fpde3d", SweepAxis::WallBudget, vec![json!(300), json!(900), json!(1800)]),
            ("fpde2d", SweepAxis::Architecture, vec![json!([2, 10]), json!([3, 10]), json!([4, 20]), json!([7, 40])]),
            ("fpde3d", SweepAxis::Scheme, vec![json!("diethelm"), json!("l1")]),
        ];
        for (name, axis, values) in cases {
            let spec = SweepSpec { base: preset(name).unwrap(), axis, values, output_dir: None };
            let kids = spec.children().unwrap();
            assert_eq!(kids.len(), spec.values.len());
            for k in &kids {
                check_child(&spec.base, k, axis).unwrap();
            }
        }
    }

    #[test]
    fn axis_effects() {
        let base = preset("fpde3d").unwrap();
        assert_eq!(apply(&base, SweepAxis::CollocTimeOnly, &json!(40)).unwrap().collocation.points_per_axis, [5, 5, 40]);
        assert_eq!(apply(&base, SweepAxis::CollocSpaceOnly, &json!(40)).unwrap().collocation.points_per_axis, [40, 40, 5]);
        assert_eq!(apply(&base, SweepAxis::CollocAllDims, &json!(10)).unwrap().collocation.points_per_axis, [10, 10, 10]);
        let a = apply(&base, SweepAxis::Architecture, &json!([7, 40])).unwrap();
        assert_eq!((a.network.hidden_layers, a.network.neurons_per_layer), (7, 40));
        assert_eq!(apply(&base, SweepAxis::Scheme, &json!("L1")).unwrap().scheme, SchemeKind::L1);
    }

    #[test]
    fn bad_values_reported_together() {
        let spec = SweepSpec {
            base: preset("fode").unwrap(),
            axis: SweepAxis::CollocSpaceOnly,
            values: vec![json!(5), json!("x")],
            output_dir: None,
        };
        assert_eq!(spec.children().unwrap_err().len(), 2);
        let spec = SweepSpec { base: preset("fpde2d").unwrap(), axis: SweepAxis::Architecture, values: vec![json!([0, 3])], output_dir: None };
        assert!(spec.children().is_err());
    }

    #[test]
    fn diff_detects_stray_change() {
        let base = preset("fpde2d").unwrap();
        let mut child = apply(&base, SweepAxis::Scheme, &json!("l1")).unwrap();
        check_child(&base, &child, SweepAxis::Scheme).unwrap();
        child.seed = 7;
        assert!(check_child(&base, &child, SweepAxis::Scheme).is_err());
    }

    #[test]
    fn labels_are_path_safe() {
        assert_eq!(label(&json!([4, 20])), "4x20");
        assert_eq!(label(&json!("l1")), "l1");
        assert_eq!(label(&json!(0.5)), "0.5");
    }
}
