//! Run outputs: per-iteration trace CSV, check-report CSV, JSON summaries.
//!
//! `trace.csv` columns, in order:
//! `k,aer,primal_infeasibility,complementarity,multiplier_negativity,objective,step_x,step_lambda,inner_iterations,inner_residual,phi,varphi`.
//! Floats are written with 17 significant digits; absent optional values are
//! empty fields.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::certify::CheckReport;
use crate::error::{Error, Result};
use crate::problem::IterationTrace;

pub const TRACE_COLUMNS: [&str; 12] = [
    "k",
    "aer",
    "primal_infeasibility",
    "complementarity",
    "multiplier_negativity",
    "objective",
    "step_x",
    "step_lambda",
    "inner_iterations",
    "inner_residual",
    "phi",
    "varphi",
];

pub const CHECK_COLUMNS: [&str; 8] = ["case", "check", "kind", "iteration", "lhs", "rhs", "slack", "pass"];

/// 17 significant digits, enough for an exact `f64` round trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_trace_csv(path: impl AsRef<Path>, traces: &[IterationTrace]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(TRACE_COLUMNS)?;
    for t in traces {
        w.write_record([
            t.k.to_string(),
            fmt_f64(t.aer),
            fmt_f64(t.primal_infeasibility),
            fmt_f64(t.complementarity),
            fmt_f64(t.multiplier_negativity),
            fmt_opt(t.objective),
            fmt_f64(t.step_x),
            fmt_f64(t.step_lambda),
            t.inner_iterations.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt(t.inner_residual),
            fmt_opt(t.phi),
            fmt_opt(t.varphi),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<Vec<IterationTrace>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let bad = |reason: String| Error::Format {
        format: "trace CSV",
        path: path.to_path_buf(),
        reason,
    };
    if reader.headers()?.iter().ne(TRACE_COLUMNS) {
        return Err(bad("unexpected header".into()));
    }
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| field(i).parse::<f64>().map_err(|e| bad(format!("row {}, column {}: {e}", row + 1, TRACE_COLUMNS[i])));
        let opt = |i: usize| if field(i).is_empty() { Ok(None) } else { num(i).map(Some) };
        out.push(IterationTrace {
            k: field(0).parse().map_err(|e| bad(format!("row {}: {e}", row + 1)))?,
            aer: num(1)?,
            primal_infeasibility: num(2)?,
            complementarity: num(3)?,
            multiplier_negativity: num(4)?,
            objective: opt(5)?,
            step_x: num(6)?,
            step_lambda: num(7)?,
            inner_iterations: if field(8).is_empty() {
                None
            } else {
                Some(field(8).parse().map_err(|e| bad(format!("row {}: {e}", row + 1)))?)
            },
            inner_residual: opt(9)?,
            phi: opt(10)?,
            varphi: opt(11)?,
        });
    }
    Ok(out)
}

/// Check reports grouped by case name.
pub fn write_checks_csv<'a>(
    path: impl AsRef<Path>,
    cases: impl IntoIterator<Item = (&'a str, &'a [CheckReport])>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(CHECK_COLUMNS)?;
    for (case, reports) in cases {
        for r in reports {
            let kind = match r.kind {
                crate::certify::CheckKind::Identity => "identity",
                crate::certify::CheckKind::Inequality => "inequality",
            };
            w.write_record([
                case.to_string(),
                r.name.clone(),
                kind.to_string(),
                r.iteration.to_string(),
                fmt_f64(r.lhs),
                fmt_f64(r.rhs),
                fmt_f64(r.slack),
                r.pass.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), Just(0.0), Just(-0.0), Just(1e-300)]
    }

    proptest! {
        #[test]
        fn trace_round_trip(
            rows in prop::collection::vec(
                (finite(), finite(), proptest::option::of(finite()), proptest::option::of(0usize..1000), proptest::option::of(finite())),
                0..8,
            )
        ) {
            let traces: Vec<IterationTrace> = rows
                .iter()
                .enumerate()
                .map(|(k, (a, b, obj, inner, phi))| IterationTrace {
                    k,
                    aer: *a,
                    primal_infeasibility: *b,
                    complementarity: a.abs(),
                    multiplier_negativity: b.abs(),
                    objective: *obj,
                    step_x: *a,
                    step_lambda: *b,
                    inner_iterations: *inner,
                    inner_residual: *phi,
                    phi: *phi,
                    varphi: *obj,
                })
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("trace.csv");
            write_trace_csv(&path, &traces).unwrap();
            let back = read_trace_csv(&path).unwrap();
            prop_assert_eq!(back.len(), traces.len());
            for (x, y) in back.iter().zip(&traces) {
                prop_assert_eq!(x.aer.to_bits(), y.aer.to_bits());
                prop_assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn header_is_fixed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trace_csv(&path, &[IterationTrace::default()]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRACE_COLUMNS.join(","));
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        fs::write(&path, "k,aer\n1,2\n").unwrap();
        assert!(read_trace_csv(&path).is_err());
    }
}
