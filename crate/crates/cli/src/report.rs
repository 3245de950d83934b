use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use crate::output::{fmt_f64, CsvText, OutDir, Row};
use crate::{Common, Outcome, Status};

#[derive(Deserialize)]
struct WithRows {
    rows: Vec<Row>,
}

fn same_value(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

/// Long-format merge of the `rows` arrays of several output files.
///
/// Rows are kept in first-seen order. A repeated (observer pair, metric)
/// key must carry the same value; conflicting values are an error.
pub fn merge_rows(inputs: &[&Path]) -> Result<Vec<Row>> {
    let mut merged: Vec<Row> = Vec::new();
    for path in inputs {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: WithRows =
            serde_json::from_str(&text).with_context(|| format!("{} has no usable \"rows\" array", path.display()))?;
        for row in file.rows {
            let row = Row::new(&row.observer_a, &row.observer_b, &row.metric, row.value);
            match merged
                .iter()
                .find(|r| r.observer_a == row.observer_a && r.observer_b == row.observer_b && r.metric == row.metric)
            {
                Some(prev) if same_value(prev.value, row.value) => {}
                Some(prev) => bail!(
                    "conflicting {} for {} / {}: {} vs {} (from {})",
                    row.metric,
                    row.observer_a,
                    row.observer_b,
                    fmt_f64(prev.value),
                    fmt_f64(row.value),
                    path.display()
                ),
                None => merged.push(row),
            }
        }
    }
    Ok(merged)
}

pub fn report(inputs: &[std::path::PathBuf], common: &Common) -> Result<Outcome> {
    let paths: Vec<&Path> = inputs.iter().map(|p| p.as_path()).collect();
    let rows = merge_rows(&paths)?;
    let mut csv = CsvText::new(&["observer_a", "observer_b", "metric", "value"]);
    for r in &rows {
        csv.record([r.observer_a.clone(), r.observer_b.clone(), r.metric.clone(), fmt_f64(r.value)]);
    }
    let mut out = OutDir::create(&common.out)?;
    out.write_bytes("report.csv", csv.into_string().as_bytes())?;
    let status = if rows.iter().any(|r| r.value.is_nan()) { Status::Partial } else { Status::Complete };
    Ok(Outcome { status, files: out.written().to_vec() })
}
