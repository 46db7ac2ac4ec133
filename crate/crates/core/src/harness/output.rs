use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::bounds::BoundReport;
use crate::error::{Error, Result};
use crate::format::format_float;

use super::plot::{is_dyadic, Plot, Series};
use super::run::{ExperimentResult, ResultRow};

/// Column label of a bound: `<name>_<quantity>`, plus `_combined` for the
/// combined form.
pub fn bound_label(report: &BoundReport) -> String {
    let mut label = format!("{}_{}", report.name.as_str(), report.quantity);
    if report.inputs.get("combined") == Some(&1.0) {
        label.push_str("_combined");
    }
    label
}

/// Bound labels in order of first appearance.
fn bound_labels(rows: &[ResultRow]) -> Vec<String> {
    let mut labels = Vec::new();
    for row in rows {
        for b in &row.bounds {
            let l = bound_label(b);
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
    }
    labels
}

fn find<'a>(row: &'a ResultRow, label: &str) -> Option<&'a BoundReport> {
    row.bounds.iter().find(|b| bound_label(b) == label)
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn opt_int(v: Option<impl ToString>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

const FIXED_COLUMNS: [&str; 10] = [
    "index",
    "sweep_value",
    "t",
    "n",
    "ell",
    "seed",
    "measured_failure",
    "std_err",
    "mse",
    "status",
];

/// One row per sweep point; floats carry 17 significant digits.
pub fn table_csv(result: &ExperimentResult) -> Result<String> {
    let rows = &result.rows;
    let labels = bound_labels(rows);
    let diag_keys: BTreeSet<&String> = rows.iter().flat_map(|r| r.diagnostics.keys()).collect();
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    for l in &labels {
        header.push(l.clone());
        header.push(format!("{l}_measured"));
        header.push(format!("{l}_slack"));
    }
    header.extend(diag_keys.iter().map(|k| k.to_string()));

    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("CSV encoding failed: {e}"));
    writer.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let mut record = vec![
            row.index.to_string(),
            opt_float(row.sweep_value),
            opt_int(row.t),
            opt_int(row.n),
            opt_int(row.ell),
            row.seed.to_string(),
            opt_float(row.measured),
            opt_float(row.std_err),
            opt_float(row.mse),
            row.status.clone(),
        ];
        for l in &labels {
            let b = find(row, l);
            record.push(opt_float(b.map(|b| b.value)));
            record.push(opt_float(b.and_then(|b| b.satisfied_by)));
            record.push(opt_float(b.and_then(|b| b.slack)));
        }
        for k in &diag_keys {
            record.push(opt_float(row.diagnostics.get(*k).copied()));
        }
        writer.write_record(&record).map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("CSV encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}

pub fn result_json(result: &ExperimentResult) -> String {
    let mut s = serde_json::to_string_pretty(result).expect("result serializes");
    s.push('\n');
    s
}

/// Measured failure, every bound, and every bound's measured counterpart
/// against the sweep value.
pub fn result_plot(result: &ExperimentResult) -> Plot {
    let rows: Vec<&ResultRow> = result.rows.iter().filter(|r| r.is_ok()).collect();
    let x_of = |r: &ResultRow| r.sweep_value.unwrap_or(r.index as f64);
    let xs: Vec<f64> = rows.iter().map(|r| x_of(r)).collect();
    let mut series = vec![Series {
        label: "measured failure".into(),
        points: rows.iter().filter_map(|r| Some((x_of(r), r.measured?))).collect(),
        dashed: false,
    }];
    let owned: Vec<ResultRow> = rows.iter().map(|r| (*r).clone()).collect();
    for label in bound_labels(&owned) {
        series.push(Series {
            label: label.clone(),
            points: rows
                .iter()
                .filter_map(|r| Some((x_of(r), find(r, &label)?.value)))
                .collect(),
            dashed: true,
        });
        let measured: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| {
                let b = find(r, &label)?;
                let m = b.satisfied_by?;
                (Some(m) != r.measured).then_some((x_of(r), m))
            })
            .collect();
        if !measured.is_empty() {
            series.push(Series {
                label: format!("{label} (measured)"),
                points: measured,
                dashed: false,
            });
        }
    }
    let log_y = series
        .iter()
        .flat_map(|s| s.points.iter())
        .all(|p| p.1 > 0.0 && p.1.is_finite());
    Plot {
        title: result.kind.as_str().to_string(),
        x_label: result.sweep_parameter.clone().unwrap_or_else(|| "point".into()),
        y_label: "value".into(),
        log_x: is_dyadic(&xs),
        log_y,
        series,
    }
}

#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub svg: PathBuf,
}

fn write(path: PathBuf, content: &str) -> Result<PathBuf> {
    std::fs::write(&path, content).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Write `result.json`, `table.csv`, and `plot.svg` into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(OutputFiles {
        json: write(dir.join("result.json"), &result_json(result))?,
        csv: write(dir.join("table.csv"), &table_csv(result)?)?,
        svg: write(dir.join("plot.svg"), &result_plot(result).to_svg())?,
    })
}
