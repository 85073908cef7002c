//! CSV and JSON output. Every CSV starts with a `# generated by:` comment
//! line followed by a header; floats carry 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::analysis::{CorrelationFunction, ScalingFit, XiEstimate};
use crate::ed::dimer::QuenchTrajectory;
use crate::ed::GapScan;
use crate::error::{Error, Result};
use crate::qmc::{Estimate, ObservableSeries};

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write_csv<P: AsRef<Path>>(path: P, comment: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut file = BufWriter::new(File::create(path.as_ref())?);
    writeln!(file, "# generated by: {}", comment.replace('\n', " "))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<P: AsRef<Path>, T: Serialize>(path: P, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path.as_ref())?);
    serde_json::to_writer_pretty(&mut file, value)?;
    writeln!(file)?;
    file.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column '{name}'")))
    }

    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.column(name)?;
        self.rows
            .iter()
            .map(|r| r[k].parse::<f64>().map_err(|e| Error::Parse(format!("column '{name}': {e}"))))
            .collect()
    }
}

/// Reads a CSV written by [`write_csv`], skipping `#` lines.
pub fn read_table<P: AsRef<Path>>(path: P) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path.as_ref())?;
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(Table { header, rows })
}

pub fn write_gap_scan<P: AsRef<Path>>(path: P, comment: &str, scan: &GapScan) -> Result<()> {
    let rows: Vec<Vec<String>> =
        scan.rows.iter().map(|r| vec![fmt_f64(r.tau), fmt_f64(r.e0), fmt_f64(r.e1), fmt_f64(r.gap)]).collect();
    write_csv(path, comment, &["tau", "E0", "E1", "gap"], &rows)
}

/// Long-format per-bond map: one row per (time, bond).
pub fn write_quench_bonds<P: AsRef<Path>>(path: P, comment: &str, q: &QuenchTrajectory) -> Result<()> {
    let mut rows = Vec::with_capacity(q.times.len() * q.bonds.len());
    for (t, vals) in q.times.iter().zip(&q.per_bond) {
        for ((b, x), v) in q.bonds.iter().zip(&q.left).zip(vals) {
            rows.push(vec![fmt_f64(*t), b.to_string(), x.to_string(), fmt_f64(*v)]);
        }
    }
    write_csv(path, comment, &["t", "bond", "x", "value"], &rows)
}

pub fn write_quench_total<P: AsRef<Path>>(path: P, comment: &str, q: &QuenchTrajectory) -> Result<()> {
    let rows: Vec<Vec<String>> = q
        .times
        .iter()
        .zip(q.total.iter().zip(&q.total_per_bond))
        .map(|(t, (d, dn))| vec![fmt_f64(*t), fmt_f64(*d), fmt_f64(*dn)])
        .collect();
    write_csv(path, comment, &["t", "D", "D_per_bond"], &rows)
}

/// `(times, D)` from a file written by [`write_quench_total`].
pub fn read_quench_total<P: AsRef<Path>>(path: P) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = read_table(path)?;
    Ok((t.floats("t")?, t.floats("D")?))
}

pub fn write_observables<P: AsRef<Path>>(path: P, comment: &str, series: &ObservableSeries) -> Result<()> {
    let rows: Vec<Vec<String>> = series
        .estimates
        .iter()
        .map(|e| vec![e.name.clone(), fmt_f64(e.value), fmt_f64(e.error), e.bins.to_string()])
        .collect();
    write_csv(path, comment, &["observable", "value", "error", "bins"], &rows)
}

pub fn read_observables<P: AsRef<Path>>(path: P) -> Result<Vec<Estimate>> {
    let t = read_table(path)?;
    let (name, value, error, bins) = (t.column("observable")?, t.column("value")?, t.column("error")?, t.column("bins")?);
    t.rows
        .iter()
        .map(|r| {
            let f = |k: usize| r[k].parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
            Ok(Estimate {
                name: r[name].clone(),
                value: f(value)?,
                error: f(error)?,
                bins: r[bins].parse().map_err(|e: std::num::ParseIntError| Error::Parse(e.to_string()))?,
                binning_ratio: f64::NAN,
            })
        })
        .collect()
}

pub fn write_correlation<P: AsRef<Path>>(path: P, comment: &str, c: &CorrelationFunction) -> Result<()> {
    let rows: Vec<Vec<String>> = c
        .x
        .iter()
        .zip(c.values.iter().zip(&c.errors))
        .map(|(x, (v, e))| vec![x.to_string(), fmt_f64(*v), fmt_f64(*e)])
        .collect();
    write_csv(path, comment, &["x", "C", "error"], &rows)
}

pub fn read_correlation<P: AsRef<Path>>(path: P, length: usize, periodic: bool) -> Result<CorrelationFunction> {
    let t = read_table(path)?;
    CorrelationFunction::new(t.floats("C")?, t.floats("error")?, length, periodic)
}

/// Fit report rows `(quantity, value, error, note)`.
pub fn xi_report_rows(label: &str, xi: &XiEstimate) -> Vec<Vec<String>> {
    let note = if xi.reliable { xi.notes.join("; ") } else { format!("unreliable: {}", xi.notes.join("; ")) };
    vec![
        vec![format!("{label}:xi"), fmt_f64(xi.xi_tail), fmt_f64(xi.xi_tail_err), note],
        vec![format!("{label}:xi2"), fmt_f64(xi.xi_second_moment), fmt_f64(xi.xi_second_moment_err), String::new()],
        vec![
            format!("{label}:window"),
            xi.window.0.to_string(),
            String::new(),
            format!("{}..={}", xi.window.0, xi.window.1),
        ],
        vec![format!("{label}:chi2_dof"), fmt_f64(xi.chi2_dof), String::new(), String::new()],
        vec![format!("{label}:discrepancy"), fmt_f64(xi.discrepancy), String::new(), String::new()],
    ]
}

pub fn scaling_report_rows(fit: &ScalingFit) -> Vec<Vec<String>> {
    let excluded: Vec<String> = fit.excluded.iter().map(|p| p.n.to_string()).collect();
    vec![
        vec!["slope".into(), fmt_f64(fit.slope), fmt_f64(fit.slope_err), format!("rule: {}", fit.rule)],
        vec!["intercept".into(), fmt_f64(fit.intercept), fmt_f64(fit.intercept_err), String::new()],
        vec!["chi2_dof".into(), fmt_f64(fit.chi2_dof), String::new(), String::new()],
        vec![
            "stiffness_over_velocity".into(),
            fmt_f64(fit.stiffness_over_velocity),
            fmt_f64(fit.stiffness_over_velocity * fit.slope_err / fit.slope.abs().max(f64::MIN_POSITIVE)),
            "slope*N/(4*pi)".into(),
        ],
        vec!["excluded_n".into(), String::new(), String::new(), excluded.join(" ")],
    ]
}

pub fn write_fit_report<P: AsRef<Path>>(path: P, comment: &str, rows: &[Vec<String>]) -> Result<()> {
    write_csv(path, comment, &["quantity", "value", "error", "note"], rows)
}

/// Plot-ready row of a long-format table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongRow {
    pub series: String,
    pub x: f64,
    pub y: f64,
    pub yerr: Option<f64>,
}

pub fn write_long_table<P: AsRef<Path>>(path: P, comment: &str, rows: &[LongRow]) -> Result<()> {
    let rows: Vec<Vec<String>> =
        rows.iter().map(|r| vec![r.series.clone(), fmt_f64(r.x), fmt_f64(r.y), fmt_opt(r.yerr)]).collect();
    write_csv(path, comment, &["series", "x", "y", "yerr"], &rows)
}
