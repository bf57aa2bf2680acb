//! CSV and aligned-text rendering of experiment statistics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::cases::RunStatistics;
use crate::error::{Result, SgbmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Table,
}

pub const CSV_HEADER: &str = "case,J,M,N,B,L,runs,successes,mean_abs_error_y0,mean_abs_error_z0,total_variation_per_successful_run,wall_ms";

fn fmt_bound(l: f64) -> String {
    if l.is_infinite() {
        "inf".to_string()
    } else {
        format!("{l}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

/// Render statistics as CSV, one row per (case, J) cell in deterministic
/// (case, J) order. Empty error fields mark an all-rejected (NA) cell.
pub fn to_csv(stats: &[RunStatistics]) -> String {
    let mut rows: Vec<&RunStatistics> = stats.iter().collect();
    rows.sort_by_key(|s| (s.params.case, s.params.j));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            s.params.case,
            s.params.j,
            s.params.paths,
            s.params.steps,
            s.params.bundles,
            fmt_bound(s.params.coeff_bound),
            s.runs,
            s.successes,
            fmt_opt(s.mean_abs_error_y0),
            fmt_opt(s.mean_abs_error_z0),
            fmt_opt(s.total_variation_per_successful_run),
            s.wall_ms
        )
        .unwrap();
    }
    out
}

/// Render statistics as an aligned text table.
pub fn to_table(stats: &[RunStatistics]) -> String {
    let mut rows: Vec<&RunStatistics> = stats.iter().collect();
    rows.sort_by_key(|s| (s.params.case, s.params.j));
    let header = [
        "case", "J", "M", "N", "B", "L", "runs", "ok", "err_y0", "err_z0", "tv/run", "wall_ms",
    ];
    let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for s in rows {
        cells.push(vec![
            s.params.case.to_string(),
            s.params.j.to_string(),
            s.params.paths.to_string(),
            s.params.steps.to_string(),
            s.params.bundles.to_string(),
            fmt_bound(s.params.coeff_bound),
            s.runs.to_string(),
            s.successes.to_string(),
            or_na(fmt_opt(s.mean_abs_error_y0)),
            or_na(fmt_opt(s.mean_abs_error_z0)),
            or_na(fmt_opt(s.total_variation_per_successful_run)),
            s.wall_ms.to_string(),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap())
        .collect();
    let mut out = String::new();
    for row in &cells {
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                out.push_str("  ");
            }
            write!(out, "{cell:>width$}", width = widths[c]).unwrap();
        }
        out.push('\n');
    }
    out
}

fn or_na(s: String) -> String {
    if s.is_empty() {
        "NA".to_string()
    } else {
        s
    }
}

/// Write a report to `path` in the requested format.
pub fn write_report(path: &Path, stats: &[RunStatistics], format: ReportFormat) -> Result<()> {
    if stats.is_empty() {
        return Err(SgbmError::Config("nothing to report".into()));
    }
    let body = match format {
        ReportFormat::Csv => to_csv(stats),
        ReportFormat::Table => to_table(stats),
    };
    fs::write(path, body)?;
    Ok(())
}
