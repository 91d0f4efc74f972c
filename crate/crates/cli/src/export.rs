//! Byte-stable tabular exports.
//!
//! Fields go out as CSV with the fixed header `t,x,value`, row-major in time
//! then space; generic tables take their own header. Numbers are printed
//! with 17 significant digits, enough to reproduce every double exactly, and
//! nothing in any file depends on the clock or the environment — rerunning a
//! scenario with the same configuration and seed rewrites every byte
//! identically. All failures carry the offending path.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sburgers_core::{Field, Grid};

use crate::error::{CliError, Result};
use crate::report::Report;

/// Formats one value with 17 significant digits.
fn number(value: f64) -> String {
    format!("{value:.16e}")
}

/// Writes text to a file, wrapping failures with the path.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Renders a field as CSV: header `t,x,value`, then one row per lattice
/// point, time-major.
pub fn render_field_csv(field: &Field) -> String {
    let grid = field.grid();
    let mut out = String::from("t,x,value\n");
    for n in 0..=grid.nt() {
        for i in 0..grid.nx() {
            let _ = writeln!(
                out,
                "{},{},{}",
                number(grid.t(n)),
                number(grid.x(i)),
                number(field.at(n, i))
            );
        }
    }
    out
}

/// Writes a field as CSV.
pub fn write_field_csv(path: &Path, field: &Field) -> Result<()> {
    write_text(path, &render_field_csv(field))
}

/// Writes one spatial profile at a fixed time as `t,x,value` rows.
pub fn write_profile_csv(path: &Path, grid: Grid, time: f64, values: &[f64]) -> Result<()> {
    let mut out = String::from("t,x,value\n");
    for (i, &value) in values.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{}",
            number(time),
            number(grid.x(i)),
            number(value)
        );
    }
    write_text(path, &out)
}

/// Writes a generic table: a comma-separated header and uniform rows.
pub fn write_table_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let columns = header.split(',').count();
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns, "ragged table row");
        let mut first = true;
        for value in row {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&number(*value));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// Renders a report as pretty-printed, alphabetically ordered JSON with a
/// trailing newline.
pub fn render_summary_json(report: &Report) -> String {
    let mut text =
        serde_json::to_string_pretty(&report.to_json()).expect("reports always serialize");
    text.push('\n');
    text
}

/// Writes the scenario summary.
pub fn write_summary_json(path: &Path, report: &Report) -> Result<()> {
    write_text(path, &render_summary_json(report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sburgers_core::Grid;

    fn small_field() -> Field {
        let grid = Grid::new(0.0, 1.0, 3, 1.0, 1).unwrap();
        Field::from_fn(grid, |t, x| t + 10.0 * x)
    }

    #[test]
    fn a_two_row_field_renders_six_data_rows() {
        let text = render_field_csv(&small_field());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], "t,x,value");
        assert!(lines[1].starts_with("0.0000000000000000e0,0.0000000000000000e0,"));
        assert!(lines[6].starts_with("1.0000000000000000e0,1.0000000000000000e0,"));
    }

    #[test]
    fn numbers_carry_seventeen_significant_digits() {
        let text = number(std::f64::consts::PI);
        assert_eq!(text, "3.1415926535897931e0");
        let parsed: f64 = text.parse().unwrap();
        assert_eq!(parsed, std::f64::consts::PI);
    }

    #[test]
    fn rendering_is_byte_stable() {
        let field = small_field();
        assert_eq!(render_field_csv(&field), render_field_csv(&field));
        let mut report = Report::new("demo");
        report.scalar("value", 0.1 + 0.2);
        report.check_at_most("gap", 1e-12, 1e-10);
        assert_eq!(render_summary_json(&report), render_summary_json(&report));
    }

    #[test]
    fn io_failures_name_the_path() {
        let field = small_field();
        let missing = Path::new("/nonexistent-dir/field.csv");
        let err = write_field_csv(missing, &field).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/field.csv"));
        assert_eq!(err.exit_code(), 1);
    }
}
