//! Result tables and their renderings.
//!
//! The canonical on-disk form is a long-format CSV
//! (`run,target,spearman,pearson,n_test,dropped`). The `plain` and
//! `markdown` renderings pivot runs against targets the way published
//! result tables are laid out, with correlations at three decimals and
//! absent cells dashed. Plain mode drops the leading zero of negative
//! values ("-.021"), matching the typesetting convention of the tables it
//! mimics.

use std::path::Path;
use std::str::FromStr;

use crate::dataset::Target;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub run: String,
    pub target: Target,
    pub spearman: f64,
    pub pearson: f64,
    pub n_test: usize,
    /// Test-split videos dropped for lacking audio features.
    pub dropped: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ReportTable {
    pub rows: Vec<ReportRow>,
    /// Hash of the generating configuration; empty for hand-built tables.
    pub config_hash: String,
    /// Wall-clock seconds at creation. Never serialized, so reports stay
    /// byte-deterministic.
    pub timestamp: u64,
    /// Training-side videos dropped for lacking audio features.
    pub train_dropped: usize,
}

impl ReportTable {
    pub fn new(rows: Vec<ReportRow>) -> ReportTable {
        ReportTable {
            rows,
            config_hash: String::new(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            train_dropped: 0,
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, render_table(self, ReportFormat::Csv))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<ReportTable> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| crate::dataset::csv_error(path, e))?;
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| crate::dataset::csv_error(path, e))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let field = |i: usize| record.get(i).unwrap_or("").trim().to_string();
            let parse_f64 = |i: usize| -> Result<f64> {
                field(i)
                    .parse()
                    .map_err(|_| Error::parse(path, line, format!("bad number \"{}\"", field(i))))
            };
            let parse_usize = |i: usize| -> Result<usize> {
                field(i)
                    .parse()
                    .map_err(|_| Error::parse(path, line, format!("bad count \"{}\"", field(i))))
            };
            rows.push(ReportRow {
                run: field(0),
                target: Target::from_str(&field(1))
                    .map_err(|e| Error::parse(path, line, e.to_string()))?,
                spearman: parse_f64(2)?,
                pearson: parse_f64(3)?,
                n_test: parse_usize(4)?,
                dropped: parse_usize(5)?,
            });
        }
        let mut table = ReportTable::new(rows);
        table.config_hash.clear();
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Plain,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReportFormat> {
        match s {
            "plain" => Ok(ReportFormat::Plain),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::invalid(format!("unknown report format \"{other}\""))),
        }
    }
}

/// Correlation cell at three decimals. Plain mode renders negatives without
/// the leading zero.
fn format_correlation(value: f64, format: ReportFormat) -> String {
    let standard = format!("{value:.3}");
    if format == ReportFormat::Plain {
        if let Some(rest) = standard.strip_prefix("-0.") {
            return format!("-.{rest}");
        }
    }
    standard
}

/// Render a report. CSV is the long format written by `write_csv`; plain and
/// markdown pivot to one output row per run with a column pair per target.
pub fn render_table(report: &ReportTable, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("run,target,spearman,pearson,n_test,dropped\n");
            for row in &report.rows {
                out.push_str(&format!(
                    "{},{},{:.6},{:.6},{},{}\n",
                    row.run, row.target, row.spearman, row.pearson, row.n_test, row.dropped
                ));
            }
            out
        }
        ReportFormat::Plain | ReportFormat::Markdown => render_pivot(report, format),
    }
}

fn render_pivot(report: &ReportTable, format: ReportFormat) -> String {
    let targets: Vec<Target> = Target::ALL
        .into_iter()
        .filter(|t| report.rows.iter().any(|r| r.target == *t))
        .collect();
    let mut runs: Vec<&str> = Vec::new();
    for row in &report.rows {
        if !runs.contains(&row.run.as_str()) {
            runs.push(&row.run);
        }
    }

    let cell = |run: &str, target: Target| -> Option<&ReportRow> {
        report
            .rows
            .iter()
            .find(|r| r.run == run && r.target == target)
    };

    let mut header = vec!["Run".to_string()];
    for target in &targets {
        header.push(format!("{} r_s", target.label()));
        header.push(format!("{} r", target.label()));
    }

    let mut lines: Vec<Vec<String>> = vec![header];
    for run in &runs {
        let mut line = vec![run.to_string()];
        for &target in &targets {
            match cell(run, target) {
                Some(row) => {
                    line.push(format_correlation(row.spearman, format));
                    line.push(format_correlation(row.pearson, format));
                }
                None => {
                    line.push("-".to_string());
                    line.push("-".to_string());
                }
            }
        }
        lines.push(line);
    }

    match format {
        ReportFormat::Markdown => {
            let mut out = String::new();
            for (i, line) in lines.iter().enumerate() {
                out.push_str(&format!("| {} |\n", line.join(" | ")));
                if i == 0 {
                    out.push_str(&format!("|{}\n", "---|".repeat(line.len())));
                }
            }
            out
        }
        _ => {
            let mut out = String::new();
            for line in &lines {
                out.push_str(&line.join("  "));
                out.push('\n');
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(run: &str, target: Target, rs: f64, r: f64) -> ReportRow {
        ReportRow {
            run: run.into(),
            target,
            spearman: rs,
            pearson: r,
            n_test: 500,
            dropped: 0,
        }
    }

    #[test]
    fn markdown_row_formatting() {
        let table = ReportTable::new(vec![row(
            "BayesianRidge Dense121",
            Target::ShortNorm,
            0.524,
            0.522,
        )]);
        let rendered = render_table(&table, ReportFormat::Markdown);
        assert!(
            rendered.contains("| BayesianRidge Dense121 | 0.524 | 0.522 |"),
            "{rendered}"
        );
    }

    #[test]
    fn plain_negative_drops_leading_zero() {
        let table = ReportTable::new(vec![row(
            "xResNet50 Transfer Frames",
            Target::Long,
            -0.021,
            -0.036,
        )]);
        let rendered = render_table(&table, ReportFormat::Plain);
        assert!(rendered.contains("-.021  -.036"), "{rendered}");
        // markdown keeps the standard form
        let md = render_table(&table, ReportFormat::Markdown);
        assert!(md.contains("-0.021"), "{md}");
    }

    #[test]
    fn missing_target_cells_are_dashed() {
        let table = ReportTable::new(vec![
            row("BayesianRidge Dense121", Target::ShortNorm, 0.053, 0.071),
            row("xResNet50 Transfer Frames", Target::ShortNorm, 0.105, 0.130),
            row("xResNet50 Transfer Frames", Target::Long, -0.021, -0.036),
        ]);
        let rendered = render_table(&table, ReportFormat::Plain);
        let line = rendered
            .lines()
            .find(|l| l.starts_with("BayesianRidge"))
            .unwrap();
        assert_eq!(line, "BayesianRidge Dense121  0.053  0.071  -  -");
    }

    #[test]
    fn csv_round_trip() {
        let table = ReportTable::new(vec![
            row("a", Target::ShortRaw, 0.5231, 0.5219),
            row("a", Target::ShortNorm, 0.5239, 0.5222),
        ]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        table.write_csv(&path).unwrap();
        let reloaded = ReportTable::read_csv(&path).unwrap();
        assert_eq!(reloaded.rows.len(), 2);
        assert_eq!(reloaded.rows[0].run, "a");
        assert_eq!(reloaded.rows[0].target, Target::ShortRaw);
        assert!((reloaded.rows[0].spearman - 0.5231).abs() < 1e-9);
        assert_eq!(reloaded.rows[1].n_test, 500);
    }

    #[test]
    fn three_decimal_rendering_is_lossless() {
        for &value in &[0.5244, -0.0214, 0.9996, 0.0004, -0.5005, 1.0, -1.0] {
            for format in [ReportFormat::Plain, ReportFormat::Markdown] {
                let cell = format_correlation(value, format);
                let parsed: f64 = cell.parse().unwrap();
                assert!((parsed - value).abs() <= 0.0005 + 1e-12, "{value} -> {cell}");
                // idempotent: re-rendering the parsed value changes nothing
                assert_eq!(format_correlation(parsed, format), cell);
            }
        }
    }
}
