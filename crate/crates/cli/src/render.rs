//! Table rendering.
//!
//! Text and markdown tables show objective values multiplied by 10^3 and
//! label those columns `x 10^-3`. CSV is the machine interface: raw values,
//! a fixed column order, absent values as empty fields, and a leading
//! `# schema_version=N` comment line.

use serde::{Deserialize, Serialize};

use repcap::experiment::{CrossCheckTable, SummaryRow, TableRow};
use repcap::optim::Method;

use crate::CliError;

pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Md,
    Txt,
}

pub const DETAIL_HEADERS: [&str; 8] = [
    "Network",
    "Data Source",
    "Algorithm",
    "# iterations",
    "F_init x 10^-3",
    "F_opt x 10^-3",
    "Ratio to CG",
    "Deep/Shallow",
];

pub const SUMMARY_HEADERS: [&str; 5] = [
    "Shallow",
    "Deep",
    "Data deep -- NN shallow x 10^-3",
    "Data shallow -- NN deep x 10^-3",
    "Ratio Deep/Shallow",
];

fn opt(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map_or_else(|| "--".to_string(), f)
}

fn milli(decimals: usize) -> impl Fn(f64) -> String {
    move |v| format!("{:.*}", decimals, v * 1e3)
}

fn algorithm_cell(row: &TableRow) -> String {
    let label = row.method.label();
    if row.failed_seeds == 0 {
        label.to_string()
    } else {
        format!("{label} ({}/{} failed)", row.failed_seeds, row.seeds)
    }
}

fn detail_cells(row: &TableRow) -> Vec<String> {
    vec![
        row.network.clone(),
        row.data_source.clone(),
        algorithm_cell(row),
        opt(row.gradient_calls, |v| format!("{}", v.round() as u64)),
        opt(row.f_init, milli(1)),
        opt(row.f_opt, milli(3)),
        opt(row.ratio_to_cg, |v| format!("{v:.2}")),
        opt(row.deep_shallow_ratio, |v| format!("{v:.1}")),
    ]
}

fn summary_cells(row: &SummaryRow) -> Vec<String> {
    vec![
        row.shallow.clone(),
        row.deep.clone(),
        opt(row.data_deep_nn_shallow, milli(3)),
        opt(row.data_shallow_nn_deep, milli(3)),
        opt(row.ratio_deep_shallow, |v| format!("{v:.1}")),
    ]
}

/// Method used for the summary table: the requested one, else RMSprop, else the first present.
pub fn summary_method(table: &CrossCheckTable, requested: Option<Method>) -> Option<Method> {
    let present: Vec<Method> = table.summary.iter().map(|s| s.method).collect();
    requested
        .filter(|m| present.contains(m))
        .or_else(|| present.contains(&Method::Rmsprop).then_some(Method::Rmsprop))
        .or_else(|| present.first().copied())
}

fn markdown(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n", headers.join(" | "));
    out += &format!("|{}\n", headers.iter().map(|_| "---|").collect::<String>());
    for r in rows {
        out += &format!("| {} |\n", r.join(" | "));
    }
    out
}

fn aligned(headers: &[&str], rows: &[Vec<String>], left: usize) -> String {
    let widths: Vec<usize> = (0..headers.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain(std::iter::once(headers[c].chars().count()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c < left {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(headers.to_vec());
    out += &line(widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}

/// Machine-readable detail row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailCsvRow {
    pub network: String,
    pub data_source: String,
    pub method: String,
    pub seeds: usize,
    pub failed_seeds: usize,
    pub gradient_calls: Option<f64>,
    pub f_init: Option<f64>,
    pub f_opt: Option<f64>,
    pub f_init_median: Option<f64>,
    pub f_init_mean: Option<f64>,
    pub f_opt_median: Option<f64>,
    pub f_opt_mean: Option<f64>,
    pub f_opt_min: Option<f64>,
    pub f_opt_max: Option<f64>,
    pub ratio_to_cg: Option<f64>,
    pub deep_shallow_ratio: Option<f64>,
}

impl From<&TableRow> for DetailCsvRow {
    fn from(r: &TableRow) -> Self {
        DetailCsvRow {
            network: r.network.clone(),
            data_source: r.data_source.clone(),
            method: r.method.to_string(),
            seeds: r.seeds,
            failed_seeds: r.failed_seeds,
            gradient_calls: r.gradient_calls,
            f_init: r.f_init,
            f_opt: r.f_opt,
            f_init_median: r.f_init_stats.map(|s| s.median),
            f_init_mean: r.f_init_stats.map(|s| s.mean),
            f_opt_median: r.f_opt_stats.map(|s| s.median),
            f_opt_mean: r.f_opt_stats.map(|s| s.mean),
            f_opt_min: r.f_opt_stats.map(|s| s.min),
            f_opt_max: r.f_opt_stats.map(|s| s.max),
            ratio_to_cg: r.ratio_to_cg,
            deep_shallow_ratio: r.deep_shallow_ratio,
        }
    }
}

/// Machine-readable summary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCsvRow {
    pub shallow: String,
    pub deep: String,
    pub method: String,
    pub data_deep_nn_shallow: Option<f64>,
    pub data_shallow_nn_deep: Option<f64>,
    pub ratio_deep_shallow: Option<f64>,
}

impl From<&SummaryRow> for SummaryCsvRow {
    fn from(s: &SummaryRow) -> Self {
        SummaryCsvRow {
            shallow: s.shallow.clone(),
            deep: s.deep.clone(),
            method: s.method.to_string(),
            data_deep_nn_shallow: s.data_deep_nn_shallow,
            data_shallow_nn_deep: s.data_shallow_nn_deep,
            ratio_deep_shallow: s.ratio_deep_shallow,
        }
    }
}

pub fn write_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Other(format!("csv: {e}")))?;
    }
    let body = w.into_inner().map_err(|e| CliError::Other(format!("csv: {e}")))?;
    let body = String::from_utf8(body).map_err(|e| CliError::Other(format!("csv: {e}")))?;
    Ok(format!("# schema_version={CSV_SCHEMA_VERSION}\n{body}"))
}

pub fn parse_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>, CliError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::Io(format!("csv: {e}")))
}

pub fn render_detail(table: &CrossCheckTable, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => write_csv(&table.rows.iter().map(DetailCsvRow::from).collect::<Vec<_>>()),
        Format::Md => Ok(markdown(&DETAIL_HEADERS, &table.rows.iter().map(detail_cells).collect::<Vec<_>>())),
        Format::Txt => Ok(aligned(&DETAIL_HEADERS, &table.rows.iter().map(detail_cells).collect::<Vec<_>>(), 3)),
    }
}

pub fn render_summary(table: &CrossCheckTable, method: Method, format: Format) -> Result<String, CliError> {
    let rows: Vec<&SummaryRow> = table.summary_for(method);
    match format {
        Format::Csv => write_csv(&rows.iter().map(|s| SummaryCsvRow::from(*s)).collect::<Vec<_>>()),
        Format::Md => Ok(markdown(&SUMMARY_HEADERS, &rows.iter().map(|s| summary_cells(s)).collect::<Vec<_>>())),
        Format::Txt => Ok(aligned(&SUMMARY_HEADERS, &rows.iter().map(|s| summary_cells(s)).collect::<Vec<_>>(), 2)),
    }
}

pub fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Md => "md",
        Format::Txt => "txt",
    }
}
