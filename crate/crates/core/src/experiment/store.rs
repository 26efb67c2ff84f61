//! Results store: one JSON record per line.
//!
//! The first line is a header with the schema version and the experiment
//! config. Then come one `run` or `failure` record per (cell, seed) in cell
//! order, then the table `row` and `summary` records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    CellResult, CrossCheckTable, ExperimentConfig, MatrixResult, SeedFailure, SeedRun, SummaryRow, TableRow,
};
use crate::error::{Error, Result};
use crate::optim::Method;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Header {
        schema_version: u32,
        config: ExperimentConfig,
    },
    Run {
        network: String,
        data_source: String,
        method: Method,
        #[serde(flatten)]
        run: SeedRun,
    },
    Failure {
        network: String,
        data_source: String,
        method: Method,
        #[serde(flatten)]
        failure: SeedFailure,
    },
    Row(TableRow),
    Summary(SummaryRow),
}

/// Parsed contents of a store.
#[derive(Debug, Clone, PartialEq)]
pub struct StoreContents {
    pub result: MatrixResult,
}

pub fn write_store<W: Write>(result: &MatrixResult, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let mut line = |r: &Record| -> Result<()> {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
        Ok(())
    };
    line(&Record::Header {
        schema_version: SCHEMA_VERSION,
        config: result.config.clone(),
    })?;
    for cell in &result.cells {
        let (network, data_source, method) = (
            cell.spec.network.name.clone(),
            cell.spec.data_source.name.clone(),
            cell.spec.method(),
        );
        for &seed in &cell.spec.seeds {
            if let Some(run) = cell.runs.iter().find(|r| r.seed == seed) {
                line(&Record::Run {
                    network: network.clone(),
                    data_source: data_source.clone(),
                    method,
                    run: run.clone(),
                })?;
            } else if let Some(failure) = cell.failures.iter().find(|f| f.seed == seed) {
                line(&Record::Failure {
                    network: network.clone(),
                    data_source: data_source.clone(),
                    method,
                    failure: failure.clone(),
                })?;
            }
        }
    }
    for row in &result.table.rows {
        line(&Record::Row(row.clone()))?;
    }
    for s in &result.table.summary {
        line(&Record::Summary(s.clone()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_store<R: Read>(reader: R) -> Result<StoreContents> {
    let mut lines = BufReader::new(reader).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Corrupt("empty results store".into()))??;
    let header: serde_json::Value = serde_json::from_str(&first)?;
    let version = header
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Corrupt("missing schema_version in header".into()))?;
    if version != SCHEMA_VERSION as u64 {
        return Err(Error::Version {
            found: version.min(u32::MAX as u64) as u32,
            supported: SCHEMA_VERSION,
        });
    }
    let config = match serde_json::from_value(header)? {
        Record::Header { config, .. } => config,
        _ => return Err(Error::Corrupt("first record is not a header".into())),
    };

    let mut cells: Vec<CellResult> = config
        .cells()
        .into_iter()
        .map(|spec| CellResult {
            spec,
            runs: Vec::new(),
            failures: Vec::new(),
            aggregation: config.aggregation,
        })
        .collect();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let find = |cells: &mut Vec<CellResult>, n: &str, d: &str, m: Method| -> Result<usize> {
        cells
            .iter()
            .position(|c| c.spec.network.name == n && c.spec.data_source.name == d && c.spec.method() == m)
            .ok_or_else(|| Error::Corrupt(format!("record for unknown cell {n} on {d} with {m}")))
    };

    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(&line).map_err(|e| Error::Corrupt(format!("line {}: {e}", i + 2)))?;
        match record {
            Record::Header { .. } => return Err(Error::Corrupt(format!("line {}: second header", i + 2))),
            Record::Run {
                network,
                data_source,
                method,
                run,
            } => {
                let c = find(&mut cells, &network, &data_source, method)?;
                cells[c].runs.push(run);
            }
            Record::Failure {
                network,
                data_source,
                method,
                failure,
            } => {
                let c = find(&mut cells, &network, &data_source, method)?;
                cells[c].failures.push(failure);
            }
            Record::Row(r) => rows.push(r),
            Record::Summary(s) => summary.push(s),
        }
    }

    let table = CrossCheckTable {
        size_class: config.size_class,
        aggregation: config.aggregation,
        rows,
        summary,
    };
    Ok(StoreContents {
        result: MatrixResult { config, cells, table },
    })
}

/// Writes the store to `path`, replacing any existing file.
pub fn persist(result: &MatrixResult, path: impl AsRef<Path>) -> Result<()> {
    write_store(result, File::create(path)?)
}

pub fn load(path: impl AsRef<Path>) -> Result<MatrixResult> {
    Ok(read_store(File::open(path)?)?.result)
}
