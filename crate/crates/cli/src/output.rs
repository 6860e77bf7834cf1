//! CSV and JSON rendering of result records.

use std::io::Write;

use serde::Serialize;

use crate::config::OutputFormat;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: &str = "method,a1,a2,a3,alpha1,alpha2,v,value_re,value_im,err_est,n_evals,r_used,converged";

/// One evaluation. Columns that do not apply to a method are left empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub method: String,
    pub a1: Option<i64>,
    pub a2: Option<i64>,
    pub a3: Option<i64>,
    pub alpha1: Option<String>,
    pub alpha2: Option<String>,
    pub v: Option<f64>,
    pub value_re: f64,
    pub value_im: f64,
    pub err_est: f64,
    pub n_evals: usize,
    pub r_used: Option<u32>,
    pub converged: bool,
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    schema_version: u32,
    records: &'a [Record],
}

pub fn write_records(records: &[Record], format: OutputFormat, out: &mut dyn Write) -> CliResult<()> {
    let fail = |e: &dyn std::fmt::Display| CliError::Output(e.to_string());
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(r).map_err(|e| fail(&e))?;
            }
            if records.is_empty() {
                w.write_record(CSV_HEADER.split(',')).map_err(|e| fail(&e))?;
            }
            w.flush().map_err(|e| fail(&e))?;
        }
        OutputFormat::Json => {
            let doc = JsonDocument {
                schema_version: SCHEMA_VERSION,
                records,
            };
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out).map_err(|e| fail(&e))?;
        }
    }
    Ok(())
}
