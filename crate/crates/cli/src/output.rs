use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Marker written for cells with no value.
pub const NA: &str = "NA";

pub const COLUMNS: [&str; 13] = [
    "protocol",
    "metric",
    "sweep_name",
    "sweep_value",
    "analytic_value",
    "bound_lower",
    "bound_upper",
    "simulated_mean",
    "simulated_stderr",
    "n_trials",
    "n_rejected",
    "seed",
    "series",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

/// One evaluated point.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultRow {
    pub protocol: String,
    pub metric: String,
    pub sweep_name: Option<String>,
    pub sweep_value: Option<f64>,
    pub analytic_value: Option<f64>,
    pub bound_lower: Option<f64>,
    pub bound_upper: Option<f64>,
    pub simulated_mean: Option<f64>,
    pub simulated_stderr: Option<f64>,
    pub n_trials: Option<u64>,
    pub n_rejected: Option<u64>,
    pub seed: Option<u64>,
    pub series: Option<String>,
}

fn cell<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| NA.to_string(), T::to_string)
}

fn parse_cell<T: std::str::FromStr>(s: &str, column: &str) -> Result<Option<T>> {
    if s == NA {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| CliError::Config(format!("bad value `{s}` in column {column}")))
}

impl ResultRow {
    pub fn cells(&self) -> [String; 13] {
        [
            self.protocol.clone(),
            self.metric.clone(),
            cell(&self.sweep_name),
            cell(&self.sweep_value),
            cell(&self.analytic_value),
            cell(&self.bound_lower),
            cell(&self.bound_upper),
            cell(&self.simulated_mean),
            cell(&self.simulated_stderr),
            cell(&self.n_trials),
            cell(&self.n_rejected),
            cell(&self.seed),
            cell(&self.series),
        ]
    }

    fn from_cells(r: &csv::StringRecord) -> Result<Self> {
        if r.len() != COLUMNS.len() {
            return Err(CliError::Config(format!("expected {} columns, got {}", COLUMNS.len(), r.len())));
        }
        let text = |i: usize| -> Option<String> { (r[i] != *NA).then(|| r[i].to_string()) };
        Ok(ResultRow {
            protocol: r[0].to_string(),
            metric: r[1].to_string(),
            sweep_name: text(2),
            sweep_value: parse_cell(&r[3], COLUMNS[3])?,
            analytic_value: parse_cell(&r[4], COLUMNS[4])?,
            bound_lower: parse_cell(&r[5], COLUMNS[5])?,
            bound_upper: parse_cell(&r[6], COLUMNS[6])?,
            simulated_mean: parse_cell(&r[7], COLUMNS[7])?,
            simulated_stderr: parse_cell(&r[8], COLUMNS[8])?,
            n_trials: parse_cell(&r[9], COLUMNS[9])?,
            n_rejected: parse_cell(&r[10], COLUMNS[10])?,
            seed: parse_cell(&r[11], COLUMNS[11])?,
            series: text(12),
        })
    }
}

fn output_error(e: impl ToString) -> CliError {
    CliError::Output(e.to_string())
}

/// Writes `rows` with a header (CSV) or one object per line (JSON lines).
pub fn write_rows<W: Write>(rows: &[ResultRow], format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(COLUMNS).map_err(output_error)?;
            for row in rows {
                w.write_record(row.cells()).map_err(output_error)?;
            }
            w.flush().map_err(output_error)
        }
        Format::Jsonl => {
            let mut out = out;
            for row in rows {
                serde_json::to_writer(&mut out, row).map_err(output_error)?;
                out.write_all(b"\n").map_err(output_error)?;
            }
            out.flush().map_err(output_error)
        }
    }
}

/// Reads rows written by [`write_rows`] in CSV form.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| CliError::Config(e.to_string()))?;
    if header.iter().ne(COLUMNS) {
        return Err(CliError::Config(format!("unexpected header {header:?}")));
    }
    r.records()
        .map(|rec| ResultRow::from_cells(&rec.map_err(|e| CliError::Config(e.to_string()))?))
        .collect()
}
