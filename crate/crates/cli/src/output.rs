//! CSV and JSON emitters. Numbers carry 12 significant digits in both.

use std::io::Write;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub(crate) fn num(x: f64) -> String {
    format!("{x:.11e}")
}

/// `x` rounded to the printed precision, so JSON and CSV agree.
pub(crate) fn round12(x: f64) -> f64 {
    if x.is_finite() {
        num(x).parse().unwrap_or(x)
    } else {
        x
    }
}

pub(crate) fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A record that can be written as one CSV row or one JSON object.
pub(crate) trait Row: Serialize {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

pub(crate) fn write_rows<R: Row>(
    out: &mut dyn Write,
    rows: &[R],
    format: Format,
) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(R::header()).map_err(CliError::csv)?;
            for r in rows {
                w.write_record(r.fields()).map_err(CliError::csv)?;
            }
            w.flush().map_err(|e| CliError::io("writing output", e))?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, rows)
                .map_err(|e| CliError::io("writing output", e.into()))?;
            writeln!(out).map_err(|e| CliError::io("writing output", e))?;
        }
    }
    Ok(())
}
