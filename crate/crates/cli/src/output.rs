use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use tensornorm::Result;

use crate::args::Format;

pub fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

/// Pretty JSON of `full`, or a one-row CSV of `row`.
pub fn emit<F: Serialize, R: Serialize>(out: Option<&Path>, format: Format, full: &F, row: &R) -> Result<()> {
    let mut w = sink(out)?;
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, full)?;
            writeln!(w)?;
        }
        Format::Csv => write_csv(&mut w, std::slice::from_ref(row))?,
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv<W: Write, R: Serialize>(w: W, rows: &[R]) -> Result<()> {
    let mut c = csv::Writer::from_writer(w);
    for r in rows {
        c.serialize(r).map_err(io::Error::from)?;
    }
    c.flush()?;
    Ok(())
}
