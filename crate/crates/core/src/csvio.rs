//! Numeric CSV tables with `#` comment lines.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Read a header plus all-numeric rows. Lines starting with `#` are skipped.
pub fn read_table<R: Read>(reader: R, source: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Schema {
                file: source.into(),
                detail: format!("row {} has {} fields, header has {}", i + 1, rec.len(), header.len()),
            });
        }
        let row = rec
            .iter()
            .zip(&header)
            .map(|(field, col)| {
                field.parse::<f64>().map_err(|_| Error::Schema {
                    file: source.into(),
                    detail: format!("column `{col}` row {}: `{field}` is not a number", i + 1),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Write a header and numeric rows. Floats use the shortest round-trip form.
pub fn write_table<W: Write, I>(w: W, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// Column index by name, or a schema error naming the file and column.
pub fn column(header: &[String], name: &str, source: &str) -> Result<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| Error::Schema {
        file: source.into(),
        detail: format!("missing column `{name}`"),
    })
}
