use std::io::Write;
use std::path::Path;

use super::{Dataset, RawTable};
use crate::error::{Error, Result};
use crate::schema::{Value, MISSING};

pub(super) fn read_raw(path: &Path) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::parse(path, 1, "header row is required"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        rows.push((line, record.iter().map(String::from).collect()));
    }
    Ok(RawTable {
        path: path.to_path_buf(),
        header,
        declared: None,
        rows,
    })
}

/// Writes the dataset as headered CSV: predictor columns in schema order,
/// then the class. Missing values are written as `?`.
pub fn write_csv<W: Write>(out: W, dataset: &Dataset) -> Result<()> {
    let csv_err = |e: csv::Error| Error::InvariantViolation(format!("csv write failed: {e}"));
    let schema = &dataset.schema;
    let mut w = csv::Writer::from_writer(out);
    let class = schema.class_attribute();
    w.write_record(
        schema
            .attributes()
            .iter()
            .chain([class])
            .map(|a| a.name.as_str()),
    )
    .map_err(csv_err)?;
    for x in &dataset.instances {
        let mut fields: Vec<String> = x
            .values
            .iter()
            .zip(schema.attributes())
            .map(|(v, a)| match v {
                Value::Numeric(f) => f.to_string(),
                Value::Nominal(i) => a.values()[*i].clone(),
                Value::Missing => MISSING.to_string(),
            })
            .collect();
        fields.push(
            x.label
                .map_or_else(|| MISSING.to_string(), |l| class.values()[l].clone()),
        );
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvariantViolation(format!("csv flush failed: {e}")))
}
