//! CSV ingestion with declared (never inferred) value bounds.
//!
//! Each row contributes a category label and a numeric value. Labels are
//! mapped to indices by their position in the declared category list, which
//! also fixes the public `k`. Values are mapped to `[0, 1]` with the declared
//! `min`/`max`; a value outside those bounds rejects the whole run.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::PathBuf;

use dpanova_core::Dataset;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IngestionSpec {
    pub input: PathBuf,
    pub group_col: String,
    pub value_col: String,
    pub min: f64,
    pub max: f64,
    pub categories: Vec<String>,
}

impl IngestionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.max > self.min) {
            return Err(Error::usage("--max must be greater than --min"));
        }
        if self.categories.is_empty() {
            return Err(Error::usage("--categories must list at least one label"));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.categories.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::usage(format!("category `{dup}` is listed twice")));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.categories.len()
    }

    pub fn normalize(&self, value: f64) -> Option<f64> {
        (self.min..=self.max)
            .contains(&value)
            .then(|| (value - self.min) / (self.max - self.min))
    }

    pub fn load(&self) -> Result<Dataset> {
        let file = std::fs::File::open(&self.input)?;
        self.read(file)
    }

    pub fn read<R: Read>(&self, reader: R) -> Result<Dataset> {
        self.validate()?;
        let index: HashMap<&str, usize> = self
            .categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = csv.headers()?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_owned()))
        };
        let group_at = column(&self.group_col)?;
        let value_at = column(&self.value_col)?;

        let mut rows = Vec::new();
        for record in csv.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let label = record.get(group_at).unwrap_or_default();
            let &category = index.get(label).ok_or_else(|| Error::UnknownCategory {
                line,
                label: label.to_owned(),
            })?;
            let value: f64 = record
                .get(value_at)
                .unwrap_or_default()
                .parse()
                .map_err(|_| Error::BadValue { line })?;
            if !value.is_finite() {
                return Err(Error::BadValue { line });
            }
            let normalized = self.normalize(value).ok_or(Error::OutOfBounds { line })?;
            rows.push((category, normalized));
        }
        Ok(Dataset::new(self.k(), rows)?)
    }
}

/// Writes `group,value` rows with labels restored and values at full
/// round-trip precision.
pub fn write_normalized<W: Write>(data: &Dataset, categories: &[String], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["group", "value"])?;
    for (c, y) in data.rows() {
        csv.write_record([categories[c].as_str(), &y.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}
