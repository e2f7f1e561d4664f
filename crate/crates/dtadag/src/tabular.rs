//! CSV datasets and pattern-count tables.
//!
//! Datasets have a header row of variable names and one 0/1 value per cell;
//! an empty cell is a missing value (an unverified reference result). Lines
//! end in LF.

use std::io::{Read, Write};

use dtadag_core::estimate::{EstimateError, PatternCounts};
use dtadag_core::Dataset;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}, column `{column}`: expected 0, 1 or blank, found `{value}`")]
    Value { line: u64, column: String, value: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("pattern table: {0}")]
    Pattern(String),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

/// Observed 0/1 data with possible blanks, stored by column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedTable {
    headers: Vec<String>,
    columns: Vec<Vec<Option<u8>>>,
}

impl ObservedTable {
    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Result<&[Option<u8>], TableError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| TableError::MissingColumn(name.to_string()))
    }

    /// Number of blank cells in `name`.
    pub fn blanks(&self, name: &str) -> Result<usize, TableError> {
        Ok(self.column(name)?.iter().filter(|v| v.is_none()).count())
    }

    /// Rows where every listed column is present, as a dataset over those
    /// columns.
    pub fn complete(&self, names: &[&str]) -> Result<Dataset, TableError> {
        let cols: Vec<&[Option<u8>]> = names.iter().map(|n| self.column(n)).collect::<Result<_, _>>()?;
        let mut out = vec![Vec::new(); names.len()];
        for r in 0..self.n_rows() {
            if cols.iter().all(|c| c[r].is_some()) {
                for (dst, c) in out.iter_mut().zip(&cols) {
                    dst.push(c[r].expect("checked"));
                }
            }
        }
        let variables = names.iter().map(|s| s.to_string()).collect();
        Dataset::from_columns(variables, out, 0).map_err(|e| TableError::Pattern(e.to_string()))
    }
}

/// Parses a dataset CSV.
pub fn read_table<R: Read>(reader: R) -> Result<ObservedTable, TableError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    for (i, h) in headers.iter().enumerate() {
        if headers[..i].contains(h) {
            return Err(TableError::DuplicateColumn(h.clone()));
        }
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        for (c, field) in record.iter().enumerate() {
            let value = match field.trim() {
                "" => None,
                "0" => Some(0),
                "1" => Some(1),
                other => {
                    return Err(TableError::Value {
                        line,
                        column: headers[c].clone(),
                        value: other.to_string(),
                    })
                }
            };
            columns[c].push(value);
        }
    }
    Ok(ObservedTable { headers, columns })
}

/// Writes `columns` of `data`. Where `blank` is `Some((column, selector))`,
/// `column` is left empty on rows with `selector = 0`.
pub fn write_dataset<W: Write>(
    data: &Dataset,
    columns: &[&str],
    blank: Option<(&str, &str)>,
    writer: W,
) -> Result<(), TableError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(columns)?;
    let cols: Vec<&[u8]> = columns
        .iter()
        .map(|c| data.column(c).map_err(|_| TableError::MissingColumn(c.to_string())))
        .collect::<Result<_, _>>()?;
    let blank = match blank {
        Some((col, sel)) => Some((
            columns.iter().position(|c| *c == col),
            data.column(sel)
                .map_err(|_| TableError::MissingColumn(sel.to_string()))?,
        )),
        None => None,
    };
    let mut record: Vec<&str> = Vec::with_capacity(columns.len());
    for r in 0..data.n_rows() {
        record.clear();
        for (i, c) in cols.iter().enumerate() {
            let hide = matches!(blank, Some((Some(pos), sel)) if pos == i && sel[r] == 0);
            record.push(match (hide, c[r]) {
                (true, _) => "",
                (false, 0) => "0",
                (false, _) => "1",
            });
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a pattern-count CSV: columns `t1..tK` holding 0/1, then `count`.
pub fn read_patterns<R: Read>(reader: R) -> Result<PatternCounts, TableError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let Some((last, tests)) = headers.split_last() else {
        return Err(TableError::Pattern("empty header".into()));
    };
    if last != "count" {
        return Err(TableError::Pattern("last column must be `count`".into()));
    }
    for (i, t) in tests.iter().enumerate() {
        if *t != format!("t{}", i + 1) {
            return Err(TableError::Pattern(format!(
                "column {} must be `t{}`, found `{t}`",
                i + 1,
                i + 1
            )));
        }
    }
    let k = tests.len();
    if k < 3 {
        return Err(EstimateError::Underidentified { tests: k }.into());
    }
    let mut counts = vec![0.0; 1 << k];
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut idx = 0usize;
        for (c, field) in record.iter().take(k).enumerate() {
            let bit = match field.trim() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(TableError::Value {
                        line,
                        column: headers[c].clone(),
                        value: other.to_string(),
                    })
                }
            };
            idx = (idx << 1) | bit;
        }
        let count: f64 = record[k]
            .trim()
            .parse()
            .map_err(|_| TableError::Pattern(format!("line {line}: bad count `{}`", &record[k])))?;
        counts[idx] += count;
    }
    Ok(PatternCounts::new(k, counts)?)
}
