//! Labeled matrices and the CSV/JSON shapes every artifact shares.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square or rectangular matrix with row/column labels.
///
/// `None` cells mark not-applicable entries (e.g. the diagonal of a p-value
/// matrix); they are `null` in JSON and empty in CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub names: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub column_names: Option<Vec<String>>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl LabeledMatrix {
    pub fn square(names: Vec<String>, values: Vec<Vec<Option<f64>>>) -> Self {
        Self {
            names,
            column_names: None,
            values,
        }
    }

    pub fn from_dense(names: Vec<String>, values: &[Vec<f64>]) -> Self {
        Self::square(
            names,
            values
                .iter()
                .map(|r| r.iter().map(|&v| Some(v)).collect())
                .collect(),
        )
    }

    pub fn col_names(&self) -> &[String] {
        self.column_names.as_deref().unwrap_or(&self.names)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.col_names().iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.names.iter().zip(&self.values) {
            let mut record = vec![name.clone()];
            record.extend(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    /// Parses the CSV shape written by [`LabeledMatrix::write_csv`].
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let cols: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut names = Vec::new();
        let mut values = Vec::new();
        for record in rdr.records() {
            let record = record?;
            names.push(record.get(0).unwrap_or("").to_string());
            let row = record
                .iter()
                .skip(1)
                .map(|cell| {
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        cell.parse::<f64>().map(Some).map_err(|_| Error::UnparsableNumber {
                            row: names.len(),
                            column: String::new(),
                            value: cell.to_string(),
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        let column_names = if cols == names { None } else { Some(cols) };
        Ok(Self {
            names,
            column_names,
            values,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes")
    }
}

/// Writes a serializable value as pretty JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize>(mut writer: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value).map_err(|e| Error::Io(e.to_string()))?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Writes rows of string cells under a header.
pub fn write_table<W: Write>(writer: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_gaps() {
        let m = LabeledMatrix::square(
            vec!["A".into(), "B".into()],
            vec![vec![None, Some(0.1 + 0.2)], vec![Some(-1e-300), None]],
        );
        let text = m.to_csv_string().unwrap();
        assert!(text.starts_with(",A,B\nA,,0.30000000000000004\n"));
        assert_eq!(LabeledMatrix::from_csv_str(&text).unwrap(), m);
        let json = m.to_json_string();
        assert!(json.contains("null"));
        let back: LabeledMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
