use std::io::{Read, Write};
use std::path::Path;

use super::{Dataset, ObservedRecord, Status};
use crate::error::{Error, Result};

/// Which CSV column plays which role.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schema {
    /// Record identifier column; row numbers are used when absent.
    pub id_col: Option<String>,
    pub time_col: String,
    pub status_col: String,
    pub treatment_cols: Vec<String>,
    pub covariate_cols: Vec<String>,
    /// Subset of `covariate_cols` holding integer-coded categories.
    pub categorical_cols: Vec<String>,
}

impl Schema {
    /// The schema that [`write_csv`] produces for `data`.
    pub fn for_dataset(data: &Dataset) -> Schema {
        Schema {
            id_col: Some("id".into()),
            time_col: "time".into(),
            status_col: "status".into(),
            treatment_cols: data.treatment_names().to_vec(),
            covariate_cols: data.covariate_names().to_vec(),
            categorical_cols: data
                .covariate_names()
                .iter()
                .zip(data.categorical_flags())
                .filter(|(_, &c)| c)
                .map(|(n, _)| n.clone())
                .collect(),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    if schema.treatment_cols.is_empty() {
        return Err(Error::Schema("at least one treatment column is required".into()));
    }
    for c in &schema.categorical_cols {
        if !schema.covariate_cols.contains(c) {
            return Err(Error::Schema(format!(
                "categorical column {c} is not listed as a covariate"
            )));
        }
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column {name}")))
    };
    let id_idx = schema.id_col.as_deref().map(find).transpose()?;
    let time_idx = find(&schema.time_col)?;
    let status_idx = find(&schema.status_col)?;
    let treat_idx = schema
        .treatment_cols
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;
    let cov_idx = schema
        .covariate_cols
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let cell = |idx: usize, name: &str| -> Result<f64> {
            let raw = row.get(idx).unwrap_or("");
            if raw.is_empty() {
                return Err(Error::Validation {
                    row: row_no,
                    message: format!("missing value in column {name}"),
                });
            }
            raw.parse::<f64>().map_err(|_| Error::Validation {
                row: row_no,
                message: format!("non-numeric value {raw:?} in column {name}"),
            })
        };
        let time = cell(time_idx, &schema.time_col)?;
        let status_raw = cell(status_idx, &schema.status_col)?;
        let status = code_of(status_raw)
            .and_then(Status::from_code)
            .ok_or_else(|| Error::Validation {
                row: row_no,
                message: format!("status {status_raw} is not one of 0, 1, 2"),
            })?;
        let mut treatments = Vec::with_capacity(treat_idx.len());
        for (&idx, name) in treat_idx.iter().zip(&schema.treatment_cols) {
            let v = cell(idx, name)?;
            let a = code_of(v).filter(|&a| a <= 1).ok_or_else(|| Error::Validation {
                row: row_no,
                message: format!("treatment {name} has value {v}, expected 0 or 1"),
            })?;
            treatments.push(a);
        }
        let covariates = cov_idx
            .iter()
            .zip(&schema.covariate_cols)
            .map(|(&idx, name)| cell(idx, name))
            .collect::<Result<Vec<_>>>()?;
        let id = match id_idx {
            Some(idx) => row.get(idx).unwrap_or("").to_string(),
            None => row_no.to_string(),
        };
        records.push(ObservedRecord {
            id,
            time,
            status,
            treatments,
            covariates,
        });
    }
    let categorical = schema
        .covariate_cols
        .iter()
        .map(|c| schema.categorical_cols.contains(c))
        .collect();
    Dataset::new(
        records,
        schema.treatment_cols.clone(),
        schema.covariate_cols.clone(),
        categorical,
    )
}

fn code_of(v: f64) -> Option<u8> {
    (v.fract() == 0.0 && (0.0..=255.0).contains(&v)).then_some(v as u8)
}

/// Writes `data` with the column layout of [`Schema::for_dataset`]. Values
/// use the shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string(), "time".into(), "status".into()];
    header.extend(data.treatment_names().iter().cloned());
    header.extend(data.covariate_names().iter().cloned());
    w.write_record(&header)?;
    for r in data.records() {
        let mut row = vec![r.id.clone(), r.time.to_string(), r.status.code().to_string()];
        row.extend(r.treatments.iter().map(|a| a.to_string()));
        row.extend(r.covariates.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema {
            id_col: None,
            time_col: "t".into(),
            status_col: "d".into(),
            treatment_cols: vec!["a1".into()],
            covariate_cols: vec!["x".into()],
            categorical_cols: vec![],
        }
    }

    #[test]
    fn reads_four_rows() {
        let text = "t,d,a1,x\n1,1,0,0.5\n2,0,1,0.1\n3,2,0,0.2\n4,0,1,0.3\n";
        let ds = read_csv(text.as_bytes(), &schema()).unwrap();
        assert_eq!(ds.n(), 4);
        let c = ds.event_counts();
        assert_eq!((c.event, c.competing, c.censored), (1, 1, 2));
        assert_eq!(ds.records()[2].id, "3");
    }

    #[test]
    fn negative_time_names_row() {
        let text = "t,d,a1,x\n1,1,0,0.5\n2,0,1,0.1\n-1,2,0,0.2\n";
        match read_csv(text.as_bytes(), &schema()) {
            Err(Error::Validation { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_schema_error() {
        let text = "t,d,x\n1,1,0.5\n";
        assert!(matches!(read_csv(text.as_bytes(), &schema()), Err(Error::Schema(_))));
    }

    #[test]
    fn bad_cells_are_row_errors() {
        for (text, row) in [
            ("t,d,a1,x\n1,3,0,0.5\n", 1),
            ("t,d,a1,x\n1,1,0,0.5\n1,1,2,0.5\n", 2),
            ("t,d,a1,x\n1,1,0,abc\n", 1),
            ("t,d,a1,x\n1,1,0,0.5\n1,1,0,\n", 2),
        ] {
            match read_csv(text.as_bytes(), &schema()) {
                Err(Error::Validation { row: r, .. }) => assert_eq!(r, row, "{text}"),
                other => panic!("unexpected {other:?} for {text}"),
            }
        }
    }
}
