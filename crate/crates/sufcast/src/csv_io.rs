//! CSV panels: one row per period, one column per series.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use sufcast_core::{DataPanel, Matrix, Vector};
use thiserror::Error;

/// Headers recognised as a time-label first column.
const TIME_HEADERS: [&str; 6] = ["date", "time", "period", "t", "label", "quarter"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row} has {found} fields, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column '{column}': '{value}' is not a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("missing values in rows {}", join(.rows))]
    Missing { rows: Vec<usize> },
    #[error("target column '{0}' not found")]
    NoTarget(String),
    #[error("no predictor columns besides the target")]
    NoPredictors,
    #[error("{found} periods, at least {min} required")]
    TooFewPeriods { found: usize, min: usize },
    #[error("covariate file has {found} rows, expected one per series ({expected})")]
    CovariateRows { expected: usize, found: usize },
    #[error("covariate row for series '{0}' not found")]
    UnknownSeries(String),
    #[error(transparent)]
    Panel(#[from] sufcast_core::Error),
}

fn join(rows: &[usize]) -> String {
    rows.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeColumn {
    /// First column is a label when its header looks like one.
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub target: String,
    pub time_column: TimeColumn,
    pub min_periods: usize,
}

impl LoadOptions {
    pub fn new(target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            time_column: TimeColumn::Auto,
            min_periods: 20,
        }
    }
}

/// A panel with the names read from the file.
#[derive(Debug, Clone)]
pub struct LoadedPanel {
    pub panel: DataPanel,
    pub series: Vec<String>,
    pub target_name: String,
    pub time_labels: Option<Vec<String>>,
}

pub fn load_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<LoadedPanel, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, options)
}

/// Rows are numbered from 1 for the first data row, excluding the header.
pub fn read_csv<R: Read>(reader: R, options: &LoadOptions) -> Result<LoadedPanel, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let has_time = match options.time_column {
        TimeColumn::Present => true,
        TimeColumn::Absent => false,
        TimeColumn::Auto => headers
            .first()
            .is_some_and(|h| TIME_HEADERS.iter().any(|t| h.eq_ignore_ascii_case(t))),
    };
    let first = usize::from(has_time);
    let target_col = headers
        .iter()
        .skip(first)
        .position(|h| *h == options.target)
        .map(|i| i + first)
        .ok_or_else(|| DataError::NoTarget(options.target.clone()))?;
    let predictor_cols: Vec<usize> = (first..headers.len()).filter(|&c| c != target_col).collect();
    if predictor_cols.is_empty() {
        return Err(DataError::NoPredictors);
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    let mut labels = Vec::new();
    let mut missing = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let row = idx + 1;
        if record.len() != headers.len() {
            return Err(DataError::Ragged {
                row,
                expected: headers.len(),
                found: record.len(),
            });
        }
        if has_time {
            labels.push(record[0].to_string());
        }
        let mut row_missing = false;
        for c in first..headers.len() {
            let cell = &record[c];
            if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
                row_missing = true;
                columns[c].push(f64::NAN);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| DataError::NonNumeric {
                row,
                column: headers[c].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                row_missing = true;
            }
            columns[c].push(v);
        }
        if row_missing {
            missing.push(row);
        }
    }
    if !missing.is_empty() {
        return Err(DataError::Missing { rows: missing });
    }
    let t = columns[target_col].len();
    if t < options.min_periods {
        return Err(DataError::TooFewPeriods {
            found: t,
            min: options.min_periods,
        });
    }
    let p = predictor_cols.len();
    let x = Matrix::from_fn(p, t, |i, s| columns[predictor_cols[i]][s]);
    let y = Vector::from_vec(columns[target_col].clone());
    Ok(LoadedPanel {
        panel: DataPanel::new(x, y)?,
        series: predictor_cols.iter().map(|&c| headers[c].clone()).collect(),
        target_name: headers[target_col].clone(),
        time_labels: has_time.then_some(labels),
    })
}

/// Write a panel in the layout [`load_csv`] reads. Values use the shortest
/// round-trip representation, so reloading is bit-identical.
pub fn write_panel_csv(path: impl AsRef<Path>, loaded: &LoadedPanel) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_panel(file, loaded)
}

pub fn write_panel<W: Write>(writer: W, loaded: &LoadedPanel) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = Vec::with_capacity(loaded.series.len() + 2);
    if loaded.time_labels.is_some() {
        header.push("period".to_string());
    }
    header.push(loaded.target_name.clone());
    header.extend(loaded.series.iter().cloned());
    wtr.write_record(&header)?;
    let x = loaded.panel.predictors();
    let y = loaded.panel.target();
    for s in 0..loaded.panel.num_periods() {
        let mut rec = Vec::with_capacity(header.len());
        if let Some(labels) = &loaded.time_labels {
            rec.push(labels[s].clone());
        }
        rec.push(y[s].to_string());
        rec.extend((0..x.nrows()).map(|i| x[(i, s)].to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|source| DataError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}

/// Loading covariates: one row per predictor series, one numeric column per
/// covariate. A non-numeric first column names the series and rows are
/// matched to `series` by name; otherwise rows are taken in series order.
pub fn load_covariates(path: impl AsRef<Path>, series: &[String]) -> Result<Matrix, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_covariates(file, series)
}

pub fn read_covariates<R: Read>(reader: R, series: &[String]) -> Result<Matrix, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let records: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>()?;
    let named = records
        .first()
        .is_some_and(|r| r.get(0).is_some_and(|c| c.parse::<f64>().is_err()));
    let first = usize::from(named);
    if records.len() != series.len() {
        return Err(DataError::CovariateRows {
            expected: series.len(),
            found: records.len(),
        });
    }
    let d = headers.len() - first;
    let mut out = Matrix::zeros(series.len(), d);
    for (idx, rec) in records.iter().enumerate() {
        let row = idx + 1;
        if rec.len() != headers.len() {
            return Err(DataError::Ragged {
                row,
                expected: headers.len(),
                found: rec.len(),
            });
        }
        let target_row = if named {
            series
                .iter()
                .position(|s| s == &rec[0])
                .ok_or_else(|| DataError::UnknownSeries(rec[0].to_string()))?
        } else {
            idx
        };
        for j in 0..d {
            let cell = &rec[j + first];
            out[(target_row, j)] = cell.parse().map_err(|_| DataError::NonNumeric {
                row,
                column: headers[j + first].clone(),
                value: cell.to_string(),
            })?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(min: usize) -> LoadOptions {
        LoadOptions {
            min_periods: min,
            ..LoadOptions::new("y")
        }
    }

    #[test]
    fn small_file_shape() {
        let data = "x1,x2,y\n1,2,3\n4,5,6\n7,8,9\n1,1,1\n2,2,2\n";
        let loaded = read_csv(data.as_bytes(), &opts(1)).unwrap();
        assert_eq!(loaded.panel.num_series(), 2);
        assert_eq!(loaded.panel.num_periods(), 5);
        assert_eq!(loaded.panel.target()[2], 9.0);
        assert_eq!(loaded.panel.predictors()[(1, 0)], 2.0);
    }

    #[test]
    fn missing_cell_names_row() {
        let data = "x1,x2,y\n1,2,3\n4,5,6\n7,,9\n1,1,1\n";
        let err = read_csv(data.as_bytes(), &opts(1)).unwrap_err();
        match &err {
            DataError::Missing { rows } => assert_eq!(rows, &vec![3]),
            other => panic!("unexpected {other}"),
        }
        assert!(err.to_string().contains('3'));
    }

    #[test]
    fn too_few_periods() {
        let data = "x1,y\n1,2\n3,4\n";
        assert!(matches!(
            read_csv(data.as_bytes(), &LoadOptions::new("y")),
            Err(DataError::TooFewPeriods { found: 2, min: 20 })
        ));
    }

    #[test]
    fn ragged_and_non_numeric() {
        let ragged = "x1,y\n1,2\n3\n";
        assert!(matches!(
            read_csv(ragged.as_bytes(), &opts(1)),
            Err(DataError::Ragged { row: 2, .. })
        ));
        let text = "x1,y\n1,2\nabc,4\n";
        assert!(matches!(
            read_csv(text.as_bytes(), &opts(1)),
            Err(DataError::NonNumeric { row: 2, .. })
        ));
    }

    #[test]
    fn time_column_is_skipped() {
        let data = "date,y,x\n2001Q1,1,2\n2001Q2,3,4\n";
        let loaded = read_csv(data.as_bytes(), &opts(1)).unwrap();
        assert_eq!(loaded.series, vec!["x".to_string()]);
        assert_eq!(loaded.time_labels.unwrap()[1], "2001Q2");
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let data = "date,y,a,b\n1,0.1,1e-300,3.0000000000000004\n2,-2.5,0.30000000000000004,7\n";
        let loaded = read_csv(data.as_bytes(), &opts(1)).unwrap();
        let mut buf = Vec::new();
        write_panel(&mut buf, &loaded).unwrap();
        let again = read_csv(buf.as_slice(), &opts(1)).unwrap();
        assert_eq!(again.panel.predictors(), loaded.panel.predictors());
        assert_eq!(again.panel.target(), loaded.panel.target());
        assert_eq!(again.series, loaded.series);
    }

    #[test]
    fn covariates_by_name() {
        let series = vec!["a".to_string(), "b".to_string()];
        let text = "series,z\nb,2.0\na,1.0\n";
        let m = read_covariates(text.as_bytes(), &series).unwrap();
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(1, 0)], 2.0);
        let plain = "z\n5\n6\n";
        assert_eq!(read_covariates(plain.as_bytes(), &series).unwrap()[(1, 0)], 6.0);
    }
}
