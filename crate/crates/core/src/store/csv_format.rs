//! Human-readable CSV layout: header `record_id,group_id,class_label,v0,...,v{dim-1}`,
//! one record per row, reals written with 17 significant digits.

use std::path::Path;

use super::{EmbeddingDataset, EmbeddingRecord};
use crate::error::{Error, Result};
use crate::scalar::Real;

const ID_COLUMNS: [&str; 3] = ["record_id", "group_id", "class_label"];

pub fn write_csv<T: Real>(dataset: &EmbeddingDataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header: Vec<String> = ID_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..dataset.dim()).map(|k| format!("v{k}")));
    writer.write_record(&header).map_err(csv_error)?;

    let mut row = Vec::with_capacity(header.len());
    for r in dataset.records() {
        row.clear();
        row.push(r.record_id.to_string());
        row.push(r.group_id.to_string());
        row.push(r.class_label.to_string());
        row.extend(r.vector.iter().map(|v| format!("{:.16e}", v.to_f64_lossy())));
        writer.write_record(&row).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv<T: Real>(path: impl AsRef<Path>) -> Result<EmbeddingDataset<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;

    let dim = parse_header(reader.headers().map_err(csv_error)?)?;

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::MalformedRow {
            row: row_no,
            message: e.to_string(),
        })?;
        if row.len() < ID_COLUMNS.len() {
            return Err(Error::MalformedRow {
                row: row_no,
                message: format!("expected at least {} columns, found {}", ID_COLUMNS.len(), row.len()),
            });
        }
        let found = row.len() - ID_COLUMNS.len();
        if found != dim {
            return Err(Error::DimensionMismatch {
                row: row_no,
                expected: dim,
                found,
            });
        }
        let field = |col: usize| -> &str { &row[col] };
        let bad = |col: usize| Error::MalformedRow {
            row: row_no,
            message: format!("cannot parse `{}` in column {}", &row[col], col),
        };
        let record_id: u64 = field(0).parse().map_err(|_| bad(0))?;
        let group_id: u64 = field(1).parse().map_err(|_| bad(1))?;
        let class_label: u32 = field(2).parse().map_err(|_| bad(2))?;
        let vector = (ID_COLUMNS.len()..row.len())
            .map(|col| field(col).parse::<f64>().map(T::lit).map_err(|_| bad(col)))
            .collect::<Result<Vec<T>>>()?;
        records.push(EmbeddingRecord {
            record_id,
            group_id,
            class_label,
            vector,
        });
    }
    EmbeddingDataset::new(dim, records)
}

fn parse_header(header: &csv::StringRecord) -> Result<usize> {
    if header.len() <= ID_COLUMNS.len() {
        return Err(Error::MalformedHeader(format!(
            "expected {} id columns plus at least one vector column",
            ID_COLUMNS.len()
        )));
    }
    for (i, expected) in ID_COLUMNS.iter().enumerate() {
        if &header[i] != *expected {
            return Err(Error::MalformedHeader(format!(
                "column {i} should be `{expected}`, found `{}`",
                &header[i]
            )));
        }
    }
    for (k, name) in header.iter().skip(ID_COLUMNS.len()).enumerate() {
        if name != format!("v{k}") {
            return Err(Error::MalformedHeader(format!("expected `v{k}`, found `{name}`")));
        }
    }
    Ok(header.len() - ID_COLUMNS.len())
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::MalformedHeader(format!("{other:?}")),
        }
    } else {
        Error::MalformedHeader(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(contents: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, contents).unwrap();
        (dir, path)
    }

    #[test]
    fn reads_three_rows() {
        let (_dir, path) = write("record_id,group_id,class_label,v0,v1\n0,0,0,1.5,2\n1,1,1,-3,4e-2\n2,2,0,0,0\n");
        let ds: EmbeddingDataset<f64> = read_csv(&path).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.class_index().len(), 2);
        assert_eq!(ds.records()[1].vector, vec![-3.0, 0.04]);
    }

    #[test]
    fn dimension_mismatch_names_row() {
        let (_dir, path) = write("record_id,group_id,class_label,v0,v1\n0,0,0,1,2\n1,1,1,1,2,3\n");
        let err = read_csv::<f64>(&path).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                row: 2,
                expected: 2,
                found: 3
            }
        ));
        assert!(err.to_string().contains("row 2"));
    }

    #[test]
    fn malformed_header() {
        let (_dir, path) = write("id,group_id,class_label,v0\n0,0,0,1\n");
        assert!(matches!(read_csv::<f64>(&path), Err(Error::MalformedHeader(_))));
        let (_dir, path) = write("record_id,group_id,class_label,v1\n0,0,0,1\n");
        assert!(matches!(read_csv::<f64>(&path), Err(Error::MalformedHeader(_))));
        let (_dir, path) = write("record_id,group_id,class_label\n");
        assert!(matches!(read_csv::<f64>(&path), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn non_finite_and_unparseable() {
        let (_dir, path) = write("record_id,group_id,class_label,v0\n0,0,0,NaN\n");
        assert!(matches!(
            read_csv::<f64>(&path),
            Err(Error::NonFiniteValue { row: 1, column: 0 })
        ));
        let (_dir, path) = write("record_id,group_id,class_label,v0\n0,0,x,1\n");
        assert!(matches!(
            read_csv::<f64>(&path),
            Err(Error::MalformedRow { row: 1, .. })
        ));
    }

    #[test]
    fn one_record_writes_header_plus_row() {
        let ds = EmbeddingDataset::new(2, vec![EmbeddingRecord::ungrouped(5, 1, vec![0.1f64, -2.0])]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        write_csv(&ds, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "record_id,group_id,class_label,v0,v1");
        assert!(lines[1].starts_with("5,5,1,"));
        let back: EmbeddingDataset<f64> = read_csv(&path).unwrap();
        assert_eq!(back, ds);
    }
}
