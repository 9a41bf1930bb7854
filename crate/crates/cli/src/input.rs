//! CSV ingestion.
//!
//! Files are UTF-8, comma separated, with a header row of feature names
//! unless told otherwise. Cells are decimal numbers, scientific notation
//! allowed. Line numbers in errors are 1-based file lines.

use std::fs::File;
use std::io::{ErrorKind, Read};
use std::path::Path;

use affinity_core::{FeatureDataset, Matrix};

use crate::error::CliError;

struct Table {
    header: Option<Vec<String>>,
    rows: Vec<Vec<f64>>,
    width: usize,
}

fn open(path: &Path) -> Result<impl Read, CliError> {
    File::open(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => CliError::FileNotFound(path.to_path_buf()),
        _ => CliError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })
}

fn read_table(path: &Path, has_header: bool) -> Result<Table, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);

    let mut header = None;
    let mut rows = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(CliError::RaggedRows {
                line,
                expected: w,
                found: record.len(),
            });
        }
        if has_header && header.is_none() {
            header = Some(record.iter().map(str::to_owned).collect());
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::NonNumericCell {
                    line,
                    column: j + 1,
                    value: cell.to_owned(),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::EmptyFile(path.to_path_buf()));
    }
    Ok(Table {
        header,
        rows,
        width: width.unwrap_or(0),
    })
}

/// Reads a feature table. Without a header, features are named `f0, f1, ...`.
pub fn load_csv(path: &Path, has_header: bool) -> Result<FeatureDataset, CliError> {
    let table = read_table(path, has_header)?;
    let data = Matrix::from_rows(&table.rows)?;
    let dataset = match table.header {
        Some(names) => FeatureDataset::new(data, names)?,
        None => FeatureDataset::unnamed(data)?,
    };
    Ok(dataset)
}

/// Reads a plain numeric matrix, one row per line.
pub fn load_matrix(path: &Path, has_header: bool) -> Result<Matrix, CliError> {
    let table = read_table(path, has_header)?;
    debug_assert!(table.rows.iter().all(|r| r.len() == table.width));
    Ok(Matrix::from_rows(&table.rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_header_and_rows() {
        let f = file("a,b,c\n1,2,3\n4.5,-1e-3,6\n");
        let ds = load_csv(f.path(), true).unwrap();
        assert_eq!(ds.n_samples(), 2);
        assert_eq!(ds.n_features(), 3);
        assert_eq!(ds.feature_names(), &["a", "b", "c"]);
        assert_eq!(ds.data()[(1, 1)], -1e-3);
    }

    #[test]
    fn ragged_rows_name_the_line() {
        let f = file("a,b\n1,2\n3\n");
        match load_csv(f.path(), true) {
            Err(CliError::RaggedRows { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_has_coordinates() {
        let f = file("a,b\n1,2\n3,x\n");
        match load_csv(f.path(), true) {
            Err(CliError::NonNumericCell { line, column, value }) => {
                assert_eq!((line, column, value.as_str()), (3, 2, "x"))
            }
            other => panic!("unexpected {other:?}"),
        }
        let f = file("a,b\n1,2\n3,inf\n");
        assert!(matches!(load_csv(f.path(), true), Err(CliError::NonNumericCell { .. })));
    }

    #[test]
    fn empty_and_missing_files() {
        assert!(matches!(load_csv(file("").path(), true), Err(CliError::EmptyFile(_))));
        assert!(matches!(load_csv(file("a,b\n").path(), true), Err(CliError::EmptyFile(_))));
        assert!(matches!(
            load_csv(Path::new("/nonexistent/data.csv"), true),
            Err(CliError::FileNotFound(_))
        ));
    }

    #[test]
    fn headerless_matrix() {
        let m = load_matrix(file("1,2\n3,4\n5,6\n").path(), false).unwrap();
        assert_eq!(m.shape(), (3, 2));
        let ds = load_csv(file("1,2\n3,4\n").path(), false).unwrap();
        assert_eq!(ds.feature_names(), &["f0", "f1"]);
    }
}
