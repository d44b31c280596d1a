use std::fs::File;
use std::path::Path;

use super::matrix::{DataMatrix, LabelVector};
use crate::error::{Error, Result};

/// Reads a numeric CSV. With `label_last`, the final column is parsed as a
/// non-negative integer label.
pub fn load_csv(
    path: &Path,
    has_header: bool,
    label_last: bool,
) -> Result<(DataMatrix, Option<LabelVector>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n_cols = None;
    let mut n_rows = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("csv row {row}: {e}")))?;
        let width = record.len() - usize::from(label_last);
        match n_cols {
            None => n_cols = Some(width),
            Some(w) if w != width => {
                return Err(Error::Format(format!("csv row {row} has {width} features, expected {w}")))
            }
            _ => {}
        }
        for (col, field) in record.iter().take(width).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Format(format!("csv row {row}, column {col}: `{field}` is not a number")))?;
            values.push(v);
        }
        if label_last {
            let field = &record[width];
            labels.push(
                field
                    .parse::<u64>()
                    .map_err(|_| Error::Format(format!("csv row {row}: label `{field}` is not a non-negative integer")))?,
            );
        }
        n_rows += 1;
    }
    let x = DataMatrix::new(n_rows, n_cols.unwrap_or(0), values)?;
    Ok((x, label_last.then(|| LabelVector::new(labels))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use tempfile::tempdir;

    #[test]
    fn header_and_label_column() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "a,b,label\n1.5,2,0\n3,4e-1,2\n").unwrap();
        let (x, y) = load_csv(&p, true, true).unwrap();
        assert_eq!(x.row(1), &[3.0, 0.4]);
        assert_eq!(y.unwrap().as_slice(), &[0, 2]);

        let (x, y) = load_csv(&p, true, false).unwrap();
        assert_eq!(x.n_cols(), 3);
        assert!(y.is_none());
    }

    #[test]
    fn bad_label_is_format_error() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "1,2,x\n3,4,1\n").unwrap();
        assert!(matches!(load_csv(&p, false, true), Err(Error::Format(_))));
    }
}
