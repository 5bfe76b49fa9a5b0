use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use mufide::numerics::Matrix;
use tempfile::NamedTempFile;

use crate::ExitKind;

/// Decimal text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| anyhow!(e.error))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| {
        w.write_all(text.as_bytes())?;
        if !text.ends_with('\n') {
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

/// Header and numeric rows of a CSV file.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(|e| e.context(ExitKind::Data))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let data_err = |msg: String| anyhow!("{}: {msg}", path.display()).context(ExitKind::Data);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| data_err(format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(data_err("missing header row".into()));
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // Row numbers count the header as row 1.
        let row_no = i + 2;
        let record = record.map_err(|e| data_err(format!("row {row_no}: {e}")))?;
        if record.len() != header.len() {
            return Err(data_err(format!(
                "row {row_no}: expected {} columns, found {}",
                header.len(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(header.len());
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                data_err(format!(
                    "row {row_no}, column {} (`{}`): `{cell}` is not a finite number",
                    j + 1,
                    header[j]
                ))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Inputs and outputs of one fidelity level: columns `x1..xd` then `y`.
pub fn read_dataset(path: &Path) -> Result<(Matrix, Vec<f64>)> {
    let table = read_table(path)?;
    let d = table.header.len();
    if d < 2 || table.header[d - 1] != "y" {
        bail!(anyhow!(
            "{}: expected columns x1..xd followed by `y`, found {:?}",
            path.display(),
            table.header
        )
        .context(ExitKind::Data));
    }
    if table.rows.is_empty() {
        bail!(anyhow!("{}: no data rows", path.display()).context(ExitKind::Data));
    }
    let mut x = Vec::with_capacity(table.rows.len() * (d - 1));
    let mut y = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        x.extend_from_slice(&row[..d - 1]);
        y.push(row[d - 1]);
    }
    Ok((Matrix::from_vec(table.rows.len(), d - 1, x)?, y))
}

pub fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    write_atomic(path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(header)?;
        for r in rows {
            wtr.write_record(&r)?;
        }
        wtr.flush()?;
        Ok(())
    })
}

/// Writes `x1..xd, y` rows.
pub fn write_dataset(path: &Path, x: &Matrix, y: &[f64]) -> Result<()> {
    let mut header: Vec<String> = (1..=x.cols()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    let rows = x
        .row_iter()
        .zip(y)
        .map(|(row, v)| row.iter().chain([v]).map(|v| fmt_f64(*v)).collect());
    write_csv(path, &header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            123_456_789.123_456_79,
            f64::MIN_POSITIVE,
            5e-324,
        ] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let x = Matrix::from_fn(4, 2, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0));
        let y = vec![0.1, -1.0 / 7.0, 2e10, 3.3];
        write_dataset(&path, &x, &y).unwrap();
        let (x2, y2) = read_dataset(&path).unwrap();
        assert_eq!(x2, x);
        assert_eq!(y2, y);
    }

    #[test]
    fn bad_cell_is_located() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x1,y\n0.1,1\n0.2,abc\n").unwrap();
        let err = format!("{:#}", read_dataset(&path).unwrap_err());
        assert!(err.contains("row 3") && err.contains("column 2"), "{err}");
    }

    #[test]
    fn ragged_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x1,y\n0.1,1,2\n").unwrap();
        assert!(read_dataset(&path).is_err());
    }
}
