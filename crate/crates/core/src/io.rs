//! Text file formats: CSV for matrices, series and event times, JSON for
//! everything structured.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::metrics::{EventSequence, TimeSeries};

/// Relative asymmetry tolerated when reading a kernel file.
pub const FILE_SYMMETRY_TOL: f64 = 1e-9;

fn parse_field(s: &str, row: usize, col: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("row {}, column {}: cannot parse {s:?} as a number", row + 1, col + 1)))?;
    if !v.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(v)
}

/// All records of a CSV source. A first record that does not parse as
/// numbers is dropped as a header when `allow_header` is set.
fn read_records<R: Read>(r: R, allow_header: bool) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && allow_header && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, f)| parse_field(f, i, j))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Square symmetric matrix, one row per line, no header.
pub fn read_matrix<R: Read>(r: R) -> Result<SymMatrix> {
    let rows = read_records(r, false)?;
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse("matrix file is empty".into()));
    }
    let mut data = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Parse(format!("row {} has {} entries, expected {n}", i + 1, row.len())));
        }
        data.extend_from_slice(row);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (data[i * n + j], data[j * n + i]);
            if (a - b).abs() > FILE_SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    Ok(SymMatrix::symmetrized(n, data))
}

pub fn write_matrix<W: Write>(w: W, m: &SymMatrix) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..m.dim() {
        wtr.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// One time step per line, one column per dimension, optional header.
pub fn read_series<R: Read>(r: R) -> Result<TimeSeries> {
    let rows = read_records(r, true)?;
    if rows.is_empty() {
        return Err(Error::Parse("series file has no data rows".into()));
    }
    TimeSeries::from_rows(&rows)
}

pub fn write_series<W: Write>(w: W, x: &TimeSeries) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let header: Vec<String> = (0..x.dim()).map(|k| format!("x{k}")).collect();
    wtr.write_record(&header)?;
    for t in 0..x.len() {
        wtr.write_record(x.row(t).iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// A single column of increasing event times, optional header.
pub fn read_events<R: Read>(r: R) -> Result<EventSequence> {
    let rows = read_records(r, true)?;
    let mut times = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 1 {
            return Err(Error::Parse(format!("event row {} has {} columns, expected 1", i + 1, row.len())));
        }
        times.push(row[0]);
    }
    EventSequence::new(times)
}

pub fn write_events<W: Write>(w: W, e: &EventSequence) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(["t"])?;
    for t in e.times() {
        wtr.write_record([t.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// CSV with a header row and numeric columns.
pub fn write_table<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(row.iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<R: Read, T: DeserializeOwned>(r: R) -> Result<T> {
    Ok(serde_json::from_reader(r)?)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_matrix(path: &Path) -> Result<SymMatrix> {
    read_matrix(open(path)?)
}

pub fn save_matrix(path: &Path, m: &SymMatrix) -> Result<()> {
    write_matrix(create(path)?, m)
}

pub fn load_series(path: &Path) -> Result<TimeSeries> {
    read_series(open(path)?)
}

pub fn save_series(path: &Path, x: &TimeSeries) -> Result<()> {
    write_series(create(path)?, x)
}

pub fn load_events(path: &Path) -> Result<EventSequence> {
    read_events(open(path)?)
}

pub fn save_events(path: &Path, e: &EventSequence) -> Result<()> {
    write_events(create(path)?, e)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    read_json(open(path)?)
}

pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    write_json(&mut w, value)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let m = SymMatrix::from_rows(&[[2.0, 0.1], [0.1, 1.0 / 3.0]]).unwrap();
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn matrix_validation() {
        assert!(matches!(read_matrix("1,2\n3,4\n".as_bytes()), Err(Error::NotSymmetric { .. })));
        assert!(read_matrix("1,2\n2\n".as_bytes()).is_err());
        assert!(read_matrix("".as_bytes()).is_err());
        assert!(read_matrix("1,x\nx,1\n".as_bytes()).is_err());
        let m = read_matrix("1, 0.5\n0.5000000000001, 1\n".as_bytes()).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn series_header_is_detected() {
        let a = read_series("x,y\n1,2\n3,4\n".as_bytes()).unwrap();
        let b = read_series("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.len(), a.dim()), (2, 2));
        let mut buf = Vec::new();
        write_series(&mut buf, &a).unwrap();
        assert_eq!(read_series(buf.as_slice()).unwrap(), a);
        assert!(read_series("x\n".as_bytes()).is_err());
        assert!(read_series("1,2\n3\n".as_bytes()).is_err());
    }

    #[test]
    fn events_round_trip() {
        let e = read_events("time\n0.5\n1.25\n3\n".as_bytes()).unwrap();
        assert_eq!(e.times(), &[0.5, 1.25, 3.0]);
        let mut buf = Vec::new();
        write_events(&mut buf, &e).unwrap();
        assert_eq!(read_events(buf.as_slice()).unwrap(), e);
        assert!(read_events("2\n1\n".as_bytes()).is_err());
        assert!(read_events("1,2\n3,4\n".as_bytes()).is_err());
    }
}
