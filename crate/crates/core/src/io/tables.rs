//! CSV formats.
//!
//! * series: `step,row,kind,log10_value,value`
//! * matrix: `r,j,log10_value,bucket` (lower triangle only, row-major)
//! * values: one linear value per line, optional `value` header
//!
//! `log10_value` is written with Rust's shortest round-trip formatting and is
//! always present (`inf`/`-inf` for the extremes). `value` is the linear
//! value in `{:e}` form, left empty when it does not fit a normal `f64`.
//! Parsing then re-serializing any of these files reproduces the same bytes.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::discovery::{colorize, Bucket, DiagonalSeries, DiscoveryMatrix, SeriesKind};
use crate::error::{Error, Result};
use crate::logvalue::LogValue;

pub const SERIES_HEADER: [&str; 5] = ["step", "row", "kind", "log10_value", "value"];
pub const MATRIX_HEADER: [&str; 4] = ["r", "j", "log10_value", "bucket"];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn reader<R: Read>(r: R, header: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let got = rdr.headers().map_err(csv_err)?;
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::Parse(format!(
            "expected header {:?}, got {:?}",
            header.join(","),
            got.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(rdr)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what} {s:?}")))
}

fn parse_log10(s: &str) -> Result<f64> {
    let v: f64 = parse_field(s, "log10_value")?;
    if v.is_nan() {
        return Err(Error::Parse("log10_value is NaN".into()));
    }
    Ok(v)
}

/// Linear value for the `value` column, if it is a normal `f64` (or zero).
pub fn linear_column(v: LogValue) -> Option<f64> {
    v.to_linear_checked()
}

/// One line of a series file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub step: u64,
    pub row: usize,
    pub kind: SeriesKind,
    pub log10_value: f64,
    pub value: Option<f64>,
}

impl SeriesRecord {
    pub fn new(step: u64, row: usize, kind: SeriesKind, v: LogValue) -> Self {
        SeriesRecord {
            step,
            row,
            kind,
            log10_value: v.log10(),
            value: linear_column(v),
        }
    }
}

/// Records ordered by step, then row, diagonal before subdiagonal. The value
/// at index `i` of a series belongs to step `i + 1`.
pub fn series_records(diagonal: &[DiagonalSeries], subdiagonal: &[DiagonalSeries]) -> Vec<SeriesRecord> {
    let mut out = Vec::new();
    for s in diagonal.iter().chain(subdiagonal) {
        for (i, &v) in s.values.iter().enumerate() {
            out.push(SeriesRecord::new(i as u64 + 1, s.r, s.kind, v));
        }
    }
    out.sort_by_key(|rec| (rec.step, rec.row, rec.kind == SeriesKind::Subdiagonal));
    out
}

pub fn write_series_csv<W: Write>(w: W, records: &[SeriesRecord]) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(SERIES_HEADER).map_err(csv_err)?;
    for rec in records {
        let value = rec.value.map(|x| format!("{x:e}")).unwrap_or_default();
        wtr.write_record([
            rec.step.to_string(),
            rec.row.to_string(),
            rec.kind.as_str().to_string(),
            rec.log10_value.to_string(),
            value,
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_series_csv<R: Read>(r: R) -> Result<Vec<SeriesRecord>> {
    let mut rdr = reader(r, &SERIES_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let kind = match &rec[2] {
            "diagonal" => SeriesKind::Diagonal,
            "subdiagonal" => SeriesKind::Subdiagonal,
            other => return Err(Error::Parse(format!("bad kind {other:?}"))),
        };
        let value = match rec[4].trim() {
            "" => None,
            s => Some(parse_field::<f64>(s, "value")?),
        };
        out.push(SeriesRecord {
            step: parse_field(&rec[0], "step")?,
            row: parse_field(&rec[1], "row")?,
            kind,
            log10_value: parse_log10(&rec[3])?,
            value,
        });
    }
    Ok(out)
}

/// One cell of a matrix file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub r: usize,
    pub j: usize,
    pub log10_value: f64,
    pub bucket: Bucket,
}

pub fn matrix_records(m: &DiscoveryMatrix) -> Vec<MatrixRecord> {
    m.entries()
        .map(|(r, j, v)| MatrixRecord {
            r,
            j,
            log10_value: v.log10(),
            bucket: colorize(v),
        })
        .collect()
}

pub fn write_matrix_records<W: Write>(w: W, records: &[MatrixRecord]) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(MATRIX_HEADER).map_err(csv_err)?;
    for rec in records {
        wtr.write_record([
            rec.r.to_string(),
            rec.j.to_string(),
            rec.log10_value.to_string(),
            rec.bucket.name().to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_matrix_csv<W: Write>(w: W, m: &DiscoveryMatrix) -> Result<()> {
    write_matrix_records(w, &matrix_records(m))
}

pub fn read_matrix_records<R: Read>(r: R) -> Result<Vec<MatrixRecord>> {
    let mut rdr = reader(r, &MATRIX_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let bucket = Bucket::from_name(rec[3].trim())
            .ok_or_else(|| Error::Parse(format!("bad bucket {:?}", &rec[3])))?;
        out.push(MatrixRecord {
            r: parse_field(&rec[0], "r")?,
            j: parse_field(&rec[1], "j")?,
            log10_value: parse_log10(&rec[2])?,
            bucket,
        });
    }
    Ok(out)
}

/// Rebuilds the matrix; cells must come in row-major order and cover the
/// whole lower triangle. The result is marked unregularized.
pub fn matrix_from_records(records: &[MatrixRecord]) -> Result<DiscoveryMatrix> {
    let mut rows: Vec<Vec<LogValue>> = Vec::new();
    for rec in records {
        let (want_r, want_j) = match rows.last() {
            Some(row) if row.len() < rows.len() + 1 => (rows.len(), row.len()),
            _ => (rows.len() + 1, 0),
        };
        if (rec.r, rec.j) != (want_r, want_j) {
            return Err(Error::Parse(format!(
                "expected cell ({want_r},{want_j}), found ({},{})",
                rec.r, rec.j
            )));
        }
        if want_j == 0 {
            rows.push(Vec::with_capacity(want_r + 1));
        }
        rows.last_mut()
            .expect("row pushed")
            .push(LogValue::from_log10(rec.log10_value)?);
    }
    if let Some(row) = rows.last() {
        if row.len() != rows.len() + 1 {
            return Err(Error::Parse(format!("row {} is incomplete", rows.len())));
        }
    }
    DiscoveryMatrix::from_rows(rows, false)
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<DiscoveryMatrix> {
    matrix_from_records(&read_matrix_records(r)?)
}

/// Reads linear martingale values: one per line (commas also separate),
/// blank lines and `#` comments ignored, an optional `value` header.
pub fn read_values<R: Read>(mut r: R) -> Result<Vec<LogValue>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut out = Vec::new();
    let mut first = true;
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if std::mem::take(&mut first) && line.eq_ignore_ascii_case("value") {
            continue;
        }
        for field in line.split(',').map(str::trim).filter(|f| !f.is_empty()) {
            let x: f64 = parse_field(field, "value")?;
            out.push(LogValue::from_linear(x).map_err(|e| Error::Parse(e.to_string()))?);
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("no values found".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::discovery_matrix;
    use crate::martingales::RankedValues;
    use crate::merge::MergeSpec;

    fn lv(x: f64) -> LogValue {
        LogValue::from_linear(x).unwrap()
    }

    #[test]
    fn series_layout() {
        let diag = vec![DiagonalSeries {
            r: 2,
            kind: SeriesKind::Diagonal,
            values: vec![lv(1.0), LogValue::from_ln(-800.0).unwrap()],
        }];
        let sub = vec![DiagonalSeries {
            r: 2,
            kind: SeriesKind::Subdiagonal,
            values: vec![lv(100.0), LogValue::INFINITY],
        }];
        let recs = series_records(&diag, &sub);
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "step,row,kind,log10_value,value\n\
             1,2,diagonal,0,1e0\n\
             1,2,subdiagonal,2,1.0000000000000004e2\n\
             2,2,diagonal,-347.43558552260146,\n\
             2,2,subdiagonal,inf,\n"
        );
        let back = read_series_csv(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn matrix_round_trip() {
        let ranked = RankedValues::from_values(&[lv(8.0), lv(4.0), lv(1.0)]);
        let m = discovery_matrix(&ranked, &MergeSpec::mean());
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        let recs = read_matrix_records(buf.as_slice()).unwrap();
        let mut again = Vec::new();
        write_matrix_records(&mut again, &recs).unwrap();
        assert_eq!(buf, again);
        let parsed = matrix_from_records(&recs).unwrap();
        for (r, j, v) in m.entries() {
            assert!((parsed.get(r, j).unwrap().ln() - v.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn matrix_parse_errors() {
        let bad_header = "r,j,value,bucket\n1,0,0,green\n";
        assert!(read_matrix_csv(bad_header.as_bytes()).is_err());
        let gap = "r,j,log10_value,bucket\n1,0,0,green\n2,0,0,green\n";
        assert!(read_matrix_csv(gap.as_bytes()).is_err());
        let incomplete = "r,j,log10_value,bucket\n1,0,0,green\n";
        assert!(read_matrix_csv(incomplete.as_bytes()).is_err());
        let bucket = "r,j,log10_value,bucket\n1,0,0,teal\n1,1,0,green\n";
        assert!(read_matrix_csv(bucket.as_bytes()).is_err());
        let ok = "r,j,log10_value,bucket\n1,0,1,yellow\n1,1,0,green\n";
        assert_eq!(read_matrix_csv(ok.as_bytes()).unwrap().k(), 1);
    }

    #[test]
    fn values_file() {
        let text = "value\n# comment\n8\n4, 1\n\ninf\n";
        let v = read_values(text.as_bytes()).unwrap();
        assert_eq!(v, vec![lv(8.0), lv(4.0), lv(1.0), LogValue::INFINITY]);
        assert!(read_values("".as_bytes()).is_err());
        assert!(read_values("-1\n".as_bytes()).is_err());
        assert!(read_values("abc\n".as_bytes()).is_err());
    }
}
