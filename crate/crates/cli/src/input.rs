//! CSV datasets and command-line range syntax.

use std::io::{Read, Write};

use rangeclust::{Error, Point, Rect, Result, MAX_DIM};
use serde::Deserialize;

/// Reads comma-separated coordinates. A first line that does not parse as
/// numbers is taken as a header.
pub fn read_csv<R: Read>(r: R) -> Result<Vec<Point>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r);
    let mut points = Vec::new();
    let mut d = None;
    let mut buf = Vec::with_capacity(MAX_DIM);
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse { line, msg: e.to_string() }
        })?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        buf.clear();
        let parsed: std::result::Result<(), String> = rec.iter().try_for_each(|f| {
            let x: f64 = f.parse().map_err(|_| format!("{f:?} is not a number"))?;
            if !x.is_finite() {
                return Err(format!("{f:?} is not finite"));
            }
            buf.push(x);
            Ok(())
        });
        if let Err(msg) = parsed {
            if points.is_empty() && d.is_none() {
                // Header: fixes the column count only.
                d = Some(rec.len());
                continue;
            }
            return Err(Error::Parse { line, msg });
        }
        let want = *d.get_or_insert(buf.len());
        if buf.len() != want {
            return Err(Error::Parse { line, msg: format!("expected {want} columns, found {}", buf.len()) });
        }
        if !(2..=MAX_DIM).contains(&want) {
            return Err(Error::Parse { line, msg: format!("{want} columns; dimension must be in 2..={MAX_DIM}") });
        }
        points.push(Point::new(&buf));
    }
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(points)
}

pub fn write_csv<W: Write>(w: W, points: &[Point]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let d = points.first().map_or(0, |p| p.dim());
    let to_io = |e: csv::Error| Error::Io(e.into());
    wtr.write_record((1..=d).map(|i| format!("x{i}"))).map_err(to_io)?;
    for p in points {
        wtr.write_record(p.coords().iter().map(|x| x.to_string())).map_err(to_io)?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_coords(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|_| format!("{t:?} is not a number"))
        })
        .collect()
}

/// Parses `lo1,lo2,...xhi1,hi2,...`.
pub fn parse_range(s: &str) -> std::result::Result<Rect, String> {
    let (lo, hi) = s.split_once('x').ok_or("range must look like lo1,lo2,...xhi1,hi2,...")?;
    Rect::new(&parse_coords(lo)?, &parse_coords(hi)?).map_err(|e| e.to_string())
}

/// A range given either in command-line syntax or as explicit corners.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum RangeSpec {
    Text(String),
    Corners { lo: Vec<f64>, hi: Vec<f64> },
}

impl RangeSpec {
    pub fn to_rect(&self) -> std::result::Result<Rect, String> {
        match self {
            RangeSpec::Text(s) => parse_range(s),
            RangeSpec::Corners { lo, hi } => Rect::new(lo, hi).map_err(|e| e.to_string()),
        }
    }
}
