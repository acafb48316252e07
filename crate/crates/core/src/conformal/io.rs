//! Text serialization of conformal fields.
//!
//! A field file is one JSON header line followed by `ny` CSV rows of `nx`
//! log-density values; an empty cell marks a point outside the domain.

use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use super::chart::{Chart, Grid};
use super::curvature::CurvatureField;
use super::field::ConformalMetricField;
use crate::error::{Error, Result};
use crate::hyp::HPoint;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub chart: Chart,
    /// Minkowski coordinates of the base point `m₁`.
    pub base_point: [f64; 4],
}

pub const FIELD_FORMAT: &str = "conformal-field/1";

pub fn write_field<W: Write>(field: &ConformalMetricField, mut out: W) -> Result<()> {
    let b = field.base_point.coords();
    let header = FieldHeader {
        format: FIELD_FORMAT.into(),
        chart: field.chart,
        base_point: [b[0], b[1], b[2], b[3]],
    };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    let mut line = String::new();
    for j in 0..field.chart.ny {
        line.clear();
        for i in 0..field.chart.nx {
            if i > 0 {
                line.push(',');
            }
            if *field.mask.get(i, j) {
                line.push_str(&field.u.get(i, j).to_string());
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_field<R: Read>(input: R) -> Result<ConformalMetricField> {
    let mut lines = BufReader::new(input).lines();
    let first = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })??;
    let header: FieldHeader =
        serde_json::from_str(&first).map_err(|e| Error::Parse { line: 1, msg: format!("bad header: {e}") })?;
    if header.format != FIELD_FORMAT {
        return Err(Error::Parse { line: 1, msg: format!("unknown format '{}'", header.format) });
    }
    let chart = Chart::new(header.chart.kind, header.chart.nx, header.chart.ny, header.chart.extent)
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
    let bp = header.base_point;
    let base = HPoint::new(Vector4::new(bp[0], bp[1], bp[2], bp[3]))
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
    let (nx, ny) = (chart.nx, chart.ny);
    let mut u = Vec::with_capacity(nx * ny);
    let mut mask = Vec::with_capacity(nx * ny);
    for row in 0..ny {
        let lineno = row + 2;
        let text = match lines.next() {
            Some(l) => l?,
            None => return Err(Error::Parse { line: lineno, msg: format!("expected {ny} data rows, found {row}") }),
        };
        let cells: Vec<&str> = text.trim_end_matches('\r').split(',').collect();
        if cells.len() != nx {
            return Err(Error::Parse { line: lineno, msg: format!("expected {nx} columns, found {}", cells.len()) });
        }
        for (col, c) in cells.iter().enumerate() {
            let c = c.trim();
            if c.is_empty() {
                u.push(f64::NAN);
                mask.push(false);
                continue;
            }
            let v: f64 = c
                .parse()
                .map_err(|_| Error::Parse { line: lineno, msg: format!("column {}: '{c}' is not a number", col + 1) })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: lineno, msg: format!("column {}: non-finite value", col + 1) });
            }
            u.push(v);
            mask.push(true);
        }
    }
    for (k, extra) in lines.enumerate() {
        if !extra?.trim().is_empty() {
            return Err(Error::Parse { line: ny + 2 + k, msg: "trailing data after the last row".into() });
        }
    }
    ConformalMetricField::new(chart, Grid::from_vec(nx, ny, u)?, Grid::from_vec(nx, ny, mask)?, base)
}

/// Curvature report with columns `i,j,chart_x,chart_y,K,valid`; invalid cells have an empty `K`.
pub fn write_curvature_csv<W: Write>(chart: &Chart, k: &CurvatureField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["i", "j", "chart_x", "chart_y", "K", "valid"]).map_err(io)?;
    for j in 0..chart.ny {
        for i in 0..chart.nx {
            let z = chart.point(i, j);
            let ok = *k.valid.get(i, j);
            let kv = if ok { k.k.get(i, j).to_string() } else { String::new() };
            w.write_record([i.to_string(), j.to_string(), z.re.to_string(), z.im.to_string(), kv, u8::from(ok).to_string()])
                .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyp::ChartKind;

    fn sample() -> ConformalMetricField {
        let chart = Chart::square(ChartKind::North, 16, 1.0).unwrap();
        ConformalMetricField::from_fn(chart, |z| (z.norm() < 0.9).then(|| 0.1 * z.re + z.im.powi(2) / 3.0)).unwrap()
    }

    #[test]
    fn field_round_trip_is_exact() {
        let f = sample();
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let g = read_field(buf.as_slice()).unwrap();
        assert_eq!(f.mask, g.mask);
        for j in 0..16 {
            for i in 0..16 {
                if *f.mask.get(i, j) {
                    assert_eq!(f.u.get(i, j).to_bits(), g.u.get(i, j).to_bits());
                }
            }
        }
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let f = sample();
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let pristine: Vec<String> = text.lines().map(String::from).collect();
        let mut lines = pristine.clone();
        lines[4] = lines[4].replacen(',', ",abc", 1);
        let err = read_field(lines.join("\n").as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
        let short = pristine[..6].join("\n");
        assert!(matches!(read_field(short.as_bytes()).unwrap_err(), Error::Parse { line: 7, .. }));
        assert!(matches!(read_field("not json\n".as_bytes()).unwrap_err(), Error::Parse { line: 1, .. }));
    }
}
