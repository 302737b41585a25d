//! Plot-ready CSV and JSON output with fixed float formatting.
//!
//! CSV files may start with `# ` comment lines describing the run.
//!
//! Every float is written with 17 significant digits, so identical inputs
//! give byte-identical files and values round-trip exactly.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::analysis::{DiagonalPoint, OutcomeGrid};
use crate::bk::BkPoint;

/// A float with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Pretty JSON whose floats use [`fmt_f64`].
pub struct FixedFloatFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Default for FixedFloatFormatter<'_> {
    fn default() -> Self {
        Self {
            inner: PrettyFormatter::new(),
        }
    }
}

impl Formatter for FixedFloatFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Serializes `value` as pretty JSON with fixed float formatting.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloatFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

fn comments<W: Write>(out: &mut W, text: &str) -> io::Result<()> {
    for line in text.lines() {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Writes `# ` comment lines, then a CSV header and one record per row.
pub fn write_csv<W, R, I>(out: &mut W, comment: &str, header: &[&str], rows: I) -> io::Result<()>
where
    W: Write,
    R: IntoIterator<Item = String>,
    I: IntoIterator<Item = R>,
{
    comments(out, comment)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
}

/// `m, real, imag`
pub fn write_profile_csv<W: Write>(out: &mut W, comment: &str, profile: &[Complex64]) -> io::Result<()> {
    let rows = profile
        .iter()
        .enumerate()
        .map(|(m, z)| [m.to_string(), fmt_f64(z.re), fmt_f64(z.im)]);
    write_csv(out, comment, &["m", "real", "imag"], rows)
}

/// `n, nprime, fidelity, probability`
pub fn write_grid_csv<W: Write>(out: &mut W, comment: &str, grid: &OutcomeGrid) -> io::Result<()> {
    let rows = grid.entries.iter().map(|e| {
        [
            e.n.to_string(),
            e.nprime.to_string(),
            fmt_f64(e.fidelity),
            fmt_f64(e.probability),
        ]
    });
    write_csv(out, comment, &["n", "nprime", "fidelity", "probability"], rows)
}

/// `n, fidelity, probability`
pub fn write_diagonal_csv<W: Write>(out: &mut W, comment: &str, points: &[DiagonalPoint]) -> io::Result<()> {
    let rows = points
        .iter()
        .map(|p| [p.n.to_string(), fmt_f64(p.fidelity), fmt_f64(p.probability)]);
    write_csv(out, comment, &["n", "fidelity", "probability"], rows)
}

/// `x, p, fidelity, density`
pub fn write_bk_csv<W: Write>(out: &mut W, comment: &str, points: &[BkPoint]) -> io::Result<()> {
    let rows = points
        .iter()
        .map(|pt| [fmt_f64(pt.x), fmt_f64(pt.p), fmt_f64(pt.fidelity), fmt_f64(pt.density)]);
    write_csv(out, comment, &["x", "p", "fidelity", "density"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::sweep_grid;
    use crate::fock::FockVector;
    use crate::squeeze::SqueezeParams;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-3.0), "-3.0000000000000000e0");
        for &x in &[0.1, 1.0 / 3.0, 2.5e-300, 6.02e23, -7.25] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_floats_are_fixed_and_parse_back() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Vec<f64>,
            n: usize,
        }
        let s = to_json_string(&S {
            a: 0.5,
            b: vec![1.0 / 3.0],
            n: 4,
        })
        .unwrap();
        assert!(s.contains("\"a\": 5.0000000000000000e-1"));
        assert!(s.contains("\"n\": 4"));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["b"][0].as_f64().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn grid_csv_layout() {
        let psi = FockVector::basis(1, 10).unwrap();
        let a = SqueezeParams::real(1.0).unwrap();
        let g = sweep_grid(&psi, a, a, 2).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, "alpha=1\nbeta=1", &g).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# alpha=1");
        assert_eq!(lines[2], "n,nprime,fidelity,probability");
        assert_eq!(lines.len(), 3 + 9);
        assert_eq!(lines[3].split(',').count(), 4);
        assert!(lines[3].starts_with("0,0,"));
    }
}
