//! Plain-text field dumps.
//!
//! ```text
//! # n=24 h=0.04 order=row-major
//! # columns: x y re im
//! 4e-2 4e-2 1.25e-3 -7.1e-5
//! ...
//! ```
//!
//! Nodes run with `x` fastest. Numbers use the shortest representation
//! that parses back to the same `f64`.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use sparsesrc::{ComplexField, GridSpec, RealField};

fn header<W: Write>(out: &mut W, grid: &GridSpec, columns: &str) -> io::Result<()> {
    writeln!(out, "# n={} h={} order=row-major", grid.n(), grid.h())?;
    writeln!(out, "# columns: {columns}")
}

pub fn write_real<W: Write>(mut out: W, field: &RealField) -> io::Result<()> {
    let g = field.grid();
    header(&mut out, g, "x y value")?;
    for ((_, x, y), v) in g.nodes().zip(field.values()) {
        writeln!(out, "{x:e} {y:e} {v:e}")?;
    }
    Ok(())
}

pub fn write_complex<W: Write>(mut out: W, field: &ComplexField) -> io::Result<()> {
    let g = field.grid();
    header(&mut out, g, "x y re im")?;
    for ((_, x, y), v) in g.nodes().zip(field.values()) {
        writeln!(out, "{x:e} {y:e} {:e} {:e}", v.re, v.im)?;
    }
    Ok(())
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_line(l: &str) -> Vec<f64> {
        l.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn real_dump_round_trips() {
        let g = GridSpec::new(8).unwrap();
        let f = RealField::from_fn(g, |x, y| (x * 7.0).sin() - y / 3.0);
        let mut buf = Vec::new();
        write_real(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("# n=8 h={} order=row-major", g.h()));
        assert_eq!(lines.next().unwrap(), "# columns: x y value");
        let rows: Vec<Vec<f64>> = lines.map(parse_line).collect();
        assert_eq!(rows.len(), 64);
        for (r, ((_, x, y), v)) in rows.iter().zip(g.nodes().zip(f.values())) {
            assert_eq!(r, &[x, y, *v]);
        }
    }

    #[test]
    fn complex_dump_has_four_columns() {
        let g = GridSpec::new(8).unwrap();
        let f = RealField::from_fn(g, |x, _| x).to_complex();
        let mut buf = Vec::new();
        write_complex(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().skip(2).all(|l| parse_line(l).len() == 4));
        // second node along x
        assert_eq!(parse_line(text.lines().nth(3).unwrap())[0], 2.0 * g.h());
    }
}
