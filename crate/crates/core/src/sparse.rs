//! Compressed sparse row storage for complex matrices.

use std::io::{self, Write};

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Builds a matrix from per-row `(col, value)` lists. Columns inside a
    /// row are sorted and duplicates summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, Complex64)>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                assert!(c < ncols, "column {c} out of range");
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(col, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(ZERO, |(_, v)| v)
    }

    /// Lower and upper bandwidth.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for r in 0..self.nrows {
            for (c, _) in self.row(r) {
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| self.row(r).fold(ZERO, |acc, (c, v)| acc + v * x[c]))
            .collect()
    }

    /// `Aᴴ x`.
    pub fn mul_vec_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.nrows);
        let mut out = vec![ZERO; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            for (c, v) in self.row(r) {
                out[c] += v.conj() * xr;
            }
        }
        out
    }

    /// The product `A Aᴴ`.
    pub fn mul_self_adjoint(&self) -> CsrMatrix {
        // Column lists of A, so row r of A·Aᴴ only touches rows sharing a column.
        let mut by_col: Vec<Vec<usize>> = vec![Vec::new(); self.ncols];
        for r in 0..self.nrows {
            for (c, _) in self.row(r) {
                by_col[c].push(r);
            }
        }
        let mut dense_row = vec![ZERO; self.nrows];
        let mut touched = vec![false; self.nrows];
        let rows = (0..self.nrows)
            .map(|p| {
                let mut list = Vec::new();
                for (c, _) in self.row(p) {
                    for &q in &by_col[c] {
                        if !touched[q] {
                            touched[q] = true;
                            list.push(q);
                        }
                    }
                }
                for &q in &list {
                    dense_row[q] = self.row(p).fold(ZERO, |acc, (c, v)| acc + v * self.get(q, c).conj());
                }
                list.iter()
                    .map(|&q| {
                        touched[q] = false;
                        let v = dense_row[q];
                        dense_row[q] = ZERO;
                        (q, v)
                    })
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(self.nrows, rows)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::from_element(self.nrows, self.ncols, ZERO);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// Writes one `row col re im` line per stored entry (zero based).
    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# rows={} cols={} nnz={}", self.nrows, self.ncols, self.nnz())?;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                writeln!(out, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
            }
        }
        Ok(())
    }
}
