//! Direct solvers for banded matrices.
//!
//! Grid operators in row-major node order have bandwidth `n` (5-point stencil)
//! or `2n` (its normal product), so band storage is a compact sparse direct
//! factorization for the grid sizes used here.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// LU factorization with partial pivoting of a complex band matrix,
/// `A = P L U`, stored LAPACK style (column major, `2kl + ku + 1` rows).
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    kv: usize,
    ldab: usize,
    ab: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols(), "band LU needs a square matrix");
        let n = a.nrows();
        let (kl, ku) = a.bandwidths();
        let kv = kl + ku;
        let ldab = kl + kv + 1;
        let mut lu = Self {
            n,
            kl,
            kv,
            ldab,
            ab: vec![ZERO; ldab * n],
            ipiv: vec![0; n],
        };
        for r in 0..n {
            for (c, v) in a.row(r) {
                let k = lu.at(r, c);
                lu.ab[k] = v;
            }
        }
        lu.factor_in_place(ku)?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        self.kv + i + j * self.ldab - j
    }

    fn factor_in_place(&mut self, ku: usize) -> Result<()> {
        let n = self.n;
        let mut ju = 0usize;
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            let col0 = self.at(j, j);
            let mut jp = 0;
            let mut best = self.ab[col0].norm();
            for r in 1..=km {
                let v = self.ab[col0 + r].norm();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            self.ipiv[j] = j + jp;
            if !(best > 0.0 && best.is_finite()) {
                return Err(Error::Singular { pivot: j });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.at(j, c);
                    let b = self.at(j + jp, c);
                    self.ab.swap(a, b);
                }
            }
            let inv = 1.0 / self.ab[col0];
            for r in 1..=km {
                self.ab[col0 + r] *= inv;
            }
            for c in j + 1..=ju {
                let top = self.at(j, c);
                let t = self.ab[top];
                if t == ZERO {
                    continue;
                }
                for r in 1..=km {
                    let l = self.ab[col0 + r];
                    self.ab[top + r] -= l * t;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != ZERO {
                let col0 = self.at(j, j);
                for r in 1..=km {
                    b[j + r] -= self.ab[col0 + r] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[self.at(j, j)];
            let t = b[j];
            if t == ZERO {
                continue;
            }
            let lo = j.saturating_sub(self.kv);
            for i in lo..j {
                b[i] -= self.ab[self.at(i, j)] * t;
            }
        }
    }

    /// Solves `Aᴴ x = b` in place.
    pub fn solve_adjoint_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for j in 0..n {
            let lo = j.saturating_sub(self.kv);
            let mut s = b[j];
            for i in lo..j {
                s -= self.ab[self.at(i, j)].conj() * b[i];
            }
            b[j] = s / self.ab[self.at(j, j)].conj();
        }
        for j in (0..n.saturating_sub(1)).rev() {
            let km = self.kl.min(n - 1 - j);
            let col0 = self.at(j, j);
            let mut s = b[j];
            for r in 1..=km {
                s -= self.ab[col0 + r].conj() * b[j + r];
            }
            b[j] = s;
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
        }
    }
}

/// Symmetric band matrix (lower band stored row major) and its Cholesky
/// factor once [`SymBand::cholesky`] has run.
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn pos(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + self.bw + j - i
    }

    /// Adds `v` to entry `(i, j)`, `j ≤ i ≤ j + bw`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && i - j <= self.bw);
        let p = self.pos(i, j);
        self.data[p] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.pos(i, j)]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[self.pos(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.pos(i, i)] * x[i];
        }
        y
    }

    /// In-place Cholesky factorization `A = L Lᵀ`.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let w = self.bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let len = j - lo;
                let ri = self.pos(i, lo);
                let rj = self.pos(j, lo);
                let s = self.data[self.pos(i, j)] - dot(&self.data[ri..ri + len], &self.data[rj..rj + len]);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i });
                    }
                    self.data[i * w + self.bw] = s.sqrt();
                } else {
                    let d = self.data[j * w + self.bw];
                    let p = self.pos(i, j);
                    self.data[p] = s / d;
                }
            }
        }
        Ok(BandCholesky { l: self })
    }
}

/// Four-way unrolled dot product with a fixed summation order.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    l: SymBand,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.l;
        let n = l.n;
        let bw = l.bw;
        assert_eq!(b.len(), n);
        let mut z = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let ri = l.pos(i, lo);
            let s = z[i] - dot(&l.data[ri..ri + (i - lo)], &z[lo..i]);
            z[i] = s / l.data[l.pos(i, i)];
        }
        for i in (0..n).rev() {
            let xi = z[i] / l.data[l.pos(i, i)];
            z[i] = xi;
            let lo = i.saturating_sub(bw);
            let ri = l.pos(i, lo);
            for (zk, lik) in z[lo..i].iter_mut().zip(&l.data[ri..ri + (i - lo)]) {
                *zk -= lik * xi;
            }
        }
        z
    }
}
