//! Real (re, im) block form of complex fields and operators.
//!
//! A complex field `z` of length N becomes the stacked real vector
//! `[Re z; Im z]` of length 2N, and a complex matrix `A = A_R + i A_I`
//! acts as `[[A_R, -A_I], [A_I, A_R]]`. The block matrices are never
//! formed: every block action goes through one complex operation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::banded::SymBand;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::GridSpec;
use crate::helmholtz::HelmholtzOperator;
use crate::ssn::PredualOperator;

/// Stacked `(re, im)` vector of length 2N.
#[derive(Debug, Clone, PartialEq)]
pub struct RealBlockVec {
    grid: GridSpec,
    data: Vec<f64>,
}

impl RealBlockVec {
    pub fn new(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != 2 * grid.len() {
            return Err(Error::SizeMismatch {
                expected: 2 * grid.len(),
                got: data.len(),
            });
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            data: vec![0.0; 2 * grid.len()],
        }
    }

    pub fn from_parts(grid: GridSpec, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != grid.len() || im.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: re.len().max(im.len()),
            });
        }
        let mut data = Vec::with_capacity(2 * grid.len());
        data.extend_from_slice(re);
        data.extend_from_slice(im);
        Ok(Self { grid, data })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn re(&self) -> &[f64] {
        &self.data[..self.grid.len()]
    }

    pub fn im(&self) -> &[f64] {
        &self.data[self.grid.len()..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn dot(&self, other: &RealBlockVec) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.data)
    }
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn to_block(z: &ComplexField) -> RealBlockVec {
    RealBlockVec {
        grid: *z.grid(),
        data: stack(z.values()),
    }
}

pub fn from_block(v: &RealBlockVec) -> ComplexField {
    ComplexField::new(v.grid, unstack(&v.data)).expect("block vector has consistent length")
}

fn stack(z: &[Complex64]) -> Vec<f64> {
    z.iter().map(|c| c.re).chain(z.iter().map(|c| c.im)).collect()
}

fn unstack(v: &[f64]) -> Vec<Complex64> {
    let n = v.len() / 2;
    v[..n]
        .iter()
        .zip(&v[n..])
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect()
}

fn check_grid(op: &HelmholtzOperator, v: &RealBlockVec) -> Result<()> {
    if v.grid != *op.grid() {
        return Err(Error::SizeMismatch {
            expected: 2 * op.grid().len(),
            got: v.data.len(),
        });
    }
    Ok(())
}

/// Block action of `D`.
pub fn apply_d_block(op: &HelmholtzOperator, v: &RealBlockVec) -> Result<RealBlockVec> {
    check_grid(op, v)?;
    BlockOperator::new(op)
        .apply_d(&v.data)
        .map(|data| RealBlockVec { grid: v.grid, data })
}

/// Block action of `D*`, the transpose of the real block matrix.
pub fn apply_dstar_block(op: &HelmholtzOperator, v: &RealBlockVec) -> Result<RealBlockVec> {
    check_grid(op, v)?;
    BlockOperator::new(op)
        .apply_dt(&v.data)
        .map(|data| RealBlockVec { grid: v.grid, data })
}

/// `D D* v`.
pub fn apply_ddstar(op: &HelmholtzOperator, v: &RealBlockVec) -> Result<RealBlockVec> {
    apply_d_block(op, &apply_dstar_block(op, v)?)
}

/// `V* v = (D⁻¹)* v`, one adjoint backsolve.
pub fn apply_vstar(op: &HelmholtzOperator, v: &RealBlockVec) -> Result<RealBlockVec> {
    check_grid(op, v)?;
    BlockOperator::new(op)
        .apply_vt(&v.data)
        .map(|data| RealBlockVec { grid: v.grid, data })
}

/// The Helmholtz operator seen as a real 2N×2N map on stacked vectors.
#[derive(Debug, Clone, Copy)]
pub struct BlockOperator<'a> {
    op: &'a HelmholtzOperator,
}

impl<'a> BlockOperator<'a> {
    pub fn new(op: &'a HelmholtzOperator) -> Self {
        Self { op }
    }

    pub fn helmholtz(&self) -> &HelmholtzOperator {
        self.op
    }
}

impl PredualOperator for BlockOperator<'_> {
    fn dim(&self) -> usize {
        2 * self.op.grid().len()
    }

    fn apply_d(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(stack(&self.op.apply_slice(&unstack(x))?))
    }

    fn apply_dt(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(stack(&self.op.apply_adjoint_slice(&unstack(x))?))
    }

    fn apply_vt(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(stack(&self.op.solve_adjoint_slice(&unstack(x))?))
    }

    fn normal_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.op.grid().len();
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge { n, limit: DENSE_LIMIT });
        }
        let m = self.op.normal_matrix();
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        for p in 0..n {
            for (q, v) in m.row(p) {
                out[(p, q)] = v.re;
                out[(p, q + n)] = -v.im;
                out[(p + n, q)] = v.im;
                out[(p + n, q + n)] = v.re;
            }
        }
        Ok(out)
    }

    fn normal_diagonal(&self) -> Result<Vec<f64>> {
        let m = self.op.matrix();
        let n = self.op.grid().len();
        let d: Vec<f64> = (0..n).map(|p| m.row(p).map(|(_, v)| v.norm_sqr()).sum()).collect();
        Ok(d.iter().chain(d.iter()).copied().collect())
    }

    /// Interleaves `(re, im)` per node so the band of `D Dᴴ` (width `2n`
    /// in node order) becomes a real band of width `4n + 1`.
    fn normal_banded(&self) -> Option<(SymBand, Vec<usize>)> {
        let n = self.op.grid().len();
        let m = self.op.normal_matrix();
        let (kl, _) = m.bandwidths();
        let mut band = SymBand::zeros(2 * n, 2 * kl + 1);
        for p in 0..n {
            for (q, v) in m.row(p) {
                if q > p {
                    continue;
                }
                let (r, c) = (2 * p, 2 * q);
                band.add(r, c, v.re);
                band.add(r + 1, c + 1, v.re);
                band.add(r + 1, c, v.im);
                if q < p {
                    band.add(r, c + 1, -v.im);
                }
            }
        }
        let perm = (0..n).map(|p| 2 * p).chain((0..n).map(|p| 2 * p + 1)).collect();
        Some((band, perm))
    }
}

impl BlockOperator<'_> {
    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::SizeMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Largest N for which dense matrices are formed.
pub const DENSE_LIMIT: usize = 4096;

/// Invertibility diagnostics of a dense real matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct InvertibilityReport {
    pub smallest_singular_value: f64,
    pub largest_singular_value: f64,
    pub condition_estimate: f64,
}

impl InvertibilityReport {
    pub fn is_invertible(&self) -> bool {
        self.smallest_singular_value > 0.0 && self.condition_estimate.is_finite() && self.condition_estimate < 1e14
    }
}

/// Real-part operator `L₁ = Re(D⁻¹)` acting on real sources, with its
/// inverse playing the role of `D` in the real-data predual problem.
#[derive(Debug, Clone)]
pub struct RealPartOperator {
    grid: GridSpec,
    l1: DMatrix<f64>,
    inverse: DMatrix<f64>,
    report: InvertibilityReport,
}

impl RealPartOperator {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `L₁` itself.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l1
    }

    pub fn report(&self) -> &InvertibilityReport {
        &self.report
    }

    /// `L₁ μ` for a real source.
    pub fn apply(&self, mu: &[f64]) -> Vec<f64> {
        (&self.l1 * nalgebra::DVector::from_column_slice(mu))
            .as_slice()
            .to_vec()
    }
}

/// Forms `L₁ = Re(D⁻¹)` column by column. Only meaningful for `n ≡ 1`,
/// so inhomogeneous operators are refused unless `allow_inhomogeneous`.
pub fn real_part_operator(op: &HelmholtzOperator, allow_inhomogeneous: bool) -> Result<RealPartOperator> {
    let n = op.grid().len();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge { n, limit: DENSE_LIMIT });
    }
    if !op.is_homogeneous() && !allow_inhomogeneous {
        return Err(Error::Unsupported(
            "real-part reconstruction is only supported for a homogeneous medium".into(),
        ));
    }
    let mut l1 = DMatrix::zeros(n, n);
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = Complex64::new(1.0, 0.0);
        let col = op.solve_slice(&e)?;
        e[j] = Complex64::new(0.0, 0.0);
        for (i, v) in col.iter().enumerate() {
            l1[(i, j)] = v.re;
        }
    }
    let sv = l1.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let report = InvertibilityReport {
        smallest_singular_value: smin,
        largest_singular_value: smax,
        condition_estimate: if smin > 0.0 { smax / smin } else { f64::INFINITY },
    };
    if !report.is_invertible() {
        return Err(Error::Singular { pivot: 0 });
    }
    let inverse = l1.clone().lu().try_inverse().ok_or(Error::Singular { pivot: 0 })?;
    Ok(RealPartOperator {
        grid: *op.grid(),
        l1,
        inverse,
        report,
    })
}

impl PredualOperator for RealPartOperator {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn apply_d(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok((&self.inverse * nalgebra::DVector::from_column_slice(x))
            .as_slice()
            .to_vec())
    }

    fn apply_dt(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok((self.inverse.tr_mul(&nalgebra::DVector::from_column_slice(x)))
            .as_slice()
            .to_vec())
    }

    fn apply_vt(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok((self.l1.tr_mul(&nalgebra::DVector::from_column_slice(x)))
            .as_slice()
            .to_vec())
    }

    fn normal_dense(&self) -> Result<DMatrix<f64>> {
        Ok(&self.inverse * self.inverse.transpose())
    }
}

impl RealPartOperator {
    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.grid.len() {
            return Err(Error::SizeMismatch {
                expected: self.grid.len(),
                got: x.len(),
            });
        }
        Ok(())
    }
}
