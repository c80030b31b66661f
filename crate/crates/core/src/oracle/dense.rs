//! Brute-force minimization of the Moreau–Yosida predual objective on tiny
//! grids, by exact cyclic coordinate descent on a dense matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::helmholtz::HelmholtzOperator;
use crate::realblock::{to_block, RealBlockVec};

/// Largest node count accepted by the dense oracle.
pub const ORACLE_MAX_NODES: usize = 64;

const MAX_SWEEPS: usize = 2_000_000;

/// Dense instance: complex operator `D`, block data `U`, penalty parameters.
#[derive(Debug, Clone)]
pub struct DenseProblem {
    /// Rows of the real block matrix of `D`.
    rows: Vec<Vec<f64>>,
    u: RealBlockVec,
    pub gamma: f64,
    pub alpha: f64,
}

impl DenseProblem {
    pub fn new(d: &DMatrix<Complex64>, u: RealBlockVec, gamma: f64, alpha: f64) -> Result<Self> {
        let n = d.nrows();
        if n > ORACLE_MAX_NODES {
            return Err(Error::TooLarge {
                n,
                limit: ORACLE_MAX_NODES,
            });
        }
        if d.ncols() != n || u.as_slice().len() != 2 * n {
            return Err(Error::SizeMismatch {
                expected: 2 * n,
                got: u.as_slice().len(),
            });
        }
        if !(gamma > 0.0 && alpha > 0.0) {
            return Err(Error::InvalidParameter("gamma and alpha must be positive".into()));
        }
        let svd = d.clone().svd(false, false);
        let (smin, smax) = (svd.singular_values.min(), svd.singular_values.max());
        if !(smin > 0.0 && (smax / smin).is_finite()) {
            return Err(Error::Singular { pivot: 0 });
        }
        // [[Re D, -Im D], [Im D, Re D]]
        let rows = (0..2 * n)
            .map(|r| {
                (0..2 * n)
                    .map(|c| {
                        let z = d[(r % n, c % n)];
                        match (r < n, c < n) {
                            (true, true) | (false, false) => z.re,
                            (true, false) => -z.im,
                            (false, true) => z.im,
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { rows, u, gamma, alpha })
    }

    /// Uses the assembled matrix of `op`; measured data `u` is complex.
    pub fn from_operator(op: &HelmholtzOperator, u: &ComplexField, gamma: f64, alpha: f64) -> Result<Self> {
        Self::new(&op.matrix().to_dense(), to_block(u), gamma, alpha)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `D*y + U`.
    fn residual_vector(&self, y: &[f64]) -> Vec<f64> {
        let mut r = self.u.as_slice().to_vec();
        for (row, &yi) in self.rows.iter().zip(y) {
            if yi != 0.0 {
                for (rj, bij) in r.iter_mut().zip(row) {
                    *rj += yi * bij;
                }
            }
        }
        r
    }

    fn penalty_slope(&self, v: f64) -> f64 {
        (self.gamma * (v - self.alpha)).max(0.0) + (self.gamma * (v + self.alpha)).min(0.0)
    }

    pub fn objective(&self, y: &[f64]) -> f64 {
        let r = self.residual_vector(y);
        let fit =
            0.5 * r.iter().map(|v| v * v).sum::<f64>() - 0.5 * self.u.as_slice().iter().map(|v| v * v).sum::<f64>();
        let pen: f64 = y
            .iter()
            .map(|&v| self.penalty_slope(v).powi(2) / (2.0 * self.gamma))
            .sum();
        fit + pen
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let r = self.residual_vector(y);
        self.rows
            .iter()
            .zip(y)
            .map(|(row, &v)| dot(row, &r) + self.penalty_slope(v))
            .collect()
    }

    /// Gradient size below which the minimizer is accepted: 1e-10, or the
    /// rounding floor of the largest terms when that is bigger.
    pub fn gradient_tolerance(&self) -> f64 {
        let bu = self.gradient(&vec![0.0; self.dim()]);
        let scale = bu.iter().fold(self.gamma * self.alpha, |m, v| m.max(v.abs()));
        1e-10f64.max(1e-13 * scale)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizer of the Moreau–Yosida objective, starting from `y = 0`.
pub fn dense_my_minimize(p: &DenseProblem) -> Result<RealBlockVec> {
    dense_my_minimize_from(p, &vec![0.0; p.dim()])
}

/// Minimizer of the Moreau–Yosida objective from a given start.
///
/// Each coordinate step minimizes the objective exactly along that
/// coordinate (a convex piecewise quadratic in one variable). Stops when
/// `‖∇‖∞` drops below [`DenseProblem::gradient_tolerance`].
pub fn dense_my_minimize_from(p: &DenseProblem, y0: &[f64]) -> Result<RealBlockVec> {
    let m = p.dim();
    if y0.len() != m {
        return Err(Error::SizeMismatch {
            expected: m,
            got: y0.len(),
        });
    }
    let curv: Vec<f64> = p.rows.iter().map(|row| dot(row, row)).collect();
    let tol = p.gradient_tolerance();
    let (gamma, alpha) = (p.gamma, p.alpha);
    let mut y = y0.to_vec();
    let mut r = p.residual_vector(&y);
    let mut grad_inf = f64::INFINITY;
    for sweep in 0..MAX_SWEEPS {
        for i in 0..m {
            let row = &p.rows[i];
            let (a, c, v0) = (curv[i], dot(row, &r), y[i]);
            let free = v0 - c / a;
            let v = if free > alpha {
                (a * v0 - c + gamma * alpha) / (a + gamma)
            } else if free < -alpha {
                (a * v0 - c - gamma * alpha) / (a + gamma)
            } else {
                free
            };
            let step = v - v0;
            if step != 0.0 {
                y[i] = v;
                for (rj, bij) in r.iter_mut().zip(row) {
                    *rj += step * bij;
                }
            }
        }
        if sweep % 16 == 15 {
            // refresh to stop drift in the running residual
            r = p.residual_vector(&y);
            grad_inf = p
                .rows
                .iter()
                .zip(&y)
                .map(|(row, &v)| (dot(row, &r) + p.penalty_slope(v)).abs())
                .fold(0.0, f64::max);
            if grad_inf <= tol {
                return RealBlockVec::new(*p.u.grid(), y);
            }
        }
    }
    Err(Error::IterationCap {
        iterations: MAX_SWEEPS,
        residual: grad_inf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(seed: u64, gamma: f64, alpha: f64) -> DenseProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GridSpec::new(8).unwrap();
        // diagonally dominant so the instance is comfortably invertible
        let d = DMatrix::from_fn(64, 64, |i, j| {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if i == j {
                z + 20.0
            } else if i.abs_diff(j) <= 8 {
                z
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let u: Vec<f64> = (0..128).map(|_| rng.random_range(-1.0..1.0)).collect();
        DenseProblem::new(&d, RealBlockVec::new(g, u).unwrap(), gamma, alpha).unwrap()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let p = random_problem(4, 30.0, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-0.1..0.1)).collect();
        let g = p.gradient(&y);
        let step = 1e-6;
        for i in (0..p.dim()).step_by(7) {
            let mut a = y.clone();
            let mut b = y.clone();
            a[i] += step;
            b[i] -= step;
            let fd = (p.objective(&a) - p.objective(&b)) / (2.0 * step);
            assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1.0), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn zero_data_zero_minimizer() {
        let p = random_problem(1, 1e6, 0.1);
        let zero = DenseProblem {
            u: RealBlockVec::zeros(*p.u.grid()),
            ..p
        };
        let y = dense_my_minimize(&zero).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stopping_rule_holds() {
        let p = random_problem(2, 1e4, 0.02);
        let y = dense_my_minimize(&p).unwrap();
        let g = p.gradient(y.as_slice());
        assert!(
            g.iter().all(|v| v.abs() <= 1e-10),
            "{:e}",
            g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        );
    }

    #[test]
    fn interior_case_solves_normal_equation() {
        let mut p = random_problem(3, 1e6, 1.0);
        // large alpha: the box is inactive, so D D* y = -D U
        p.alpha = 1e3;
        let y = dense_my_minimize(&p).unwrap();
        let m = p.dim();
        let b = DMatrix::from_fn(m, m, |i, j| p.rows[i][j]);
        let bu = &b * nalgebra::DVector::from_column_slice(p.u.as_slice());
        let expect = (&b * b.transpose()).cholesky().unwrap().solve(&(-bu));
        let err = y
            .as_slice()
            .iter()
            .zip(expect.iter())
            .map(|(a, c)| (a - c).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-10, "{err:e}");
        assert!(y.norm_inf() < p.alpha);
    }

    #[test]
    fn independent_of_start() {
        let p = random_problem(4, 1e6, 0.01);
        let base = dense_my_minimize(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..3 {
            let start: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let other = dense_my_minimize_from(&p, &start).unwrap();
            let diff = base
                .as_slice()
                .iter()
                .zip(other.as_slice())
                .map(|(a, c)| (a - c).abs())
                .fold(0.0, f64::max);
            assert!(diff <= 1e-8, "{diff:e}");
        }
    }

    #[test]
    fn objective_decreases_from_start() {
        let p = random_problem(5, 1e5, 0.01);
        let y = dense_my_minimize(&p).unwrap();
        let f = p.objective(y.as_slice());
        assert!(f <= p.objective(&vec![0.0; p.dim()]));
        let mut probe = y.as_slice().to_vec();
        probe[7] += 1e-4;
        assert!(p.objective(&probe) >= f);
    }

    #[test]
    fn too_large_rejected() {
        let d = DMatrix::<Complex64>::identity(65, 65);
        let g = GridSpec::new(9).unwrap();
        let u = RealBlockVec::new(g, vec![0.0; 162]);
        assert!(u.is_ok());
        assert!(matches!(
            DenseProblem::new(&d, u.unwrap(), 1.0, 1.0),
            Err(Error::TooLarge { .. })
        ));
    }
}
