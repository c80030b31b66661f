//! PML-truncated Helmholtz operator and forward solver.
//!
//! The operator is the finite-difference discretization of
//! `-J⁻¹ ∇·(B ∇u) - k² n(x) u` on the interior nodes with zero Dirichlet
//! data, where each axis carries the complex stretch `α(t) = 1 + iσ(t)`,
//! `B = diag(α₂/α₁, α₁/α₂)` and `J = α₁α₂`.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::banded::BandLu;
use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::grid::GridSpec;
use crate::sparse::CsrMatrix;

/// Upper bound on the absorbing layer thickness.
pub const MAX_PML_WIDTH: f64 = 0.2;
/// Default peak absorption is `PML_STRENGTH / w`.
pub const PML_STRENGTH: f64 = 40.0;
pub const DEFAULT_PML_ORDER: u32 = 2;

/// Absorbing layer width for wavenumber `k`: one wavelength, capped at
/// [`MAX_PML_WIDTH`].
pub fn pml_width(k: f64) -> f64 {
    (2.0 * PI / k).min(MAX_PML_WIDTH)
}

/// Complex coordinate stretch sampled at nodes and half nodes of one axis
/// (both axes share the same profile).
#[derive(Debug, Clone, PartialEq)]
pub struct PmlProfile {
    sigma0: f64,
    width: f64,
    order: u32,
    /// α at `t = h·(i+1)`, `i = 0..n`.
    nodes: Vec<Complex64>,
    /// α at `t = h·(i+½)`, `i = 0..=n`.
    half_nodes: Vec<Complex64>,
}

impl PmlProfile {
    /// Profile with `σ(t) = σ0·((w−t)/w)^m` on `[0, w]`, mirrored on
    /// `[1−w, 1]` and zero in between.
    pub fn new(grid: &GridSpec, k: f64, sigma0: f64, order: u32) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "PML strength must be positive, got {sigma0}"
            )));
        }
        if !(2..=3).contains(&order) {
            return Err(Error::InvalidParameter(format!(
                "PML order must be 2 or 3, got {order}"
            )));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("wavenumber must be positive, got {k}")));
        }
        Ok(Self::sample(grid, sigma0, pml_width(k), order))
    }

    /// Default profile for `k`: quadratic, `σ0 = PML_STRENGTH / w`.
    pub fn default_for(grid: &GridSpec, k: f64) -> Result<Self> {
        Self::new(grid, k, PML_STRENGTH / pml_width(k), DEFAULT_PML_ORDER)
    }

    /// No absorption anywhere (`α ≡ 1`).
    pub fn none(grid: &GridSpec) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            sigma0: 0.0,
            width: 0.0,
            order: DEFAULT_PML_ORDER,
            nodes: vec![one; grid.n()],
            half_nodes: vec![one; grid.n() + 1],
        }
    }

    fn sample(grid: &GridSpec, sigma0: f64, width: f64, order: u32) -> Self {
        let h = grid.h();
        let mut p = Self {
            sigma0,
            width,
            order,
            nodes: Vec::new(),
            half_nodes: Vec::new(),
        };
        p.nodes = (0..grid.n()).map(|i| p.alpha(h * (i + 1) as f64)).collect();
        p.half_nodes = (0..=grid.n()).map(|i| p.alpha(h * (i as f64 + 0.5))).collect();
        p
    }

    pub fn sigma(&self, t: f64) -> f64 {
        let w = self.width;
        if w == 0.0 {
            return 0.0;
        }
        let depth = if t <= w {
            (w - t) / w
        } else if t >= 1.0 - w {
            (t - (1.0 - w)) / w
        } else {
            return 0.0;
        };
        self.sigma0 * depth.clamp(0.0, 1.0).powi(self.order as i32)
    }

    pub fn alpha(&self, t: f64) -> Complex64 {
        Complex64::new(1.0, self.sigma(t))
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn node_alphas(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn half_node_alphas(&self) -> &[Complex64] {
        &self.half_nodes
    }
}

/// Wrapper matching the operation name used throughout the docs.
pub fn pml_profile(grid: &GridSpec, k: f64, sigma0: f64, order: u32) -> Result<PmlProfile> {
    PmlProfile::new(grid, k, sigma0, order)
}

/// Discrete operator `D` together with a lazily computed factorization.
/// After construction it is immutable; solves may run concurrently.
#[derive(Debug)]
pub struct HelmholtzOperator {
    grid: GridSpec,
    k: f64,
    matrix: CsrMatrix,
    homogeneous: bool,
    lu: OnceLock<std::result::Result<BandLu, Error>>,
    normal: OnceLock<CsrMatrix>,
}

impl HelmholtzOperator {
    /// Assembles the 5-point conservative stencil: `B` at half nodes, `J`
    /// at nodes, Dirichlet neighbours dropped.
    pub fn assemble(grid: &GridSpec, profile: &PmlProfile, n_field: &RealField, k: f64) -> Result<Self> {
        if n_field.grid() != grid {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: n_field.values().len(),
            });
        }
        if profile.nodes.len() != grid.n() {
            return Err(Error::SizeMismatch {
                expected: grid.n(),
                got: profile.nodes.len(),
            });
        }
        if let Some(idx) = n_field.values().iter().position(|&v| !(v > 0.0)) {
            let (x, y) = grid.coords_unchecked(idx);
            return Err(Error::InvalidParameter(format!(
                "refraction index must be positive, found {} at ({x:.4}, {y:.4})",
                n_field.values()[idx]
            )));
        }
        let n = grid.n();
        let inv_h2 = 1.0 / (grid.h() * grid.h());
        let a = &profile.nodes;
        let ah = &profile.half_nodes;
        let mut rows = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let (i, j) = grid.ij(idx);
            let west = inv_h2 / (a[i] * ah[i]);
            let east = inv_h2 / (a[i] * ah[i + 1]);
            let south = inv_h2 / (a[j] * ah[j]);
            let north = inv_h2 / (a[j] * ah[j + 1]);
            let diag = west + east + south + north - k * k * n_field.values()[idx];
            let mut row = Vec::with_capacity(5);
            if j > 0 {
                row.push((idx - n, -south));
            }
            if i > 0 {
                row.push((idx - 1, -west));
            }
            row.push((idx, diag));
            if i + 1 < n {
                row.push((idx + 1, -east));
            }
            if j + 1 < n {
                row.push((idx + n, -north));
            }
            if row.iter().any(|(_, v)| !(v.re.is_finite() && v.im.is_finite())) {
                let (x, y) = grid.coords_unchecked(idx);
                return Err(Error::NonFiniteCoefficient { idx, x, y });
            }
            rows.push(row);
        }
        Ok(Self {
            grid: *grid,
            k,
            matrix: CsrMatrix::from_rows(grid.len(), rows),
            homogeneous: n_field.values().iter().all(|&v| v == 1.0),
            lu: OnceLock::new(),
            normal: OnceLock::new(),
        })
    }

    /// Default-profile operator for a medium and wavenumber.
    pub fn with_default_pml(grid: &GridSpec, n_field: &RealField, k: f64) -> Result<Self> {
        Self::assemble(grid, &PmlProfile::default_for(grid, k)?, n_field, k)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// True when the operator was assembled with `n ≡ 1`.
    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    fn factorization(&self) -> Result<&BandLu> {
        self.lu
            .get_or_init(|| BandLu::factor(&self.matrix))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `D Dᴴ`, computed once.
    pub fn normal_matrix(&self) -> &CsrMatrix {
        self.normal.get_or_init(|| self.matrix.mul_self_adjoint())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.grid.len() {
            return Err(Error::SizeMismatch {
                expected: self.grid.len(),
                got: len,
            });
        }
        Ok(())
    }

    /// `D u`.
    pub fn apply_slice(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(u.len())?;
        Ok(self.matrix.mul_vec(u))
    }

    /// `Dᴴ u`.
    pub fn apply_adjoint_slice(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(u.len())?;
        Ok(self.matrix.mul_vec_adjoint(u))
    }

    /// `D⁻¹ f`.
    pub fn solve_slice(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(f.len())?;
        let lu = self.factorization()?;
        let mut x = f.to_vec();
        lu.solve_in_place(&mut x);
        Ok(x)
    }

    /// `D⁻ᴴ f`.
    pub fn solve_adjoint_slice(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(f.len())?;
        let lu = self.factorization()?;
        let mut x = f.to_vec();
        lu.solve_adjoint_in_place(&mut x);
        Ok(x)
    }

    pub fn apply(&self, u: &ComplexField) -> Result<ComplexField> {
        ComplexField::new(self.grid, self.apply_slice(u.values())?)
    }

    /// Forward problem `u = V μ = D⁻¹ μ`.
    pub fn forward_solve(&self, mu: &ComplexField) -> Result<ComplexField> {
        ComplexField::new(self.grid, self.solve_slice(mu.values())?)
    }

    pub fn forward_solve_real(&self, mu: &RealField) -> Result<ComplexField> {
        self.forward_solve(&mu.to_complex())
    }

    /// Coordinate-triplet dump (`row col re im`, zero based).
    pub fn write_triplets<W: Write>(&self, out: W) -> io::Result<()> {
        self.matrix.write_triplets(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::{refraction_index, Medium};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn profile_shape() {
        let g = GridSpec::new(24).unwrap();
        let p = PmlProfile::new(&g, 6.0, 7.0, 2).unwrap();
        assert_eq!(p.width(), 0.2);
        assert_eq!(p.alpha(0.0), c(1.0, 7.0));
        assert!((p.alpha(1.0) - c(1.0, 7.0)).norm() < 1e-12);
        for t in [0.2000001, 0.3, 0.5, 0.7, 0.7999999] {
            assert_eq!(p.alpha(t), c(1.0, 0.0));
        }
        assert!((p.sigma(0.1) - 7.0 * 0.25).abs() < 1e-14);
        // continuity at the layer edge and non-negativity
        assert!(p.sigma(0.2 - 1e-9) < 1e-12);
        for s in 0..=1000 {
            assert!(p.sigma(s as f64 / 1000.0) >= 0.0);
        }
        let cubic = PmlProfile::new(&g, 40.0, 1.0, 3).unwrap();
        let w = cubic.width();
        assert!((cubic.sigma(1.0 - 0.05) - (1.0 - 0.05 / w).powi(3)).abs() < 1e-12);
        assert!((pml_width(40.0) - 2.0 * PI / 40.0).abs() < 1e-15);
    }

    #[test]
    fn profile_rejects_bad_parameters() {
        let g = GridSpec::new(10).unwrap();
        assert!(PmlProfile::new(&g, 6.0, 0.0, 2).is_err());
        assert!(PmlProfile::new(&g, 6.0, 1.0, 4).is_err());
    }

    fn plain_operator(n: usize, k: f64) -> HelmholtzOperator {
        let g = GridSpec::new(n).unwrap();
        let nf = refraction_index(&g, Medium::Homogeneous);
        HelmholtzOperator::assemble(&g, &PmlProfile::none(&g), &nf, k).unwrap()
    }

    #[test]
    fn classical_stencil_without_pml() {
        let op = plain_operator(9, 3.0);
        let g = *op.grid();
        let h2 = g.h() * g.h();
        let center = g.index(4, 4);
        let m = op.matrix();
        assert!((m.get(center, center) - c(4.0 / h2 - 9.0, 0.0)).norm() < 1e-10);
        for nb in [center - 1, center + 1, center - 9, center + 9] {
            assert!((m.get(center, nb) - c(-1.0 / h2, 0.0)).norm() < 1e-10);
        }
        for r in 0..g.len() {
            assert!(m.row(r).count() <= 5);
            for (col, v) in m.row(r) {
                assert!((v - m.get(col, r)).norm() <= 1e-12 * v.norm());
            }
        }
    }

    #[test]
    fn interior_rows_are_real_with_pml() {
        let g = GridSpec::new(24).unwrap();
        let nf = refraction_index(&g, Medium::Homogeneous);
        let p = PmlProfile::default_for(&g, 6.0).unwrap();
        let op = HelmholtzOperator::assemble(&g, &p, &nf, 6.0).unwrap();
        for (idx, x, y) in g.nodes() {
            let deep = |t: f64| t > 0.2 + g.h() && t < 0.8 - g.h();
            if deep(x) && deep(y) {
                assert!(op.matrix().row(idx).all(|(_, v)| v.im == 0.0));
            }
            assert!(op.matrix().row(idx).count() <= 5);
        }
    }

    #[test]
    fn manufactured_solution_second_order() {
        let k = 2.0;
        let defect = |n: usize| {
            let op = plain_operator(n, k);
            let g = *op.grid();
            let u: Vec<Complex64> = g
                .nodes()
                .map(|(_, x, y)| c((PI * x).sin() * (PI * y).sin(), 0.0))
                .collect();
            let f: Vec<Complex64> = u.iter().map(|v| v * (2.0 * PI * PI - k * k)).collect();
            let du = op.apply_slice(&u).unwrap();
            du.iter().zip(&f).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        };
        let (n1, n2) = (15, 31); // h = 1/16, 1/32
        let order = (defect(n1) / defect(n2)).log2();
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn solve_apply_round_trip() {
        let g = GridSpec::new(20).unwrap();
        let nf = refraction_index(&g, Medium::Inhomogeneous);
        let op = HelmholtzOperator::with_default_pml(&g, &nf, 8.0).unwrap();
        let mu: Vec<Complex64> = (0..g.len())
            .map(|i| c((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let u = op.solve_slice(&mu).unwrap();
        let back = op.apply_slice(&u).unwrap();
        let err = crate::field::norm2(&back.iter().zip(&mu).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(err <= 1e-10 * crate::field::norm2(&mu));

        let w = op.solve_adjoint_slice(&mu).unwrap();
        let back = op.apply_adjoint_slice(&w).unwrap();
        let err = crate::field::norm2(&back.iter().zip(&mu).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(err <= 1e-10 * crate::field::norm2(&mu));
    }

    #[test]
    fn zero_source_and_size_errors() {
        let op = plain_operator(8, 2.0);
        let z = ComplexField::zeros(*op.grid());
        assert!(op.forward_solve(&z).unwrap().values().iter().all(|v| *v == c(0.0, 0.0)));
        assert!(op.apply(&z).unwrap().values().iter().all(|v| *v == c(0.0, 0.0)));
        assert!(matches!(
            op.apply_slice(&[c(0.0, 0.0); 3]),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(matches!(
            op.solve_slice(&[c(0.0, 0.0); 3]),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn apply_on_unit_vector_gives_column() {
        let g = GridSpec::new(10).unwrap();
        let nf = refraction_index(&g, Medium::Homogeneous);
        let op = HelmholtzOperator::with_default_pml(&g, &nf, 6.0).unwrap();
        for j in [0, 13, 55, 99] {
            let mut e = vec![c(0.0, 0.0); g.len()];
            e[j] = c(1.0, 0.0);
            let col = op.apply_slice(&e).unwrap();
            for (r, v) in col.iter().enumerate() {
                assert_eq!(*v, op.matrix().get(r, j));
            }
        }
    }

    #[test]
    fn rejects_nonpositive_index() {
        let g = GridSpec::new(8).unwrap();
        let nf = RealField::from_fn(g, |x, _| if x > 0.5 { 0.0 } else { 1.0 });
        assert!(HelmholtzOperator::assemble(&g, &PmlProfile::none(&g), &nf, 3.0).is_err());
    }
}
