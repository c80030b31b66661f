//! Semismooth Newton method for the box-constrained predual problem
//!
//! ```text
//! min_y ½‖D*y + U‖² − ½‖U‖²   subject to |y_i| ≤ α,
//! ```
//!
//! with the constraint replaced by the Moreau–Yosida penalty
//! `(1/2γ)‖max(0, γ(y−α))‖² + (1/2γ)‖min(0, γ(y+α))‖²` and `γ` driven up
//! by continuation. The sparse source is recovered from the dual iterate as
//! `ζ = −max(0, γ(y−α)) − min(0, γ(y+α))`.
//!
//! All vectors are real. For the complex Helmholtz problem they are stacked
//! `(re, im)` blocks of length 2N (see [`crate::realblock`]); the real-part
//! variant works on length-N vectors directly.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::banded::SymBand;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::helmholtz::HelmholtzOperator;
use crate::realblock::{norm_inf, to_block, BlockOperator, RealBlockVec};

/// A real linear operator `D` with the adjoint and inverse-adjoint actions
/// the Newton method needs, plus optional assembled forms of `D D*`.
pub trait PredualOperator {
    /// Length of the dual variable `y`.
    fn dim(&self) -> usize;

    fn apply_d(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn apply_dt(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// `V* x = (D*)⁻¹ x`.
    fn apply_vt(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Dense `D D*`.
    fn normal_dense(&self) -> Result<DMatrix<f64>>;

    fn normal_diagonal(&self) -> Result<Vec<f64>> {
        Ok(self.normal_dense()?.diagonal().iter().copied().collect())
    }

    /// Banded `D D*` in a permuted ordering: entry `(i, j)` of the operator
    /// lives at `(perm[i], perm[j])` of the band.
    fn normal_banded(&self) -> Option<(SymBand, Vec<usize>)> {
        None
    }
}

/// How the Newton systems `(D D* + γχ_A) y = b` are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearMode {
    /// Sparse direct: band Cholesky of the assembled normal matrix.
    Banded,
    /// Preconditioned conjugate gradients with operator mat-vecs only.
    IterativeNormal,
    /// Dense Cholesky; small problems only.
    Dense,
}

impl std::str::FromStr for LinearMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "banded" => Ok(Self::Banded),
            "iterative_normal" => Ok(Self::IterativeNormal),
            "dense" => Ok(Self::Dense),
            other => Err(Error::InvalidParameter(format!(
                "unknown linear solver mode {other:?}; valid: banded, iterative_normal, dense"
            ))),
        }
    }
}

/// Step length rule of the inner Newton loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepControl {
    /// Always take the full Newton step.
    Full,
    /// Backtrack on the Moreau–Yosida objective when the full step does
    /// not decrease it enough. Undamped iterations can cycle between a few
    /// active sets; the objective is convex, so this cannot.
    Armijo,
    /// Full steps until an earlier active set reappears, then [`Armijo`](Self::Armijo).
    Guarded,
}

/// Parameters of the continuation loop. Defaults: `α = 1e-5` and the
/// schedule `γ = 1e5, 1e6, …, 1e10`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsnConfig {
    pub alpha: f64,
    pub gamma0: f64,
    pub gamma_factor: f64,
    pub outer_steps: usize,
    pub inner_cap: usize,
    pub lin_tol: f64,
    pub lin_mode: LinearMode,
    pub step: StepControl,
}

impl Default for SsnConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-5,
            gamma0: 1e5,
            gamma_factor: 10.0,
            outer_steps: 6,
            inner_cap: 30,
            lin_tol: 1e-10,
            lin_mode: LinearMode::Banded,
            step: StepControl::Guarded,
        }
    }
}

impl SsnConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return bad("gamma0 must be positive");
        }
        if !(self.gamma_factor > 1.0 && self.gamma_factor.is_finite()) {
            return bad("gamma_factor must exceed 1");
        }
        if self.outer_steps == 0 || self.inner_cap == 0 {
            return bad("outer_steps and inner_cap must be at least 1");
        }
        if !(self.lin_tol > 0.0 && self.lin_tol <= 1e-6) {
            return bad("lin_tol must lie in (0, 1e-6]");
        }
        Ok(())
    }

    /// `γ_i = γ0 · factor^i`, `i = 0..outer_steps`.
    pub fn gammas(&self) -> Vec<f64> {
        (0..self.outer_steps)
            .map(|i| self.gamma0 * self.gamma_factor.powi(i as i32))
            .collect()
    }
}

/// Upper and lower active sets of a dual iterate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSets {
    pub plus: Vec<bool>,
    pub minus: Vec<bool>,
}

impl ActiveSets {
    pub fn plus_count(&self) -> usize {
        self.plus.iter().filter(|&&b| b).count()
    }

    pub fn minus_count(&self) -> usize {
        self.minus.iter().filter(|&&b| b).count()
    }
}

/// `A⁺ = {y_i ≥ α}`, `A⁻ = {y_i ≤ −α}`; ties belong to the active set.
pub fn active_sets(y: &[f64], alpha: f64) -> ActiveSets {
    ActiveSets {
        plus: y.iter().map(|&v| v >= alpha).collect(),
        minus: y.iter().map(|&v| v <= -alpha).collect(),
    }
}

/// `ζ = −max(0, γ(y−α)) − min(0, γ(y+α))`.
pub fn recover_primal(y: &[f64], gamma: f64, alpha: f64) -> Vec<f64> {
    y.iter()
        .map(|&v| -(gamma * (v - alpha)).max(0.0) - (gamma * (v + alpha)).min(0.0))
        .collect()
}

/// `‖max(0, |y| − α)‖∞`.
pub fn constraint_violation(y: &[f64], alpha: f64) -> f64 {
    y.iter().fold(0.0, |m, v| m.max(v.abs() - alpha))
}

enum NormalBase {
    Dense(DMatrix<f64>),
    Banded(SymBand, Vec<usize>),
    Iterative(Vec<f64>),
}

/// Result of one inner Newton loop at fixed `γ`.
#[derive(Debug, Clone)]
pub struct InnerResult {
    pub y: Vec<f64>,
    pub iterations: usize,
    /// Active sets repeated before the cap was hit.
    pub converged: bool,
    /// Newton steps shortened by the line search.
    pub damped_steps: usize,
    pub sets: ActiveSets,
}

/// Newton machinery bound to one operator and one data vector `U`.
pub struct NewtonSolver<'a, P: PredualOperator + ?Sized> {
    op: &'a P,
    u: Vec<f64>,
    du: Vec<f64>,
    base: NormalBase,
    lin_tol: f64,
}

impl<'a, P: PredualOperator + ?Sized> NewtonSolver<'a, P> {
    pub fn new(op: &'a P, u: &[f64], mode: LinearMode, lin_tol: f64) -> Result<Self> {
        if u.len() != op.dim() {
            return Err(Error::SizeMismatch {
                expected: op.dim(),
                got: u.len(),
            });
        }
        let base = match mode {
            LinearMode::Dense => NormalBase::Dense(op.normal_dense()?),
            LinearMode::Banded => {
                let (band, perm) = op
                    .normal_banded()
                    .ok_or_else(|| Error::Unsupported("operator has no banded normal matrix".into()))?;
                NormalBase::Banded(band, perm)
            }
            LinearMode::IterativeNormal => NormalBase::Iterative(op.normal_diagonal()?),
        };
        Ok(Self {
            op,
            u: u.to_vec(),
            du: op.apply_d(u)?,
            base,
            lin_tol,
        })
    }

    /// `D U`.
    pub fn du(&self) -> &[f64] {
        &self.du
    }

    /// Optimality residual `F(y) = D(D*y + U) + max(0, γ(y−α)) + min(0, γ(y+α))`.
    pub fn residual(&self, y: &[f64], gamma: f64, alpha: f64) -> Result<Vec<f64>> {
        let ddy = self.op.apply_d(&self.op.apply_dt(y)?)?;
        Ok(ddy
            .iter()
            .zip(&self.du)
            .zip(y)
            .map(|((a, b), &v)| a + b + (gamma * (v - alpha)).max(0.0) + (gamma * (v + alpha)).min(0.0))
            .collect())
    }

    /// Solves `(D D* + γχ_A) y = −DU + γα(χ_A⁺ − χ_A⁻)`. `guess` seeds the
    /// iterative mode and is ignored by the direct ones.
    pub fn solve(&self, sets: &ActiveSets, gamma: f64, alpha: f64, guess: Option<&[f64]>) -> Result<Vec<f64>> {
        let n = self.op.dim();
        if sets.plus.len() != n || sets.minus.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: sets.plus.len(),
            });
        }
        let mut shift = vec![0.0; n];
        let mut rhs: Vec<f64> = self.du.iter().map(|v| -v).collect();
        for i in 0..n {
            if sets.plus[i] {
                shift[i] += gamma;
                rhs[i] += gamma * alpha;
            }
            if sets.minus[i] {
                shift[i] += gamma;
                rhs[i] -= gamma * alpha;
            }
        }
        match &self.base {
            NormalBase::Dense(m) => {
                let mut a = m.clone();
                for i in 0..n {
                    a[(i, i)] += shift[i];
                }
                let chol = a.cholesky().ok_or(Error::NotPositiveDefinite { pivot: 0 })?;
                Ok(chol.solve(&DVector::from_vec(rhs)).as_slice().to_vec())
            }
            NormalBase::Banded(band, perm) => {
                let mut a = band.clone();
                let mut b = vec![0.0; n];
                for i in 0..n {
                    a.add(perm[i], perm[i], shift[i]);
                    b[perm[i]] = rhs[i];
                }
                let x = a.cholesky()?.solve(&b);
                Ok(perm.iter().map(|&p| x[p]).collect())
            }
            NormalBase::Iterative(diag) => {
                let precond: Vec<f64> = diag.iter().zip(&shift).map(|(d, s)| 1.0 / (d + s)).collect();
                pcg(
                    |x| {
                        let mut out = self.op.apply_d(&self.op.apply_dt(x)?)?;
                        for ((o, s), v) in out.iter_mut().zip(&shift).zip(x) {
                            *o += s * v;
                        }
                        Ok(out)
                    },
                    &precond,
                    &rhs,
                    guess,
                    self.lin_tol,
                    (20 * n).max(1000),
                )
            }
        }
    }

    /// Change of the Moreau–Yosida objective along `y + t d`, evaluated
    /// term by term so that small decreases are not lost to cancellation.
    /// `w = D*y + U`, `z = D*d`.
    fn objective_change(&self, y: &[f64], d: &[f64], w: &[f64], z: &[f64], t: f64, gamma: f64, alpha: f64) -> f64 {
        let pen = |v: f64| 0.5 * gamma * ((v - alpha).max(0.0).powi(2) + (v + alpha).min(0.0).powi(2));
        let quad = t * dot(w, z) + 0.5 * t * t * dot(z, z);
        let jump: f64 = y.iter().zip(d).map(|(&v, &dv)| pen(v + t * dv) - pen(v)).sum();
        quad + jump
    }

    /// Backtracking from `y` towards the Newton point `target` until the
    /// Armijo condition holds. Returns the new iterate and the step length.
    fn damped_step(&self, y: &[f64], target: Vec<f64>, gamma: f64, alpha: f64) -> Result<(Vec<f64>, f64)> {
        let d: Vec<f64> = target.iter().zip(y).map(|(a, b)| a - b).collect();
        let mut w = self.op.apply_dt(y)?;
        for (wi, ui) in w.iter_mut().zip(&self.u) {
            *wi += ui;
        }
        let z = self.op.apply_dt(&d)?;
        let slope = dot(&w, &z)
            + y.iter()
                .zip(&d)
                .map(|(&v, &dv)| dv * ((gamma * (v - alpha)).max(0.0) + (gamma * (v + alpha)).min(0.0)))
                .sum::<f64>();
        if !(slope < 0.0) {
            return Ok((target, 1.0));
        }
        let mut t = 1.0;
        while t >= MIN_STEP {
            if self.objective_change(y, &d, &w, &z, t, gamma, alpha) <= ARMIJO * t * slope {
                if t == 1.0 {
                    return Ok((target, 1.0));
                }
                let next = y.iter().zip(&d).map(|(v, dv)| v + t * dv).collect();
                return Ok((next, t));
            }
            t *= 0.5;
        }
        // no measurable decrease left: the iterate is optimal to rounding
        Ok((target, 1.0))
    }

    /// Newton iterations at fixed `γ` until the active sets repeat after a
    /// full step, or `cap` solves have been made.
    pub fn inner(&self, gamma: f64, alpha: f64, y0: &[f64], cap: usize, step: StepControl) -> Result<InnerResult> {
        let mut y = y0.to_vec();
        let mut sets = active_sets(&y, alpha);
        let mut damped_steps = 0;
        let mut damping = step == StepControl::Armijo;
        let mut seen: Vec<ActiveSets> = Vec::new();
        for it in 1..=cap {
            let target = self.solve(&sets, gamma, alpha, Some(&y))?;
            let (next_y, t) = if damping {
                self.damped_step(&y, target, gamma, alpha)?
            } else {
                (target, 1.0)
            };
            if t < 1.0 {
                damped_steps += 1;
            }
            y = next_y;
            let next = active_sets(&y, alpha);
            if next == sets && t == 1.0 {
                return Ok(InnerResult {
                    y,
                    iterations: it,
                    converged: true,
                    damped_steps,
                    sets,
                });
            }
            if step == StepControl::Guarded && !damping {
                if seen.contains(&next) {
                    log::debug!("active sets cycle at gamma = {gamma:.1e}; switching to damped steps");
                    damping = true;
                }
                seen.push(std::mem::replace(&mut sets, next));
            } else {
                sets = next;
            }
        }
        Ok(InnerResult {
            y,
            iterations: cap,
            converged: false,
            damped_steps,
            sets,
        })
    }
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1.0 / 1_073_741_824.0;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients with a fixed reduction order.
fn pcg<F>(apply: F, precond: &[f64], b: &[f64], x0: Option<&[f64]>, tol: f64, cap: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let mut x = x0.map_or_else(|| vec![0.0; b.len()], <[f64]>::to_vec);
    let ax = apply(&x)?;
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    if dot(&r, &r).sqrt() <= tol * bnorm {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(precond).map(|(p, q)| p * q).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rnorm = f64::INFINITY;
    for _ in 0..cap {
        let ap = apply(&p)?;
        let step = rz / dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..z.len() {
            z[i] = r[i] * precond[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::IterationCap {
        iterations: cap,
        residual: rnorm / bnorm,
    })
}

/// One row of the continuation trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterStep {
    pub gamma: f64,
    pub inner_iters: usize,
    pub converged: bool,
    pub damped_steps: usize,
    pub residual_inf: f64,
    pub violation_inf: f64,
    pub active_plus: usize,
    pub active_minus: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SsnTrace {
    pub steps: Vec<OuterStep>,
}

impl SsnTrace {
    pub fn inner_counts(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.inner_iters).collect()
    }

    pub fn total_inner(&self) -> usize {
        self.steps.iter().map(|s| s.inner_iters).sum()
    }

    pub fn all_converged(&self) -> bool {
        self.steps.iter().all(|s| s.converged)
    }

    /// Whitespace-separated table, one line per outer step.
    pub fn write_table<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "# gamma inner_iters residual_inf active_plus active_minus converged"
        )?;
        for s in &self.steps {
            writeln!(
                out,
                "{:.6e} {} {:.6e} {} {} {}",
                s.gamma, s.inner_iters, s.residual_inf, s.active_plus, s.active_minus, s.converged
            )?;
        }
        Ok(())
    }
}

/// Output of [`ssn_continuation`].
#[derive(Debug, Clone)]
pub struct SsnOutcome {
    /// Dual solution at the final `γ`.
    pub y: Vec<f64>,
    /// Recovered primal variable.
    pub zeta: Vec<f64>,
    pub trace: SsnTrace,
    pub final_gamma: f64,
    /// `‖F(y)‖∞` at the final `γ`.
    pub final_residual: f64,
    /// Acceptance bound `10 · lin_tol · ‖DU‖∞` for the final residual.
    pub residual_bound: f64,
}

impl SsnOutcome {
    pub fn residual_ok(&self) -> bool {
        self.final_residual <= self.residual_bound
    }
}

/// Runs the full continuation: `γ_i = γ0·factor^i`, each inner loop warm
/// started from the previous solution, `y⁰ = 0`.
pub fn ssn_continuation<P: PredualOperator + ?Sized>(op: &P, u: &[f64], config: &SsnConfig) -> Result<SsnOutcome> {
    config.validate()?;
    let solver = NewtonSolver::new(op, u, config.lin_mode, config.lin_tol)?;
    let alpha = config.alpha;
    let mut y = vec![0.0; op.dim()];
    let mut trace = SsnTrace::default();
    let mut last_residual = 0.0;
    let gammas = config.gammas();
    for &gamma in &gammas {
        let inner = solver.inner(gamma, alpha, &y, config.inner_cap, config.step)?;
        if !inner.converged {
            log::warn!(
                "active sets did not settle within {} iterations at gamma = {gamma:.1e}",
                config.inner_cap
            );
        }
        y = inner.y;
        last_residual = norm_inf(&solver.residual(&y, gamma, alpha)?);
        trace.steps.push(OuterStep {
            gamma,
            inner_iters: inner.iterations,
            converged: inner.converged,
            damped_steps: inner.damped_steps,
            residual_inf: last_residual,
            violation_inf: constraint_violation(&y, alpha),
            active_plus: inner.sets.plus_count(),
            active_minus: inner.sets.minus_count(),
        });
    }
    let final_gamma = *gammas.last().expect("at least one outer step");
    Ok(SsnOutcome {
        zeta: recover_primal(&y, final_gamma, alpha),
        y,
        trace,
        final_gamma,
        final_residual: last_residual,
        residual_bound: 10.0 * config.lin_tol * norm_inf(solver.du()),
    })
}

/// `‖V* U‖∞`: for `α` at or above this value the reconstruction is zero.
pub fn alpha_bound<P: PredualOperator + ?Sized>(op: &P, u: &[f64]) -> Result<f64> {
    Ok(norm_inf(&op.apply_vt(u)?))
}

/// Sparse reconstruction of a complex-data Helmholtz problem.
#[derive(Debug, Clone)]
pub struct SparseReconstruction {
    pub y: RealBlockVec,
    pub zeta: RealBlockVec,
    /// `ζ₁ + i ζ₂`; the real part is the reported source.
    pub mu: ComplexField,
    pub outcome: SsnOutcome,
}

/// Runs [`ssn_continuation`] on measured data `u` in block form.
pub fn reconstruct(op: &HelmholtzOperator, u: &ComplexField, config: &SsnConfig) -> Result<SparseReconstruction> {
    let ublock = to_block(u);
    let outcome = ssn_continuation(&BlockOperator::new(op), ublock.as_slice(), config)?;
    let grid = *op.grid();
    let y = RealBlockVec::new(grid, outcome.y.clone())?;
    let zeta = RealBlockVec::new(grid, outcome.zeta.clone())?;
    let mu = crate::realblock::from_block(&zeta);
    Ok(SparseReconstruction { y, zeta, mu, outcome })
}

/// `α` bound for complex data.
pub fn alpha_bound_for(op: &HelmholtzOperator, u: &ComplexField) -> Result<f64> {
    alpha_bound(&BlockOperator::new(op), to_block(u).as_slice())
}
