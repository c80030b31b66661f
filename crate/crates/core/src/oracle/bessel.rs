//! Bessel functions of order 0 and 1 for the free-space Green's function.
//!
//! Power series up to [`SERIES_CUTOFF`], Hankel's asymptotic expansion
//! beyond. Absolute accuracy is about 1e-8 near the switch and better
//! elsewhere, which is plenty for checking a finite-difference solver.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const SERIES_CUTOFF: f64 = 8.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Terms of `Σ (−1)^k (x²/4)^k / (k! (k+ν)!)` with their index, until
/// they drop below machine precision relative to the running sum.
fn series_terms(x: f64, nu: u32) -> impl Iterator<Item = (u32, f64)> {
    let q = x * x / 4.0;
    let mut term = 1.0 / (1..=nu).map(f64::from).product::<f64>();
    let mut k = 0u32;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = (k, term);
        k += 1;
        term *= -q / (f64::from(k) * f64::from(k + nu));
        if term.abs() < 1e-18 && k > 2 {
            done = true;
        }
        Some(out)
    })
}

fn harmonic(k: u32) -> f64 {
    (1..=k).map(|j| 1.0 / f64::from(j)).sum()
}

pub fn j0_series(x: f64) -> f64 {
    series_terms(x, 0).map(|(_, t)| t).sum()
}

pub fn j1_series(x: f64) -> f64 {
    0.5 * x * series_terms(x, 1).map(|(_, t)| t).sum::<f64>()
}

pub fn y0_series(x: f64) -> f64 {
    let tail: f64 = series_terms(x, 0).map(|(k, t)| -t * harmonic(k)).sum();
    2.0 / PI * (((0.5 * x).ln() + EULER_GAMMA) * j0_series(x) + tail)
}

pub fn y1_series(x: f64) -> f64 {
    let tail: f64 = series_terms(x, 1)
        .map(|(k, t)| t * (harmonic(k) + harmonic(k + 1) - 2.0 * EULER_GAMMA))
        .sum();
    2.0 / PI * (0.5 * x).ln() * j1_series(x) - 2.0 / (PI * x) - 0.5 * x / PI * tail
}

/// `(J_ν(x), Y_ν(x))` from Hankel's expansion, truncated at the smallest term.
pub fn asymptotic(x: f64, nu: u32) -> (f64, f64) {
    let mu = 4.0 * f64::from(nu * nu);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    for k in 1..200u32 {
        let next = term * (mu - f64::from(2 * k - 1).powi(2)) / (f64::from(k) * 8.0 * x);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        term = next;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * f64::from(nu) + 0.25) * PI;
    let amp = (2.0 / (PI * x)).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

pub fn j0(x: f64) -> f64 {
    if x.abs() <= SERIES_CUTOFF {
        j0_series(x)
    } else {
        asymptotic(x.abs(), 0).0
    }
}

pub fn j1(x: f64) -> f64 {
    if x.abs() <= SERIES_CUTOFF {
        j1_series(x)
    } else {
        x.signum() * asymptotic(x.abs(), 1).0
    }
}

/// `Y₀` for `x > 0`.
pub fn y0(x: f64) -> f64 {
    if x <= SERIES_CUTOFF {
        y0_series(x)
    } else {
        asymptotic(x, 0).1
    }
}

/// `Y₁` for `x > 0`.
pub fn y1(x: f64) -> f64 {
    if x <= SERIES_CUTOFF {
        y1_series(x)
    } else {
        asymptotic(x, 1).1
    }
}

/// Hankel function `H₀⁽¹⁾(x) = J₀(x) + i Y₀(x)`.
pub fn hankel_h0(x: f64) -> Result<Complex64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!("Hankel function needs x > 0, got {x}")));
    }
    Ok(Complex64::new(j0(x), y0(x)))
}

/// Outgoing 2-D fundamental solution `(i/4) H₀⁽¹⁾(k r)`.
pub fn fundamental_solution(k: f64, r: f64) -> Result<Complex64> {
    Ok(Complex64::new(0.0, 0.25) * hankel_h0(k * r)?)
}
