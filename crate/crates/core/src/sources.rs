//! Benchmark sources, media and synthetic measurements.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::grid::GridSpec;

/// Amplitude of every benchmark peak.
pub const PEAK_AMPLITUDE: f64 = 1000.0;
/// Inverse squared width of every benchmark peak.
pub const PEAK_WIDTH: f64 = 3000.0;
/// Relative noise level of the benchmark data.
pub const NOISE_LEVEL: f64 = 0.01;

/// A single signed Gaussian peak `sign · a · exp(-b |x - center|²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakSpec {
    pub center: (f64, f64),
    pub sign: f64,
}

impl PeakSpec {
    pub fn new(x: f64, y: f64, sign: f64) -> Result<Self> {
        let inside = |t: f64| t > 0.0 && t < 1.0;
        if !inside(x) || !inside(y) {
            return Err(Error::InvalidParameter(format!(
                "peak center ({x}, {y}) is not inside the unit square"
            )));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::InvalidParameter(format!(
                "peak sign must be +1 or -1, got {sign}"
            )));
        }
        Ok(Self { center: (x, y), sign })
    }

    const fn at(x: f64, y: f64, sign: f64) -> Self {
        Self { center: (x, y), sign }
    }
}

/// Sum of signed Gaussian peaks sampled at the grid nodes.
pub fn gaussian_peak_source(peaks: &[PeakSpec], a: f64, b: f64, grid: &GridSpec) -> Result<RealField> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "peak amplitude and width must be positive (a = {a}, b = {b})"
        )));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    Ok(RealField::from_fn(*grid, |x, y| {
        peaks
            .iter()
            .map(|p| {
                let (cx, cy) = p.center;
                p.sign * a * (-b * ((x - cx).powi(2) + (y - cy).powi(2))).exp()
            })
            .sum()
    }))
}

/// Background medium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Medium {
    Homogeneous,
    Inhomogeneous,
}

impl FromStr for Medium {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homogeneous" => Ok(Self::Homogeneous),
            "inhomogeneous" => Ok(Self::Inhomogeneous),
            other => Err(Error::InvalidParameter(format!(
                "unknown medium {other:?}; valid: homogeneous, inhomogeneous"
            ))),
        }
    }
}

/// Wave speed of the layered test medium.
fn layered_speed(x: f64, y: f64) -> f64 {
    let mut c = 1.0;
    if x > 0.3 {
        c += 10.0;
    }
    if y < 0.3 {
        c += 20.0;
    }
    c
}

/// Refraction index `n = 1/c²`; identically one for the homogeneous medium.
pub fn refraction_index(grid: &GridSpec, medium: Medium) -> RealField {
    match medium {
        Medium::Homogeneous => RealField::from_fn(*grid, |_, _| 1.0),
        Medium::Inhomogeneous => RealField::from_fn(*grid, |x, y| layered_speed(x, y).powi(-2)),
    }
}

/// The three benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BuiltinExample {
    #[serde(rename = "peaks4")]
    Peaks4,
    #[serde(rename = "peaks9")]
    Peaks9,
    #[serde(rename = "peaks7_inhomo")]
    Peaks7Inhomo,
}

const NEG: f64 = -1.0;
const POS: f64 = 1.0;

const PEAKS4: [PeakSpec; 4] = [
    PeakSpec::at(0.25, 0.25, NEG),
    PeakSpec::at(0.75, 0.25, NEG),
    PeakSpec::at(0.5, 0.25, NEG),
    PeakSpec::at(0.5, 0.75, POS),
];

const PEAKS9: [PeakSpec; 9] = [
    PeakSpec::at(0.25, 0.25, NEG),
    PeakSpec::at(0.75, 0.75, NEG),
    PeakSpec::at(0.5, 0.75, NEG),
    PeakSpec::at(0.75, 0.5, POS),
    PeakSpec::at(0.25, 0.5, POS),
    PeakSpec::at(0.25, 0.75, POS),
    PeakSpec::at(0.75, 0.25, NEG),
    PeakSpec::at(0.5, 0.25, NEG),
    PeakSpec::at(0.5, 0.5, POS),
];

const PEAKS7: [PeakSpec; 7] = [
    PeakSpec::at(0.25, 0.25, NEG),
    PeakSpec::at(0.75, 0.75, NEG),
    PeakSpec::at(0.25, 0.5, POS),
    PeakSpec::at(0.5, 0.75, NEG),
    PeakSpec::at(0.75, 0.25, NEG),
    PeakSpec::at(0.25, 0.75, POS),
    PeakSpec::at(0.5, 0.5, POS),
];

impl BuiltinExample {
    pub const ALL: [BuiltinExample; 3] = [Self::Peaks4, Self::Peaks9, Self::Peaks7Inhomo];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Peaks4 => "peaks4",
            Self::Peaks9 => "peaks9",
            Self::Peaks7Inhomo => "peaks7_inhomo",
        }
    }

    pub fn peaks(&self) -> &'static [PeakSpec] {
        match self {
            Self::Peaks4 => &PEAKS4,
            Self::Peaks9 => &PEAKS9,
            Self::Peaks7Inhomo => &PEAKS7,
        }
    }

    pub fn wavenumber(&self) -> f64 {
        match self {
            Self::Peaks4 => 6.0,
            Self::Peaks9 => 24.0,
            Self::Peaks7Inhomo => 12.0,
        }
    }

    pub fn medium(&self) -> Medium {
        match self {
            Self::Peaks7Inhomo => Medium::Inhomogeneous,
            _ => Medium::Homogeneous,
        }
    }

    pub fn noise_level(&self) -> f64 {
        NOISE_LEVEL
    }

    pub fn valid_names() -> String {
        Self::ALL.iter().map(|e| e.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for BuiltinExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinExample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownExample {
                name: s.to_string(),
                valid: Self::valid_names(),
            })
    }
}

/// Everything needed to synthesize data for one benchmark.
#[derive(Debug, Clone)]
pub struct ExampleSetup {
    pub source: RealField,
    pub n_field: RealField,
    pub k: f64,
    pub noise_level: f64,
}

pub fn builtin_example(example: BuiltinExample, grid: &GridSpec) -> Result<ExampleSetup> {
    Ok(ExampleSetup {
        source: gaussian_peak_source(example.peaks(), PEAK_AMPLITUDE, PEAK_WIDTH, grid)?,
        n_field: refraction_index(grid, example.medium()),
        k: example.wavenumber(),
        noise_level: example.noise_level(),
    })
}

/// Adds complex Gaussian noise scaled to relative ℓ2 level `eps`:
/// the returned field differs from `u` by exactly `eps·‖u‖₂`.
pub fn add_noise(u: &ComplexField, eps: f64, seed: u64) -> Result<ComplexField> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise level must be non-negative, got {eps}"
        )));
    }
    if eps == 0.0 {
        return Ok(u.clone());
    }
    let unorm = u.norm2();
    if unorm == 0.0 {
        log::warn!("noise requested for an all-zero field; returning it unchanged");
        return Ok(u.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<Complex64> = (0..u.values().len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let scale = eps * unorm / crate::field::norm2(&g);
    let values = u.values().iter().zip(&g).map(|(&z, &n)| z + n * scale).collect();
    ComplexField::new(*u.grid(), values)
}
