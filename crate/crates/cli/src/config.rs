//! Experiment configuration files (TOML).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use sparsesrc::ssn::StepControl;
use sparsesrc::{BuiltinExample, GridSpec, LinearMode, Medium, PeakSpec, SsnConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Parse and type errors; the message carries line and column.
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("{0}")]
    Override(String),
    #[error("cannot serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
}

/// Which source to reconstruct.
#[derive(Debug, Clone, PartialEq)]
pub enum ExampleChoice {
    Builtin(BuiltinExample),
    Peaks(Vec<PeakSpec>),
}

impl ExampleChoice {
    pub fn name(&self) -> &str {
        match self {
            Self::Builtin(e) => e.name(),
            Self::Peaks(_) => "custom",
        }
    }

    pub fn peaks(&self) -> &[PeakSpec] {
        match self {
            Self::Builtin(e) => e.peaks(),
            Self::Peaks(p) => p,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPeak {
    x: f64,
    y: f64,
    sign: f64,
}

struct PeakSeed;

impl<'de> de::DeserializeSeed<'de> for PeakSeed {
    type Value = PeakSpec;

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<PeakSpec, D::Error> {
        let raw = RawPeak::deserialize(d)?;
        PeakSpec::new(raw.x, raw.y, raw.sign).map_err(de::Error::custom)
    }
}

impl<'de> Deserialize<'de> for ExampleChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ChoiceVisitor;

        impl<'de> Visitor<'de> for ChoiceVisitor {
            type Value = ExampleChoice;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(
                    f,
                    "a builtin example name ({}) or a list of peaks",
                    BuiltinExample::valid_names()
                )
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExampleChoice, E> {
                v.parse().map(ExampleChoice::Builtin).map_err(E::custom)
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<ExampleChoice, A::Error> {
                let mut peaks = Vec::new();
                while let Some(p) = seq.next_element_seed(PeakSeed)? {
                    peaks.push(p);
                }
                if peaks.is_empty() {
                    return Err(de::Error::custom("the peak list is empty"));
                }
                Ok(ExampleChoice::Peaks(peaks))
            }
        }

        d.deserialize_any(ChoiceVisitor)
    }
}

impl Serialize for ExampleChoice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Builtin(e) => s.serialize_str(e.name()),
            Self::Peaks(p) => s.collect_seq(p.iter().map(|p| RawPeak {
                x: p.center.0,
                y: p.center.1,
                sign: p.sign,
            })),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Ssn,
    Tikhonov,
    Both,
    SsnRealPart,
}

impl Method {
    pub fn runs_ssn(self) -> bool {
        matches!(self, Self::Ssn | Self::Both)
    }

    pub fn runs_tikhonov(self) -> bool {
        matches!(self, Self::Tikhonov | Self::Both)
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ssn" => Ok(Self::Ssn),
            "tikhonov" => Ok(Self::Tikhonov),
            "both" => Ok(Self::Both),
            "ssn_real_part" => Ok(Self::SsnRealPart),
            other => Err(format!(
                "unknown method {other:?}; valid: ssn, tikhonov, both, ssn_real_part"
            )),
        }
    }
}

/// Solver settings of the `[ssn]` table. `α` lives at the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSsn")]
pub struct SsnSection {
    pub gamma0: f64,
    pub gamma_factor: f64,
    pub outer_steps: usize,
    pub inner_cap: usize,
    pub lin_tol: f64,
    pub lin_mode: LinearMode,
    pub step: StepControl,
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSsn {
    gamma0: f64,
    gamma_factor: f64,
    outer_steps: usize,
    inner_cap: usize,
    lin_tol: f64,
    lin_mode: LinearMode,
    step: StepControl,
}

impl Default for RawSsn {
    fn default() -> Self {
        let s = SsnSection::default();
        Self {
            gamma0: s.gamma0,
            gamma_factor: s.gamma_factor,
            outer_steps: s.outer_steps,
            inner_cap: s.inner_cap,
            lin_tol: s.lin_tol,
            lin_mode: s.lin_mode,
            step: s.step,
        }
    }
}

impl TryFrom<RawSsn> for SsnSection {
    type Error = String;

    fn try_from(r: RawSsn) -> Result<Self, String> {
        let s = Self {
            gamma0: r.gamma0,
            gamma_factor: r.gamma_factor,
            outer_steps: r.outer_steps,
            inner_cap: r.inner_cap,
            lin_tol: r.lin_tol,
            lin_mode: r.lin_mode,
            step: r.step,
        };
        s.solver_config(SsnConfig::default().alpha)
            .validate()
            .map_err(|e| e.to_string())?;
        Ok(s)
    }
}

impl Default for SsnSection {
    fn default() -> Self {
        let c = SsnConfig::default();
        Self {
            gamma0: c.gamma0,
            gamma_factor: c.gamma_factor,
            outer_steps: c.outer_steps,
            inner_cap: c.inner_cap,
            lin_tol: c.lin_tol,
            lin_mode: c.lin_mode,
            step: c.step,
        }
    }
}

impl SsnSection {
    pub fn solver_config(&self, alpha: f64) -> SsnConfig {
        SsnConfig {
            alpha,
            gamma0: self.gamma0,
            gamma_factor: self.gamma_factor,
            outer_steps: self.outer_steps,
            inner_cap: self.inner_cap,
            lin_tol: self.lin_tol,
            lin_mode: self.lin_mode,
            step: self.step,
        }
    }
}

fn default_alpha() -> f64 {
    SsnConfig::default().alpha
}

fn default_noise() -> f64 {
    sparsesrc::sources::NOISE_LEVEL
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn positive<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let v = f64::deserialize(d)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(de::Error::custom(format!("expected a positive number, got {v}")))
    }
}

fn non_negative<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let v = f64::deserialize(d)?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(de::Error::custom(format!("expected a non-negative number, got {v}")))
    }
}

fn opt_positive<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    positive(d).map(Some)
}

fn opt_grid_n<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
    let n = usize::deserialize(d)?;
    GridSpec::new(n).map_err(de::Error::custom)?;
    Ok(Some(n))
}

/// One experiment: data synthesis, solver choice and output location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub example: ExampleChoice,
    /// Defaults to the builtin example's wavenumber.
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "opt_positive")]
    pub k: Option<f64>,
    /// Defaults to `round(4k)`.
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "opt_grid_n")]
    pub grid_n: Option<usize>,
    /// Defaults to the builtin example's medium, homogeneous for peak lists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium: Option<Medium>,
    #[serde(default = "default_alpha", deserialize_with = "positive")]
    pub alpha: f64,
    #[serde(default = "default_noise", deserialize_with = "non_negative")]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub ssn: SsnSection,
}

/// Command-line values that replace config values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub method: Option<Method>,
    pub alpha: Option<f64>,
    pub noise: Option<f64>,
}

/// 1-based line of the first `key = …` assignment, or 1.
fn key_line(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            l.trim_start()
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(1, |i| i + 1)
}

impl ExperimentConfig {
    /// A config with every optional value at its default.
    pub fn for_example(example: ExampleChoice) -> Self {
        Self {
            example,
            k: None,
            grid_n: None,
            medium: None,
            alpha: default_alpha(),
            noise: default_noise(),
            seed: 0,
            method: Method::default(),
            output_dir: default_output_dir(),
            ssn: SsnSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.check().map_err(|(key, message)| ConfigError::Invalid {
            line: key_line(text, key),
            message,
        })?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// Cross-field checks; returns the offending key on failure.
    fn check(&self) -> Result<(), (&'static str, String)> {
        if matches!(self.example, ExampleChoice::Peaks(_)) && self.k.is_none() {
            return Err(("example", "a peak list needs an explicit wavenumber k".into()));
        }
        if let Err(e) = self.grid() {
            return Err((if self.grid_n.is_some() { "grid_n" } else { "k" }, e.to_string()));
        }
        if self.method == Method::SsnRealPart && self.medium() == Medium::Inhomogeneous {
            return Err(("method", "ssn_real_part needs a homogeneous medium".into()));
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(a) = o.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(ConfigError::Override(format!("--alpha must be positive, got {a}")));
            }
            self.alpha = a;
        }
        if let Some(e) = o.noise {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(ConfigError::Override(format!("--noise must be non-negative, got {e}")));
            }
            self.noise = e;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.method {
            self.method = m;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        self.check().map_err(|(_, m)| ConfigError::Override(m))
    }

    pub fn wavenumber(&self) -> f64 {
        match (&self.example, self.k) {
            (_, Some(k)) => k,
            (ExampleChoice::Builtin(e), None) => e.wavenumber(),
            (ExampleChoice::Peaks(_), None) => unreachable!("checked at parse time"),
        }
    }

    pub fn medium(&self) -> Medium {
        match (&self.example, self.medium) {
            (_, Some(m)) => m,
            (ExampleChoice::Builtin(e), None) => e.medium(),
            (ExampleChoice::Peaks(_), None) => Medium::Homogeneous,
        }
    }

    pub fn grid(&self) -> sparsesrc::Result<GridSpec> {
        match self.grid_n {
            Some(n) => GridSpec::new(n),
            None => GridSpec::for_wavenumber(self.wavenumber()),
        }
    }

    pub fn solver_config(&self) -> SsnConfig {
        self.ssn.solver_config(self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_line_finds_assignment() {
        let text = "# method = x\nexample = \"peaks4\"\n  method  = \"ssn\"\n";
        assert_eq!(key_line(text, "method"), 3);
        assert_eq!(key_line(text, "missing"), 1);
    }

    #[test]
    fn method_names() {
        for m in [Method::Ssn, Method::Tikhonov, Method::Both, Method::SsnRealPart] {
            let name = serde_json::to_value(m).unwrap();
            assert_eq!(name.as_str().unwrap().parse::<Method>().unwrap(), m);
        }
        assert!("ssn2".parse::<Method>().is_err());
    }
}
