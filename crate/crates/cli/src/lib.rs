//! Experiment runner for `sparsesrc`: reads TOML experiment configs,
//! synthesizes data, reconstructs, and writes fields, traces and a JSON
//! report for external plotting.
//!
//! ```toml
//! example = "peaks4"      # or a list: [{ x = 0.3, y = 0.6, sign = -1 }]
//! k = 6.0                 # default: the example's wavenumber
//! grid_n = 24             # default: round(4k)
//! medium = "homogeneous"  # default: the example's medium
//! alpha = 1e-5
//! noise = 0.01
//! seed = 0
//! method = "both"         # ssn | tikhonov | both | ssn_real_part
//! output_dir = "out"      # relative to the config file
//!
//! [ssn]
//! gamma0 = 1e5
//! gamma_factor = 10.0
//! outer_steps = 6
//! inner_cap = 30
//! lin_tol = 1e-10
//! lin_mode = "banded"     # banded | iterative_normal | dense
//! step = "guarded"        # full | armijo | guarded
//! ```

pub mod config;
pub mod experiment;
pub mod output;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sparsesrc::{BuiltinExample, Medium};

pub use config::{ConfigError, ExampleChoice, ExperimentConfig, Method, Overrides};
pub use experiment::{run, Report, RunError, Status};

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|source| RunError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::parse(&text).map_err(|source| RunError::Config {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads `path`, applies `overrides`, and runs it. A relative
/// `output_dir` from the file is taken relative to the file's directory;
/// one from `overrides` relative to the working directory. `subdir` is
/// appended to the output directory.
pub fn run_file(path: &Path, overrides: &Overrides, subdir: Option<&str>) -> Result<(PathBuf, Report), RunError> {
    let mut config = load_config(path)?;
    if config.output_dir.is_relative() {
        let base = path.parent().unwrap_or(Path::new(""));
        config.output_dir = base.join(&config.output_dir);
    }
    config.apply(overrides).map_err(|source| RunError::Config {
        path: path.to_path_buf(),
        source,
    })?;
    let mut dir = config.output_dir.clone();
    if let Some(s) = subdir {
        dir.push(s);
    }
    let report = run(&config, &dir)?;
    Ok((dir, report))
}

/// The `*.toml` files of `dir`, sorted by name.
pub fn batch_configs(dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let read_err = |source| RunError::Read {
        path: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(read_err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(read_err)?;
    files.retain(|p| p.is_file() && p.extension().is_some_and(|e| e == "toml"));
    files.sort();
    Ok(files)
}

/// Outcome of one batch entry: the config file and its output directory and report.
pub type BatchEntry = (PathBuf, Result<(PathBuf, Report), RunError>);

/// Runs every config of `dir` in parallel. Each writes to
/// `<output_dir>/<file stem>`. Results come back in file-name order.
pub fn run_batch(dir: &Path, overrides: &Overrides) -> Result<Vec<BatchEntry>, RunError> {
    let files = batch_configs(dir)?;
    Ok(files
        .into_par_iter()
        .map(|f| {
            let stem = f.file_stem().map(|s| s.to_string_lossy().into_owned());
            let r = run_file(&f, overrides, stem.as_deref());
            (f, r)
        })
        .collect())
}

/// Human-readable list of the builtin examples.
pub fn describe_examples() -> String {
    let mut s = String::new();
    for e in BuiltinExample::ALL {
        let n = sparsesrc::GridSpec::for_wavenumber(e.wavenumber()).map_or(0, |g| g.n());
        let _ = writeln!(
            s,
            "{}: k = {}, medium = {}, grid n = {n}, {} peaks",
            e.name(),
            e.wavenumber(),
            match e.medium() {
                Medium::Homogeneous => "homogeneous",
                Medium::Inhomogeneous => "inhomogeneous",
            },
            e.peaks().len()
        );
        for p in e.peaks() {
            let sign = if p.sign > 0.0 { '+' } else { '-' };
            let _ = writeln!(s, "    {sign} ({}, {})", p.center.0, p.center.1);
        }
    }
    s
}
