//! The experiment pipeline and its JSON report.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sparsesrc::oracle::{peak_match, PeakReport};
use sparsesrc::ssn::OuterStep;
use sparsesrc::{
    add_noise, alpha_bound, alpha_bound_for, gaussian_peak_source, real_part_operator, reconstruct, refraction_index,
    ssn_continuation, tikhonov_solve_detailed, GridSpec, HelmholtzOperator, LinearMode, Medium, PeakSpec, RealField,
};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, Method};
use crate::output::{write_complex, write_file, write_real};

pub const SCHEMA_VERSION: u32 = 1;

/// Nodes above this fraction of the maximum count as support.
pub const SUPPORT_LEVEL: f64 = 0.05;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("{stage} failed: {source}")]
    Solver {
        stage: &'static str,
        source: sparsesrc::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config { .. } | Self::Read { .. } => 2,
            Self::Solver { .. } | Self::Write { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub n: usize,
    pub h: f64,
    pub nodes: usize,
    pub order: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeakOutcome {
    pub truth_x: f64,
    pub truth_y: f64,
    pub sign: f64,
    /// Detected location and value; absent when the peak went unmatched.
    pub found: Option<(f64, f64, f64)>,
    pub distance: Option<f64>,
    pub distance_cells: Option<f64>,
    pub sign_hit: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeakMetrics {
    pub matched: usize,
    pub sign_hits: usize,
    pub spurious: usize,
    pub detections: usize,
    pub peaks: Vec<PeakOutcome>,
}

impl PeakMetrics {
    fn new(report: &PeakReport, truth: &[PeakSpec], h: f64) -> Self {
        let peaks = truth
            .iter()
            .zip(&report.matches)
            .map(|(t, m)| PeakOutcome {
                truth_x: t.center.0,
                truth_y: t.center.1,
                sign: t.sign,
                found: m.map(|m| (m.detection.x, m.detection.y, m.detection.value)),
                distance: m.map(|m| m.distance),
                distance_cells: m.map(|m| m.distance / h),
                sign_hit: m.is_some_and(|m| m.sign_hit),
            })
            .collect();
        Self {
            matched: report.matched(),
            sign_hits: report.sign_hits,
            spurious: report.spurious,
            detections: report.detections.len(),
            peaks,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SsnReport {
    pub file: String,
    pub trace_file: String,
    pub outer: Vec<OuterStep>,
    pub total_inner: usize,
    pub all_converged: bool,
    pub final_gamma: f64,
    pub final_residual: f64,
    pub residual_bound: f64,
    pub residual_ok: bool,
    pub zeta1_inf: f64,
    /// Absent in real-part mode, which has no imaginary component.
    pub zeta2_inf: Option<f64>,
    pub support: usize,
    pub peaks: PeakMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct TikhonovReport {
    pub file: String,
    pub iterations: usize,
    pub relative_residual: f64,
    pub support: usize,
    pub peaks: PeakMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub ssn_support: usize,
    pub tikhonov_support: usize,
    pub ssn_matched: usize,
    pub tikhonov_matched: usize,
    pub ssn_spurious: usize,
    pub tikhonov_spurious: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub status: Status,
    pub error: Option<String>,
    pub example: String,
    pub config: ExperimentConfig,
    pub grid: Option<GridInfo>,
    pub wavenumber: f64,
    pub medium: Medium,
    pub seed: u64,
    pub noise_level: f64,
    pub alpha: f64,
    pub alpha_bound: Option<f64>,
    pub alpha_admissible: Option<bool>,
    pub support_level: f64,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
    pub ssn: Option<SsnReport>,
    pub tikhonov: Option<TikhonovReport>,
    pub ssn_real_part: Option<SsnReport>,
    pub comparison: Option<Comparison>,
}

impl Report {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            status: Status::Ok,
            error: None,
            example: config.example.name().to_string(),
            config: config.clone(),
            grid: None,
            wavenumber: config.wavenumber(),
            medium: config.medium(),
            seed: config.seed,
            noise_level: config.noise,
            alpha: config.alpha,
            alpha_bound: None,
            alpha_admissible: None,
            support_level: SUPPORT_LEVEL,
            warnings: Vec::new(),
            files: Vec::new(),
            ssn: None,
            tikhonov: None,
            ssn_real_part: None,
            comparison: None,
        }
    }

    fn warn(&mut self, message: String) {
        log::warn!("{message}");
        self.warnings.push(message);
    }
}

/// Nodes where `|f|` exceeds [`SUPPORT_LEVEL`] of its maximum.
pub fn support_size(f: &RealField) -> usize {
    let max = f.max_abs();
    if max == 0.0 {
        return 0;
    }
    f.values().iter().filter(|v| v.abs() > SUPPORT_LEVEL * max).count()
}

fn solver(stage: &'static str) -> impl FnOnce(sparsesrc::Error) -> RunError {
    move |source| RunError::Solver { stage, source }
}

struct Emitter<'a> {
    dir: &'a Path,
}

impl Emitter<'_> {
    fn emit(
        &self,
        report: &mut Report,
        name: &str,
        f: impl FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>,
    ) -> Result<String, RunError> {
        let path = self.dir.join(name);
        write_file(&path, f).map_err(|source| RunError::Write { path, source })?;
        report.files.push(name.to_string());
        Ok(name.to_string())
    }
}

fn pipeline(config: &ExperimentConfig, out: &Emitter, report: &mut Report) -> Result<(), RunError> {
    let grid: GridSpec = config.grid().map_err(solver("grid setup"))?;
    let h = grid.h();
    report.grid = Some(GridInfo {
        n: grid.n(),
        h,
        nodes: grid.len(),
        order: "row-major",
    });
    let truth = config.example.peaks();
    let source = gaussian_peak_source(
        truth,
        sparsesrc::sources::PEAK_AMPLITUDE,
        sparsesrc::sources::PEAK_WIDTH,
        &grid,
    )
    .map_err(solver("source synthesis"))?;
    out.emit(report, "truth.txt", |w| write_real(w, &source))?;

    let n_field = refraction_index(&grid, config.medium());
    let op = HelmholtzOperator::with_default_pml(&grid, &n_field, config.wavenumber())
        .map_err(solver("operator assembly"))?;
    let clean = op.forward_solve_real(&source).map_err(solver("forward solve"))?;
    let u = add_noise(&clean, config.noise, config.seed).map_err(solver("noise"))?;
    out.emit(report, "measured.txt", |w| write_complex(w, &u))?;

    let metrics = |f: &RealField| -> Result<PeakMetrics, RunError> {
        let r = peak_match(f, truth).map_err(solver("peak matching"))?;
        Ok(PeakMetrics::new(&r, truth, h))
    };
    let admissibility = |report: &mut Report, bound: f64| {
        report.alpha_bound = Some(bound);
        report.alpha_admissible = Some(config.alpha < bound);
        if config.alpha >= bound {
            report.warn(format!(
                "alpha = {:e} is not below the bound {bound:e}; the sparse reconstruction is zero",
                config.alpha
            ));
        }
    };

    if config.method.runs_ssn() {
        admissibility(report, alpha_bound_for(&op, &u).map_err(solver("alpha bound"))?);
        let rec = reconstruct(&op, &u, &config.solver_config()).map_err(solver("semismooth Newton"))?;
        let trace_file = out.emit(report, "ssn_trace.txt", |w| rec.outcome.trace.write_table(w))?;
        let file = out.emit(report, "ssn_reconstruction.txt", |w| write_complex(w, &rec.mu))?;
        let re = rec.mu.re();
        let o = &rec.outcome;
        if !o.trace.all_converged() {
            report.warn("active sets did not settle at every gamma; see the trace".into());
        }
        report.ssn = Some(SsnReport {
            file,
            trace_file,
            outer: o.trace.steps.clone(),
            total_inner: o.trace.total_inner(),
            all_converged: o.trace.all_converged(),
            final_gamma: o.final_gamma,
            final_residual: o.final_residual,
            residual_bound: o.residual_bound,
            residual_ok: o.residual_ok(),
            zeta1_inf: re.max_abs(),
            zeta2_inf: Some(rec.mu.im().max_abs()),
            support: support_size(&re),
            peaks: metrics(&re)?,
        });
    }

    if config.method.runs_tikhonov() {
        let t = tikhonov_solve_detailed(&op, &u, config.alpha).map_err(solver("Tikhonov"))?;
        let file = out.emit(report, "tikhonov_reconstruction.txt", |w| write_complex(w, &t.mu))?;
        let re = t.mu.re();
        report.tikhonov = Some(TikhonovReport {
            file,
            iterations: t.iterations,
            relative_residual: t.relative_residual,
            support: support_size(&re),
            peaks: metrics(&re)?,
        });
    }

    if config.method == Method::SsnRealPart {
        let rp = real_part_operator(&op, false).map_err(solver("real-part operator"))?;
        let ur: Vec<f64> = u.values().iter().map(|v| v.re).collect();
        admissibility(report, alpha_bound(&rp, &ur).map_err(solver("alpha bound"))?);
        let mut cfg = config.solver_config();
        // the real-part operator is dense and has no band structure
        if cfg.lin_mode == LinearMode::Banded {
            cfg.lin_mode = LinearMode::Dense;
        }
        let o = ssn_continuation(&rp, &ur, &cfg).map_err(solver("semismooth Newton (real part)"))?;
        let mu = RealField::new(grid, o.zeta.clone()).map_err(solver("semismooth Newton (real part)"))?;
        let trace_file = out.emit(report, "ssn_real_part_trace.txt", |w| o.trace.write_table(w))?;
        let file = out.emit(report, "ssn_real_part_reconstruction.txt", |w| write_real(w, &mu))?;
        report.ssn_real_part = Some(SsnReport {
            file,
            trace_file,
            outer: o.trace.steps.clone(),
            total_inner: o.trace.total_inner(),
            all_converged: o.trace.all_converged(),
            final_gamma: o.final_gamma,
            final_residual: o.final_residual,
            residual_bound: o.residual_bound,
            residual_ok: o.residual_ok(),
            zeta1_inf: mu.max_abs(),
            zeta2_inf: None,
            support: support_size(&mu),
            peaks: metrics(&mu)?,
        });
    }

    if let (Some(s), Some(t)) = (&report.ssn, &report.tikhonov) {
        report.comparison = Some(Comparison {
            ssn_support: s.support,
            tikhonov_support: t.support,
            ssn_matched: s.peaks.matched,
            tikhonov_matched: t.peaks.matched,
            ssn_spurious: s.peaks.spurious,
            tikhonov_spurious: t.peaks.spurious,
        });
    }
    Ok(())
}

fn write_report(dir: &Path, report: &Report) -> Result<(), RunError> {
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|source| RunError::Write { path, source })
}

/// Runs one experiment, writing every artifact into `dir`. On a solver
/// failure the files written so far and a report with
/// `status = "failed"` are kept.
pub fn run(config: &ExperimentConfig, dir: &Path) -> Result<Report, RunError> {
    fs::create_dir_all(dir).map_err(|source| RunError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut report = Report::new(config);
    let result = pipeline(config, &Emitter { dir }, &mut report);
    if let Err(e) = &result {
        report.status = Status::Failed;
        report.error = Some(e.to_string());
    }
    report.files.push("report.json".into());
    write_report(dir, &report)?;
    result.map(|()| report)
}
