//! Sparse source reconstruction for the 2-D Helmholtz equation.
//!
//! Given a noisy wave field `u` on the unit square, recover a sparse source
//! `μ` with `D u = μ`, where `D` is a finite-difference Helmholtz operator
//! with a perfectly matched layer. The reconstruction solves the predual of
//! the L¹-regularized problem with a semismooth Newton method and a
//! continuation in the Moreau–Yosida parameter. A Tikhonov reconstruction
//! is provided as a baseline.
//!
//! ```no_run
//! use sparsesrc::{builtin_example, add_noise, reconstruct, BuiltinExample, GridSpec,
//!     HelmholtzOperator, SsnConfig};
//!
//! let ex = BuiltinExample::Peaks4;
//! let grid = GridSpec::for_wavenumber(ex.wavenumber())?;
//! let setup = builtin_example(ex, &grid)?;
//! let op = HelmholtzOperator::with_default_pml(&grid, &setup.n_field, setup.k)?;
//! let u = add_noise(&op.forward_solve_real(&setup.source)?, setup.noise_level, 7)?;
//! let rec = reconstruct(&op, &u, &SsnConfig::default())?;
//! println!("{:?}", rec.outcome.trace.inner_counts());
//! # Ok::<(), sparsesrc::Error>(())
//! ```

pub mod banded;
pub mod error;
pub mod field;
pub mod grid;
pub mod helmholtz;
pub mod oracle;
pub mod realblock;
pub mod sources;
pub mod sparse;
pub mod ssn;
pub mod tikhonov;

pub use error::{Error, Result};
pub use field::{ComplexField, RealField};
pub use grid::{grid_for_wavenumber, node_coords, GridSpec};
pub use helmholtz::{pml_profile, HelmholtzOperator, PmlProfile};
pub use realblock::{real_part_operator, BlockOperator, RealBlockVec, RealPartOperator};
pub use sources::{
    add_noise, builtin_example, gaussian_peak_source, refraction_index, BuiltinExample, ExampleSetup, Medium, PeakSpec,
};
pub use ssn::{alpha_bound, alpha_bound_for, reconstruct, ssn_continuation, LinearMode, SsnConfig, SsnTrace};
pub use tikhonov::{tikhonov_solve, tikhonov_solve_detailed};
