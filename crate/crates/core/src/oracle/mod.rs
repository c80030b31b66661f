//! Independent reference computations used to check the solvers: special
//! functions, a brute-force dense minimizer, and peak matching.

pub mod bessel;
pub mod dense;
pub mod peaks;

pub use bessel::{fundamental_solution, hankel_h0};
pub use dense::{dense_my_minimize, dense_my_minimize_from, DenseProblem, ORACLE_MAX_NODES};
pub use peaks::{detect_peaks, peak_match, Detection, PeakMatch, PeakReport};
