//! Sparse recovery: quadratically constrained basis pursuit, orthogonal
//! matching pursuit, test signals and phase-transition sweeps.
//!
//! The ℓ₁ norm of a complex vector is the sum of moduli.

mod omp;
mod qcbp;
mod signal;
mod transition;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use omp::{omp_solve, OmpOptions};
pub use qcbp::{qcbp_solve, QcbpOptions, QcbpSolver};
pub use signal::{best_s_term_error, generate_sparse, NonzeroDistribution, SparseSignalSpec, SupportRule};
pub use transition::{
    phase_transition, transition_boundary, PatternFamily, PhaseTransitionConfig, PhaseTransitionGrid,
    SolverKind, TransitionCell, PHASE_CSV_HEADER, SUCCESS_THRESHOLD,
};

use crate::error::{Error, Result};

/// `min ‖z‖₁` subject to `‖Az - y‖₂ ≤ η`.
#[derive(Debug, Clone, Copy)]
pub struct RecoveryProblem<'a> {
    pub a: &'a DMatrix<Complex64>,
    pub y: &'a [Complex64],
    pub eta: f64,
}

impl<'a> RecoveryProblem<'a> {
    pub fn new(a: &'a DMatrix<Complex64>, y: &'a [Complex64], eta: f64) -> Result<Self> {
        if y.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: y.len(),
            });
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::invalid(format!("noise bound must be finite and >= 0, got {eta}")));
        }
        Ok(RecoveryProblem { a, y, eta })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub z: Vec<Complex64>,
    /// `‖Az - y‖₂`
    pub residual: f64,
    pub iterations: usize,
    /// Indices of the nonzero entries, ascending.
    pub support: Vec<usize>,
    pub converged: bool,
    /// QCBP only: optimality was certified by a dual vector.
    pub certified: bool,
    /// OMP only: a selected submatrix was rank deficient and the minimum
    /// norm least-squares solution was used.
    pub rank_deficient: bool,
}

pub fn l1_norm(z: &[Complex64]) -> f64 {
    z.iter().map(|v| v.norm()).sum()
}

pub fn l2_norm(z: &[Complex64]) -> f64 {
    z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖z - g‖₂ / ‖g‖₂`; the absolute error `‖z‖₂` when `g = 0`.
pub fn relative_error(z: &[Complex64], g: &[Complex64]) -> f64 {
    let diff: f64 = z
        .iter()
        .zip(g)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let scale = l2_norm(g);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Indices with `|z_i| > threshold`.
pub fn support_of(z: &[Complex64], threshold: f64) -> Vec<usize> {
    z.iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > threshold)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn residual_norm(a: &DMatrix<Complex64>, z: &[Complex64], y: &[Complex64]) -> f64 {
    let mut r = 0.0;
    for (i, yi) in y.iter().enumerate() {
        let mut s = -*yi;
        for (j, zj) in z.iter().enumerate() {
            if *zj != Complex64::new(0.0, 0.0) {
                s += a[(i, j)] * zj;
            }
        }
        r += s.norm_sqr();
    }
    r.sqrt()
}
