//! Config-driven experiments that write CSV tables and a timing summary.
//!
//! | kind | outputs |
//! |------|---------|
//! | `coherence_compare` | `coherence.csv`, optimized pattern files |
//! | `optimize_pattern` | `optimize.csv`, `trace_m<m>.csv`, `pattern_m<m>.txt` |
//! | `phase_transition` | `phase_<family>.csv`, `boundaries.csv` |
//! | `igrf_demo` | `igrf.csv`, `igrf_field_<pattern>_m<m>_s<s>.csv` |
//! | `wigner_forward_demo` | `wigner.csv` |
//!
//! Every CSV starts with a `# schema:` line naming its columns and holds no
//! timing data, so a fixed config reproduces it byte for byte. Wall-clock
//! times go to `summary.txt`.

pub mod config;
pub mod igrf;
mod run;
pub mod wigner;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use config::{ExperimentConfig, ExperimentKind, PatternSpec};
pub use igrf::{igrf_reconstruct, GaussCoefficientTable, IgrfReport};
pub use run::{run_experiment, RunSummary, Stage};
pub use wigner::{wigner_forward_demo, WignerDemoReport};

use crate::error::Result;
use crate::recover::{l2_norm, omp_solve, OmpOptions, RecoveryProblem, RecoveryResult, SolverKind};

/// Solves `‖Az - y‖ ≤ η` with the configured solver. OMP runs until the
/// residual drops to `max(η, 1e-10 ‖y‖)` or `min(m, N)` atoms are chosen.
pub(crate) fn solve(
    a: &DMatrix<Complex64>,
    y: &[Complex64],
    eta: f64,
    solver: &SolverKind,
) -> Result<RecoveryResult> {
    match solver {
        SolverKind::Qcbp(opts) => crate::recover::QcbpSolver::new(a)?.solve(y, eta, opts),
        SolverKind::Omp => {
            let prob = RecoveryProblem::new(a, y, eta.max(1e-10 * l2_norm(y)))?;
            omp_solve(&prob, &OmpOptions::new(a.nrows().min(a.ncols())))
        }
    }
}
