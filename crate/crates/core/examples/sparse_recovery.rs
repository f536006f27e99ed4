//! Recovers a sparse spherical-harmonic expansion with QCBP and OMP.

use nalgebra::DVector;
use num_complex::Complex64;
use spherecs::optimize::{optimized_pattern, OptimizerConfig};
use spherecs::patterns::Domain;
use spherecs::recover::{
    generate_sparse, omp_solve, qcbp_solve, relative_error, OmpOptions, QcbpOptions, RecoveryProblem,
    SparseSignalSpec,
};
use spherecs::sensing::build_matrix;

fn main() -> spherecs::Result<()> {
    let (b, m, s) = (10, 60, 10);
    let pattern = optimized_pattern(m, Domain::S2, b, &OptimizerConfig::default(), 2)?;
    let a = build_matrix(&pattern, b, false)?.into_entries();
    let g = generate_sparse(&SparseSignalSpec::new(a.ncols(), s, 11))?;
    let y: Vec<Complex64> = (&a * DVector::from_column_slice(&g)).as_slice().to_vec();
    let prob = RecoveryProblem::new(&a, &y, 0.0)?;

    let r = qcbp_solve(&prob, &QcbpOptions::default())?;
    println!(
        "qcbp: error {:.2e}, {} iterations, certified {}, support {:?}",
        relative_error(&r.z, &g),
        r.iterations,
        r.certified,
        r.support
    );
    let r = omp_solve(&prob, &OmpOptions::new(s))?;
    println!("omp:  error {:.2e}, support {:?}", relative_error(&r.z, &g), r.support);
    Ok(())
}
