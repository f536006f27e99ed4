//! Reconstructs a synthetic geomagnetic field from 53 samples.

use spherecs::experiment::{igrf_reconstruct, GaussCoefficientTable};
use spherecs::optimize::{optimized_pattern, OptimizerConfig};
use spherecs::patterns::{regular_pattern, Domain, RegularKind};
use spherecs::recover::{QcbpOptions, SolverKind};

fn main() -> spherecs::Result<()> {
    let (b, m, s) = (14, 53, 15);
    let table = GaussCoefficientTable::synthetic(b, s, 5)?;
    let solver = SolverKind::Qcbp(QcbpOptions::default());
    let patterns = [
        regular_pattern(RegularKind::Equiangular, m, Domain::S2)?,
        regular_pattern(RegularKind::Hammersley, m, Domain::S2)?,
        optimized_pattern(m, Domain::S2, b, &OptimizerConfig::default(), 2)?,
    ];
    for p in &patterns {
        let r = igrf_reconstruct(&table, p, &solver, 0.0, 0, 37)?;
        println!(
            "{:<12} grid error {:.3e}, coefficient error {:.3e}",
            p.provenance.source.label(),
            r.grid_error,
            r.coef_error
        );
    }
    Ok(())
}
