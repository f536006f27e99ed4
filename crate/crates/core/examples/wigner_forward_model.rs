//! Two-polarization Wigner-D forward model: recovery on an optimized
//! pattern and the full-coherence flag on an equiangular grid.

use spherecs::experiment::wigner::{compressible_coefficients, polarized_pattern, restricted_basis};
use spherecs::experiment::wigner_forward_demo;
use spherecs::optimize::{optimized_pattern, OptimizerConfig};
use spherecs::patterns::{regular_pattern, Domain, RegularKind};
use spherecs::recover::{QcbpOptions, SolverKind};

fn main() -> spherecs::Result<()> {
    let b = 5;
    let n = restricted_basis(b).len();
    let t = compressible_coefficients(n, 0.6, 9);
    let solver = SolverKind::Qcbp(QcbpOptions::default());

    let directions = optimized_pattern(20, Domain::S2, b, &OptimizerConfig::default(), 2)?;
    let p = polarized_pattern(&directions)?;
    let r = wigner_forward_demo(&t, &p, b, &solver, 0.0, 1)?;
    println!(
        "optimized, m={} N={}: mu={:.4}, coefficient error {:.3e}, re-synthesis error {:.3e}",
        r.m,
        r.n,
        r.mu,
        r.coef_error.unwrap_or(f64::NAN),
        r.resynthesis_error.unwrap_or(f64::NAN)
    );

    let grid = regular_pattern(RegularKind::Equiangular, 40, Domain::SO3)?;
    let r = wigner_forward_demo(&t, &grid, b, &solver, 0.0, 1)?;
    println!("equiangular, m={}: mu={:.12}, flagged {}", r.m, r.mu, r.full_coherence);
    Ok(())
}
