//! Coherence of regular patterns against the elevation and Welch bounds,
//! plus the full-coherence test for equiangular azimuths.

use spherecs::coherence::{detect_modular_symmetry, elevation_lower_bound, mutual_coherence, MODULAR_TOL};
use spherecs::patterns::{equispaced_elevation, regular_pattern, Domain, RegularKind};
use spherecs::sensing::build_matrix;

fn main() -> spherecs::Result<()> {
    let (b, m) = (10, 60);
    println!("S2, B={b}, m={m}");
    for kind in RegularKind::ALL {
        let p = regular_pattern(kind, m, Domain::S2)?;
        let r = mutual_coherence(&build_matrix(&p, b, false)?)?;
        println!(
            "  {:<12} mu={:.4}  elevation bound={:.4}  welch={:.4}",
            r.pattern,
            r.mu,
            r.elevation_lower_bound.unwrap_or(f64::NAN),
            r.welch_bound
        );
    }
    let lb = elevation_lower_bound(&equispaced_elevation(m)?, b, Domain::S2)?;
    println!("  equispaced elevations admit mu >= {:.4}", lb.value);

    let p = regular_pattern(RegularKind::Equiangular, 5, Domain::S2)?;
    let r = mutual_coherence(&build_matrix(&p, 4, false)?)?;
    let orders = detect_modular_symmetry(&p, 4, MODULAR_TOL);
    println!("equiangular m=5, B=4: mu={:.12}, congruent orders {orders:?}", r.mu);
    Ok(())
}
