//! Pattern search over azimuths at fixed equispaced elevations.

use spherecs::optimize::{pattern_search, OptimizerConfig};
use spherecs::patterns::{equispaced_elevation, regular_pattern, Domain, RegularKind};
use spherecs::coherence::mutual_coherence;
use spherecs::sensing::build_matrix;

fn main() -> spherecs::Result<()> {
    let (b, m) = (10, 40);
    let thetas = equispaced_elevation(m)?;
    let cfg = OptimizerConfig {
        seed: 3,
        ..Default::default()
    };
    let trace = pattern_search(&thetas, Domain::S2, b, &cfg)?;
    println!(
        "mu {:.4} -> {:.4} (lower bound {:.4}) after {} iterations, stop: {}, {:.2?}",
        trace.initial_mu,
        trace.final_mu,
        trace.lower_bound,
        trace.records.len(),
        trace.stop,
        trace.elapsed
    );
    for r in trace.records.iter().filter(|r| r.accepted).take(5) {
        println!("  iter {:>4}: mu={:.5} step={:.4}", r.iter, r.mu, r.delta);
    }
    let hammersley = regular_pattern(RegularKind::Hammersley, m, Domain::S2)?;
    let mu = mutual_coherence(&build_matrix(&hammersley, b, false)?)?.mu;
    println!("hammersley at the same m: mu={mu:.4}");
    Ok(())
}
