//! A small success-rate sweep for two pattern families.

use spherecs::patterns::{Domain, Measure, RegularKind};
use spherecs::recover::{
    phase_transition, transition_boundary, PatternFamily, PhaseTransitionConfig, PHASE_CSV_HEADER,
};

fn main() -> spherecs::Result<()> {
    for family in [
        PatternFamily::Regular(RegularKind::Hammersley),
        PatternFamily::Random(Measure::Uniform),
    ] {
        let cfg = PhaseTransitionConfig {
            trials: 10,
            seed: 1,
            ..PhaseTransitionConfig::new(Domain::S2, 6, family, vec![12, 18, 24, 30], vec![3, 6])
        };
        let grid = phase_transition(&cfg)?;
        println!("{} ({:.2?})", grid.family, grid.solve_time);
        println!("{PHASE_CSV_HEADER}");
        for row in grid.csv_rows() {
            println!("{row}");
        }
        for s in [3, 6] {
            println!("  s={s}: boundary {:?}", transition_boundary(&grid, s));
        }
    }
    Ok(())
}
