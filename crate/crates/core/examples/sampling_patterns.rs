//! Builds every pattern family and prints a few points of each.

use spherecs::patterns::{
    equispaced_elevation, is_cosine_symmetric, random_pattern, regular_pattern, Domain, Measure,
    RegularKind, SamplingPattern,
};

fn show(p: &SamplingPattern) {
    println!("{} ({} points on {})", p.provenance.source.label(), p.len(), p.domain());
    for pt in p.points().iter().take(3) {
        match pt.chi {
            Some(chi) => println!("  θ={:.4} φ={:.4} χ={:.4}", pt.theta, pt.phi, chi),
            None => println!("  θ={:.4} φ={:.4}", pt.theta, pt.phi),
        }
    }
}

fn main() -> spherecs::Result<()> {
    let m = 32;
    for kind in RegularKind::ALL {
        show(&regular_pattern(kind, m, Domain::S2)?);
    }
    for measure in [Measure::Uniform, Measure::Tan13] {
        show(&random_pattern(measure, m, Domain::SO3, 7)?);
    }

    let thetas = equispaced_elevation(m)?;
    println!("equispaced elevations cosine-symmetric: {}", is_cosine_symmetric(&thetas, 1e-12));

    // Patterns serialize to a small text format that records how they were made.
    let p = regular_pattern(RegularKind::Hammersley, 4, Domain::SO3)?;
    print!("{}", p.to_text());
    let back = SamplingPattern::from_text(&p.to_text(), "<memory>")?;
    assert_eq!(back.points(), p.points());
    Ok(())
}
