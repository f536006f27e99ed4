//! Random sparse test signals and best s-term approximation error.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonzeroDistribution {
    /// Zero mean, unit variance: real and imaginary parts each `N(0, 1/2)`.
    #[default]
    ComplexGaussian,
    /// Real `N(0, 1)`.
    RealGaussian,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SupportRule {
    /// `s` distinct indices drawn uniformly.
    Uniform,
    /// Exactly these indices; `s` must equal their count.
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignalSpec {
    pub n: usize,
    pub s: usize,
    pub support: SupportRule,
    pub distribution: NonzeroDistribution,
    pub seed: u64,
}

impl SparseSignalSpec {
    pub fn new(n: usize, s: usize, seed: u64) -> Self {
        SparseSignalSpec {
            n,
            s,
            support: SupportRule::Uniform,
            distribution: NonzeroDistribution::default(),
            seed,
        }
    }

    /// `s = 0` is accepted and yields the zero vector.
    pub fn validate(&self) -> Result<()> {
        if self.s > self.n {
            return Err(Error::invalid(format!("sparsity {} exceeds N = {}", self.s, self.n)));
        }
        if let SupportRule::Fixed(idx) = &self.support {
            if idx.len() != self.s {
                return Err(Error::invalid("fixed support size differs from s"));
            }
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != idx.len() || sorted.last().is_some_and(|&j| j >= self.n) {
                return Err(Error::invalid("fixed support must hold distinct indices below N"));
            }
        }
        Ok(())
    }
}

/// Exactly `s`-sparse vector drawn from `spec`.
pub fn generate_sparse(spec: &SparseSignalSpec) -> Result<Vec<Complex64>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut idx: Vec<usize> = match &spec.support {
        SupportRule::Uniform => sample(&mut rng, spec.n, spec.s).into_vec(),
        SupportRule::Fixed(v) => v.clone(),
    };
    idx.sort_unstable();
    let mut g = vec![Complex64::new(0.0, 0.0); spec.n];
    for j in idx {
        g[j] = loop {
            // A zero draw would lower the sparsity.
            let v = draw(&mut rng, spec.distribution);
            if v.norm() > 0.0 {
                break v;
            }
        };
    }
    Ok(g)
}

fn draw(rng: &mut ChaCha8Rng, dist: NonzeroDistribution) -> Complex64 {
    let x: f64 = StandardNormal.sample(rng);
    match dist {
        NonzeroDistribution::RealGaussian => Complex64::new(x, 0.0),
        NonzeroDistribution::ComplexGaussian => {
            let y: f64 = StandardNormal.sample(rng);
            Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
        }
    }
}

/// `σ_s(z)_p`: the `ℓ_p` norm of `z` with its `s` largest moduli removed.
pub fn best_s_term_error(z: &[Complex64], s: usize, p: f64) -> f64 {
    assert!(p >= 1.0, "p must be at least 1");
    let mut mags: Vec<f64> = z.iter().map(|v| v.norm()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let tail = mags.iter().skip(s);
    if p.is_infinite() {
        tail.cloned().fold(0.0, f64::max)
    } else {
        tail.map(|m| m.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}
