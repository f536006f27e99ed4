//! Synthetic near-field style forward model over Wigner D-functions with
//! polarization orders `n = ±1`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::solve;
use crate::coherence::{max_normalized_offdiag, MODULAR_TOL};
use crate::error::{Error, Result};
use crate::patterns::{derive_seed, random_pattern, Domain, Measure, SamplingPattern, Source};
use crate::recover::{relative_error, RecoveryResult, SolverKind};
use crate::sensing::enumerate_basis;
use crate::specfun::{so3_row, BasisIndex};

/// `D_l^{k,n}` with `1 ≤ l < b`, `|k| ≤ l`, `n ∈ {-1, 1}`; `2(b² - 1)`
/// functions ordered by `l`, then `k`, then `n`.
pub fn restricted_basis(b: usize) -> Vec<BasisIndex> {
    let mut out = Vec::new();
    for l in 1..b as i32 {
        for k in -l..=l {
            for n in [-1, 1] {
                out.push(BasisIndex::new(l, k, n));
            }
        }
    }
    out
}

/// Samples the restricted basis on an SO(3) pattern.
pub fn restricted_matrix(pattern: &SamplingPattern, b: usize) -> Result<DMatrix<Complex64>> {
    if pattern.domain() != Domain::SO3 {
        return Err(Error::invalid("the Wigner forward model needs a pattern on SO3"));
    }
    let full = enumerate_basis(Domain::SO3, b)?;
    let cols: Vec<usize> = restricted_basis(b)
        .into_iter()
        .map(|idx| full.position(idx).expect("restricted index lies in the band"))
        .collect();
    let mut a = DMatrix::zeros(pattern.len(), cols.len());
    for (p, pt) in pattern.points().iter().enumerate() {
        let row = so3_row(b, pt.theta, pt.phi, pt.chi.unwrap_or(0.0))?;
        for (j, &q) in cols.iter().enumerate() {
            a[(p, j)] = row[q];
        }
    }
    Ok(a)
}

/// Samples every direction of an S² pattern at `χ = 0` and `χ = π/2`,
/// the two probe polarizations.
pub fn polarized_pattern(base: &SamplingPattern) -> Result<SamplingPattern> {
    if base.domain() != Domain::S2 {
        return Err(Error::invalid("polarized patterns are built from S2 directions"));
    }
    let mut thetas = Vec::with_capacity(2 * base.len());
    let mut phis = Vec::with_capacity(2 * base.len());
    let mut chis = Vec::with_capacity(2 * base.len());
    for pt in base.points() {
        for chi in [0.0, FRAC_PI_2] {
            thetas.push(pt.theta);
            phis.push(pt.phi);
            chis.push(chi);
        }
    }
    SamplingPattern::from_angles(
        Domain::SO3,
        &thetas,
        &phis,
        Some(&chis),
        Source::External {
            label: format!("{}-polarized", base.provenance.source.label()),
        },
    )
}

/// Sorted magnitudes `decay^j`, placed at random positions with random
/// phases.
pub fn compressible_coefficients(n: usize, decay: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..n).collect();
    pos.shuffle(&mut rng);
    let mut t = vec![Complex64::new(0.0, 0.0); n];
    for (j, &p) in pos.iter().enumerate() {
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        t[p] = Complex64::from_polar(decay.powi(j as i32), phase);
    }
    t
}

#[derive(Debug, Clone)]
pub struct WignerDemoReport {
    pub m: usize,
    pub n: usize,
    pub mu: f64,
    /// `μ = 1` within tolerance: some columns are indistinguishable, so
    /// recovery was not attempted.
    pub full_coherence: bool,
    pub result: Option<RecoveryResult>,
    pub coef_error: Option<f64>,
    /// Relative ℓ₂ error of the re-synthesized field at independent
    /// check points.
    pub resynthesis_error: Option<f64>,
}

/// Synthesizes samples of `Σ T_j D_j` on `pattern`, checks for full
/// coherence, then recovers `T`.
pub fn wigner_forward_demo(
    coeffs: &[Complex64],
    pattern: &SamplingPattern,
    b: usize,
    solver: &SolverKind,
    eps: f64,
    seed: u64,
) -> Result<WignerDemoReport> {
    let a = restricted_matrix(pattern, b)?;
    let n = a.ncols();
    if coeffs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: coeffs.len(),
        });
    }
    let (mu, _) = max_normalized_offdiag(&(a.adjoint() * &a))?;
    let mut report = WignerDemoReport {
        m: pattern.len(),
        n,
        mu,
        full_coherence: mu >= 1.0 - MODULAR_TOL,
        result: None,
        coef_error: None,
        resynthesis_error: None,
    };
    if report.full_coherence {
        return Ok(report);
    }

    let t = DVector::from_column_slice(coeffs);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
    let mut y: Vec<Complex64> = (&a * &t).as_slice().to_vec();
    if eps > 0.0 {
        for v in &mut y {
            // Uniform in the disc of radius eps.
            let r = eps * rng.random::<f64>().sqrt();
            *v += Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU));
        }
    }
    let eta = (pattern.len() as f64).sqrt() * eps;
    let result = solve(&a, &y, eta, solver)?;

    let check = random_pattern(Measure::Uniform, 400, Domain::SO3, derive_seed(seed, &[1]))?;
    let c = restricted_matrix(&check, b)?;
    let truth: Vec<Complex64> = (&c * &t).as_slice().to_vec();
    let resynth: Vec<Complex64> = (&c * DVector::from_column_slice(&result.z)).as_slice().to_vec();
    report.coef_error = Some(relative_error(&result.z, coeffs));
    report.resynthesis_error = Some(relative_error(&resynth, &truth));
    report.result = Some(result);
    Ok(report)
}
