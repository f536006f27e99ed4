//! Mutual coherence of sensing matrices and its lower bounds.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::patterns::{Domain, SamplingPattern, TWO_PI};
use crate::sensing::{precondition_weight, SensingMatrix};
use crate::specfun::{
    normalized_legendre_column, spherical_harmonic, wigner3j, wigner_big_d,
    wigner_d_column, BasisIndex,
};

/// Default congruence tolerance for [`detect_modular_symmetry`], radians.
pub const MODULAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    pub mu: f64,
    /// Column pair attaining `mu`, `q < r`.
    pub argmax_pair: (usize, usize),
    /// Equal-order bound from the elevations alone; `None` when every
    /// equal-order vector vanishes.
    pub elevation_lower_bound: Option<f64>,
    pub welch_bound: f64,
    pub gram_time: Duration,
    pub m: usize,
    pub n: usize,
    pub b: usize,
    pub domain: Domain,
    pub pattern: String,
}

pub const COHERENCE_CSV_HEADER: &str = "m,N,B,domain,pattern,mu,q,r,lb_elev,welch";

impl CoherenceReport {
    /// One CSV row matching [`COHERENCE_CSV_HEADER`]. A missing elevation
    /// bound is written as `nan`.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.16e},{},{},{:.16e},{:.16e}",
            self.m,
            self.n,
            self.b,
            self.domain,
            self.pattern,
            self.mu,
            self.argmax_pair.0,
            self.argmax_pair.1,
            self.elevation_lower_bound.unwrap_or(f64::NAN),
            self.welch_bound
        )
    }
}

/// Largest normalized off-diagonal modulus of a Gram matrix, with the
/// first pair (row-major over the upper triangle) that attains it.
pub fn max_normalized_offdiag(gram: &DMatrix<Complex64>) -> Result<(f64, (usize, usize))> {
    let n = gram.ncols();
    let inv: Vec<f64> = (0..n)
        .map(|q| {
            let d = gram[(q, q)].re;
            if d > 0.0 {
                Ok(1.0 / d.sqrt())
            } else {
                Err(Error::ZeroColumn(q))
            }
        })
        .collect::<Result<_>>()?;
    let mut best = (-1.0, (0, 1));
    for r in 1..n {
        for q in 0..r {
            let v = gram[(q, r)].norm() * inv[q] * inv[r];
            if v > best.0 || (v == best.0 && (q, r) < best.1) {
                best = (v, (q, r));
            }
        }
    }
    Ok((best.0.min(1.0), best.1))
}

/// Exact mutual coherence from the dense Gram matrix `AᴴA`.
pub fn mutual_coherence(a: &SensingMatrix) -> Result<CoherenceReport> {
    let (m, n) = (a.rows(), a.cols());
    if n < 2 {
        return Err(Error::invalid("coherence needs at least two columns"));
    }
    let start = Instant::now();
    let gram = a.entries().adjoint() * a.entries();
    let (mu, argmax_pair) = max_normalized_offdiag(&gram)?;
    let gram_time = start.elapsed();

    let thetas = a.pattern().thetas();
    let weights: Option<Vec<f64>> = a
        .is_preconditioned()
        .then(|| thetas.iter().map(|&t| precondition_weight(t)).collect());
    let b = a.enumeration().bandwidth();
    let domain = a.enumeration().domain();
    let bound = elevation_bound_weighted(&thetas, weights.as_deref(), b, domain)
        .ok()
        .map(|e| e.value);
    Ok(CoherenceReport {
        mu,
        argmax_pair,
        elevation_lower_bound: bound,
        welch_bound: welch_bound(m, n),
        gram_time,
        m,
        n,
        b,
        domain,
        pattern: a.pattern().provenance.source.label(),
    })
}

/// Lower bound on the coherence of every matrix sharing these elevations.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationBound {
    /// Max normalized inner product over equal-order, distinct-degree pairs.
    pub value: f64,
    /// Pair attaining `value`.
    pub pair: (BasisIndex, BasisIndex),
    /// The zonal pair `(B-1, B-3)` alone; `None` for `B < 3` or when
    /// either vector vanishes.
    pub legendre: Option<f64>,
}

/// [`elevation_bound_weighted`] without row weights.
pub fn elevation_lower_bound(thetas: &[f64], b: usize, domain: Domain) -> Result<ElevationBound> {
    elevation_bound_weighted(thetas, None, b, domain)
}

/// Equal-order columns have azimuth-independent inner products, so their
/// largest normalized inner product bounds the coherence from below for
/// every choice of φ (and χ). Optional `weights` scale row `p`, as the
/// preconditioner does.
///
/// Identically zero vectors are skipped; an error is returned only when no
/// pair with two nonzero vectors remains.
pub fn elevation_bound_weighted(
    thetas: &[f64],
    weights: Option<&[f64]>,
    b: usize,
    domain: Domain,
) -> Result<ElevationBound> {
    if thetas.is_empty() {
        return Err(Error::invalid("no elevations"));
    }
    if b < 2 {
        return Err(Error::DegenerateBound(
            "bandwidth below 2 has no pair of distinct degrees".into(),
        ));
    }
    if let Some(w) = weights {
        if w.len() != thetas.len() {
            return Err(Error::DimensionMismatch {
                expected: thetas.len(),
                found: w.len(),
            });
        }
    }
    let m = thetas.len();
    let weight = |p: usize| weights.map_or(1.0, |w| w[p]);
    let top = b as i32 - 1;

    // One group per order (k) or order pair (k, n): rows are degrees.
    let mut best: Option<(f64, (BasisIndex, BasisIndex))> = None;
    let mut legendre = None;
    let orders: Vec<(i32, i32)> = match domain {
        // ±k give identical moduli
        Domain::S2 => (0..=top).map(|k| (k, 0)).collect(),
        Domain::SO3 => (-top..=top)
            .flat_map(|k| (-top..=top).map(move |n| (k, n)))
            .collect(),
    };
    for (k, n) in orders {
        let l0 = k.abs().max(n.abs()) as usize;
        let count = b - l0;
        if count < 2 {
            continue;
        }
        let mut vecs = vec![vec![0.0; m]; count];
        for (p, &t) in thetas.iter().enumerate() {
            let w = weight(p);
            match domain {
                Domain::S2 => {
                    let col = normalized_legendre_column(k as usize, b - 1, t.cos());
                    for (i, v) in col.into_iter().enumerate() {
                        vecs[i][p] = w * v;
                    }
                }
                Domain::SO3 => {
                    let col = wigner_d_column(k, n, b - 1, t)?;
                    for (i, v) in col.into_iter().enumerate() {
                        vecs[i][p] = w * v;
                    }
                }
            }
        }
        let norms: Vec<f64> = vecs
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        for i in 0..count {
            for j in i + 1..count {
                if norms[i] == 0.0 || norms[j] == 0.0 {
                    continue;
                }
                let dot: f64 = vecs[i].iter().zip(&vecs[j]).map(|(x, y)| x * y).sum();
                let v = (dot.abs() / (norms[i] * norms[j])).min(1.0);
                let pair = (
                    BasisIndex::new((l0 + i) as i32, k, n),
                    BasisIndex::new((l0 + j) as i32, k, n),
                );
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, pair));
                }
                if k == 0 && n == 0 && b >= 3 && i + 3 == b && j + 1 == b {
                    legendre = Some(v);
                }
            }
        }
    }
    let (value, pair) = best.ok_or_else(|| {
        Error::DegenerateBound("every equal-order sample vector is zero".into())
    })?;
    Ok(ElevationBound {
        value,
        pair,
        legendre,
    })
}

/// `max(0, sqrt((N - m) / (m (N - 1))))`
pub fn welch_bound(m: usize, n: usize) -> f64 {
    if m == 0 || n < 2 {
        return 0.0;
    }
    let (m, n) = (m as f64, n as f64);
    ((n - m) / (m * (n - 1.0))).max(0.0).sqrt()
}

/// `Σ_p conj(f₁(x_p)) f₂(x_p)` expanded in 3j symbols: the product of two
/// basis functions is a 3j-weighted sum of single basis functions of
/// degree `|l₁-l₂| ..= l₁+l₂`, so only pattern sums of single functions
/// are evaluated.
pub fn gram_via_3j(idx1: BasisIndex, idx2: BasisIndex, pattern: &SamplingPattern) -> Result<Complex64> {
    idx1.validate()?;
    idx2.validate()?;
    let domain = pattern.domain();
    if domain == Domain::S2 && (idx1.n != 0 || idx2.n != 0) {
        return Err(Error::invalid("S2 indices must have n = 0"));
    }
    let (l1, l2) = (idx1.l, idx2.l);
    let kh = idx2.k - idx1.k;
    let nh = idx2.n - idx1.n;
    let mut total = Complex64::new(0.0, 0.0);
    for lh in (l1 - l2).abs()..=(l1 + l2) {
        if kh.abs() > lh || nh.abs() > lh {
            continue;
        }
        let dims = ((2 * l1 + 1) * (2 * l2 + 1) * (2 * lh + 1)) as f64;
        let wk = wigner3j(l1, l2, lh, -idx1.k, idx2.k, -kh);
        if wk == 0.0 {
            continue;
        }
        let (coef, pattern_sum) = match domain {
            Domain::S2 => {
                let w0 = wigner3j(l1, l2, lh, 0, 0, 0);
                let mut s = Complex64::new(0.0, 0.0);
                for pt in pattern.points() {
                    s += spherical_harmonic(lh, kh, pt.theta, pt.phi)?;
                }
                ((dims / (4.0 * PI)).sqrt() * w0 * wk, s)
            }
            Domain::SO3 => {
                let wn = wigner3j(l1, l2, lh, -idx1.n, idx2.n, -nh);
                let mut s = Complex64::new(0.0, 0.0);
                for pt in pattern.points() {
                    let chi = pt.chi.unwrap_or(0.0);
                    s += wigner_big_d(BasisIndex::new(lh, kh, nh), pt.theta, pt.phi, chi)?;
                }
                ((dims / (8.0 * PI * PI)).sqrt() * wn * wk, s)
            }
        };
        total += coef * pattern_sum;
    }
    let phase_exp = match domain {
        Domain::S2 => idx2.k,
        Domain::SO3 => idx2.k + idx2.n,
    };
    Ok(if phase_exp % 2 == 0 { total } else { -total })
}

/// Orders whose sample phases are congruent across the whole pattern.
///
/// For `(k, n)` the test is `2(kφ_p + nχ_p) ≡ const mod 2π` over all `p`
/// (S² uses `n = 0`). When it holds, the columns `(l, k, n)` and
/// `(l, -k, -n)` are proportional and the coherence is 1. Each order pair
/// is reported once with `k > 0`, or `k = 0` and `n > 0`.
pub fn detect_modular_symmetry(pattern: &SamplingPattern, b: usize, tol: f64) -> Vec<(i32, i32)> {
    let top = b as i32 - 1;
    let phis = pattern.phis();
    let chis = pattern.chis();
    let candidates: Vec<(i32, i32)> = match pattern.domain() {
        Domain::S2 => (1..=top).map(|k| (k, 0)).collect(),
        Domain::SO3 => (0..=top)
            .flat_map(|k| (-top..=top).map(move |n| (k, n)))
            .filter(|&(k, n)| k > 0 || n > 0)
            .collect(),
    };
    let mut out = Vec::new();
    for (k, n) in candidates {
        let phase = |p: usize| {
            let chi = chis.as_ref().map_or(0.0, |c| c[p]);
            2.0 * (k as f64 * phis[p] + n as f64 * chi)
        };
        let reference = phase(0);
        let congruent = (1..phis.len()).all(|p| {
            let d = (phase(p) - reference).rem_euclid(TWO_PI);
            d.min(TWO_PI - d) <= tol
        });
        if congruent {
            out.push((k, n));
        }
    }
    out
}

/// Largest normalized inner product over column pairs with equal orders
/// and odd degree sum. Cosine-symmetric elevations make it vanish.
pub fn max_odd_parity_coherence(a: &SensingMatrix) -> Result<f64> {
    let gram = a.entries().adjoint() * a.entries();
    let idx = a.enumeration().indices();
    let mut worst: f64 = 0.0;
    for r in 0..idx.len() {
        for q in 0..r {
            let (x, y) = (idx[q], idx[r]);
            if x.k != y.k || x.n != y.n || (x.l + y.l) % 2 == 0 {
                continue;
            }
            let (dq, dr) = (gram[(q, q)].re, gram[(r, r)].re);
            if dq == 0.0 {
                return Err(Error::ZeroColumn(q));
            }
            if dr == 0.0 {
                return Err(Error::ZeroColumn(r));
            }
            worst = worst.max(gram[(q, r)].norm() / (dq * dr).sqrt());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{
        equispaced_elevation, random_pattern, regular_pattern, Measure, RegularKind, Source,
    };
    use crate::sensing::build_matrix;

    #[test]
    fn welch_values() {
        assert_eq!(welch_bound(100, 100), 0.0);
        assert_eq!(welch_bound(1, 2), 1.0);
        assert!((welch_bound(50, 100) - (50.0f64 / 4950.0).sqrt()).abs() < 1e-15);
        assert_eq!(welch_bound(200, 100), 0.0);
    }

    #[test]
    fn equiangular_is_fully_coherent() {
        let p = regular_pattern(RegularKind::Equiangular, 5, Domain::S2).unwrap();
        let a = build_matrix(&p, 4, false).unwrap();
        let r = mutual_coherence(&a).unwrap();
        assert!((r.mu - 1.0).abs() < 1e-9);
        assert!(detect_modular_symmetry(&p, 4, MODULAR_TOL).contains(&(2, 0)));
    }

    #[test]
    fn generic_pattern_has_no_symmetry() {
        let p = random_pattern(Measure::Uniform, 40, Domain::SO3, 11).unwrap();
        assert!(detect_modular_symmetry(&p, 4, MODULAR_TOL).is_empty());
    }

    #[test]
    fn constructed_so3_symmetry() {
        let (k, n) = (2, 3);
        let m = 12;
        let thetas = equispaced_elevation(m).unwrap();
        let phis: Vec<f64> = (0..m).map(|p| 0.37 * p as f64 + 0.1).collect();
        let chis: Vec<f64> = phis.iter().map(|f| -(k as f64 / n as f64) * f + 0.5).collect();
        let p = SamplingPattern::from_angles(
            Domain::SO3,
            &thetas,
            &phis,
            Some(&chis),
            Source::External { label: "t".into() },
        )
        .unwrap();
        let found = detect_modular_symmetry(&p, 4, 1e-9);
        assert!(found.contains(&(k, n)), "{found:?}");
        let a = build_matrix(&p, 4, false).unwrap();
        assert!(mutual_coherence(&a).unwrap().mu >= 1.0 - 1e-6);
    }

    #[test]
    fn legendre_pair_at_poles() {
        let e = elevation_lower_bound(&[0.0, PI], 4, Domain::S2).unwrap();
        assert!((e.legendre.unwrap() - 1.0).abs() < 1e-15);
        assert!((e.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn odd_pair_orthogonal() {
        let t = equispaced_elevation(9).unwrap();
        let x: Vec<f64> = t.iter().map(|t| t.cos()).collect();
        let b = 7;
        let s: f64 = x
            .iter()
            .map(|&x| {
                let c = crate::specfun::legendre_column(b - 1, x);
                c[b - 1] * c[b - 2]
            })
            .sum();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn bound_below_coherence() {
        let thetas = equispaced_elevation(25).unwrap();
        for seed in 0..5u64 {
            let p = random_pattern(Measure::Uniform, 25, Domain::S2, seed).unwrap();
            let p = SamplingPattern::from_angles(
                Domain::S2,
                &thetas,
                &p.phis(),
                None,
                Source::External { label: "x".into() },
            )
            .unwrap();
            let a = build_matrix(&p, 6, false).unwrap();
            let r = mutual_coherence(&a).unwrap();
            let lb = r.elevation_lower_bound.unwrap();
            assert!(lb <= r.mu + 1e-12);
            assert!(r.welch_bound <= r.mu + 1e-12);
        }
    }

    #[test]
    fn zero_column_is_an_error() {
        let p = SamplingPattern::from_angles(
            Domain::S2,
            &[0.0],
            &[0.0],
            None,
            Source::External { label: "pole".into() },
        )
        .unwrap();
        let a = build_matrix(&p, 2, false).unwrap();
        assert!(matches!(mutual_coherence(&a), Err(Error::ZeroColumn(_))));
    }

    #[test]
    fn csv_row_fields() {
        let p = regular_pattern(RegularKind::Fibonacci, 12, Domain::S2).unwrap();
        let a = build_matrix(&p, 3, false).unwrap();
        let row = mutual_coherence(&a).unwrap().csv_row();
        assert_eq!(row.split(',').count(), COHERENCE_CSV_HEADER.split(',').count());
        assert!(row.starts_with("12,9,3,S2,fibonacci,"));
    }

    #[test]
    fn three_j_matches_direct() {
        for domain in [Domain::S2, Domain::SO3] {
            let p = random_pattern(Measure::Uniform, 9, domain, 21).unwrap();
            let a = build_matrix(&p, 4, false).unwrap();
            let g = a.entries().adjoint() * a.entries();
            let idx = a.enumeration().indices();
            let mut worst: f64 = 0.0;
            for q in 0..idx.len() {
                for r in 0..idx.len() {
                    let v = gram_via_3j(idx[q], idx[r], &p).unwrap();
                    worst = worst.max((v - g[(q, r)]).norm());
                }
            }
            assert!(worst < 1e-10, "{domain}: {worst}");
        }
    }

    #[test]
    fn three_j_constant_mode() {
        let p = random_pattern(Measure::Uniform, 13, Domain::SO3, 4).unwrap();
        let z = BasisIndex::new(0, 0, 0);
        let g = gram_via_3j(z, z, &p).unwrap();
        assert!((g.re - 13.0 / (8.0 * PI * PI)).abs() < 1e-13 && g.im.abs() < 1e-13);
    }
}
