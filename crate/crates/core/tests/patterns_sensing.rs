mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use common::{gauss_legendre, simpson};
use num_complex::Complex64;
use spherecs::patterns::{
    equispaced_elevation, is_cosine_symmetric, random_pattern, regular_pattern, tan13_cdf, Domain,
    Measure, RegularKind, SamplingPattern, Source, Tan13Table,
};
use spherecs::sensing::{build_matrix, dimension, enumerate_basis, precondition_rhs};
use spherecs::specfun::{spherical_harmonic, wigner_big_d, BasisIndex};

/// Cumulative composite Simpson integral of `f` on `[0, top]`, sampled at
/// the even nodes.
struct Cumulative {
    step: f64,
    values: Vec<f64>,
}

impl Cumulative {
    fn new(f: impl Fn(f64) -> f64 + Copy, top: f64, panels: usize) -> Self {
        let h = top / panels as f64;
        let mut values = vec![0.0; panels / 2 + 1];
        for i in 0..panels / 2 {
            let a = 2.0 * i as f64 * h;
            values[i + 1] = values[i] + simpson(f, a, a + 2.0 * h, 2);
        }
        Cumulative { step: 2.0 * h, values }
    }

    /// Linear between even nodes.
    fn at(&self, x: f64) -> f64 {
        let pos = x / self.step;
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let t = pos - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    fn total(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// CDF of `c |tan θ|^{1/3}` by composite Simpson quadrature. On [0, π/4]
/// the substitution `θ = u³` and on [π/4, π/2] the substitution
/// `θ = π/2 - v³` make both integrands smooth.
struct SimpsonCdf {
    top: f64,
    near: Cumulative,
    far: Cumulative,
}

impl SimpsonCdf {
    fn new(panels: usize) -> Self {
        let top = FRAC_PI_4.cbrt();
        let near = Cumulative::new(|u| 3.0 * u * u * (u * u * u).tan().cbrt(), top, panels / 2);
        let far = Cumulative::new(
            |v| if v == 0.0 { 0.0 } else { 3.0 * v * v / (v * v * v).tan().cbrt() },
            top,
            panels / 2,
        );
        SimpsonCdf { top, near, far }
    }

    fn half_total(&self) -> f64 {
        self.near.total() + self.far.total()
    }

    /// `∫_0^t tan^{1/3}` for `t ∈ [0, π/2]`.
    fn lower(&self, t: f64) -> f64 {
        if t <= FRAC_PI_4 {
            self.near.at(t.cbrt())
        } else {
            let v = (FRAC_PI_2 - t).max(0.0).cbrt().min(self.top);
            self.near.total() + self.far.total() - self.far.at(v)
        }
    }

    fn cdf(&self, theta: f64) -> f64 {
        let norm = 2.0 * self.half_total();
        if theta <= FRAC_PI_2 {
            self.lower(theta) / norm
        } else {
            1.0 - self.lower(PI - theta) / norm
        }
    }
}

#[test]
fn tan13_sampler_passes_ks_against_quadrature_cdf() {
    let oracle = SimpsonCdf::new(1_000_000);
    assert!((2.0 * oracle.half_total() - 2.0 * PI / 3f64.sqrt()).abs() < 1e-9);
    let grid: Vec<f64> = (1..2000).map(|i| PI * i as f64 / 2000.0).collect();
    for &t in &grid {
        assert!((oracle.cdf(t) - tan13_cdf(t)).abs() < 1e-8, "cdf({t})");
        // Monotone cubic interpolation loses accuracy next to the
        // singularity at π/2.
        assert!((oracle.cdf(t) - Tan13Table::shared().cdf(t)).abs() < 1e-4);
    }

    let m = 100_000;
    let p = random_pattern(Measure::Tan13, m, Domain::S2, 11).unwrap();
    let mut thetas = p.thetas();
    thetas.sort_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for &t in &grid {
        let below = thetas.partition_point(|&x| x <= t) as f64 / m as f64;
        ks = ks.max((below - oracle.cdf(t)).abs());
    }
    // 99% Kolmogorov-Smirnov band.
    assert!(ks < 1.628 / (m as f64).sqrt(), "KS distance {ks}");
}

#[test]
fn uniform_theta_mean_is_centered() {
    let m = 100_000;
    let p = random_pattern(Measure::Uniform, m, Domain::SO3, 5).unwrap();
    let mean = p.thetas().iter().sum::<f64>() / m as f64;
    let sigma = PI / 12f64.sqrt() / (m as f64).sqrt();
    assert!((mean - FRAC_PI_2).abs() < 3.0 * sigma);
}

#[test]
fn generated_angles_stay_in_range() {
    for m in [2, 3, 7, 64, 1000, 10_000] {
        let mut all: Vec<SamplingPattern> = Vec::new();
        for domain in [Domain::S2, Domain::SO3] {
            for kind in RegularKind::ALL {
                all.push(regular_pattern(kind, m, domain).unwrap());
            }
            for measure in [Measure::Uniform, Measure::Tan13] {
                all.push(random_pattern(measure, m, domain, m as u64).unwrap());
            }
        }
        for p in &all {
            assert_eq!(p.len(), m);
            for pt in p.points() {
                assert!((0.0..=PI).contains(&pt.theta));
                assert!((0.0..2.0 * PI).contains(&pt.phi));
                match p.domain() {
                    Domain::S2 => assert!(pt.chi.is_none()),
                    Domain::SO3 => assert!((0.0..2.0 * PI).contains(&pt.chi.unwrap())),
                }
            }
            assert_eq!(&p.regenerate().unwrap().points(), &p.points());
        }
    }
}

#[test]
fn random_patterns_are_pure_in_their_arguments() {
    let a = random_pattern(Measure::Tan13, 50, Domain::SO3, 9).unwrap();
    let b = random_pattern(Measure::Tan13, 50, Domain::SO3, 9).unwrap();
    let c = random_pattern(Measure::Tan13, 50, Domain::SO3, 10).unwrap();
    assert_eq!(a.points(), b.points());
    assert_ne!(a.points(), c.points());
}

#[test]
fn equispaced_elevations() {
    let t = equispaced_elevation(3).unwrap();
    assert!((t[0] - PI).abs() < 1e-15 && (t[1] - FRAC_PI_2).abs() < 1e-15 && t[2] == 0.0);
    for m in 2..60 {
        let t = equispaced_elevation(m).unwrap();
        let c: Vec<f64> = t.iter().map(|x| x.cos()).collect();
        for w in c.windows(2) {
            assert!((w[1] - w[0] - 2.0 / (m - 1) as f64).abs() < 1e-12);
        }
        assert!(is_cosine_symmetric(&t, 1e-12));
    }
    assert!(equispaced_elevation(1).is_err());
    assert!(!is_cosine_symmetric(&[PI / 3.0, FRAC_PI_2], 1e-12));
}

#[test]
fn pattern_files_round_trip_bit_for_bit() {
    let p = random_pattern(Measure::Uniform, 25, Domain::SO3, 4).unwrap();
    let back = SamplingPattern::from_text(&p.to_text(), "mem").unwrap();
    assert_eq!(back.points(), p.points());
}

#[test]
fn so3_matrix_with_zero_polarization_contains_the_s2_matrix() {
    let s2 = random_pattern(Measure::Uniform, 30, Domain::S2, 2).unwrap();
    let zeros = vec![0.0; s2.len()];
    let so3 = SamplingPattern::from_angles(
        Domain::SO3,
        &s2.thetas(),
        &s2.phis(),
        Some(&zeros),
        Source::External { label: "lifted".into() },
    )
    .unwrap();
    let b = 4;
    let a2 = build_matrix(&s2, b, false).unwrap();
    let a3 = build_matrix(&so3, b, false).unwrap();
    let e2 = enumerate_basis(Domain::S2, b).unwrap();
    let e3 = enumerate_basis(Domain::SO3, b).unwrap();
    for q2 in 0..e2.len() {
        let BasisIndex { l, k, .. } = e2.index(q2);
        let q3 = e3.position(BasisIndex::new(l, -k, 0)).unwrap();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for p in 0..s2.len() {
            let expected = a2.entries()[(p, q2)] * (sign * (1.0 / (2.0 * PI)).sqrt());
            assert!((a3.entries()[(p, q3)] - expected).norm() < 1e-13);
        }
    }
}

#[test]
fn column_order_matches_scalar_functions() {
    let p = random_pattern(Measure::Uniform, 12, Domain::SO3, 8).unwrap();
    let a = build_matrix(&p, 5, false).unwrap();
    let e = a.enumeration();
    assert_eq!(e.len(), dimension(Domain::SO3, 5));
    for q in (0..e.len()).step_by(7) {
        let idx = e.index(q);
        for (i, pt) in p.points().iter().enumerate() {
            let v = wigner_big_d(idx, pt.theta, pt.phi, pt.chi.unwrap()).unwrap();
            assert_eq!(a.entries()[(i, q)], v);
        }
    }
    let p = random_pattern(Measure::Uniform, 12, Domain::S2, 8).unwrap();
    let a = build_matrix(&p, 6, false).unwrap();
    for q in 0..36 {
        let idx = a.enumeration().index(q);
        assert_eq!(q as i32, idx.l * idx.l + idx.k + idx.l);
        for (i, pt) in p.points().iter().enumerate() {
            assert_eq!(a.entries()[(i, q)], spherical_harmonic(idx.l, idx.k, pt.theta, pt.phi).unwrap());
        }
    }
}

/// `E[conj(D_q) D_r sin θ]` with θ uniform on [0, π] and φ, χ uniform on
/// [0, 2π), by Gauss-Legendre in cos θ and trapezoids in the angles.
fn continuum_gram(b: usize) -> Vec<Vec<Complex64>> {
    let e = enumerate_basis(Domain::SO3, b).unwrap();
    let (nodes, weights) = gauss_legendre(24);
    let n_ang = 12;
    let mut g = vec![vec![Complex64::new(0.0, 0.0); e.len()]; e.len()];
    for (x, w) in nodes.iter().zip(&weights) {
        let theta = x.acos();
        for a in 0..n_ang {
            for c in 0..n_ang {
                let phi = 2.0 * PI * a as f64 / n_ang as f64;
                let chi = 2.0 * PI * c as f64 / n_ang as f64;
                let vals: Vec<Complex64> =
                    e.indices().iter().map(|&i| wigner_big_d(i, theta, phi, chi).unwrap()).collect();
                // dθ = dx / sin θ, so sin θ dθ = dx; the density of θ is 1/π.
                let weight = w / PI / (n_ang * n_ang) as f64;
                for q in 0..vals.len() {
                    for r in 0..vals.len() {
                        g[q][r] += vals[q].conj() * vals[r] * weight;
                    }
                }
            }
        }
    }
    g
}

#[test]
fn preconditioned_gram_concentrates() {
    let b = 3;
    let n = dimension(Domain::SO3, b);
    let exact = continuum_gram(b);
    let expected = 1.0 / (4.0 * PI.powi(3));
    for (q, row) in exact.iter().enumerate() {
        assert!((row[q].re - expected).abs() < 1e-12);
    }
    // Diagonal of (1/m) AᴴA, averaged over 10 seeds.
    let m = 4 * n;
    let mut mean = vec![0.0; n];
    for seed in 0..10 {
        let p = random_pattern(Measure::Uniform, m, Domain::SO3, seed).unwrap();
        let a = build_matrix(&p, b, true).unwrap();
        let g = a.entries().adjoint() * a.entries() / Complex64::new(m as f64, 0.0);
        for (q, acc) in mean.iter_mut().enumerate() {
            *acc += g[(q, q)].re / 10.0;
        }
    }
    for (q, v) in mean.iter().enumerate() {
        let rel = (v - exact[q][q].re).abs() / exact[q][q].re;
        assert!(rel < 0.2, "column {q}: {rel}");
    }
}

#[test]
fn preconditioned_column_norms_concentrate() {
    let b = 3;
    let n = dimension(Domain::SO3, b);
    let m = 8 * n;
    let target = (1.0 / (4.0 * PI.powi(3))).sqrt();
    let mut mean = vec![0.0; n];
    for seed in 0..10 {
        let p = random_pattern(Measure::Uniform, m, Domain::SO3, 100 + seed).unwrap();
        let a = build_matrix(&p, b, true).unwrap();
        for (acc, norm) in mean.iter_mut().zip(a.column_norms()) {
            *acc += norm / (m as f64).sqrt() / 10.0;
        }
    }
    for (q, v) in mean.iter().enumerate() {
        assert!((v - target).abs() < 0.1 * target, "column {q}: {v} vs {target}");
    }
}

#[test]
fn rhs_preconditioning_composes() {
    let y = vec![Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5), Complex64::new(0.2, 0.2)];
    let t = [FRAC_PI_2, 0.0, 1.0];
    let once = precondition_rhs(&y, &t).unwrap();
    assert_eq!(once[0], y[0]);
    assert_eq!(once[1], Complex64::new(0.0, 0.0));
    let twice = precondition_rhs(&once, &t).unwrap();
    assert!((twice[2] - y[2] * 1f64.sin()).norm() < 1e-15);
    assert!(precondition_rhs(&y, &t[..2]).is_err());
}

#[test]
fn constant_column_on_any_pattern() {
    let p = regular_pattern(RegularKind::Spiral, 9, Domain::S2).unwrap();
    let a = build_matrix(&p, 1, false).unwrap();
    assert_eq!(a.cols(), 1);
    for i in 0..9 {
        assert!((a.entries()[(i, 0)].re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
    }
}
