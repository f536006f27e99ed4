//! Test-only oracles, independent of the library's numerics.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn q_to_f64(x: &Q) -> f64 {
    // Scale so both parts fit in f64 without overflow for moderate sizes.
    x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap()
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Dense polynomial with rational coefficients, lowest degree first.
#[derive(Clone, Debug)]
pub struct Poly(pub Vec<Q>);

impl Poly {
    pub fn constant(c: Q) -> Self {
        Poly(vec![c])
    }

    /// `(c0 + c1 x)^e`
    pub fn linear_pow(c0: i64, c1: i64, e: u32) -> Self {
        let base = Poly(vec![q(c0, 1), q(c1, 1)]);
        (0..e).fold(Poly::constant(Q::one()), |acc, _| acc.mul(&base))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![Q::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::constant(Q::zero());
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * q(i as i64, 1))
                .collect(),
        )
    }

    /// Exact division by a monic-up-to-sign linear factor `(c0 + c1 x)`;
    /// panics when the remainder is nonzero.
    pub fn div_linear(&self, c0: i64, c1: i64) -> Poly {
        let n = self.0.len();
        let (c0, c1) = (q(c0, 1), q(c1, 1));
        let mut rem = self.0.clone();
        let mut quot = vec![Q::zero(); n.saturating_sub(1).max(1)];
        for i in (1..n).rev() {
            let t = &rem[i] / &c1;
            quot[i - 1] = t.clone();
            rem[i] = Q::zero();
            rem[i - 1] -= &t * &c0;
        }
        assert!(rem[0].is_zero(), "inexact division");
        Poly(quot)
    }

    pub fn eval(&self, x: &Q) -> Q {
        self.0.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
    }

    pub fn scale(&self, c: &Q) -> Poly {
        Poly(self.0.iter().map(|v| v * c).collect())
    }
}

/// `P_α^{(a,b)}(x)` from the Rodrigues formula
/// `(-1)^α / (2^α α!) (1-x)^{-a} (1+x)^{-b} d^α[(1-x)^{a+α} (1+x)^{b+α}]`,
/// carried out on exact rational polynomials.
pub fn jacobi_rodrigues(alpha: u32, a: u32, b: u32, x: &Q) -> Q {
    let mut p = Poly::linear_pow(1, -1, a + alpha).mul(&Poly::linear_pow(1, 1, b + alpha));
    for _ in 0..alpha {
        p = p.derivative();
    }
    for _ in 0..a {
        p = p.div_linear(1, -1);
    }
    for _ in 0..b {
        p = p.div_linear(1, 1);
    }
    let sign = if alpha.is_multiple_of(2) { 1 } else { -1 };
    let norm = Q::new(BigInt::from(sign), BigInt::from(2).pow(alpha) * factorial(alpha));
    p.scale(&norm).eval(x)
}

/// `P_l^k(x)` with the Condon–Shortley phase from
/// `(-1)^k (1-x²)^{k/2} / (2^l l!) d^{l+k} (x²-1)^l`.
pub fn legendre_rodrigues(l: u32, k: u32, x: &Q) -> f64 {
    let mut p = Poly::linear_pow(-1, 1, l).mul(&Poly::linear_pow(1, 1, l));
    for _ in 0..l + k {
        p = p.derivative();
    }
    let norm = Q::new(BigInt::one(), BigInt::from(2).pow(l) * factorial(l));
    let poly_part = q_to_f64(&p.scale(&norm).eval(x));
    let xf = q_to_f64(x);
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (1.0 - xf * xf).powf(k as f64 / 2.0) * poly_part
}

/// Wigner 3j symbol from the Racah single sum in exact arithmetic. The
/// square of the symbol is rational; the sign comes from the sum.
pub fn wigner3j_exact(l1: i64, l2: i64, l3: i64, k1: i64, k2: i64, k3: i64) -> f64 {
    if k1 + k2 + k3 != 0
        || k1.abs() > l1
        || k2.abs() > l2
        || k3.abs() > l3
        || l3 < (l1 - l2).abs()
        || l3 > l1 + l2
    {
        return 0.0;
    }
    let f = |n: i64| Q::from_integer(factorial(n as u32));
    let delta = f(l1 + l2 - l3) * f(l1 - l2 + l3) * f(-l1 + l2 + l3) / f(l1 + l2 + l3 + 1);
    let pre = delta
        * f(l1 + k1)
        * f(l1 - k1)
        * f(l2 + k2)
        * f(l2 - k2)
        * f(l3 + k3)
        * f(l3 - k3);
    let mut sum = Q::zero();
    for t in 0..=(l1 + l2 + l3 + 1) {
        let args = [
            t,
            l3 - l2 + t + k1,
            l3 - l1 + t - k2,
            l1 + l2 - l3 - t,
            l1 - t - k1,
            l2 - t + k2,
        ];
        if args.iter().any(|&a| a < 0) {
            continue;
        }
        let den = args.iter().fold(Q::one(), |acc, &a| acc * f(a));
        let term = Q::one() / den;
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }
    let phase = if (l1 - l2 - k3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let sign = if sum.is_negative() { -phase } else { phase };
    let square = pre * &sum * &sum;
    sign * q_to_f64(&square).sqrt()
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
            let dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (mut p0, mut p1) = (1.0, z);
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// All subsets of `0..n` with exactly `k` elements, in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Smallest ℓ₁ norm over exact solutions of `Az = y` supported on at most
/// `s` columns. Returns the norm and the minimizer.
pub fn enumeration_oracle(a: &DMatrix<Complex64>, y: &[Complex64], s: usize) -> (f64, Vec<Complex64>) {
    let n = a.ncols();
    let yv = DVector::from_column_slice(y);
    let tol = 1e-9 * yv.norm().max(1.0);
    let mut best = (f64::INFINITY, vec![Complex64::new(0.0, 0.0); n]);
    if yv.norm() == 0.0 {
        return (0.0, best.1);
    }
    for k in 1..=s {
        for support in combinations(n, k) {
            let sub = a.select_columns(&support);
            let Some(c) = sub.clone().svd(true, true).solve(&yv, 1e-12).ok() else {
                continue;
            };
            if (&sub * &c - &yv).norm() > tol {
                continue;
            }
            let l1: f64 = c.iter().map(|v| v.norm()).sum();
            if l1 < best.0 {
                let mut z = vec![Complex64::new(0.0, 0.0); n];
                for (j, &i) in support.iter().enumerate() {
                    z[i] = c[j];
                }
                best = (l1, z);
            }
        }
    }
    best
}

pub fn l1(z: &[Complex64]) -> f64 {
    z.iter().map(|v| v.norm()).sum()
}

pub fn rel_err(z: &[Complex64], g: &[Complex64]) -> f64 {
    let num: f64 = z.iter().zip(g).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

/// Largest deviation of the spherical-harmonic Gram matrix for `l < lmax`
/// from the identity, by Gauss–Legendre in `cos θ` and the trapezoid rule
/// in `φ`; both are exact for these degrees.
pub fn harmonic_orthonormality_error(lmax: i32) -> f64 {
    use spherecs::specfun::spherical_harmonic;
    let (nodes, weights) = gauss_legendre(3 * lmax as usize);
    let n_phi = 4 * lmax as usize;
    let idx: Vec<(i32, i32)> = (0..lmax).flat_map(|l| (-l..=l).map(move |k| (l, k))).collect();
    let samples: Vec<Vec<Complex64>> = idx
        .iter()
        .map(|&(l, k)| {
            let mut v = Vec::with_capacity(nodes.len() * n_phi);
            for &x in &nodes {
                for j in 0..n_phi {
                    let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
                    v.push(spherical_harmonic(l, k, x.acos(), phi).unwrap());
                }
            }
            v
        })
        .collect();
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    gram_error(&samples, &weights, n_phi, dphi)
}

/// Same for the Wigner D-functions with `l < lmax`, trapezoid in both
/// `φ` and `χ`.
pub fn wigner_orthonormality_error(lmax: i32) -> f64 {
    use spherecs::specfun::{wigner_big_d, BasisIndex};
    let (nodes, weights) = gauss_legendre(3 * lmax as usize);
    let n_ang = 3 * lmax as usize;
    let idx: Vec<BasisIndex> = (0..lmax)
        .flat_map(|l| (-l..=l).flat_map(move |k| (-l..=l).map(move |n| BasisIndex::new(l, k, n))))
        .collect();
    let tau = 2.0 * std::f64::consts::PI;
    let samples: Vec<Vec<Complex64>> = idx
        .iter()
        .map(|&i| {
            let mut v = Vec::new();
            for &x in &nodes {
                for a in 0..n_ang {
                    for c in 0..n_ang {
                        let phi = tau * a as f64 / n_ang as f64;
                        let chi = tau * c as f64 / n_ang as f64;
                        v.push(wigner_big_d(i, x.acos(), phi, chi).unwrap());
                    }
                }
            }
            v
        })
        .collect();
    let dang = (tau / n_ang as f64).powi(2);
    gram_error(&samples, &weights, n_ang * n_ang, dang)
}

fn gram_error(samples: &[Vec<Complex64>], weights: &[f64], per_node: usize, cell: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..samples.len() {
        for b in a..samples.len() {
            let mut s = Complex64::new(0.0, 0.0);
            for (i, w) in weights.iter().enumerate() {
                let (ra, rb) = (&samples[a], &samples[b]);
                for p in i * per_node..(i + 1) * per_node {
                    s += ra[p] * rb[p].conj() * (w * cell);
                }
            }
            let expected = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((s - expected).norm());
        }
    }
    worst
}
