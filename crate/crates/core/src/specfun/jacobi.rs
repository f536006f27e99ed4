//! Jacobi polynomials and the Wigner d-functions built from them.

use std::f64::consts::PI;

use super::factorial::ln_factorial;
use super::BasisIndex;
use crate::error::{Error, Result};

/// Parameters of the Jacobi polynomial behind `d_l^{k,n}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiParams {
    /// Polynomial degree `l - max(|k|, |n|)`.
    pub degree: usize,
    /// `|k - n|`
    pub xi: usize,
    /// `|k + n|`
    pub lambda: usize,
    /// `degree! (degree+xi+lambda)! / ((degree+xi)! (degree+lambda)!)`
    pub gamma: f64,
    /// `+1` when `n >= k`, otherwise `(-1)^(n-k)`.
    pub omega: f64,
}

impl JacobiParams {
    pub fn from_index(idx: BasisIndex) -> Result<Self> {
        idx.validate()?;
        let BasisIndex { l, k, n } = idx;
        let xi = (k - n).unsigned_abs() as usize;
        let lambda = (k + n).unsigned_abs() as usize;
        let degree = l as usize - (xi + lambda) / 2;
        Ok(JacobiParams {
            degree,
            xi,
            lambda,
            gamma: ln_gamma_ratio(degree, xi, lambda).exp(),
            omega: omega(k, n),
        })
    }
}

fn omega(k: i32, n: i32) -> f64 {
    if n >= k || (n - k) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn ln_gamma_ratio(degree: usize, xi: usize, lambda: usize) -> f64 {
    ln_factorial(degree) + ln_factorial(degree + xi + lambda)
        - ln_factorial(degree + xi)
        - ln_factorial(degree + lambda)
}

/// Jacobi polynomial `P_α^{(ξ,λ)}(x)` by the three-term recurrence in the
/// degree.
pub fn jacobi(alpha: i32, xi: i32, lambda: i32, x: f64) -> Result<f64> {
    if alpha < 0 || xi < 0 || lambda < 0 {
        return Err(Error::domain(format!(
            "jacobi parameters must be non-negative, got ({alpha}, {xi}, {lambda})"
        )));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("x = {x} outside [-1, 1]")));
    }
    let (a, b) = (xi as f64, lambda as f64);
    let mut p0 = 1.0;
    if alpha == 0 {
        return Ok(p0);
    }
    let mut p1 = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0;
    for n in 2..=alpha {
        let (c1, c2, c3, c4) = recurrence_coefficients(n as f64, a, b);
        let p2 = ((c2 + c3 * x) * p1 - c4 * p0) / c1;
        p0 = p1;
        p1 = p2;
    }
    Ok(p1)
}

#[inline]
fn recurrence_coefficients(n: f64, a: f64, b: f64) -> (f64, f64, f64, f64) {
    let s = 2.0 * n + a + b;
    let c1 = 2.0 * n * (n + a + b) * (s - 2.0);
    let c2 = (s - 1.0) * (a * a - b * b);
    let c3 = (s - 2.0) * (s - 1.0) * s;
    let c4 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * s;
    (c1, c2, c3, c4)
}

/// Wigner d-function values `d_l^{k,n}(cos θ)` for `l = max(|k|,|n|) ..= lmax`.
///
/// The Jacobi recurrence runs on `sqrt(γ) P_α`, so the normalizer is
/// folded into every step and no factorial ratio is ever formed explicitly.
/// Returns an empty vector when `lmax < max(|k|, |n|)`.
pub fn wigner_d_column(k: i32, n: i32, lmax: usize, theta: f64) -> Result<Vec<f64>> {
    check_theta(theta)?;
    let l0 = k.unsigned_abs().max(n.unsigned_abs()) as usize;
    if lmax < l0 {
        return Ok(Vec::new());
    }
    let xi = (k - n).unsigned_abs() as usize;
    let lambda = (k + n).unsigned_abs() as usize;
    let (a, b) = (xi as f64, lambda as f64);
    let count = lmax - l0 + 1;

    // At the poles only k = n (θ = 0) or k = -n (θ = π) survive, with unit
    // modulus; return those exactly rather than through the recurrence.
    if theta == 0.0 {
        return Ok(vec![if xi == 0 { 1.0 } else { 0.0 }; count]);
    }
    if theta == PI {
        if lambda != 0 {
            return Ok(vec![0.0; count]);
        }
        return Ok((l0..=lmax)
            .map(|l| {
                let alpha = l - xi / 2;
                omega(k, n) * if alpha.is_multiple_of(2) { 1.0 } else { -1.0 }
            })
            .collect());
    }

    // Endpoints: sin(0/2) is exactly 0, cos(π/2) is not, so force it.
    let half_sin = (0.5 * theta).sin();
    let half_cos = if theta == PI { 0.0 } else { (0.5 * theta).cos() };
    let x = theta.cos();

    let prefactor = omega(k, n)
        * half_sin.powi(xi as i32)
        * half_cos.powi(lambda as i32)
        * (0.5 * ln_gamma_ratio(0, xi, lambda)).exp();

    let mut out = Vec::with_capacity(count);
    let mut q0 = 1.0;
    out.push(prefactor * q0);
    if count == 1 {
        return Ok(out);
    }
    // γ_1 / γ_0 = (1 + a + b) / ((1 + a)(1 + b))
    let r1 = ((1.0 + a + b) / ((1.0 + a) * (1.0 + b))).sqrt();
    let mut q1 = r1 * ((a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0);
    out.push(prefactor * q1);
    let mut ratio_prev = r1;
    for deg in 2..count {
        let nf = deg as f64;
        let (c1, c2, c3, c4) = recurrence_coefficients(nf, a, b);
        // sqrt(γ_n/γ_{n-1})
        let ratio = (nf * (nf + a + b) / ((nf + a) * (nf + b))).sqrt();
        let q2 = ratio * (c2 + c3 * x) / c1 * q1 - ratio * ratio_prev * c4 / c1 * q0;
        out.push(prefactor * q2);
        q0 = q1;
        q1 = q2;
        ratio_prev = ratio;
    }
    Ok(out)
}

/// Wigner d-function `d_l^{k,n}(cos θ)` for `θ ∈ [0, π]`.
pub fn wigner_d(idx: BasisIndex, theta: f64) -> Result<f64> {
    idx.validate()?;
    let col = wigner_d_column(idx.k, idx.n, idx.l as usize, theta)?;
    Ok(*col.last().expect("degree is at least max(|k|,|n|)"))
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::domain(format!("θ = {theta} outside [0, π]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_low_degree() {
        assert_eq!(jacobi(0, 3, 2, 0.4).unwrap(), 1.0);
        assert_eq!(jacobi(1, 0, 0, 0.5).unwrap(), 0.5);
        // P_2^{(1,1)}(x) = 15/4 x^2 - 3/4
        let v = jacobi(2, 1, 1, 0.25).unwrap();
        assert!((v - (15.0 / 4.0 * 0.0625 - 0.75)).abs() < 1e-15);
    }

    #[test]
    fn jacobi_errors() {
        assert!(jacobi(-1, 0, 0, 0.0).is_err());
        assert!(jacobi(1, -1, 0, 0.0).is_err());
        assert!(jacobi(1, 0, 0, 1.01).is_err());
    }

    #[test]
    fn wigner_d_at_zero() {
        for l in 0..6 {
            for k in -l..=l {
                for n in -l..=l {
                    let v = wigner_d(BasisIndex::new(l, k, n), 0.0).unwrap();
                    let expect = if k == n { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-15, "({l},{k},{n}) -> {v}");
                }
            }
        }
    }

    #[test]
    fn wigner_d_at_pi_is_clean() {
        // d_l^{k,n}(-1) = (-1)^{l+k} δ_{k,-n} up to the ω convention
        for l in 0..6 {
            for k in -l..=l {
                for n in -l..=l {
                    let v = wigner_d(BasisIndex::new(l, k, n), PI).unwrap();
                    assert!(v.is_finite());
                    if k != -n {
                        assert_eq!(v, 0.0, "({l},{k},{n})");
                    } else {
                        assert!((v.abs() - 1.0).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn wigner_d_degree_one() {
        for &t in &[0.0, 0.3, 1.1, 2.0, PI] {
            let v = wigner_d(BasisIndex::new(1, 0, 0), t).unwrap();
            assert!((v - t.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn theta_outside_range() {
        assert!(wigner_d(BasisIndex::new(1, 0, 0), -0.1).is_err());
        assert!(wigner_d(BasisIndex::new(1, 0, 0), 3.2).is_err());
    }

    #[test]
    fn params_from_index() {
        let p = JacobiParams::from_index(BasisIndex::new(3, 1, -2)).unwrap();
        assert_eq!((p.xi, p.lambda, p.degree), (3, 1, 1));
        assert_eq!(p.omega, -1.0);
        // γ = 1! 5! / (4! 2!) = 2.5
        assert!((p.gamma - 2.5).abs() < 1e-13);
    }
}
