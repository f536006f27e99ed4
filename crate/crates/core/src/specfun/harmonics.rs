//! Spherical harmonics `Y_l^k` and Wigner D-functions `D_l^{k,n}`.
//!
//! Both are evaluated as a real amplitude times a unit phase,
//! `Y_l^k = A_l^k(θ) e^{ikφ}` and `D_l^{k,n} = A_l^{k,n}(θ) e^{-i(kφ+nχ)}`.
//! The scalar functions and the row builders share that factorization, so
//! a matrix entry and the corresponding scalar call agree to the last bit.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::jacobi::{check_theta, wigner_d_column};
use super::legendre::normalized_legendre_column;
use super::BasisIndex;
use crate::error::{Error, Result};

/// `sqrt((2l+1) / (8π²))`
pub fn so3_normalization(l: usize) -> f64 {
    ((2 * l + 1) as f64 / (8.0 * PI * PI)).sqrt()
}

#[inline]
fn sign(k: i32) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Spherical harmonic `Y_l^k(θ, φ)`, orthonormal under `sin θ dθ dφ`.
///
/// Negative orders come from `Y_l^{-k} = (-1)^k conj(Y_l^k)`.
pub fn spherical_harmonic(l: i32, k: i32, theta: f64, phi: f64) -> Result<Complex64> {
    BasisIndex::s2(l, k).validate()?;
    check_theta(theta)?;
    let ka = k.unsigned_abs() as usize;
    let p = normalized_legendre_column(ka, l as usize, theta.cos())[l as usize - ka];
    let amp = if k < 0 { sign(k) * p } else { p };
    Ok(Complex64::from_polar(amp, k as f64 * phi))
}

/// Wigner D-function `D_l^{k,n}(θ, φ, χ)`, orthonormal under
/// `sin θ dθ dφ dχ`.
pub fn wigner_big_d(idx: BasisIndex, theta: f64, phi: f64, chi: f64) -> Result<Complex64> {
    idx.validate()?;
    let l = idx.l as usize;
    let d = *wigner_d_column(idx.k, idx.n, l, theta)?
        .last()
        .expect("degree is at least max(|k|,|n|)");
    let amp = so3_normalization(l) * d;
    Ok(Complex64::from_polar(
        amp,
        -(idx.k as f64 * phi + idx.n as f64 * chi),
    ))
}

fn check_bandwidth(b: usize) -> Result<()> {
    if b == 0 {
        return Err(Error::invalid("bandwidth must be at least 1"));
    }
    Ok(())
}

/// Real amplitudes `A_l^k(θ)` of all `Y_l^k` with `l < b`, in the order
/// `q = l² + (k + l)`.
pub fn s2_amplitudes(b: usize, theta: f64) -> Result<Vec<f64>> {
    check_bandwidth(b)?;
    check_theta(theta)?;
    let x = theta.cos();
    let mut out = vec![0.0; b * b];
    for ka in 0..b {
        let col = normalized_legendre_column(ka, b - 1, x);
        let neg = sign(ka as i32);
        for (i, &p) in col.iter().enumerate() {
            let l = ka + i;
            out[l * l + l + ka] = p;
            if ka > 0 {
                out[l * l + l - ka] = neg * p;
            }
        }
    }
    Ok(out)
}

/// Row `(Y_l^k(θ, φ))_q` for `l < b` in the order `q = l² + (k + l)`.
pub fn s2_row(b: usize, theta: f64, phi: f64) -> Result<Vec<Complex64>> {
    let amps = s2_amplitudes(b, theta)?;
    let mut out = Vec::with_capacity(amps.len());
    for l in 0..b as i32 {
        for k in -l..=l {
            let q = (l * l + k + l) as usize;
            out.push(Complex64::from_polar(amps[q], k as f64 * phi));
        }
    }
    Ok(out)
}

/// Offset of degree `l` in the SO(3) ordering: `l(2l-1)(2l+1)/3`.
#[inline]
pub(crate) fn so3_offset(l: usize) -> usize {
    l * (2 * l + 1) * (2 * l).saturating_sub(1) / 3
}

/// Real amplitudes `N_l d_l^{k,n}(cos θ)` of all `D_l^{k,n}` with `l < b`,
/// ordered l-major, then `k`, then `n`.
pub fn so3_amplitudes(b: usize, theta: f64) -> Result<Vec<f64>> {
    check_bandwidth(b)?;
    check_theta(theta)?;
    let len = so3_offset(b);
    let mut out = vec![0.0; len];
    let norms: Vec<f64> = (0..b).map(so3_normalization).collect();
    let top = b as i32 - 1;
    for k in -top..=top {
        for n in -top..=top {
            let col = wigner_d_column(k, n, b - 1, theta)?;
            let l0 = k.unsigned_abs().max(n.unsigned_abs()) as usize;
            for (i, &d) in col.iter().enumerate() {
                let l = l0 + i;
                let w = 2 * l + 1;
                let q = so3_offset(l) + (k + l as i32) as usize * w + (n + l as i32) as usize;
                out[q] = norms[l] * d;
            }
        }
    }
    Ok(out)
}

/// Row `(D_l^{k,n}(θ, φ, χ))_q` for `l < b`, ordered l-major, then `k`,
/// then `n`.
pub fn so3_row(b: usize, theta: f64, phi: f64, chi: f64) -> Result<Vec<Complex64>> {
    let amps = so3_amplitudes(b, theta)?;
    let mut out = Vec::with_capacity(amps.len());
    for l in 0..b as i32 {
        for k in -l..=l {
            for n in -l..=l {
                let q = out.len();
                out.push(Complex64::from_polar(
                    amps[q],
                    -(k as f64 * phi + n as f64 * chi),
                ));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-13;

    #[test]
    fn constant_modes() {
        let y = spherical_harmonic(0, 0, 1.2, 4.0).unwrap();
        assert!((y.re - 0.28209479177387814).abs() < 1e-15 && y.im == 0.0);
        let d = wigner_big_d(BasisIndex::new(0, 0, 0), 0.4, 1.0, 2.0).unwrap();
        assert!((d.re - 1.0 / (8.0 * PI * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn north_pole_zonal() {
        for l in 0..20 {
            let y = spherical_harmonic(l, 0, 0.0, 0.7).unwrap();
            let expect = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
            assert!((y.re - expect).abs() < 1e-13 * expect);
        }
    }

    #[test]
    fn conjugate_symmetry() {
        for l in 0..8 {
            for k in -l..=l {
                let (t, p) = (0.83, 2.1);
                let lhs = spherical_harmonic(l, k, t, p).unwrap().conj();
                let rhs = sign(k) * spherical_harmonic(l, -k, t, p).unwrap();
                assert!((lhs - rhs).norm() < TOL);
                for n in -l..=l {
                    let c = 0.4;
                    let lhs = wigner_big_d(BasisIndex::new(l, k, n), t, p, c).unwrap().conj();
                    let rhs =
                        sign(k - n) * wigner_big_d(BasisIndex::new(l, -k, -n), t, p, c).unwrap();
                    assert!((lhs - rhs).norm() < TOL, "({l},{k},{n})");
                }
            }
        }
    }

    #[test]
    fn d_reduces_to_y() {
        for l in 0..8 {
            for k in -l..=l {
                let (t, p) = (1.9, 5.3);
                let d = wigner_big_d(BasisIndex::new(l, -k, 0), t, p, 0.0).unwrap();
                let y = spherical_harmonic(l, k, t, p).unwrap();
                let rhs = sign(k) * (0.5 / PI).sqrt() * y;
                assert!((d - rhs).norm() < TOL, "({l},{k})");
            }
        }
    }

    #[test]
    fn rows_match_scalars_exactly() {
        let (t, p, c) = (0.77, 3.9, 1.3);
        let row = s2_row(6, t, p).unwrap();
        let mut q = 0;
        for l in 0..6 {
            for k in -l..=l {
                assert_eq!(row[q], spherical_harmonic(l, k, t, p).unwrap());
                q += 1;
            }
        }
        let row = so3_row(5, t, p, c).unwrap();
        assert_eq!(row.len(), 5 * 9 * 11 / 3);
        let mut q = 0;
        for l in 0..5 {
            for k in -l..=l {
                for n in -l..=l {
                    let v = wigner_big_d(BasisIndex::new(l, k, n), t, p, c).unwrap();
                    assert_eq!(row[q], v, "({l},{k},{n})");
                    q += 1;
                }
            }
        }
    }

    #[test]
    fn invalid_index() {
        assert!(spherical_harmonic(2, 3, 0.1, 0.1).is_err());
        assert!(wigner_big_d(BasisIndex::new(1, 0, 2), 0.1, 0.0, 0.0).is_err());
        assert!(s2_row(0, 0.1, 0.1).is_err());
    }
}
