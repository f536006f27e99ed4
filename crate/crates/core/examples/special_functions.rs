//! Evaluates spherical harmonics, Wigner D-functions and 3j symbols.

use std::f64::consts::PI;

use spherecs::specfun::{
    assoc_legendre, jacobi, spherical_harmonic, wigner3j, wigner_big_d, wigner_d, BasisIndex,
};

fn main() -> spherecs::Result<()> {
    let (theta, phi, chi) = (PI / 3.0, PI / 4.0, PI / 6.0);

    println!("P_3^1(0.5)          = {:+.12}", assoc_legendre(3, 1, 0.5)?);
    println!("P_2^(1,1)(0.25)     = {:+.12}", jacobi(2, 1, 1, 0.25)?);
    println!("Y_2^1(θ, φ)         = {:+.12}", spherical_harmonic(2, 1, theta, phi)?);
    println!("Y_2^-1(θ, φ)        = {:+.12}", spherical_harmonic(2, -1, theta, phi)?);

    let idx = BasisIndex::new(3, 1, -2);
    println!("d_3^(1,-2)(θ)       = {:+.12}", wigner_d(idx, theta)?);
    println!("D_3^(1,-2)(θ, φ, χ) = {:+.12}", wigner_big_d(idx, theta, phi, chi)?);

    // (1 1 2; 1 -1 0) = 1/sqrt(30)
    let w = wigner3j(1, 1, 2, 1, -1, 0);
    println!("3j(1 1 2; 1 -1 0)   = {w:+.15} (1/sqrt(30) = {:+.15})", 1.0 / 30f64.sqrt());
    println!("3j(1 1 1; 0 0 0)    = {:+.15} (odd degree sum)", wigner3j(1, 1, 1, 0, 0, 0));
    Ok(())
}
