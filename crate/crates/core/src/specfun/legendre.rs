//! Associated Legendre functions.
//!
//! All values carry the Condon–Shortley phase `(-1)^k`, i.e.
//! `P_l^k(x) = (-1)^k / (2^l l!) (1 - x^2)^{k/2} d^{l+k}/dx^{l+k} (x^2 - 1)^l`.
//! Some geodesy and graphics references drop that phase; values from those
//! sources differ by `(-1)^k`.
//!
//! Internally everything runs on the sphere-normalized functions
//! `N_l^k P_l^k` with `N_l^k = sqrt((2l+1)/(4π) (l-k)!/(l+k)!)`. Their
//! recurrence in `l` stays bounded for any degree, while the raw `P_l^k`
//! grows like `(2k-1)!!`.

use std::f64::consts::PI;

use super::factorial::ln_factorial;
use crate::error::{Error, Result};

/// Sphere-normalized associated Legendre values `N_l^k P_l^k(x)` for
/// `l = k, k+1, ..., lmax`. Returns an empty vector when `lmax < k`.
pub fn normalized_legendre_column(k: usize, lmax: usize, x: f64) -> Vec<f64> {
    if lmax < k {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(lmax - k + 1);
    let s = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();

    // P̄_k^k = (-1)^k sqrt(1/4π) prod_{i=1}^{k} sqrt((2i+1)/(2i)) s^k
    let mut pmm = (0.25 / PI).sqrt();
    for i in 1..=k {
        let fi = i as f64;
        pmm *= -((2.0 * fi + 1.0) / (2.0 * fi)).sqrt() * s;
    }
    out.push(pmm);
    if lmax == k {
        return out;
    }

    let fk = k as f64;
    let mut prev2 = pmm;
    let mut prev1 = (2.0 * fk + 3.0).sqrt() * x * pmm;
    out.push(prev1);

    for l in (k + 2)..=lmax {
        let fl = l as f64;
        let a = ((4.0 * fl * fl - 1.0) / (fl * fl - fk * fk)).sqrt();
        let lm1 = fl - 1.0;
        let b = ((lm1 * lm1 - fk * fk) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
        let cur = a * (x * prev1 - b * prev2);
        out.push(cur);
        prev2 = prev1;
        prev1 = cur;
    }
    out
}

/// Legendre polynomials `P_0(x), ..., P_lmax(x)` by Bonnet's recurrence.
pub fn legendre_column(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(1.0);
    if lmax == 0 {
        return out;
    }
    out.push(x);
    for l in 2..=lmax {
        let fl = l as f64;
        let next = ((2.0 * fl - 1.0) * x * out[l - 1] - (fl - 1.0) * out[l - 2]) / fl;
        out.push(next);
    }
    out
}

/// The sphere normalization `N_l^k = sqrt((2l+1)/(4π) (l-k)!/(l+k)!)`.
pub fn sphere_normalization(l: usize, k: usize) -> f64 {
    debug_assert!(k <= l);
    let ratio = (ln_factorial(l - k) - ln_factorial(l + k)).exp();
    ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt()
}

/// Associated Legendre function `P_l^k(x)` for `0 <= k <= l`, `|x| <= 1`.
///
/// Negative orders are not accepted here; use
/// `P_l^{-k} = (-1)^k (l-k)!/(l+k)! P_l^k` at the call site.
pub fn assoc_legendre(l: i32, k: i32, x: f64) -> Result<f64> {
    if l < 0 {
        return Err(Error::domain(format!("negative degree l = {l}")));
    }
    if k < 0 || k > l {
        return Err(Error::domain(format!("order k = {k} outside [0, {l}]")));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("x = {x} outside [-1, 1]")));
    }
    let (l, k) = (l as usize, k as usize);
    if k == 0 {
        return Ok(legendre_column(l, x)[l]);
    }
    let normalized = normalized_legendre_column(k, l, x)[l - k];
    Ok(normalized / sphere_normalization(l, k))
}
