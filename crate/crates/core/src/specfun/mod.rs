//! Special functions on the sphere and the rotation group.
//!
//! Angles are colatitude `θ ∈ [0, π]`, azimuth `φ` and polarization `χ`,
//! both in radians. All functions are pure.

mod factorial;
mod harmonics;
mod jacobi;
mod legendre;
mod wigner3j;

pub use factorial::ln_factorial;
pub use harmonics::{
    s2_amplitudes, s2_row, so3_amplitudes, so3_row, so3_normalization, spherical_harmonic,
    wigner_big_d,
};
pub use jacobi::{jacobi, wigner_d, wigner_d_column, JacobiParams};
pub use legendre::{assoc_legendre, legendre_column, normalized_legendre_column, sphere_normalization};
pub use wigner3j::wigner3j;

use crate::error::{Error, Result};

/// A degree/order triple `(l, k, n)`. On the sphere `n` is always 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex {
    pub l: i32,
    pub k: i32,
    pub n: i32,
}

impl BasisIndex {
    pub const fn new(l: i32, k: i32, n: i32) -> Self {
        BasisIndex { l, k, n }
    }

    /// Index of the spherical harmonic `Y_l^k`.
    pub const fn s2(l: i32, k: i32) -> Self {
        BasisIndex { l, k, n: 0 }
    }

    /// Checks `l >= 0`, `|k| <= l` and `|n| <= l`.
    pub fn validate(&self) -> Result<()> {
        if self.l < 0 || self.k.abs() > self.l || self.n.abs() > self.l {
            return Err(Error::domain(format!(
                "invalid basis index (l, k, n) = ({}, {}, {})",
                self.l, self.k, self.n
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.l, self.k, self.n)
    }
}
