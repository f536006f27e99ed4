//! Band-limited bases and sensing matrices.
//!
//! Column `q` of a sensing matrix samples the basis function with index
//! `enumeration.index(q)`. The order is l-major, then `k`, then `n`, all
//! ascending:
//!
//! * S²: `q = l² + (k + l)`
//! * SO(3): `q = l(2l-1)(2l+1)/3 + (k + l)(2l + 1) + (n + l)`
//!
//! Coefficient vectors produced anywhere in the crate use this order.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::patterns::{Domain, SamplingPattern};
use crate::specfun::{s2_row, so3_row, BasisIndex};

/// Magic bytes opening a binary matrix export.
pub const MATRIX_MAGIC: &[u8; 8] = b"SPHCSMAT";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisEnumeration {
    domain: Domain,
    b: usize,
    indices: Vec<BasisIndex>,
}

impl BasisEnumeration {
    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn bandwidth(&self) -> usize {
        self.b
    }

    /// Dimension `N`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index(&self, q: usize) -> BasisIndex {
        self.indices[q]
    }

    pub fn indices(&self) -> &[BasisIndex] {
        &self.indices
    }

    /// Column of `idx`, or `None` if it lies outside the band.
    pub fn position(&self, idx: BasisIndex) -> Option<usize> {
        let BasisIndex { l, k, n } = idx;
        if l < 0 || l as usize >= self.b || k.abs() > l || n.abs() > l {
            return None;
        }
        match self.domain {
            Domain::S2 if n != 0 => None,
            Domain::S2 => Some((l * l + k + l) as usize),
            Domain::SO3 => {
                let (l, k, n) = (l as usize, (k + l) as usize, (n + l) as usize);
                Some(so3_dimension(l) + k * (2 * l + 1) + n)
            }
        }
    }
}

/// `B(2B-1)(2B+1)/3`, the number of Wigner D-functions of degree below `b`.
pub fn so3_dimension(b: usize) -> usize {
    b * (2 * b + 1) * (2 * b).saturating_sub(1) / 3
}

pub fn dimension(domain: Domain, b: usize) -> usize {
    match domain {
        Domain::S2 => b * b,
        Domain::SO3 => so3_dimension(b),
    }
}

pub fn enumerate_basis(domain: Domain, b: usize) -> Result<BasisEnumeration> {
    if b < 1 {
        return Err(Error::invalid("bandwidth must be at least 1"));
    }
    let mut indices = Vec::with_capacity(dimension(domain, b));
    for l in 0..b as i32 {
        for k in -l..=l {
            match domain {
                Domain::S2 => indices.push(BasisIndex::s2(l, k)),
                Domain::SO3 => indices.extend((-l..=l).map(|n| BasisIndex::new(l, k, n))),
            }
        }
    }
    Ok(BasisEnumeration { domain, b, indices })
}

/// Row weight `sin^{1/2} θ`, exactly zero at both poles.
pub fn precondition_weight(theta: f64) -> f64 {
    if theta == 0.0 || theta == PI {
        0.0
    } else {
        theta.sin().sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct SensingMatrix {
    entries: DMatrix<Complex64>,
    pattern: SamplingPattern,
    enumeration: BasisEnumeration,
    preconditioned: bool,
}

impl SensingMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    pub fn enumeration(&self) -> &BasisEnumeration {
        &self.enumeration
    }

    pub fn is_preconditioned(&self) -> bool {
        self.preconditioned
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// Euclidean norm of every column.
    pub fn column_norms(&self) -> Vec<f64> {
        self.entries.column_iter().map(|c| c.norm()).collect()
    }

    /// Little-endian binary export: the magic, `rows` and `cols` as `u64`,
    /// then the entries column-major as interleaved `(re, im)` `f64` pairs.
    pub fn write_binary(&self, mut w: impl Write) -> std::io::Result<()> {
        write_matrix_binary(&self.entries, &mut w)
    }
}

pub fn write_matrix_binary(a: &DMatrix<Complex64>, w: &mut impl Write) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(24 + 16 * a.len());
    buf.extend_from_slice(MATRIX_MAGIC);
    buf.extend_from_slice(&(a.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(a.ncols() as u64).to_le_bytes());
    for z in a.iter() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn read_matrix_binary(mut r: impl Read) -> Result<DMatrix<Complex64>> {
    let bad = |msg: &str| Error::invalid(format!("matrix file: {msg}"));
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::io("<matrix stream>", e))?;
    if bytes.len() < 24 || &bytes[..8] != MATRIX_MAGIC {
        return Err(bad("missing magic header"));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let (rows, cols) = (word(8) as usize, word(16) as usize);
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(16))
        .ok_or_else(|| bad("dimensions overflow"))?;
    if bytes.len() - 24 != expected {
        return Err(bad("payload length does not match dimensions"));
    }
    let f = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let data = (0..rows * cols).map(|j| Complex64::new(f(24 + 16 * j), f(32 + 16 * j)));
    Ok(DMatrix::from_iterator(rows, cols, data))
}

pub fn write_matrix_file(a: &DMatrix<Complex64>, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix_binary(a, &mut f).map_err(|e| Error::io(path, e))
}

/// Samples the band-limited basis on `pattern`. With `precondition`, row
/// `p` is scaled by `sin^{1/2} θ_p`; rows at the poles then vanish and a
/// note is added to the pattern's provenance.
pub fn build_matrix(pattern: &SamplingPattern, b: usize, precondition: bool) -> Result<SensingMatrix> {
    if pattern.is_empty() {
        return Err(Error::invalid("cannot build a matrix from an empty pattern"));
    }
    let enumeration = enumerate_basis(pattern.domain(), b)?;
    let n = enumeration.len();
    let m = pattern.len();
    let rows: Vec<Vec<Complex64>> = pattern
        .points()
        .par_iter()
        .map(|pt| {
            let mut row = match pattern.domain() {
                Domain::S2 => s2_row(b, pt.theta, pt.phi)?,
                Domain::SO3 => so3_row(b, pt.theta, pt.phi, pt.chi.unwrap_or(0.0))?,
            };
            if precondition {
                let w = precondition_weight(pt.theta);
                row.iter_mut().for_each(|z| *z *= w);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let entries = DMatrix::from_fn(m, n, |p, q| rows[p][q]);

    let mut pattern = pattern.clone();
    if precondition {
        let poles = pattern
            .points()
            .iter()
            .filter(|pt| precondition_weight(pt.theta) == 0.0)
            .count();
        if poles > 0 {
            pattern.provenance.notes.push(format!(
                "preconditioning zeroed {poles} row(s) sampled at a pole"
            ));
        }
    }
    Ok(SensingMatrix {
        entries,
        pattern,
        enumeration,
        preconditioned: precondition,
    })
}

/// Applies the row weights `sin^{1/2} θ_p` to a measurement vector.
pub fn precondition_rhs(y: &[Complex64], thetas: &[f64]) -> Result<Vec<Complex64>> {
    if y.len() != thetas.len() {
        return Err(Error::DimensionMismatch {
            expected: thetas.len(),
            found: y.len(),
        });
    }
    Ok(y.iter()
        .zip(thetas)
        .map(|(z, &t)| z * precondition_weight(t))
        .collect())
}
