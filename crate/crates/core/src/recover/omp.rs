//! Orthogonal matching pursuit with complex correlations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{residual_norm, RecoveryProblem, RecoveryResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OmpOptions {
    /// Maximum number of atoms.
    pub sparsity: usize,
    /// Relative diagonal of `R` below which a selected submatrix counts as
    /// rank deficient.
    pub rank_tol: f64,
}

impl OmpOptions {
    pub fn new(sparsity: usize) -> Self {
        OmpOptions {
            sparsity,
            rank_tol: 1e-12,
        }
    }
}

/// Greedy selection by `|a_qᴴ r| / ‖a_q‖`, least squares on the selected
/// support, stopping at `sparsity` atoms or once `‖r‖ ≤ η`.
pub fn omp_solve(prob: &RecoveryProblem<'_>, opts: &OmpOptions) -> Result<RecoveryResult> {
    let a = prob.a;
    let (m, n) = (a.nrows(), a.ncols());
    if opts.sparsity > m.min(n) {
        return Err(Error::invalid(format!(
            "sparsity {} exceeds min(m, N) = {}",
            opts.sparsity,
            m.min(n)
        )));
    }
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let yv = DVector::from_column_slice(prob.y);
    let mut r = yv.clone();
    let mut support: Vec<usize> = Vec::new();
    let mut coef = DVector::<Complex64>::zeros(0);
    let mut rank_deficient = false;
    let mut iterations = 0;

    while support.len() < opts.sparsity && r.norm() > prob.eta {
        let corr = a.ad_mul(&r);
        let mut best: Option<(usize, f64)> = None;
        for q in 0..n {
            if norms[q] == 0.0 || support.contains(&q) {
                continue;
            }
            let c = corr[q].norm() / norms[q];
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((q, c));
            }
        }
        let Some((q, c)) = best else { break };
        if c == 0.0 {
            break;
        }
        iterations += 1;
        support.push(q);
        let a_s = a.select_columns(&support);
        let (x, deficient) = least_squares(&a_s, &yv, opts.rank_tol);
        rank_deficient |= deficient;
        r = &yv - &a_s * &x;
        coef = x;
    }

    let mut z = vec![Complex64::new(0.0, 0.0); n];
    for (i, &j) in support.iter().enumerate() {
        z[j] = coef[i];
    }
    support.sort_unstable();
    Ok(RecoveryResult {
        residual: residual_norm(a, &z, prob.y),
        z,
        iterations,
        support,
        converged: true,
        certified: false,
        rank_deficient,
    })
}

/// QR least squares, falling back to the SVD minimum-norm solution when
/// `R` has a negligible diagonal entry.
fn least_squares(
    a_s: &DMatrix<Complex64>,
    y: &DVector<Complex64>,
    rank_tol: f64,
) -> (DVector<Complex64>, bool) {
    let qr = a_s.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.ncols()).map(|i| r[(i, i)].norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    if diag.iter().all(|&d| d > rank_tol * dmax) {
        if let Some(x) = r.solve_upper_triangular(&qr.q().ad_mul(y)) {
            return (x, false);
        }
    }
    let svd = a_s.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let x = svd
        .solve(y, rank_tol * smax)
        .expect("U and Vᴴ were requested");
    (x, true)
}
