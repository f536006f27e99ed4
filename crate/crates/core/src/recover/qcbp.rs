//! Quadratically constrained basis pursuit by a primal–dual
//! (Chambolle–Pock) iteration.
//!
//! The constraint is whitened through the thin SVD `A = U Σ Vᴴ`. With
//! `w = Vᴴ z`, `c = Uᴴ y` and `r₀ = ‖y - U c‖`, the ball `‖Az - y‖ ≤ η`
//! becomes the ellipsoid `‖Σ(w - Σ⁻¹c)‖² ≤ η² - r₀²`, and the operator `Vᴴ`
//! has orthonormal rows. For `η = 0` the ellipsoid is a point.
//!
//! Every few iterations the current support is polished: least squares on
//! the support, then the least-norm dual vector `v` with `A_Sᴴ v = sign(z_S)`.
//! If `|a_jᴴ v| ≤ 1` off the support, `v` certifies that the polished point
//! is optimal and it is returned as is.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{l1_norm, residual_norm, support_of, RecoveryProblem, RecoveryResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QcbpOptions {
    pub max_iter: usize,
    /// Relative duality gap at which the iteration stops.
    pub gap_tol: f64,
    /// Feasibility slack, relative to `max(1, ‖y‖)`.
    pub feas_tol: f64,
    /// Iterations between support polishing attempts (`η = 0` only);
    /// 0 disables polishing.
    pub polish_every: usize,
    /// Iterations between duality-gap evaluations.
    pub check_every: usize,
}

impl Default for QcbpOptions {
    fn default() -> Self {
        QcbpOptions {
            max_iter: 20_000,
            gap_tol: 1e-9,
            feas_tol: 1e-8,
            polish_every: 20,
            check_every: 10,
        }
    }
}

impl QcbpOptions {
    /// Iteration cap for phase-transition sweeps. Successful trials stop
    /// early through polishing or the gap test; the cap bounds the cost of
    /// the failing ones, which would otherwise run to the default limit.
    pub fn sweep() -> Self {
        QcbpOptions {
            max_iter: 3000,
            ..Default::default()
        }
    }
}

/// Entries below this fraction of the peak are left out of the polishing
/// support.
const POLISH_CUTOFF: f64 = 1e-4;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Factorization of one sensing matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct QcbpSolver<'a> {
    a: &'a DMatrix<Complex64>,
    /// `U_r` (m × r)
    u: DMatrix<Complex64>,
    /// Nonzero singular values, descending.
    sigma: Vec<f64>,
    /// `V_rᴴ` (r × N)
    vh: DMatrix<Complex64>,
}

impl<'a> QcbpSolver<'a> {
    pub fn new(a: &'a DMatrix<Complex64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::invalid("empty sensing matrix"));
        }
        let svd = a.clone().svd(true, true);
        let (u, vt) = (svd.u.expect("requested U"), svd.v_t.expect("requested Vᴴ"));
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let tol = smax * 1e-12 * a.nrows().max(a.ncols()) as f64;
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > tol)
            .collect();
        let sigma: Vec<f64> = keep.iter().map(|&i| svd.singular_values[i]).collect();
        let u = u.select_columns(&keep);
        let vh = vt.select_rows(&keep);
        Ok(QcbpSolver { a, u, sigma, vh })
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Largest singular value of `A`.
    pub fn spectral_norm(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn solve(&self, y: &[Complex64], eta: f64, opts: &QcbpOptions) -> Result<RecoveryResult> {
        RecoveryProblem::new(self.a, y, eta)?;
        let n = self.a.ncols();
        let y_norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if y_norm <= eta {
            return Ok(finish(self.a, vec![ZERO; n], y, 0, true, true));
        }
        // The fixed primal step makes the iteration count grow with the
        // magnitude of the solution, so solve for unit-norm data.
        let unit: Vec<Complex64> = y.iter().map(|v| v / y_norm).collect();
        let slack = opts.feas_tol * y_norm.max(1.0) / y_norm;
        let mut r = self.solve_unit(&unit, eta / y_norm, slack, y_norm, opts)?;
        for v in &mut r.z {
            *v *= y_norm;
        }
        r.residual = residual_norm(self.a, &r.z, y);
        Ok(r)
    }

    /// `y` has unit norm; `scale` only restores units in error messages.
    fn solve_unit(
        &self,
        y: &[Complex64],
        eta: f64,
        slack: f64,
        scale: f64,
        opts: &QcbpOptions,
    ) -> Result<RecoveryResult> {
        let n = self.a.ncols();

        // Least squares: c = U_rᴴ y, z_ls = V_r Σ⁻¹ c.
        let yv = DVector::from_column_slice(y);
        let c = self.u.ad_mul(&yv);
        let resid_ls = (&yv - &self.u * &c).norm();
        if resid_ls > eta + slack {
            return Err(Error::Infeasible(format!(
                "least-squares residual {:.3e} exceeds the bound {:.3e}",
                resid_ls * scale,
                eta * scale
            )));
        }
        let b_white = DVector::from_iterator(
            self.rank(),
            c.iter().zip(&self.sigma).map(|(ci, s)| ci / s),
        );
        let z_ls = self.vh.ad_mul(&b_white);

        let k = &self.vh;
        let b = b_white;
        let ell = Ellipsoid {
            sigma: &self.sigma,
            radius: (eta * eta - resid_ls * resid_ls).max(0.0).sqrt(),
        };
        let exact = ell.radius == 0.0;

        let step = 0.99;
        let cstep = Complex64::new(step, 0.0);
        let mut z = DVector::<Complex64>::zeros(n);
        let mut z_bar = z.clone();
        let mut v = DVector::<Complex64>::zeros(k.nrows());
        let mut kz = DVector::<Complex64>::zeros(k.nrows());
        let mut khv = DVector::<Complex64>::zeros(n);
        let inv_step = Complex64::new(1.0 / step, 0.0);
        let mut p = DVector::<Complex64>::zeros(k.nrows());
        let mut last_support: Option<Vec<usize>> = None;
        let mut best = (f64::INFINITY, z_ls.clone());

        for it in 1..=opts.max_iter {
            // Dual step: prox of σF* for F the indicator of the ellipsoid,
            // by Moreau: v = x - σ P(x / σ).
            kz.gemv(cstep, k, &z_bar, ZERO);
            v += &kz;
            p.copy_from(&v);
            p *= inv_step;
            ell.project(&mut p, &b);
            v.axpy(-cstep, &p, Complex64::new(1.0, 0.0));
            // Primal step: complex soft thresholding, then extrapolation.
            khv.gemv_ad(cstep, k, &v, ZERO);
            for ((zi, zb), g) in z.iter_mut().zip(z_bar.iter_mut()).zip(khv.iter()) {
                let x = *zi - g;
                let r = x.norm();
                let zn = if r <= step { ZERO } else { x * ((r - step) / r) };
                *zb = zn * 2.0 - *zi;
                *zi = zn;
            }

            if exact && opts.polish_every > 0 && it % opts.polish_every == 0 {
                let peak = z.iter().map(|x| x.norm()).fold(0.0, f64::max);
                let support: Vec<usize> =
                    (0..n).filter(|&i| z[i].norm() > POLISH_CUTOFF * peak).collect();
                if !support.is_empty()
                    && support.len() <= self.rank()
                    && last_support.as_ref() != Some(&support)
                {
                    // Dual guess in data space: Aᴴ u = -Kᴴ v for u = -U Σ⁻¹ v.
                    let u = -(&self.u
                        * DVector::from_iterator(
                            self.rank(),
                            v.iter().zip(&self.sigma).map(|(vi, s)| vi / s),
                        ));
                    if let Some(zp) = polish(self.a, y, &support, slack, &u) {
                        return Ok(finish(self.a, zp, y, it, true, true));
                    }
                    last_support = Some(support);
                }
            }

            if it % opts.check_every == 0 || it == opts.max_iter {
                // Rows of K are orthonormal, so this lands exactly on the
                // constraint set.
                let w = k * &z;
                let mut wp = w.clone();
                ell.project(&mut wp, &b);
                let z_feas = &z - k.ad_mul(&(w - wp));
                let primal = l1_norm(z_feas.as_slice());
                let khv = k.ad_mul(&v);
                let scale = khv.iter().map(|x| x.norm()).fold(1.0, f64::max);
                let vd = &v / Complex64::new(scale, 0.0);
                let dual = -b.dotc(&vd).re - ell.radius * ell.dual_norm(&vd);
                if primal < best.0 {
                    best = (primal, z_feas.clone());
                }
                if primal - dual <= opts.gap_tol * primal.max(f64::MIN_POSITIVE) {
                    // A sparse refit that is no worse than z_feas is within
                    // the same gap of the dual bound; prefer it, since the
                    // iterate keeps gap-sized residue off the support.
                    if exact {
                        let peak = z_feas.iter().map(|x| x.norm()).fold(0.0, f64::max);
                        let support: Vec<usize> =
                            (0..n).filter(|&i| z_feas[i].norm() > POLISH_CUTOFF * peak).collect();
                        if let Some(f) = fit(self.a, y, &support, slack) {
                            let zp = f.expand(n);
                            if l1_norm(&zp) <= primal {
                                return Ok(finish(self.a, zp, y, it, true, false));
                            }
                        }
                    }
                    return Ok(finish(self.a, z_feas.as_slice().to_vec(), y, it, true, false));
                }
            }
        }
        Ok(finish(self.a, best.1.as_slice().to_vec(), y, opts.max_iter, false, false))
    }
}

/// `{w : ‖Σ(w - b)‖ ≤ radius}` with `Σ` diagonal and positive.
struct Ellipsoid<'s> {
    sigma: &'s [f64],
    radius: f64,
}

impl Ellipsoid<'_> {
    /// Euclidean projection of `x`, in place.
    fn project(&self, x: &mut DVector<Complex64>, b: &DVector<Complex64>) {
        *x -= b;
        if self.radius == 0.0 {
            x.fill(ZERO);
        } else {
            let norm = |mu: f64| -> (f64, f64) {
                // φ(μ) = Σ s²|u|²/(1+μs²)² and -φ'(μ)/2.
                let mut phi = 0.0;
                let mut dphi = 0.0;
                for (u, &s) in x.iter().zip(self.sigma) {
                    let s2 = s * s;
                    let d = 1.0 + mu * s2;
                    let t = s2 * u.norm_sqr() / (d * d);
                    phi += t;
                    dphi += t * s2 / d;
                }
                (phi, dphi)
            };
            let (phi0, _) = norm(0.0);
            if phi0.sqrt() > self.radius {
                // Newton on 1/√φ(μ) - 1/radius, which is concave and
                // increasing, so iterates from μ = 0 rise monotonically.
                let mut mu = 0.0;
                for _ in 0..100 {
                    let (phi, dphi) = norm(mu);
                    let f = 1.0 / phi.sqrt() - 1.0 / self.radius;
                    if f >= -1e-15 / self.radius {
                        break;
                    }
                    let step = f / (dphi * phi.powf(-1.5));
                    mu -= step;
                    if step.abs() <= 1e-15 * mu {
                        break;
                    }
                }
                for (u, &s) in x.iter_mut().zip(self.sigma) {
                    *u /= 1.0 + mu * s * s;
                }
            }
        }
        *x += b;
    }

    /// `‖Σ⁻¹ v‖`, the support function of the centred ellipsoid over the
    /// radius.
    fn dual_norm(&self, v: &DVector<Complex64>) -> f64 {
        v.iter()
            .zip(self.sigma)
            .map(|(x, s)| x.norm_sqr() / (s * s))
            .sum::<f64>()
            .sqrt()
    }
}

fn finish(
    a: &DMatrix<Complex64>,
    z: Vec<Complex64>,
    y: &[Complex64],
    iterations: usize,
    converged: bool,
    certified: bool,
) -> RecoveryResult {
    let peak = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let support = if peak == 0.0 {
        Vec::new()
    } else {
        support_of(&z, 1e-10 * peak)
    };
    RecoveryResult {
        residual: residual_norm(a, &z, y),
        z,
        iterations,
        support,
        converged,
        certified,
        rank_deficient: false,
    }
}

/// Least squares on `support` if it fits `y` within `slack`. Negligible
/// coefficients are pruned and the fit redone, so the returned support may
/// be smaller. Also returns the QR factors of the final `A_S`.
fn fit(
    a: &DMatrix<Complex64>,
    y: &[Complex64],
    support: &[usize],
    slack: f64,
) -> Option<Fit> {
    if support.is_empty() || support.len() > a.nrows() {
        return None;
    }
    let a_s = a.select_columns(support);
    let qr = a_s.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let diag: Vec<f64> = (0..r.ncols()).map(|i| r[(i, i)].norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    if diag.iter().any(|&d| d <= 1e-12 * dmax) {
        return None;
    }
    let yv = DVector::from_column_slice(y);
    let zs = r.solve_upper_triangular(&q.ad_mul(&yv))?;
    if (&a_s * &zs - &yv).norm() > slack {
        return None;
    }
    // Iterates often carry a few tiny spurious entries; drop them and retry.
    let peak = zs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let kept: Vec<usize> = (0..support.len())
        .filter(|&i| zs[i].norm() > 1e-7 * peak)
        .map(|i| support[i])
        .collect();
    if kept.len() < support.len() {
        return if kept.is_empty() { None } else { fit(a, y, &kept, slack) };
    }
    Some(Fit { support: support.to_vec(), a_s, zs, q, r })
}

struct Fit {
    support: Vec<usize>,
    a_s: DMatrix<Complex64>,
    zs: DVector<Complex64>,
    q: DMatrix<Complex64>,
    r: DMatrix<Complex64>,
}

impl Fit {
    fn expand(&self, n: usize) -> Vec<Complex64> {
        let mut z = vec![ZERO; n];
        for (i, &j) in self.support.iter().enumerate() {
            z[j] = self.zs[i];
        }
        z
    }
}

/// Least squares on `support`, returned only if it fits `y` within `slack`
/// and a dual certificate proves it ℓ₁-optimal.
fn polish(
    a: &DMatrix<Complex64>,
    y: &[Complex64],
    support: &[usize],
    slack: f64,
    guess: &DVector<Complex64>,
) -> Option<Vec<Complex64>> {
    let f = fit(a, y, support, slack)?;
    let sign = f.zs.map(|x| x / x.norm());
    let mut on = vec![false; a.ncols()];
    for &j in &f.support {
        on[j] = true;
    }
    // Candidate v: the iteration's dual guess corrected by the least-norm
    // solution of A_Sᴴ d = sign - A_Sᴴ v, so that A_Sᴴ v = sign holds. With
    // A_S = QR the least-norm d is Q R⁻ᴴ (·).
    let certifies = |base: &DVector<Complex64>| -> bool {
        let rhs = &sign - f.a_s.ad_mul(base);
        let Some(t) = f.r.adjoint().solve_lower_triangular(&rhs) else {
            return false;
        };
        let v = base + &f.q * t;
        let corr = a.ad_mul(&v);
        (0..a.ncols()).filter(|&j| !on[j]).all(|j| corr[j].norm() <= 1.0 + 1e-9)
    };
    if !certifies(guess) && !certifies(&DVector::zeros(a.nrows())) {
        return None;
    }
    Some(f.expand(a.ncols()))
}

/// One-shot QCBP solve.
pub fn qcbp_solve(prob: &RecoveryProblem<'_>, opts: &QcbpOptions) -> Result<RecoveryResult> {
    QcbpSolver::new(prob.a)?.solve(prob.y, prob.eta, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian_matrix(m: usize, n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn apply(a: &DMatrix<Complex64>, g: &[Complex64]) -> Vec<Complex64> {
        (a * DVector::from_column_slice(g)).as_slice().to_vec()
    }

    #[test]
    fn orthonormal_columns_recover_exactly() {
        let a = gaussian_matrix(12, 6, 1).qr().q();
        let mut g = vec![ZERO; 6];
        g[2] = Complex64::new(1.5, -0.3);
        g[5] = Complex64::new(-0.2, 0.9);
        let y = apply(&a, &g);
        let r = qcbp_solve(&RecoveryProblem::new(&a, &y, 0.0).unwrap(), &Default::default()).unwrap();
        assert!(r.converged);
        for (x, t) in r.z.iter().zip(&g) {
            assert!((x - t).norm() < 1e-6);
        }
    }

    #[test]
    fn sparse_recovery_is_certified() {
        let a = gaussian_matrix(20, 50, 2);
        let mut g = vec![ZERO; 50];
        g[3] = Complex64::new(1.0, 2.0);
        g[17] = Complex64::new(-0.5, 0.1);
        g[40] = Complex64::new(0.0, -1.0);
        let y = apply(&a, &g);
        let r = qcbp_solve(&RecoveryProblem::new(&a, &y, 0.0).unwrap(), &Default::default()).unwrap();
        assert!(r.certified && r.converged);
        assert_eq!(r.support, vec![3, 17, 40]);
        assert!(super::super::relative_error(&r.z, &g) < 1e-10);
        assert!(r.residual < 1e-10);
    }

    #[test]
    fn gap_stopping_without_polish() {
        let a = gaussian_matrix(20, 50, 3);
        let mut g = vec![ZERO; 50];
        g[7] = Complex64::new(1.0, 0.0);
        g[8] = Complex64::new(0.0, 1.0);
        let y = apply(&a, &g);
        let opts = QcbpOptions {
            polish_every: 0,
            max_iter: 200_000,
            ..Default::default()
        };
        let r = qcbp_solve(&RecoveryProblem::new(&a, &y, 0.0).unwrap(), &opts).unwrap();
        assert!(r.converged && !r.certified);
        assert!(super::super::relative_error(&r.z, &g) < 1e-6);
        assert!(r.residual < 1e-8);
    }

    #[test]
    fn noisy_constraint_is_feasible() {
        let a = gaussian_matrix(25, 40, 4);
        let mut g = vec![ZERO; 40];
        g[1] = Complex64::new(1.0, 1.0);
        g[30] = Complex64::new(-1.0, 0.5);
        let mut y = apply(&a, &g);
        y[0] += Complex64::new(0.01, -0.01);
        let eta = 0.02;
        let r = qcbp_solve(&RecoveryProblem::new(&a, &y, eta).unwrap(), &Default::default()).unwrap();
        assert!(r.residual <= eta * (1.0 + 1e-8) + 1e-8);
        assert!(super::super::relative_error(&r.z, &g) < 0.05);
    }

    #[test]
    fn zero_data_gives_zero() {
        let a = gaussian_matrix(5, 8, 5);
        let y = vec![ZERO; 5];
        let r = qcbp_solve(&RecoveryProblem::new(&a, &y, 0.0).unwrap(), &Default::default()).unwrap();
        assert!(r.z.iter().all(|v| *v == ZERO) && r.converged);
    }

    #[test]
    fn inconsistent_system_is_infeasible() {
        let a = gaussian_matrix(10, 3, 6);
        let y: Vec<Complex64> = (0..10).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let err = qcbp_solve(&RecoveryProblem::new(&a, &y, 0.0).unwrap(), &Default::default());
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }
}
