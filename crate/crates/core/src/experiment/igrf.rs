//! Geomagnetic-style field reconstruction from real Gauss coefficients.
//!
//! The potential on a sphere of radius `r` is
//!
//! ```text
//! V(θ, φ) = a Σ_{l=1}^{B-1} Σ_{k=0}^{l} (a/r)^{l+1} (g_l^k cos kφ + h_l^k sin kφ) S_l^k(cos θ)
//! ```
//!
//! with Schmidt semi-normalized `S_l^k = (-1)^k sqrt((2 - δ_k0)(l-k)!/(l+k)!) P_l^k`,
//! where `P_l^k` carries the Condon–Shortley phase so the `(-1)^k` cancels it.
//! `θ` is colatitude; the projection grid is laid out in latitude and
//! converted at this boundary.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::solve;
use crate::error::{Error, Result};
use crate::patterns::{Domain, SamplingPattern};
use crate::recover::{relative_error, SolverKind};
use crate::sensing::build_matrix;
use crate::specfun::{assoc_legendre, ln_factorial, s2_row};

/// Mean Earth radius in kilometres, the customary reference radius.
pub const EARTH_RADIUS_KM: f64 = 6371.2;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussCoefficientTable {
    pub epoch: String,
    /// Degrees run over `1..b`.
    pub b: usize,
    /// Reference radius.
    pub a: f64,
    /// Evaluation radius.
    pub r: f64,
    g: Vec<f64>,
    h: Vec<f64>,
}

fn tri(l: usize, k: usize) -> usize {
    l * (l + 1) / 2 + k - 1
}

impl GaussCoefficientTable {
    pub fn zeros(b: usize) -> Result<Self> {
        if b < 2 {
            return Err(Error::invalid(format!("coefficient table needs B >= 2, got {b}")));
        }
        let len = b * (b + 1) / 2 - 1;
        Ok(GaussCoefficientTable {
            epoch: String::new(),
            b,
            a: EARTH_RADIUS_KM,
            r: EARTH_RADIUS_KM,
            g: vec![0.0; len],
            h: vec![0.0; len],
        })
    }

    fn check(&self, l: usize, k: usize) {
        assert!(l >= 1 && l < self.b && k <= l, "(l, k) = ({l}, {k}) outside the table");
    }

    pub fn g(&self, l: usize, k: usize) -> f64 {
        self.check(l, k);
        self.g[tri(l, k)]
    }

    pub fn h(&self, l: usize, k: usize) -> f64 {
        self.check(l, k);
        self.h[tri(l, k)]
    }

    pub fn set_g(&mut self, l: usize, k: usize, v: f64) {
        self.check(l, k);
        self.g[tri(l, k)] = v;
    }

    /// `h_l^0` does not enter the expansion and must stay zero.
    pub fn set_h(&mut self, l: usize, k: usize, v: f64) {
        self.check(l, k);
        assert!(k > 0 || v == 0.0, "h_l^0 is not a coefficient");
        self.h[tri(l, k)] = v;
    }

    /// Reads a whitespace table of `g|h l k value...` lines.
    ///
    /// An optional header line starting with `g/h` names the value columns
    /// (epochs); `epoch` selects one of them, otherwise the first value
    /// column is used. Lines starting with `#` are skipped. Every `g_l^k`
    /// and every `h_l^k` with `k > 0` up to the largest degree must appear.
    pub fn parse(text: &str, path: &str, epoch: Option<&str>) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut column = 0usize;
        let mut epoch_label = epoch.unwrap_or("").to_string();
        let mut rows: Vec<(usize, bool, usize, usize, f64)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = t.split_whitespace().collect();
            if cols[0] == "g/h" {
                let labels = cols.get(3..).unwrap_or(&[]);
                match epoch {
                    Some(e) => {
                        column = labels
                            .iter()
                            .position(|c| *c == e)
                            .ok_or_else(|| err(line, format!("epoch '{e}' not in header")))?;
                    }
                    None => {
                        epoch_label = labels.first().map_or(String::new(), |s| s.to_string());
                    }
                }
                continue;
            }
            let is_g = match cols[0] {
                "g" => true,
                "h" => false,
                other => return Err(err(line, format!("expected 'g' or 'h', found '{other}'"))),
            };
            let int = |j: usize, what: &str| -> Result<usize> {
                cols.get(j)
                    .ok_or_else(|| err(line, format!("missing {what}")))?
                    .parse()
                    .map_err(|_| err(line, format!("bad {what} '{}'", cols[j])))
            };
            let (l, k) = (int(1, "degree")?, int(2, "order")?);
            if l == 0 || k > l || (!is_g && k == 0) {
                return Err(err(line, format!("invalid (l, k) = ({l}, {k})")));
            }
            let raw_v = cols
                .get(3 + column)
                .ok_or_else(|| err(line, "missing value".to_string()))?;
            let v: f64 = raw_v
                .parse()
                .map_err(|_| err(line, format!("bad value '{raw_v}'")))?;
            rows.push((line, is_g, l, k, v));
        }
        let lmax = rows
            .iter()
            .map(|r| r.2)
            .max()
            .ok_or_else(|| err(0, "no coefficients".to_string()))?;
        let mut table = GaussCoefficientTable::zeros(lmax + 1)?;
        table.epoch = epoch_label;
        let mut seen = vec![[false; 2]; table.g.len()];
        for (line, is_g, l, k, v) in rows {
            let slot = &mut seen[tri(l, k)][usize::from(!is_g)];
            if *slot {
                return Err(err(line, format!("duplicate coefficient ({l}, {k})")));
            }
            *slot = true;
            if is_g {
                table.set_g(l, k, v);
            } else {
                table.set_h(l, k, v);
            }
        }
        for l in 1..=lmax {
            for k in 0..=l {
                let [g, h] = seen[tri(l, k)];
                if !g || (k > 0 && !h) {
                    let which = if !g { 'g' } else { 'h' };
                    return Err(err(0, format!("missing coefficient {which} {l} {k}")));
                }
            }
        }
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("g/h l k {}\n", if self.epoch.is_empty() { "value" } else { &self.epoch });
        for l in 1..self.b {
            for k in 0..=l {
                out.push_str(&format!("g {l} {k} {:?}\n", self.g(l, k)));
                if k > 0 {
                    out.push_str(&format!("h {l} {k} {:?}\n", self.h(l, k)));
                }
            }
        }
        out
    }

    /// A table whose complex form has exactly `s` nonzeros.
    ///
    /// Terms are drawn without replacement; a zonal term contributes one
    /// complex coefficient and a sectoral or tesseral term two, so terms
    /// that would overshoot `s` are skipped. Values are Gaussian with a
    /// 1000 nT scale.
    pub fn synthetic(b: usize, s: usize, seed: u64) -> Result<Self> {
        let mut table = GaussCoefficientTable::zeros(b)?;
        table.epoch = "synthetic".into();
        if s > b * b - 1 {
            return Err(Error::invalid(format!("sparsity {s} exceeds {} coefficients", b * b - 1)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<(usize, usize)> = (1..b).flat_map(|l| (0..=l).map(move |k| (l, k))).collect();
        let mut count = 0;
        for i in sample(&mut rng, terms.len(), terms.len()) {
            let (l, k) = terms[i];
            let weight = if k == 0 { 1 } else { 2 };
            if count + weight > s {
                continue;
            }
            count += weight;
            let mut draw = || loop {
                let v: f64 = StandardNormal.sample(&mut rng);
                if v != 0.0 {
                    break 1000.0 * v;
                }
            };
            table.set_g(l, k, draw());
            if k > 0 {
                let v = draw();
                table.set_h(l, k, v);
            }
            if count == s {
                break;
            }
        }
        Ok(table)
    }

    /// `a (a/r)^{l+1} (-1)^k sqrt(2 - δ_k0) sqrt(4π/(2l+1))`: the factor
    /// turning `S_l^k` into the orthonormal amplitude of `Y_l^k`.
    fn scale(&self, l: usize, k: usize) -> f64 {
        let radial = self.a * (self.a / self.r).powi(l as i32 + 1);
        let parity = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let schmidt = if k == 0 { 1.0 } else { 2f64.sqrt() };
        radial * parity * schmidt * (4.0 * PI / (2 * l + 1) as f64).sqrt()
    }

    /// Coefficients over `Y_l^k` in the order `q = l² + (k + l)`, length `B²`.
    pub fn to_complex(&self) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.b * self.b];
        for l in 1..self.b {
            let base = l * l + l;
            let sc = self.scale(l, 0);
            c[base] = Complex64::new(sc * self.g(l, 0), 0.0);
            for k in 1..=l {
                let sc = self.scale(l, k);
                let half = Complex64::new(self.g(l, k), -self.h(l, k)) * (0.5 * sc);
                let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
                c[base + k] = half;
                c[base - k] = half.conj() * parity;
            }
        }
        c
    }

    /// Inverse of [`GaussCoefficientTable::to_complex`]. Coefficients that
    /// are not conjugate symmetric are projected onto the real field.
    pub fn from_complex(c: &[Complex64], b: usize, a: f64, r: f64) -> Result<Self> {
        if c.len() != b * b {
            return Err(Error::DimensionMismatch {
                expected: b * b,
                found: c.len(),
            });
        }
        let mut t = GaussCoefficientTable::zeros(b)?;
        t.a = a;
        t.r = r;
        for l in 1..b {
            let base = l * l + l;
            t.set_g(l, 0, c[base].re / t.scale(l, 0));
            for k in 1..=l {
                let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
                let avg = (c[base + k] + c[base - k].conj() * parity) / t.scale(l, k);
                t.set_g(l, k, avg.re);
                t.set_h(l, k, -avg.im);
            }
        }
        Ok(t)
    }

    /// Evaluates the real expansion directly from `P_l^k`.
    pub fn field(&self, theta: f64, phi: f64) -> Result<f64> {
        let x = theta.cos();
        let mut total = 0.0;
        for l in 1..self.b {
            let radial = self.a * (self.a / self.r).powi(l as i32 + 1);
            for k in 0..=l {
                let (g, h) = (self.g(l, k), self.h(l, k));
                if g == 0.0 && h == 0.0 {
                    continue;
                }
                let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
                let ratio = (ln_factorial(l - k) - ln_factorial(l + k)).exp();
                let schmidt = parity * ((if k == 0 { 1.0 } else { 2.0 }) * ratio).sqrt();
                let p = assoc_legendre(l as i32, k as i32, x)?;
                let kf = k as f64 * phi;
                total += radial * (g * kf.cos() + h * kf.sin()) * schmidt * p;
            }
        }
        Ok(total)
    }

    pub fn nonzeros(&self) -> usize {
        self.to_complex().iter().filter(|c| c.norm() > 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    /// Degrees north.
    pub lat: f64,
    /// Degrees east in `[0, 360)`.
    pub lon: f64,
    pub truth: f64,
    pub recovered: f64,
}

#[derive(Debug, Clone)]
pub struct IgrfReport {
    pub recovered: GaussCoefficientTable,
    pub coef_error: f64,
    /// Relative ℓ₂ field error over the projection grid.
    pub grid_error: f64,
    pub residual: f64,
    pub converged: bool,
    pub grid: Vec<GridPoint>,
}

/// `n_lat` latitudes from -90° to 90° and `2 n_lat` longitudes from 0°.
pub fn projection_grid(n_lat: usize) -> Vec<(f64, f64)> {
    let n_lon = 2 * n_lat;
    let mut out = Vec::with_capacity(n_lat * n_lon);
    for i in 0..n_lat {
        let lat = -90.0 + 180.0 * i as f64 / (n_lat - 1).max(1) as f64;
        for j in 0..n_lon {
            out.push((lat, 360.0 * j as f64 / n_lon as f64));
        }
    }
    out
}

fn colatitude(lat_deg: f64) -> f64 {
    (90.0 - lat_deg).to_radians().clamp(0.0, PI)
}

/// Samples the field of `table` on `pattern`, recovers the complex
/// coefficients with `solver` and compares both fields on the grid.
///
/// With `eps > 0` each sample carries noise uniform in `[-eps, eps]` and
/// the solver bound is `√m · eps`.
pub fn igrf_reconstruct(
    table: &GaussCoefficientTable,
    pattern: &SamplingPattern,
    solver: &SolverKind,
    eps: f64,
    seed: u64,
    n_lat: usize,
) -> Result<IgrfReport> {
    if pattern.domain() != Domain::S2 {
        return Err(Error::invalid("field reconstruction needs a pattern on S2"));
    }
    let b = table.b;
    let a = build_matrix(pattern, b, false)?.into_entries();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<Complex64> = pattern
        .points()
        .iter()
        .map(|pt| {
            let noise = if eps > 0.0 { rng.random_range(-eps..=eps) } else { 0.0 };
            table.field(pt.theta, pt.phi).map(|v| Complex64::new(v + noise, 0.0))
        })
        .collect::<Result<_>>()?;
    let eta = (pattern.len() as f64).sqrt() * eps;
    let result = solve(&a, &y, eta, solver)?;
    let recovered = GaussCoefficientTable::from_complex(&result.z, b, table.a, table.r)?;
    let truth_c = table.to_complex();

    let mut grid = Vec::new();
    for (lat, lon) in projection_grid(n_lat) {
        let row = DVector::from_vec(s2_row(b, colatitude(lat), lon.to_radians())?);
        let eval = |c: &[Complex64]| row.iter().zip(c).map(|(y, z)| y * z).sum::<Complex64>().re;
        grid.push(GridPoint {
            lat,
            lon,
            truth: eval(&truth_c),
            recovered: eval(&result.z),
        });
    }
    let truth: Vec<Complex64> = grid.iter().map(|p| Complex64::new(p.truth, 0.0)).collect();
    let rec: Vec<Complex64> = grid.iter().map(|p| Complex64::new(p.recovered, 0.0)).collect();
    Ok(IgrfReport {
        coef_error: relative_error(&result.z, &truth_c),
        grid_error: relative_error(&rec, &truth),
        residual: result.residual,
        converged: result.converged,
        recovered,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{regular_pattern, RegularKind};
    use crate::recover::QcbpOptions;

    #[test]
    fn complex_mapping_round_trips() {
        let mut t = GaussCoefficientTable::synthetic(8, 40, 3).unwrap();
        t.r = 1.1 * t.a;
        let back = GaussCoefficientTable::from_complex(&t.to_complex(), 8, t.a, t.r).unwrap();
        for l in 1..8 {
            for k in 0..=l {
                assert!((back.g(l, k) - t.g(l, k)).abs() <= 1e-12 * t.g(l, k).abs().max(1.0));
                assert!((back.h(l, k) - t.h(l, k)).abs() <= 1e-12 * t.h(l, k).abs().max(1.0));
            }
        }
    }

    #[test]
    fn complex_form_reproduces_real_field() {
        let t = GaussCoefficientTable::synthetic(6, 20, 1).unwrap();
        let c = t.to_complex();
        for (theta, phi) in [(0.3, 1.0), (1.2, 4.0), (2.9, 0.1), (0.0, 0.0), (PI, 2.0)] {
            let row = s2_row(6, theta, phi).unwrap();
            let z: Complex64 = row.iter().zip(&c).map(|(y, z)| y * z).sum();
            let direct = t.field(theta, phi).unwrap();
            assert!((z.re - direct).abs() < 1e-9 * direct.abs().max(1.0), "{theta} {phi}");
            assert!(z.im.abs() < 1e-9 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn synthetic_has_exact_sparsity() {
        for s in [1, 2, 7, 15, 30] {
            assert_eq!(GaussCoefficientTable::synthetic(14, s, s as u64).unwrap().nonzeros(), s);
        }
    }

    #[test]
    fn dipole_field_matches_closed_form() {
        // g_1^0 alone gives a g cos θ on r = a.
        let mut t = GaussCoefficientTable::zeros(2).unwrap();
        t.set_g(1, 0, -30000.0);
        for theta in [0.0, 0.7, 2.0] {
            let v = t.field(theta, 0.4).unwrap();
            assert!((v - t.a * -30000.0 * theta.cos()).abs() < 1e-6 * t.a * 30000.0);
        }
    }

    #[test]
    fn parse_and_print() {
        let text = "# sample\ng/h n m 2010.0 2015.0\ng 1 0 -29496.6 -29442.0\ng 1 1 -1586.3 -1501.0\nh 1 1 4944.4 4797.1\n";
        let t = GaussCoefficientTable::parse(text, "t", Some("2015.0")).unwrap();
        assert_eq!(t.b, 2);
        assert_eq!(t.g(1, 1), -1501.0);
        assert_eq!(t.epoch, "2015.0");
        let first = GaussCoefficientTable::parse(text, "t", None).unwrap();
        assert_eq!(first.h(1, 1), 4944.4);
        assert_eq!(GaussCoefficientTable::parse(&first.to_text(), "t", None).unwrap(), first);
    }

    #[test]
    fn parse_errors() {
        let missing = "g 1 0 1.0\ng 1 1 2.0\n";
        assert!(matches!(
            GaussCoefficientTable::parse(missing, "t", None),
            Err(Error::Parse { message, .. }) if message.contains("h 1 1")
        ));
        let bad = "g 1 0 1.0\nq 1 1 2.0\n";
        assert!(matches!(
            GaussCoefficientTable::parse(bad, "t", None),
            Err(Error::Parse { line: 2, .. })
        ));
        let zonal_h = "g 1 0 1.0\nh 1 0 2.0\n";
        assert!(GaussCoefficientTable::parse(zonal_h, "t", None).is_err());
    }

    #[test]
    fn zero_table_gives_zero_error() {
        let t = GaussCoefficientTable::zeros(5).unwrap();
        let p = regular_pattern(RegularKind::Hammersley, 20, Domain::S2).unwrap();
        let r = igrf_reconstruct(&t, &p, &SolverKind::Qcbp(QcbpOptions::default()), 0.0, 0, 7).unwrap();
        assert_eq!(r.grid_error, 0.0);
        assert!(r.grid.iter().all(|g| g.truth == 0.0 && g.recovered == 0.0));
    }

    #[test]
    fn rejects_so3_pattern() {
        let t = GaussCoefficientTable::zeros(3).unwrap();
        let p = regular_pattern(RegularKind::Hammersley, 20, Domain::SO3).unwrap();
        assert!(igrf_reconstruct(&t, &p, &SolverKind::Omp, 0.0, 0, 5).is_err());
    }
}
