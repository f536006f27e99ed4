//! Coherence-minimizing pattern search over azimuths (and polarizations).
//!
//! Elevations stay fixed. Column pairs of equal order have inner products
//! that do not depend on the free angles, so their maximum is a floor the
//! search cannot beat (the elevation lower bound). Every other pair
//! `(q, r)` has
//!
//! `G_qr = Σ_p w_p,qr · exp(-i(Δk φ_p + Δn χ_p))`
//!
//! with `w_p,qr` the product of the column-normalized real amplitudes.
//! Moving one angle changes each `G_qr` by a single term, so a candidate
//! costs one pass over the pairs and is usually rejected after a handful.

use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coherence::{elevation_lower_bound, mutual_coherence};
use crate::error::{Error, Result};
use crate::patterns::{
    derive_seed, equispaced_elevation, wrap_angle, Domain, SamplingPattern, Source, TWO_PI,
};
use crate::sensing::{build_matrix, enumerate_basis};
use crate::specfun::{s2_amplitudes, so3_amplitudes};

/// Pairs checked first when screening a candidate.
const HOT_PAIRS: usize = 64;
/// Accepted moves between full Gram recomputations.
const REFRESH_EVERY: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Initial step Δ₀ in radians.
    pub delta0: f64,
    /// Step decay λ ∈ (0, 1) applied on every rejected iteration.
    pub lambda: f64,
    /// Iteration cap.
    pub k_max: usize,
    /// Stop once `μ - μ_LB ≤ eps`.
    pub eps: f64,
    /// Seed for the random initial angles.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            delta0: std::f64::consts::PI / 8.0,
            lambda: 0.5,
            k_max: 5000,
            eps: 1e-4,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(Error::invalid(format!("delta0 must be positive, got {}", self.delta0)));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::invalid(format!("lambda must lie in (0, 1), got {}", self.lambda)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid(format!("eps must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    KMax,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Tolerance => "tolerance",
            StopReason::KMax => "k_max",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// Objective after this iteration.
    pub mu: f64,
    /// Step used in this iteration.
    pub delta: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct OptimizerTrace {
    pub records: Vec<IterationRecord>,
    pub initial_mu: f64,
    pub final_mu: f64,
    pub lower_bound: f64,
    pub pattern: SamplingPattern,
    pub stop: StopReason,
    pub elapsed: Duration,
}

pub const TRACE_CSV_HEADER: &str = "iter,mu,delta,accepted";

impl OptimizerTrace {
    /// Rows matching [`TRACE_CSV_HEADER`], one per iteration.
    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        self.records.iter().map(|r| {
            format!(
                "{},{:.16e},{:.16e},{}",
                r.iter, r.mu, r.delta, r.accepted as u8
            )
        })
    }
}

/// Phase group of a pair: `exp(-i(a φ + b χ))`.
#[derive(Debug, Clone, Copy)]
struct Group {
    a: i32,
    b: i32,
    start: usize,
    end: usize,
}

/// Incrementally maintained Gram entries of the angle-dependent pairs.
#[derive(Debug, Clone)]
pub struct IncrementalObjective {
    domain: Domain,
    m: usize,
    floor: f64,
    groups: Vec<Group>,
    /// Pair weights, `weights[p * pairs + j]`.
    weights: Vec<f64>,
    pairs: usize,
    gram: Vec<Complex64>,
    /// Angles: `φ_0..φ_{m-1}` then, on SO(3), `χ_0..χ_{m-1}`.
    angles: Vec<f64>,
    hot: Vec<usize>,
    max_sq: f64,
    accepted_since_refresh: usize,
}

impl IncrementalObjective {
    /// Sets up the objective for fixed elevations. `angles` holds φ and,
    /// on SO(3), χ.
    pub fn new(thetas: &[f64], domain: Domain, b: usize, angles: &[f64]) -> Result<Self> {
        let m = thetas.len();
        let dim = match domain {
            Domain::S2 => m,
            Domain::SO3 => 2 * m,
        };
        if angles.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: angles.len(),
            });
        }
        let basis = enumerate_basis(domain, b)?;
        let n = basis.len();
        if n < 2 {
            return Err(Error::invalid("bandwidth 1 has a single column"));
        }
        let amps: Vec<Vec<f64>> = thetas
            .iter()
            .map(|&t| match domain {
                Domain::S2 => s2_amplitudes(b, t),
                Domain::SO3 => so3_amplitudes(b, t),
            })
            .collect::<Result<_>>()?;
        let mut inv_norm = vec![0.0; n];
        for (q, inv) in inv_norm.iter_mut().enumerate() {
            let s: f64 = amps.iter().map(|row| row[q] * row[q]).sum();
            if s == 0.0 {
                return Err(Error::ZeroColumn(q));
            }
            *inv = 1.0 / s.sqrt();
        }
        let idx = basis.indices();

        // Bucket pairs by phase group; collect the fixed-pair floor.
        let mut buckets: std::collections::BTreeMap<(i32, i32), Vec<(usize, usize)>> =
            Default::default();
        let mut floor: f64 = 0.0;
        for r in 1..n {
            for q in 0..r {
                let (a, bb) = match domain {
                    Domain::S2 => (idx[q].k - idx[r].k, 0),
                    Domain::SO3 => (idx[r].k - idx[q].k, idx[r].n - idx[q].n),
                };
                if a == 0 && bb == 0 {
                    let dot: f64 = amps.iter().map(|row| row[q] * row[r]).sum();
                    floor = floor.max((dot * inv_norm[q] * inv_norm[r]).abs());
                } else {
                    buckets.entry((a, bb)).or_default().push((q, r));
                }
            }
        }
        let mut groups = Vec::with_capacity(buckets.len());
        let mut pair_list = Vec::new();
        for ((a, bb), list) in buckets {
            let start = pair_list.len();
            pair_list.extend(list);
            groups.push(Group {
                a,
                b: bb,
                start,
                end: pair_list.len(),
            });
        }
        let pairs = pair_list.len();
        let mut weights = vec![0.0; m * pairs];
        for (p, row) in amps.iter().enumerate() {
            let w = &mut weights[p * pairs..(p + 1) * pairs];
            for (j, &(q, r)) in pair_list.iter().enumerate() {
                w[j] = row[q] * inv_norm[q] * row[r] * inv_norm[r];
            }
        }
        let mut obj = IncrementalObjective {
            domain,
            m,
            floor: floor.min(1.0),
            groups,
            weights,
            pairs,
            gram: vec![Complex64::new(0.0, 0.0); pairs],
            angles: angles.iter().map(|&x| wrap_angle(x)).collect(),
            hot: Vec::new(),
            max_sq: 0.0,
            accepted_since_refresh: 0,
        };
        obj.refresh();
        Ok(obj)
    }

    fn phase(g: &Group, phi: f64, chi: f64) -> Complex64 {
        Complex64::from_polar(1.0, -(g.a as f64 * phi + g.b as f64 * chi))
    }

    fn point_angles(&self, p: usize) -> (f64, f64) {
        match self.domain {
            Domain::S2 => (self.angles[p], 0.0),
            Domain::SO3 => (self.angles[p], self.angles[self.m + p]),
        }
    }

    /// Recomputes every Gram entry from scratch.
    pub fn refresh(&mut self) {
        let mut gram = vec![Complex64::new(0.0, 0.0); self.pairs];
        for p in 0..self.m {
            let (phi, chi) = self.point_angles(p);
            let w = &self.weights[p * self.pairs..(p + 1) * self.pairs];
            for g in &self.groups {
                let z = Self::phase(g, phi, chi);
                for j in g.start..g.end {
                    gram[j] += w[j] * z;
                }
            }
        }
        self.gram = gram;
        self.accepted_since_refresh = 0;
        self.rebuild_hot();
    }

    fn rebuild_hot(&mut self) {
        let mut order: Vec<usize> = (0..self.pairs).collect();
        let key = |j: &usize| self.gram[*j].norm_sqr();
        let k = HOT_PAIRS.min(order.len());
        if k < order.len() {
            order.select_nth_unstable_by(k, |x, y| key(y).total_cmp(&key(x)));
            order.truncate(k);
        }
        order.sort_by(|x, y| key(y).total_cmp(&key(x)).then(x.cmp(y)));
        self.hot = order;
        self.max_sq = self.gram.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    }

    /// Current objective `max(floor, max |G_qr|)`.
    pub fn mu(&self) -> f64 {
        self.floor.max(self.max_sq.sqrt()).min(1.0)
    }

    /// The angle-independent part of the objective.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn dim(&self) -> usize {
        self.angles.len()
    }

    /// Per-group change of the phase term when coordinate `i` moves to
    /// `value`.
    fn deltas(&self, i: usize, value: f64) -> (usize, Vec<Complex64>) {
        let p = i % self.m;
        let (phi, chi) = self.point_angles(p);
        let (nphi, nchi) = if i < self.m { (value, chi) } else { (phi, value) };
        let d = self
            .groups
            .iter()
            .map(|g| Self::phase(g, nphi, nchi) - Self::phase(g, phi, chi))
            .collect();
        (p, d)
    }

    fn group_of(&self, j: usize) -> usize {
        self.groups.partition_point(|g| g.end <= j)
    }

    /// Objective after moving coordinate `i` to `value`, or `None` as soon
    /// as it is known not to drop below `threshold`.
    pub fn screen(&self, i: usize, value: f64, threshold: f64) -> Option<f64> {
        if self.floor >= threshold {
            return None;
        }
        let t_sq = threshold * threshold;
        let (p, d) = self.deltas(i, wrap_angle(value));
        let w = &self.weights[p * self.pairs..(p + 1) * self.pairs];
        for &j in &self.hot {
            let v = self.gram[j] + w[j] * d[self.group_of(j)];
            if v.norm_sqr() >= t_sq {
                return None;
            }
        }
        let mut max_sq: f64 = 0.0;
        for (g, dz) in self.groups.iter().zip(&d) {
            for j in g.start..g.end {
                let s = (self.gram[j] + w[j] * dz).norm_sqr();
                if s >= t_sq {
                    return None;
                }
                max_sq = max_sq.max(s);
            }
        }
        let value = self.floor.max(max_sq.sqrt()).min(1.0);
        (value < threshold).then_some(value)
    }

    /// Objective after moving coordinate `i` to `value`, without changing
    /// the state.
    pub fn evaluate_move(&self, i: usize, value: f64) -> f64 {
        let (p, d) = self.deltas(i, wrap_angle(value));
        let w = &self.weights[p * self.pairs..(p + 1) * self.pairs];
        let mut max_sq: f64 = 0.0;
        for (g, dz) in self.groups.iter().zip(&d) {
            for j in g.start..g.end {
                max_sq = max_sq.max((self.gram[j] + w[j] * dz).norm_sqr());
            }
        }
        self.floor.max(max_sq.sqrt()).min(1.0)
    }

    /// Moves coordinate `i` to `value` (wrapped into [0, 2π)).
    pub fn apply(&mut self, i: usize, value: f64) {
        let value = wrap_angle(value);
        let (p, d) = self.deltas(i, value);
        let w = &self.weights[p * self.pairs..(p + 1) * self.pairs];
        for (g, dz) in self.groups.iter().zip(&d) {
            for j in g.start..g.end {
                self.gram[j] += w[j] * dz;
            }
        }
        self.angles[i] = value;
        self.accepted_since_refresh += 1;
        if self.accepted_since_refresh >= REFRESH_EVERY {
            self.refresh();
        } else {
            self.rebuild_hot();
        }
    }
}

fn split_angles(domain: Domain, m: usize, angles: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
    match domain {
        Domain::S2 => (angles.to_vec(), None),
        Domain::SO3 => (angles[..m].to_vec(), Some(angles[m..].to_vec())),
    }
}

/// Mutual coherence of the matrix built from `(θs, φχ)` from scratch.
/// `phichi` holds φ and, on SO(3), χ.
pub fn evaluate_candidate(thetas: &[f64], phichi: &[f64], domain: Domain, b: usize) -> Result<f64> {
    let m = thetas.len();
    let dim = match domain {
        Domain::S2 => m,
        Domain::SO3 => 2 * m,
    };
    if phichi.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: phichi.len(),
        });
    }
    let (phis, chis) = split_angles(domain, m, phichi);
    let pattern = SamplingPattern::from_angles(
        domain,
        thetas,
        &phis,
        chis.as_deref(),
        Source::External {
            label: "candidate".into(),
        },
    )?;
    Ok(mutual_coherence(&build_matrix(&pattern, b, false)?)?.mu)
}

fn random_angles(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| TWO_PI * rng.random::<f64>()).collect()
}

/// Generalized pattern search with first-improvement acceptance.
///
/// Candidates are scanned coordinate-ascending with `+Δ` before `-Δ`; on
/// SO(3) the φ block precedes the χ block. Screening runs in parallel in
/// chunks; the first improving candidate in scan order wins, so the trace
/// does not depend on the thread count.
pub fn pattern_search(
    thetas: &[f64],
    domain: Domain,
    b: usize,
    config: &OptimizerConfig,
) -> Result<OptimizerTrace> {
    config.validate()?;
    if thetas.len() < 2 {
        return Err(Error::invalid("pattern search needs at least two samples"));
    }
    let start = Instant::now();
    let m = thetas.len();
    let dim = match domain {
        Domain::S2 => m,
        Domain::SO3 => 2 * m,
    };
    let lower_bound = elevation_lower_bound(thetas, b, domain)?.value;
    let mut obj = IncrementalObjective::new(thetas, domain, b, &random_angles(dim, config.seed))?;
    let initial_mu = obj.mu();
    let mut mu = initial_mu;
    let mut records = Vec::new();
    let mut rejections = 0i32;
    let chunk = rayon::current_num_threads().max(1) * 4;
    let candidates = 2 * dim;
    let mut stop = StopReason::KMax;

    for iter in 1..=config.k_max {
        if mu - lower_bound <= config.eps {
            stop = StopReason::Tolerance;
            break;
        }
        let delta = config.delta0 * config.lambda.powi(rejections);
        let target = |c: usize| {
            let i = c / 2;
            let step = if c.is_multiple_of(2) { delta } else { -delta };
            (i, obj.angles()[i] + step)
        };
        let mut found = None;
        let mut c0 = 0;
        while c0 < candidates && found.is_none() {
            let c1 = (c0 + chunk).min(candidates);
            let results: Vec<Option<f64>> = if chunk > 4 {
                (c0..c1)
                    .into_par_iter()
                    .map(|c| {
                        let (i, v) = target(c);
                        obj.screen(i, v, mu)
                    })
                    .collect()
            } else {
                (c0..c1)
                    .map(|c| {
                        let (i, v) = target(c);
                        obj.screen(i, v, mu)
                    })
                    .collect()
            };
            found = results
                .iter()
                .position(|r| r.is_some())
                .map(|k| (c0 + k, results[k].unwrap()));
            c0 = c1;
        }
        match found {
            Some((c, _)) => {
                let (i, v) = target(c);
                obj.apply(i, v);
                // The applied objective is authoritative after refreshes.
                mu = obj.mu().min(mu);
                records.push(IterationRecord {
                    iter,
                    mu,
                    delta,
                    accepted: true,
                });
            }
            None => {
                rejections += 1;
                records.push(IterationRecord {
                    iter,
                    mu,
                    delta,
                    accepted: false,
                });
            }
        }
    }
    if stop == StopReason::KMax && mu - lower_bound <= config.eps {
        stop = StopReason::Tolerance;
    }
    let (phis, chis) = split_angles(domain, m, obj.angles());
    let pattern = SamplingPattern::from_angles(
        domain,
        thetas,
        &phis,
        chis.as_deref(),
        Source::External {
            label: "optimized".into(),
        },
    )?;
    Ok(OptimizerTrace {
        records,
        initial_mu,
        final_mu: mu,
        lower_bound,
        pattern,
        stop,
        elapsed: start.elapsed(),
    })
}

/// Multi-start budget used unless configured otherwise.
pub const DEFAULT_RESTARTS: usize = 4;

/// Runs [`pattern_search`] from `restarts` seeds derived from
/// `config.seed` and keeps the lowest final coherence (earliest on ties).
/// Stops early once a run reaches the tolerance.
pub fn multi_start(
    thetas: &[f64],
    domain: Domain,
    b: usize,
    config: &OptimizerConfig,
    restarts: usize,
) -> Result<OptimizerTrace> {
    let mut best: Option<OptimizerTrace> = None;
    for r in 0..restarts.max(1) {
        let cfg = OptimizerConfig {
            seed: derive_seed(config.seed, &[r as u64]),
            ..config.clone()
        };
        let trace = pattern_search(thetas, domain, b, &cfg)?;
        let done = trace.stop == StopReason::Tolerance;
        if best.as_ref().is_none_or(|t| trace.final_mu < t.final_mu) {
            best = Some(trace);
        }
        if done {
            break;
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Equispaced elevations with multi-start optimized azimuths; the result
/// records its provenance and can be regenerated.
pub fn optimized_pattern(
    m: usize,
    domain: Domain,
    b: usize,
    config: &OptimizerConfig,
    restarts: usize,
) -> Result<SamplingPattern> {
    let thetas = equispaced_elevation(m)?;
    let mut trace = multi_start(&thetas, domain, b, config, restarts)?;
    trace.pattern.provenance.source = Source::Optimized {
        m,
        b,
        config: config.clone(),
        restarts,
    };
    Ok(trace.pattern)
}
