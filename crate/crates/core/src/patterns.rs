//! Sampling patterns on S² and SO(3).
//!
//! A pattern carries its provenance, and every generated pattern can be
//! rebuilt bit for bit from it. Random patterns draw from `ChaCha8Rng`
//! seeded with `seed_from_u64`. The stream per point is θ, φ, then χ
//! (SO(3) only).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::optimize::OptimizerConfig;

pub const TWO_PI: f64 = 2.0 * PI;

/// 2π(1 - 1/ϕ), the golden angle.
pub const GOLDEN_ANGLE: f64 = TWO_PI * 0.381_966_011_250_105_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    S2,
    SO3,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::S2 => "S2",
            Domain::SO3 => "SO3",
        })
    }
}

impl FromStr for Domain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S2" => Ok(Domain::S2),
            "SO3" => Ok(Domain::SO3),
            _ => Err(Error::invalid(format!("unknown domain `{s}`"))),
        }
    }
}

/// Deterministic point-set constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegularKind {
    Equiangular,
    Spiral,
    Fibonacci,
    Hammersley,
}

impl RegularKind {
    pub const ALL: [RegularKind; 4] = [
        RegularKind::Equiangular,
        RegularKind::Spiral,
        RegularKind::Fibonacci,
        RegularKind::Hammersley,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegularKind::Equiangular => "equiangular",
            RegularKind::Spiral => "spiral",
            RegularKind::Fibonacci => "fibonacci",
            RegularKind::Hammersley => "hammersley",
        }
    }
}

impl FromStr for RegularKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RegularKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unsupported pattern kind `{s}`")))
    }
}

/// Distributions for random patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    /// θ uniform on [0, π] (not the surface measure), φ and χ uniform.
    Uniform,
    /// θ with density proportional to |tan θ|^{1/3}, φ and χ uniform.
    Tan13,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::Uniform => "uniform",
            Measure::Tan13 => "tan13",
        }
    }
}

impl FromStr for Measure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Measure::Uniform),
            "tan13" => Ok(Measure::Tan13),
            _ => Err(Error::invalid(format!("unknown measure `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub theta: f64,
    pub phi: f64,
    /// Present exactly for SO(3) patterns.
    pub chi: Option<f64>,
}

/// How a pattern was produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Regular { kind: RegularKind, m: usize },
    Random { measure: Measure, m: usize, seed: u64 },
    /// Equispaced elevations with azimuths (and polarizations) from
    /// multi-start pattern search at bandwidth `b`.
    Optimized { m: usize, b: usize, config: OptimizerConfig, restarts: usize },
    /// Supplied by the caller or read from a file; cannot be regenerated.
    External { label: String },
}

impl Source {
    pub fn label(&self) -> String {
        match self {
            Source::Regular { kind, .. } => kind.name().to_string(),
            Source::Random { measure, .. } => format!("random-{}", measure.name()),
            Source::Optimized { .. } => "optimized".to_string(),
            Source::External { label } => label.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub source: Source,
    /// Free-form warnings attached downstream, e.g. zero rows after
    /// preconditioning.
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(source: Source) -> Self {
        Provenance {
            source,
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPattern {
    domain: Domain,
    points: Vec<SamplePoint>,
    pub provenance: Provenance,
}

impl SamplingPattern {
    /// Builds a pattern from explicit angles. `chis` must be given exactly
    /// for SO(3). Azimuths are wrapped into [0, 2π).
    pub fn from_angles(
        domain: Domain,
        thetas: &[f64],
        phis: &[f64],
        chis: Option<&[f64]>,
        source: Source,
    ) -> Result<Self> {
        let m = thetas.len();
        if m == 0 {
            return Err(Error::invalid("a pattern needs at least one point"));
        }
        if phis.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: phis.len(),
            });
        }
        match (domain, chis) {
            (Domain::S2, Some(_)) => {
                return Err(Error::invalid("S2 patterns carry no polarization angle"))
            }
            (Domain::SO3, None) => {
                return Err(Error::invalid("SO3 patterns need a polarization angle"))
            }
            (Domain::SO3, Some(c)) if c.len() != m => {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: c.len(),
                })
            }
            _ => {}
        }
        let mut points = Vec::with_capacity(m);
        for p in 0..m {
            let theta = thetas[p];
            if !(0.0..=PI).contains(&theta) {
                return Err(Error::domain(format!("θ_{p} = {theta} outside [0, π]")));
            }
            if !phis[p].is_finite() {
                return Err(Error::domain(format!("φ_{p} is not finite")));
            }
            let chi = match chis {
                Some(c) if !c[p].is_finite() => {
                    return Err(Error::domain(format!("χ_{p} is not finite")))
                }
                Some(c) => Some(wrap_angle(c[p])),
                None => None,
            };
            points.push(SamplePoint {
                theta,
                phi: wrap_angle(phis[p]),
                chi,
            });
        }
        Ok(SamplingPattern {
            domain,
            points,
            provenance: Provenance::new(source),
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.theta).collect()
    }

    pub fn phis(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.phi).collect()
    }

    /// Polarization angles, or `None` on S².
    pub fn chis(&self) -> Option<Vec<f64>> {
        match self.domain {
            Domain::S2 => None,
            Domain::SO3 => Some(self.points.iter().map(|p| p.chi.unwrap_or(0.0)).collect()),
        }
    }

    /// Rebuilds the pattern from its provenance.
    pub fn regenerate(&self) -> Result<SamplingPattern> {
        regenerate(&self.provenance.source, self.domain)
    }

    /// Serializes to the text pattern format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# spherecs pattern\n");
        out.push_str(&format!("# domain = {}\n", self.domain));
        out.push_str(&format!("# m = {}\n", self.len()));
        for (key, value) in source_fields(&self.provenance.source) {
            out.push_str(&format!("# {key} = {value}\n"));
        }
        for note in &self.provenance.notes {
            out.push_str(&format!("# note = {note}\n"));
        }
        out.push_str(match self.domain {
            Domain::S2 => "# columns: theta phi\n",
            Domain::SO3 => "# columns: theta phi chi\n",
        });
        for p in &self.points {
            match p.chi {
                Some(chi) => out.push_str(&format!("{:.16e} {:.16e} {:.16e}\n", p.theta, p.phi, chi)),
                None => out.push_str(&format!("{:.16e} {:.16e}\n", p.theta, p.phi)),
            }
        }
        out
    }

    /// Parses the text pattern format. `path` only labels error messages.
    pub fn from_text(text: &str, path: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut header: Vec<(String, String)> = Vec::new();
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                if let Some((k, v)) = h.split_once('=') {
                    header.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            let values = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(i + 1, format!("bad number: {e}")))?;
            rows.push((i + 1, values));
        }
        let get = |key: &str| {
            header
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
        };
        let domain: Domain = match get("domain") {
            Some(d) => d.parse().map_err(|e: Error| parse_err(0, e.to_string()))?,
            None => match rows.first() {
                Some((_, v)) if v.len() == 3 => Domain::SO3,
                _ => Domain::S2,
            },
        };
        let width = match domain {
            Domain::S2 => 2,
            Domain::SO3 => 3,
        };
        let mut thetas = Vec::with_capacity(rows.len());
        let mut phis = Vec::with_capacity(rows.len());
        let mut chis = Vec::with_capacity(rows.len());
        for (line, v) in &rows {
            if v.len() != width {
                return Err(parse_err(
                    *line,
                    format!("expected {width} values for {domain}, found {}", v.len()),
                ));
            }
            thetas.push(v[0]);
            phis.push(v[1]);
            if width == 3 {
                chis.push(v[2]);
            }
        }
        let source = source_from_fields(&header).map_err(|e| parse_err(0, e.to_string()))?;
        let chis = (domain == Domain::SO3).then_some(chis.as_slice());
        let mut pattern = SamplingPattern::from_angles(domain, &thetas, &phis, chis, source)
            .map_err(|e| parse_err(0, e.to_string()))?;
        pattern.provenance.notes = header
            .iter()
            .filter(|(k, _)| k == "note")
            .map(|(_, v)| v.clone())
            .collect();
        Ok(pattern)
    }
}

fn source_fields(source: &Source) -> Vec<(&'static str, String)> {
    match source {
        Source::Regular { kind, m } => vec![
            ("generator", "regular".into()),
            ("kind", kind.name().into()),
            ("count", m.to_string()),
        ],
        Source::Random { measure, m, seed } => vec![
            ("generator", "random".into()),
            ("measure", measure.name().into()),
            ("count", m.to_string()),
            ("seed", seed.to_string()),
        ],
        Source::Optimized {
            m,
            b,
            config,
            restarts,
        } => vec![
            ("generator", "optimized".into()),
            ("count", m.to_string()),
            ("bandwidth", b.to_string()),
            ("delta0", format!("{:e}", config.delta0)),
            ("lambda", format!("{:e}", config.lambda)),
            ("k_max", config.k_max.to_string()),
            ("eps", format!("{:e}", config.eps)),
            ("seed", config.seed.to_string()),
            ("restarts", restarts.to_string()),
        ],
        Source::External { label } => vec![("generator", "external".into()), ("label", label.clone())],
    }
}

fn source_from_fields(header: &[(String, String)]) -> Result<Source> {
    let get = |key: &str| {
        header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    };
    fn num<'a, T: FromStr>(get: impl Fn(&str) -> Option<&'a str>, key: &str) -> Result<T> {
        get(key)
            .ok_or_else(|| Error::invalid(format!("missing header `{key}`")))?
            .parse()
            .map_err(|_| Error::invalid(format!("bad value for header `{key}`")))
    }
    let get = &get;
    Ok(match get("generator") {
        Some("regular") => Source::Regular {
            kind: num(get, "kind")?,
            m: num(get, "count")?,
        },
        Some("random") => Source::Random {
            measure: num(get, "measure")?,
            m: num(get, "count")?,
            seed: num(get, "seed")?,
        },
        Some("optimized") => Source::Optimized {
            m: num(get, "count")?,
            b: num(get, "bandwidth")?,
            config: OptimizerConfig {
                delta0: num(get, "delta0")?,
                lambda: num(get, "lambda")?,
                k_max: num(get, "k_max")?,
                eps: num(get, "eps")?,
                seed: num(get, "seed")?,
            },
            restarts: num(get, "restarts")?,
        },
        Some("external") | None => Source::External {
            label: get("label").unwrap_or("file").to_string(),
        },
        Some(other) => return Err(Error::invalid(format!("unknown generator `{other}`"))),
    })
}

fn regenerate(source: &Source, domain: Domain) -> Result<SamplingPattern> {
    match source {
        Source::Regular { kind, m } => regular_pattern(*kind, *m, domain),
        Source::Random { measure, m, seed } => random_pattern(*measure, *m, domain, *seed),
        Source::Optimized {
            m,
            b,
            config,
            restarts,
        } => crate::optimize::optimized_pattern(*m, domain, *b, config, *restarts),
        Source::External { label } => Err(Error::invalid(format!(
            "pattern `{label}` has no generator to replay"
        ))),
    }
}

/// Seed for an independent RNG stream keyed by `parts`, mixed with
/// SplitMix64 finalizers.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

/// Maps an angle into [0, 2π).
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TWO_PI);
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// Elevations with `cos θ_p = (2p - m - 1)/(m - 1)`, `p = 1..=m`.
///
/// The cosines run from -1 to 1 with gap 2/(m-1); the set is symmetric
/// about 0.
pub fn equispaced_elevation(m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::invalid(format!("equispaced elevation needs m >= 2, got {m}")));
    }
    let denom = (m - 1) as f64;
    Ok((1..=m)
        .map(|p| {
            let c = (2.0 * p as f64 - m as f64 - 1.0) / denom;
            c.clamp(-1.0, 1.0).acos()
        })
        .collect())
}

/// True when the multiset `{cos θ_p}` is closed under negation within `tol`.
pub fn is_cosine_symmetric(thetas: &[f64], tol: f64) -> bool {
    let mut c: Vec<f64> = thetas.iter().map(|t| t.cos()).collect();
    c.sort_by(f64::total_cmp);
    let n = c.len();
    (0..n).all(|i| (c[i] + c[n - 1 - i]).abs() <= tol)
}

fn radical_inverse_2(mut i: u64) -> f64 {
    let mut inv = 0.0;
    let mut f = 0.5;
    while i > 0 {
        if i & 1 == 1 {
            inv += f;
        }
        i >>= 1;
        f *= 0.5;
    }
    inv
}

fn golden_sequence(m: usize) -> Vec<f64> {
    (1..=m).map(|p| wrap_angle(p as f64 * GOLDEN_ANGLE)).collect()
}

/// Deterministic `m`-point pattern of the given construction.
///
/// * equiangular: `θ_p = π(p-1)/(m-1)`, `φ_p = 2π(p-1)/(m-1)` with the last
///   azimuth wrapped to 0, `χ_p = φ_p`.
/// * spiral: Saff–Kuijlaars generalized spiral.
/// * fibonacci: `cos θ_p = 1 - (2p-1)/m`, `φ_p = p · golden angle`.
/// * hammersley: `cos θ_p = 1 - (2p-1)/m`, `φ_p = 2π · radical_inverse_2(p-1)`.
///
/// On SO(3) the last three use `χ_p = p · golden angle`.
pub fn regular_pattern(kind: RegularKind, m: usize, domain: Domain) -> Result<SamplingPattern> {
    if m < 2 {
        return Err(Error::invalid(format!("regular patterns need m >= 2, got {m}")));
    }
    let mf = m as f64;
    let (thetas, phis): (Vec<f64>, Vec<f64>) = match kind {
        RegularKind::Equiangular => (0..m)
            .map(|i| {
                let t = i as f64 / (mf - 1.0);
                (PI * t, wrap_angle(TWO_PI * t))
            })
            .unzip(),
        RegularKind::Spiral => {
            let mut thetas = Vec::with_capacity(m);
            let mut phis = Vec::with_capacity(m);
            let mut phi = 0.0;
            for p in 1..=m {
                let h = -1.0 + 2.0 * (p - 1) as f64 / (mf - 1.0);
                if p > 1 && p < m {
                    phi = wrap_angle(phi + 3.6 / (mf * (1.0 - h * h)).sqrt());
                } else {
                    phi = 0.0;
                }
                thetas.push(h.clamp(-1.0, 1.0).acos());
                phis.push(phi);
            }
            (thetas, phis)
        }
        RegularKind::Fibonacci => (1..=m)
            .map(|p| {
                let c = 1.0 - (2 * p - 1) as f64 / mf;
                (c.acos(), wrap_angle(p as f64 * GOLDEN_ANGLE))
            })
            .unzip(),
        RegularKind::Hammersley => (1..=m)
            .map(|p| {
                let c = 1.0 - (2 * p - 1) as f64 / mf;
                (c.acos(), TWO_PI * radical_inverse_2((p - 1) as u64))
            })
            .unzip(),
    };
    let chis = match (domain, kind) {
        (Domain::S2, _) => None,
        (Domain::SO3, RegularKind::Equiangular) => Some(phis.clone()),
        (Domain::SO3, _) => Some(golden_sequence(m)),
    };
    SamplingPattern::from_angles(
        domain,
        &thetas,
        &phis,
        chis.as_deref(),
        Source::Regular { kind, m },
    )
}

/// `m` i.i.d. points drawn from `measure`, reproducible from `seed`.
pub fn random_pattern(measure: Measure, m: usize, domain: Domain, seed: u64) -> Result<SamplingPattern> {
    if m < 1 {
        return Err(Error::invalid("random patterns need m >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = match measure {
        Measure::Tan13 => Some(Tan13Table::shared()),
        Measure::Uniform => None,
    };
    let mut thetas = Vec::with_capacity(m);
    let mut phis = Vec::with_capacity(m);
    let mut chis = Vec::with_capacity(m);
    for _ in 0..m {
        let u: f64 = rng.random();
        thetas.push(match table {
            Some(t) => t.inverse(u),
            None => PI * u,
        });
        phis.push(TWO_PI * rng.random::<f64>());
        if domain == Domain::SO3 {
            chis.push(TWO_PI * rng.random::<f64>());
        }
    }
    let chis = (domain == Domain::SO3).then_some(chis.as_slice());
    SamplingPattern::from_angles(domain, &thetas, &phis, chis, Source::Random { measure, m, seed })
}

/// Normalizing constant of `|tan θ|^{1/3}` on [0, π]: the integral is 2π/√3.
pub const TAN13_NORMALIZATION: f64 = 0.275_664_447_710_896_04;

/// Exact CDF of the density `c |tan θ|^{1/3}` on [0, π].
///
/// With `w = tan^{2/3} θ` the half-range integral is
/// `3/2 ∫ w/(1+w³) dw`, which has an elementary antiderivative.
pub fn tan13_cdf(theta: f64) -> f64 {
    if theta <= 0.0 {
        return 0.0;
    }
    if theta >= PI {
        return 1.0;
    }
    let half = |t: f64| -> f64 {
        // ∫_0^t tan^{1/3}
        if t >= PI / 2.0 {
            return PI / 3f64.sqrt();
        }
        let w = t.tan().powf(2.0 / 3.0);
        let g = |w: f64| {
            -(1.0 + w).ln() / 3.0
                + (w * w - w + 1.0).ln() / 6.0
                + ((2.0 * w - 1.0) / 3f64.sqrt()).atan() / 3f64.sqrt()
        };
        1.5 * (g(w) - g(0.0))
    };
    let v = if theta <= PI / 2.0 {
        TAN13_NORMALIZATION * half(theta)
    } else {
        1.0 - TAN13_NORMALIZATION * half(PI - theta)
    };
    v.clamp(0.0, 1.0)
}

/// Inverse-CDF table for the tan13 measure: the exact CDF on 16 384
/// equispaced knots, joined by monotone cubic (Fritsch–Carlson)
/// interpolation.
#[derive(Debug)]
pub struct Tan13Table {
    knots: Vec<f64>,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
}

impl Tan13Table {
    pub const KNOTS: usize = 16_384;

    pub fn new() -> Self {
        let n = Self::KNOTS;
        let h = PI / (n - 1) as f64;
        let knots: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let mut cdf: Vec<f64> = knots.iter().map(|&t| tan13_cdf(t)).collect();
        cdf[n - 1] = 1.0;
        let secants: Vec<f64> = cdf.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            slopes[i] = if a * b <= 0.0 { 0.0 } else { 2.0 * a * b / (a + b) };
        }
        Tan13Table { knots, cdf, slopes }
    }

    pub fn shared() -> &'static Tan13Table {
        static TABLE: OnceLock<Tan13Table> = OnceLock::new();
        TABLE.get_or_init(Tan13Table::new)
    }

    fn segment(&self, i: usize, t: f64) -> f64 {
        let h = self.knots[i + 1] - self.knots[i];
        let s = (t - self.knots[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.cdf[i]
            + (s3 - 2.0 * s2 + s) * h * self.slopes[i]
            + (-2.0 * s3 + 3.0 * s2) * self.cdf[i + 1]
            + (s3 - s2) * h * self.slopes[i + 1]
    }

    /// Interpolated CDF.
    pub fn cdf(&self, theta: f64) -> f64 {
        let theta = theta.clamp(0.0, PI);
        let h = self.knots[1];
        let i = ((theta / h) as usize).min(self.knots.len() - 2);
        self.segment(i, theta)
    }

    /// θ with `cdf(θ) = u`, for `u ∈ [0, 1]`.
    pub fn inverse(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c <= u);
        let i = i.clamp(1, self.knots.len() - 1) - 1;
        let (mut lo, mut hi) = (self.knots[i], self.knots[i + 1]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.segment(i, mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

impl Default for Tan13Table {
    fn default() -> Self {
        Self::new()
    }
}
