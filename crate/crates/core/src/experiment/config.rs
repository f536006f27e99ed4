//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # coherence of regular and optimized patterns
//! experiment = coherence_compare
//! domain = S2
//! bandwidth = 10
//! m = 20:100:10
//! patterns = equiangular, spiral, fibonacci, hammersley, optimized
//! seed = 7
//! ```
//!
//! Blank lines and lines starting with `#` are ignored; a `#` after a value
//! starts a comment. Grids are comma lists or inclusive `start:stop:step`
//! ranges. Every key may appear at most once.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::optimize::{OptimizerConfig, DEFAULT_RESTARTS};
use crate::patterns::{Domain, Measure, RegularKind};
use crate::recover::{QcbpOptions, SolverKind, SUCCESS_THRESHOLD};
use crate::sensing::dimension;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    CoherenceCompare,
    OptimizePattern,
    PhaseTransition,
    IgrfDemo,
    WignerForwardDemo,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::CoherenceCompare,
        ExperimentKind::OptimizePattern,
        ExperimentKind::PhaseTransition,
        ExperimentKind::IgrfDemo,
        ExperimentKind::WignerForwardDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CoherenceCompare => "coherence_compare",
            ExperimentKind::OptimizePattern => "optimize_pattern",
            ExperimentKind::PhaseTransition => "phase_transition",
            ExperimentKind::IgrfDemo => "igrf_demo",
            ExperimentKind::WignerForwardDemo => "wigner_forward_demo",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment '{s}'"))
    }
}

/// A pattern family named in a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternSpec {
    Regular(RegularKind),
    Random(Measure),
    Optimized,
}

impl PatternSpec {
    pub fn name(self) -> String {
        match self {
            PatternSpec::Regular(k) => k.name().to_string(),
            PatternSpec::Random(m) => format!("random-{}", m.name()),
            PatternSpec::Optimized => "optimized".to_string(),
        }
    }
}

impl FromStr for PatternSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "optimized" {
            return Ok(PatternSpec::Optimized);
        }
        if let Some(rest) = s.strip_prefix("random-") {
            return rest.parse().map(PatternSpec::Random).map_err(|e: crate::Error| e.to_string());
        }
        s.parse()
            .map(PatternSpec::Regular)
            .map_err(|_| format!("unknown pattern '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub domain: Domain,
    pub bandwidth: usize,
    pub m_grid: Vec<usize>,
    pub patterns: Vec<PatternSpec>,
    /// The seed field is ignored; optimizer seeds derive from `seed`.
    pub optimizer: OptimizerConfig,
    pub restarts: usize,
    pub solver: SolverKind,
    pub s_grid: Vec<usize>,
    pub trials: usize,
    pub threshold: f64,
    /// Per-sample noise bound `ε`; the solver sees `η = √m · ε`.
    pub noise_eps: f64,
    pub seed: u64,
    pub output: PathBuf,
    pub igrf_table: Option<PathBuf>,
    pub igrf_epoch: Option<String>,
    /// Latitude count of the projection grid; longitudes are twice as many.
    pub igrf_grid: usize,
    /// Geometric decay ratio of the compressible Wigner-D coefficients.
    pub wigner_decay: f64,
}

impl ExperimentConfig {
    /// Defaults for everything except kind, bandwidth and the `m` grid.
    pub fn new(kind: ExperimentKind, domain: Domain, bandwidth: usize, m_grid: Vec<usize>) -> Self {
        let patterns = match kind {
            ExperimentKind::IgrfDemo => vec![
                PatternSpec::Regular(RegularKind::Equiangular),
                PatternSpec::Regular(RegularKind::Hammersley),
                PatternSpec::Optimized,
            ],
            ExperimentKind::WignerForwardDemo => vec![
                PatternSpec::Regular(RegularKind::Equiangular),
                PatternSpec::Optimized,
            ],
            ExperimentKind::OptimizePattern => vec![PatternSpec::Optimized],
            _ => RegularKind::ALL
                .into_iter()
                .map(PatternSpec::Regular)
                .chain([
                    PatternSpec::Random(Measure::Uniform),
                    PatternSpec::Random(Measure::Tan13),
                    PatternSpec::Optimized,
                ])
                .collect(),
        };
        let (s_grid, trials) = match (kind, domain) {
            (ExperimentKind::IgrfDemo, _) => (vec![15], 1),
            (ExperimentKind::WignerForwardDemo, _) => (vec![1], 1),
            (_, Domain::S2) => (vec![5, 10, 15, 20, 25], 50),
            (_, Domain::SO3) => (vec![5, 10, 15, 20], 30),
        };
        ExperimentConfig {
            kind,
            domain,
            bandwidth,
            m_grid,
            patterns,
            optimizer: OptimizerConfig::default(),
            restarts: DEFAULT_RESTARTS,
            solver: SolverKind::Qcbp(match kind {
                ExperimentKind::PhaseTransition => QcbpOptions::sweep(),
                _ => QcbpOptions::default(),
            }),
            s_grid,
            trials,
            threshold: SUCCESS_THRESHOLD,
            noise_eps: 0.0,
            seed: 0,
            output: PathBuf::from("out"),
            igrf_table: None,
            igrf_epoch: None,
            igrf_grid: 37,
            wigner_decay: 0.7,
        }
    }

    pub fn dimension(&self) -> usize {
        dimension(self.domain, self.bandwidth)
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(_, msg)| Error::invalid(msg))
    }

    /// Reports the offending key with the message.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let fail = |key, msg: String| Err((key, msg));
        if self.bandwidth < 1 {
            return fail("bandwidth", "bandwidth must be at least 1".into());
        }
        if self.kind == ExperimentKind::IgrfDemo {
            if self.domain != Domain::S2 {
                return fail("domain", "igrf_demo runs on S2".into());
            }
            if self.bandwidth < 2 {
                return fail("bandwidth", "igrf_demo needs bandwidth >= 2".into());
            }
        }
        if self.kind == ExperimentKind::WignerForwardDemo {
            if self.domain != Domain::SO3 {
                return fail("domain", "wigner_forward_demo runs on SO3".into());
            }
            if self.bandwidth < 2 {
                return fail("bandwidth", "wigner_forward_demo needs bandwidth >= 2".into());
            }
        }
        if self.m_grid.is_empty() {
            return fail("m", "m grid is empty".into());
        }
        if let Some(m) = self.m_grid.iter().find(|&&m| m < 2) {
            return fail("m", format!("m = {m} is below 2"));
        }
        if self.kind == ExperimentKind::WignerForwardDemo {
            if let Some(m) = self.m_grid.iter().find(|&&m| m % 2 == 1) {
                return fail("m", format!("m = {m} must be even: each direction is sampled at two polarizations"));
            }
        }
        if self.patterns.is_empty() {
            return fail("patterns", "no patterns given".into());
        }
        if let Err(e) = self.optimizer.validate() {
            let o = &self.optimizer;
            let key = if !(o.delta0 > 0.0 && o.delta0.is_finite()) {
                "optimizer.delta0"
            } else if !(o.lambda > 0.0 && o.lambda < 1.0) {
                "optimizer.lambda"
            } else {
                "optimizer.eps"
            };
            return fail(key, e.to_string());
        }
        if self.restarts < 1 {
            return fail("optimizer.restarts", "restarts must be at least 1".into());
        }
        if let SolverKind::Qcbp(o) = &self.solver {
            if o.max_iter == 0 {
                return fail("solver.max_iter", "max_iter must be at least 1".into());
            }
            if !(o.gap_tol > 0.0) {
                return fail("solver.gap_tol", "gap_tol must be positive".into());
            }
            if !(o.feas_tol > 0.0) {
                return fail("solver.feas_tol", "feas_tol must be positive".into());
            }
            if o.check_every == 0 {
                return fail("solver.check_every", "check_every must be at least 1".into());
            }
        }
        let n = match self.kind {
            ExperimentKind::WignerForwardDemo => 2 * (self.bandwidth * self.bandwidth - 1),
            _ => self.dimension(),
        };
        if let Some(s) = self.s_grid.iter().find(|&&s| s > n) {
            return fail("s", format!("sparsity {s} exceeds N = {n}"));
        }
        if self.s_grid.is_empty() {
            return fail("s", "s grid is empty".into());
        }
        if self.trials == 0 {
            return fail("trials", "trials must be at least 1".into());
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return fail("threshold", "threshold must be positive".into());
        }
        if !(self.noise_eps >= 0.0 && self.noise_eps.is_finite()) {
            return fail("noise.eps", "noise bound must be finite and >= 0".into());
        }
        if self.igrf_grid < 2 {
            return fail("igrf.grid", "projection grid needs at least 2 latitudes".into());
        }
        if !(self.wigner_decay > 0.0 && self.wigner_decay < 1.0) {
            return fail("wigner.decay", "decay ratio must lie in (0, 1)".into());
        }
        Ok(())
    }

    /// Canonical file form; [`ExperimentConfig::parse`] inverts it exactly.
    pub fn to_text(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        put("experiment", self.kind.to_string());
        put("domain", self.domain.to_string());
        put("bandwidth", self.bandwidth.to_string());
        put("m", list(&self.m_grid));
        put(
            "patterns",
            self.patterns.iter().map(|p| p.name()).collect::<Vec<_>>().join(", "),
        );
        put("s", list(&self.s_grid));
        put("trials", self.trials.to_string());
        put("threshold", format!("{:?}", self.threshold));
        put("noise.eps", format!("{:?}", self.noise_eps));
        put("seed", self.seed.to_string());
        put("output", self.output.display().to_string());
        put("optimizer.delta0", format!("{:?}", self.optimizer.delta0));
        put("optimizer.lambda", format!("{:?}", self.optimizer.lambda));
        put("optimizer.k_max", self.optimizer.k_max.to_string());
        put("optimizer.eps", format!("{:?}", self.optimizer.eps));
        put("optimizer.restarts", self.restarts.to_string());
        match &self.solver {
            SolverKind::Omp => put("solver", "omp".into()),
            SolverKind::Qcbp(o) => {
                put("solver", "qcbp".into());
                put("solver.max_iter", o.max_iter.to_string());
                put("solver.gap_tol", format!("{:?}", o.gap_tol));
                put("solver.feas_tol", format!("{:?}", o.feas_tol));
                put("solver.polish_every", o.polish_every.to_string());
                put("solver.check_every", o.check_every.to_string());
            }
        }
        if let Some(p) = &self.igrf_table {
            put("igrf.table", p.display().to_string());
        }
        if let Some(e) = &self.igrf_epoch {
            put("igrf.epoch", e.clone());
        }
        put("igrf.grid", self.igrf_grid.to_string());
        put("wigner.decay", format!("{:?}", self.wigner_decay));
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates; errors name `path` and the offending line.
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut entries: HashMap<String, (usize, String)> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected 'key = value', found '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(line, format!("unknown key '{key}'")));
            }
            if value.is_empty() {
                return Err(err(line, format!("key '{key}' has no value")));
            }
            if let Some((first, _)) = entries.insert(key.to_string(), (line, value.to_string())) {
                return Err(err(line, format!("duplicate key '{key}' (first on line {first})")));
            }
        }

        let line_of = |key: &str| entries.get(key).map_or(0, |(l, _)| *l);
        let get = |key: &str| entries.get(key).map(|(_, v)| v.as_str());
        fn field<T: FromStr>(
            entries: &HashMap<String, (usize, String)>,
            key: &str,
            err: &dyn Fn(usize, String) -> Error,
        ) -> Result<Option<T>>
        where
            T::Err: fmt::Display,
        {
            match entries.get(key) {
                None => Ok(None),
                Some((line, v)) => v
                    .parse::<T>()
                    .map(Some)
                    .map_err(|e| err(*line, format!("bad value for '{key}': {e}"))),
            }
        }
        let grid = |key: &str| -> Result<Option<Vec<usize>>> {
            match entries.get(key) {
                None => Ok(None),
                Some((line, v)) => parse_grid(v).map(Some).map_err(|e| err(*line, e)),
            }
        };

        let kind: ExperimentKind = field(&entries, "experiment", &err)?
            .ok_or_else(|| err(0, "missing key 'experiment'".into()))?;
        let domain: Domain = field(&entries, "domain", &err)?.unwrap_or(match kind {
            ExperimentKind::WignerForwardDemo => Domain::SO3,
            _ => Domain::S2,
        });
        let bandwidth: usize = field(&entries, "bandwidth", &err)?
            .ok_or_else(|| err(0, "missing key 'bandwidth'".into()))?;
        let m_grid = grid("m")?.ok_or_else(|| err(0, "missing key 'm'".into()))?;
        let mut cfg = ExperimentConfig::new(kind, domain, bandwidth, m_grid);

        if let Some(v) = get("patterns") {
            cfg.patterns = v
                .split(',')
                .map(|p| p.trim().parse::<PatternSpec>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| err(line_of("patterns"), e))?;
        }
        if let Some(g) = grid("s")? {
            cfg.s_grid = g;
        }
        macro_rules! set {
            ($key:literal, $target:expr) => {
                if let Some(v) = field(&entries, $key, &err)? {
                    $target = v;
                }
            };
        }
        set!("trials", cfg.trials);
        set!("threshold", cfg.threshold);
        set!("noise.eps", cfg.noise_eps);
        set!("seed", cfg.seed);
        set!("output", cfg.output);
        set!("optimizer.delta0", cfg.optimizer.delta0);
        set!("optimizer.lambda", cfg.optimizer.lambda);
        set!("optimizer.k_max", cfg.optimizer.k_max);
        set!("optimizer.eps", cfg.optimizer.eps);
        set!("optimizer.restarts", cfg.restarts);
        set!("igrf.grid", cfg.igrf_grid);
        set!("wigner.decay", cfg.wigner_decay);
        cfg.igrf_table = get("igrf.table").map(PathBuf::from);
        cfg.igrf_epoch = get("igrf.epoch").map(str::to_string);

        let solver_keys = [
            "solver.max_iter",
            "solver.gap_tol",
            "solver.feas_tol",
            "solver.polish_every",
            "solver.check_every",
        ];
        match get("solver") {
            None | Some("qcbp") => {
                let mut o = match &cfg.solver {
                    SolverKind::Qcbp(o) => o.clone(),
                    SolverKind::Omp => QcbpOptions::default(),
                };
                set!("solver.max_iter", o.max_iter);
                set!("solver.gap_tol", o.gap_tol);
                set!("solver.feas_tol", o.feas_tol);
                set!("solver.polish_every", o.polish_every);
                set!("solver.check_every", o.check_every);
                cfg.solver = SolverKind::Qcbp(o);
            }
            Some("omp") => {
                if let Some(k) = solver_keys.iter().find(|k| entries.contains_key(**k)) {
                    return Err(err(line_of(k), format!("'{k}' applies to the qcbp solver only")));
                }
                cfg.solver = SolverKind::Omp;
            }
            Some(other) => {
                return Err(err(line_of("solver"), format!("unknown solver '{other}'")));
            }
        }

        cfg.check().map_err(|(key, msg)| err(line_of(key), msg))?;
        Ok(cfg)
    }
}

const KEYS: &[&str] = &[
    "experiment",
    "domain",
    "bandwidth",
    "m",
    "patterns",
    "s",
    "trials",
    "threshold",
    "noise.eps",
    "seed",
    "output",
    "optimizer.delta0",
    "optimizer.lambda",
    "optimizer.k_max",
    "optimizer.eps",
    "optimizer.restarts",
    "solver",
    "solver.max_iter",
    "solver.gap_tol",
    "solver.feas_tol",
    "solver.polish_every",
    "solver.check_every",
    "igrf.table",
    "igrf.epoch",
    "igrf.grid",
    "wigner.decay",
];

/// `a, b, c` or inclusive `start:stop:step`.
fn parse_grid(v: &str) -> std::result::Result<Vec<usize>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("'{}' is not a nonnegative integer", s.trim()))
    };
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(format!("range '{v}' must be start:stop:step"));
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step == 0 || stop < start {
            return Err(format!("range '{v}' is empty or has zero step"));
        }
        Ok((start..=stop).step_by(step).collect())
    } else {
        v.split(',').map(num).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# comment line
experiment = phase_transition
domain = SO3   # trailing comment
bandwidth = 4
m = 20:80:20
patterns = hammersley, random-tan13, optimized
s = 5, 10
trials = 3
seed = 11
solver.max_iter = 500
optimizer.lambda = 0.25
";

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::parse(SAMPLE, "x.cfg").unwrap();
        assert_eq!(c.kind, ExperimentKind::PhaseTransition);
        assert_eq!(c.domain, Domain::SO3);
        assert_eq!(c.m_grid, vec![20, 40, 60, 80]);
        assert_eq!(c.patterns.len(), 3);
        assert_eq!(c.patterns[1], PatternSpec::Random(Measure::Tan13));
        assert_eq!(c.optimizer.lambda, 0.25);
        assert!(matches!(&c.solver, SolverKind::Qcbp(o) if o.max_iter == 500));
    }

    #[test]
    fn round_trips_losslessly() {
        let mut c = ExperimentConfig::parse(SAMPLE, "x.cfg").unwrap();
        c.noise_eps = 0.1 + 0.2;
        c.optimizer.delta0 = std::f64::consts::PI / 7.0;
        c.igrf_epoch = Some("2015.0".into());
        c.igrf_table = Some(PathBuf::from("data/igrf.txt"));
        let back = ExperimentConfig::parse(&c.to_text(), "round").unwrap();
        assert_eq!(back, c);
        let omp = ExperimentConfig {
            solver: SolverKind::Omp,
            ..c
        };
        assert_eq!(ExperimentConfig::parse(&omp.to_text(), "round").unwrap(), omp);
    }

    #[test]
    fn errors_name_the_line() {
        let cases = [
            ("experiment = igrf_demo\nbandwidth = 4\nm = 10\nfoo = 1\n", 4, "unknown key"),
            ("experiment = igrf_demo\nbandwidth = x\nm = 10\n", 2, "bandwidth"),
            ("experiment = igrf_demo\nbandwidth = 4\nm = 10\nm = 11\n", 4, "duplicate"),
            ("experiment = igrf_demo\nbandwidth = 4\nm = 10\ns = 99\n", 4, "exceeds"),
            ("experiment = igrf_demo\nbandwidth = 4\n\nm = 9:3:1\n", 4, "empty"),
            ("experiment = coherence_compare\nbandwidth = 4\nm = 10\npatterns = spiral, cube\n", 4, "cube"),
            ("experiment = igrf_demo\ndomain = SO3\nbandwidth = 4\nm = 10\n", 2, "S2"),
            ("experiment = igrf_demo\nbandwidth 4\n", 2, "key = value"),
            ("experiment = igrf_demo\nsolver = omp\nsolver.gap_tol = 1e-3\nbandwidth = 4\nm = 10\n", 3, "qcbp"),
        ];
        for (text, line, needle) in cases {
            match ExperimentConfig::parse(text, "c.cfg") {
                Err(Error::Parse { line: l, message, path }) => {
                    assert_eq!(l, line, "{text}: {message}");
                    assert!(message.contains(needle), "{message}");
                    assert_eq!(path, "c.cfg");
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn missing_required_keys() {
        assert!(ExperimentConfig::parse("bandwidth = 3\nm = 4\n", "c").is_err());
        assert!(ExperimentConfig::parse("experiment = igrf_demo\nm = 4\n", "c").is_err());
    }

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("1, 2,3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_grid("10:30:10").unwrap(), vec![10, 20, 30]);
        assert_eq!(parse_grid("10:35:10").unwrap(), vec![10, 20, 30]);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("-1").is_err());
    }
}
