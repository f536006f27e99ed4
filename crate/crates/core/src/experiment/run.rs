use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use super::config::{ExperimentConfig, ExperimentKind, PatternSpec};
use super::igrf::{igrf_reconstruct, GaussCoefficientTable};
use super::wigner::{compressible_coefficients, polarized_pattern, restricted_basis, wigner_forward_demo};
use crate::coherence::{mutual_coherence, COHERENCE_CSV_HEADER};
use crate::error::{Error, Result};
use crate::optimize::{multi_start, optimized_pattern, OptimizerConfig, TRACE_CSV_HEADER};
use crate::patterns::{
    derive_seed, equispaced_elevation, random_pattern, regular_pattern, Domain, RegularKind,
    SamplingPattern, Source,
};
use crate::recover::{
    best_s_term_error, generate_sparse, phase_transition, transition_boundary, PatternFamily,
    PhaseTransitionConfig, SparseSignalSpec, PHASE_CSV_HEADER,
};
use crate::sensing::build_matrix;

// Seed stream tags.
const TAG_OPTIMIZER: u64 = 1;
const TAG_RANDOM: u64 = 2;
const TAG_SIGNAL: u64 = 3;
const TAG_NOISE: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub name: String,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub kind: ExperimentKind,
    pub output: PathBuf,
    /// Written files, `summary.txt` last.
    pub files: Vec<PathBuf>,
    pub stages: Vec<Stage>,
    /// Result highlights, one line each.
    pub notes: Vec<String>,
}

impl RunSummary {
    fn stage<T>(&mut self, name: impl Into<String>, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.stages.push(Stage {
            name: name.into(),
            elapsed: start.elapsed(),
        });
        Ok(out)
    }

    fn text(&self, cfg: &ExperimentConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.kind);
        let _ = writeln!(s, "seed: {}", cfg.seed);
        let _ = writeln!(s, "\n[stages]");
        let total: Duration = self.stages.iter().map(|st| st.elapsed).sum();
        for st in &self.stages {
            let _ = writeln!(s, "{:<40} {:>10.3} s", st.name, st.elapsed.as_secs_f64());
        }
        let _ = writeln!(s, "{:<40} {:>10.3} s", "total", total.as_secs_f64());
        if !self.notes.is_empty() {
            let _ = writeln!(s, "\n[results]");
            for n in &self.notes {
                let _ = writeln!(s, "{n}");
            }
        }
        let _ = writeln!(s, "\n[config]");
        s.push_str(&cfg.to_text());
        s
    }
}

/// Output directory that writes atomically and can roll back.
struct Outputs {
    dir: PathBuf,
    created: bool,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn open(dir: &Path) -> Result<Self> {
        let created = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            created,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
        if let Err(e) = fs::rename(&tmp, &path) {
            let _ = fs::remove_file(&tmp);
            return Err(Error::io(&path, e));
        }
        self.written.push(path);
        Ok(())
    }

    fn discard(self) {
        for f in &self.written {
            let _ = fs::remove_file(f);
        }
        if self.created {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// CSV text with a `# schema:` line, a context line, the header and rows.
fn csv(header: &str, context: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = format!("# schema: {header}\n# {context}\n{header}\n");
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn context(cfg: &ExperimentConfig) -> String {
    format!(
        "experiment={} domain={} B={} seed={}",
        cfg.kind, cfg.domain, cfg.bandwidth, cfg.seed
    )
}

fn optimizer_for(cfg: &ExperimentConfig, m: usize) -> OptimizerConfig {
    OptimizerConfig {
        seed: derive_seed(cfg.seed, &[TAG_OPTIMIZER, m as u64]),
        ..cfg.optimizer.clone()
    }
}

/// The pattern a config entry denotes at size `m` on `domain`, optimized at
/// bandwidth `b`.
fn build_pattern(cfg: &ExperimentConfig, spec: PatternSpec, m: usize, domain: Domain, b: usize) -> Result<SamplingPattern> {
    match spec {
        PatternSpec::Regular(kind) => regular_pattern(kind, m, domain),
        PatternSpec::Random(measure) => {
            let salt = match measure {
                crate::patterns::Measure::Uniform => 0,
                crate::patterns::Measure::Tan13 => 1,
            };
            random_pattern(measure, m, domain, derive_seed(cfg.seed, &[TAG_RANDOM, m as u64, salt]))
        }
        PatternSpec::Optimized => optimized_pattern(m, domain, b, &optimizer_for(cfg, m), cfg.restarts),
    }
}

/// Runs `cfg`, writing into `cfg.output`. On failure every file written
/// so far is removed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let mut out = Outputs::open(&cfg.output)?;
    let mut summary = RunSummary {
        kind: cfg.kind,
        output: cfg.output.clone(),
        files: Vec::new(),
        stages: Vec::new(),
        notes: Vec::new(),
    };
    let result = match cfg.kind {
        ExperimentKind::CoherenceCompare => coherence_compare(cfg, &mut out, &mut summary),
        ExperimentKind::OptimizePattern => optimize(cfg, &mut out, &mut summary),
        ExperimentKind::PhaseTransition => transitions(cfg, &mut out, &mut summary),
        ExperimentKind::IgrfDemo => igrf(cfg, &mut out, &mut summary),
        ExperimentKind::WignerForwardDemo => wigner(cfg, &mut out, &mut summary),
    }
    .and_then(|()| out.write("summary.txt", &summary.text(cfg)));
    match result {
        Ok(()) => {
            summary.files = out.written.clone();
            Ok(summary)
        }
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn coherence_compare(cfg: &ExperimentConfig, out: &mut Outputs, summary: &mut RunSummary) -> Result<()> {
    let mut rows = Vec::new();
    for &spec in &cfg.patterns {
        for &m in &cfg.m_grid {
            let (pattern, report) = summary.stage(format!("{} m={m}", spec.name()), || {
                let p = build_pattern(cfg, spec, m, cfg.domain, cfg.bandwidth)?;
                let r = mutual_coherence(&build_matrix(&p, cfg.bandwidth, false)?)?;
                Ok((p, r))
            })?;
            if spec == PatternSpec::Optimized {
                out.write(&format!("pattern_optimized_m{m}.txt"), &pattern.to_text())?;
            }
            rows.push(report.csv_row());
        }
    }
    out.write("coherence.csv", &csv(COHERENCE_CSV_HEADER, &context(cfg), rows))
}

const OPTIMIZE_HEADER: &str = "m,N,initial_mu,final_mu,lower_bound,iterations,stop";

fn optimize(cfg: &ExperimentConfig, out: &mut Outputs, summary: &mut RunSummary) -> Result<()> {
    let mut rows = Vec::new();
    for &m in &cfg.m_grid {
        let thetas = equispaced_elevation(m)?;
        let mut trace = summary.stage(format!("optimize m={m}"), || {
            multi_start(&thetas, cfg.domain, cfg.bandwidth, &optimizer_for(cfg, m), cfg.restarts)
        })?;
        trace.pattern.provenance.source = Source::Optimized {
            m,
            b: cfg.bandwidth,
            config: optimizer_for(cfg, m),
            restarts: cfg.restarts,
        };
        rows.push(format!(
            "{m},{},{:.16e},{:.16e},{:.16e},{},{}",
            cfg.dimension(),
            trace.initial_mu,
            trace.final_mu,
            trace.lower_bound,
            trace.records.len(),
            trace.stop
        ));
        summary.notes.push(format!(
            "m={m}: mu {:.6} -> {:.6} (lower bound {:.6})",
            trace.initial_mu, trace.final_mu, trace.lower_bound
        ));
        out.write(
            &format!("trace_m{m}.csv"),
            &csv(TRACE_CSV_HEADER, &format!("{} m={m}", context(cfg)), trace.csv_rows()),
        )?;
        out.write(&format!("pattern_m{m}.txt"), &trace.pattern.to_text())?;
    }
    out.write("optimize.csv", &csv(OPTIMIZE_HEADER, &context(cfg), rows))
}

const BOUNDARY_HEADER: &str = "family,s,boundary_m";

fn transitions(cfg: &ExperimentConfig, out: &mut Outputs, summary: &mut RunSummary) -> Result<()> {
    let mut boundaries = Vec::new();
    for &spec in &cfg.patterns {
        let family = match spec {
            PatternSpec::Regular(k) => PatternFamily::Regular(k),
            PatternSpec::Random(meas) => PatternFamily::Random(meas),
            PatternSpec::Optimized => {
                let patterns = summary.stage("optimize patterns", || {
                    cfg.m_grid
                        .iter()
                        .map(|&m| build_pattern(cfg, spec, m, cfg.domain, cfg.bandwidth))
                        .collect::<Result<Vec<_>>>()
                })?;
                PatternFamily::Provided {
                    label: spec.name(),
                    patterns,
                }
            }
        };
        let pt = PhaseTransitionConfig {
            trials: cfg.trials,
            seed: cfg.seed,
            solver: cfg.solver.clone(),
            threshold: cfg.threshold,
            ..PhaseTransitionConfig::new(cfg.domain, cfg.bandwidth, family, cfg.m_grid.clone(), cfg.s_grid.clone())
        };
        let grid = summary.stage(format!("phase transition {}", spec.name()), || phase_transition(&pt))?;
        if grid.solver_errors() > 0 {
            summary
                .notes
                .push(format!("{}: {} trial(s) ended in a solver error", grid.family, grid.solver_errors()));
        }
        out.write(
            &format!("phase_{}.csv", spec.name()),
            &csv(
                PHASE_CSV_HEADER,
                &format!("{} family={} solver={}", context(cfg), grid.family, grid.solver),
                grid.csv_rows(),
            ),
        )?;
        for &s in &cfg.s_grid {
            let m = transition_boundary(&grid, s);
            let shown = m.map_or("NA".to_string(), |m| m.to_string());
            boundaries.push(format!("{},{s},{shown}", grid.family));
            summary.notes.push(format!("{} s={s}: 50% boundary at m={shown}", grid.family));
        }
    }
    out.write("boundaries.csv", &csv(BOUNDARY_HEADER, &context(cfg), boundaries))
}

const IGRF_HEADER: &str = "table,s,pattern,m,mu,coef_error,grid_error,residual,converged";
const FIELD_HEADER: &str = "lat,lon,truth,recovered";

fn igrf(cfg: &ExperimentConfig, out: &mut Outputs, summary: &mut RunSummary) -> Result<()> {
    let b = cfg.bandwidth;
    let tables: Vec<(String, GaussCoefficientTable)> = match &cfg.igrf_table {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let t = GaussCoefficientTable::parse(&text, &path.display().to_string(), cfg.igrf_epoch.as_deref())?;
            if t.b != b {
                return Err(Error::invalid(format!(
                    "coefficient table has bandwidth {} but the config asks for {b}",
                    t.b
                )));
            }
            vec![("file".to_string(), t)]
        }
        None => cfg
            .s_grid
            .iter()
            .map(|&s| {
                let t = GaussCoefficientTable::synthetic(b, s, derive_seed(cfg.seed, &[TAG_SIGNAL, s as u64]))?;
                Ok(("synthetic".to_string(), t))
            })
            .collect::<Result<_>>()?,
    };
    let mut rows = Vec::new();
    for (label, table) in &tables {
        let s = table.nonzeros();
        for &m in &cfg.m_grid {
            for &spec in &cfg.patterns {
                let name = spec.name();
                let report = summary.stage(format!("igrf {name} m={m} s={s}"), || {
                    let p = build_pattern(cfg, spec, m, Domain::S2, b)?;
                    let mu = mutual_coherence(&build_matrix(&p, b, false)?)?.mu;
                    let seed = derive_seed(cfg.seed, &[TAG_NOISE, m as u64, s as u64]);
                    let r = igrf_reconstruct(table, &p, &cfg.solver, cfg.noise_eps, seed, cfg.igrf_grid)?;
                    Ok((mu, r))
                })?;
                let (mu, r) = report;
                rows.push(format!(
                    "{label},{s},{name},{m},{mu:.16e},{:.16e},{:.16e},{:.16e},{}",
                    r.coef_error, r.grid_error, r.residual, r.converged
                ));
                summary
                    .notes
                    .push(format!("{label} s={s} {name} m={m}: grid error {:.3e}", r.grid_error));
                let field_rows = r.grid.iter().map(|g| {
                    format!("{:.6},{:.6},{:.16e},{:.16e}", g.lat, g.lon, g.truth, g.recovered)
                });
                out.write(
                    &format!("igrf_field_{name}_m{m}_s{s}.csv"),
                    &csv(FIELD_HEADER, &format!("{} pattern={name} m={m} s={s}", context(cfg)), field_rows),
                )?;
            }
        }
    }
    out.write("igrf.csv", &csv(IGRF_HEADER, &context(cfg), rows))
}

const WIGNER_HEADER: &str = "signal,s,pattern,m,N,mu,full_coherence,coef_error,resynthesis_error,tail_bound";

fn wigner(cfg: &ExperimentConfig, out: &mut Outputs, summary: &mut RunSummary) -> Result<()> {
    let b = cfg.bandwidth;
    let n = restricted_basis(b).len();
    let fmt_opt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.16e}"));
    let compressible = compressible_coefficients(n, cfg.wigner_decay, derive_seed(cfg.seed, &[TAG_SIGNAL]));
    let mut rows = Vec::new();
    for &m in &cfg.m_grid {
        for &spec in &cfg.patterns {
            let name = spec.name();
            let pattern = summary.stage(format!("wigner pattern {name} m={m}"), || match spec {
                PatternSpec::Regular(RegularKind::Equiangular) | PatternSpec::Random(_) => {
                    build_pattern(cfg, spec, m, Domain::SO3, b)
                }
                _ => polarized_pattern(&build_pattern(cfg, spec, m / 2, Domain::S2, b)?),
            })?;
            let noise_seed = derive_seed(cfg.seed, &[TAG_NOISE, m as u64]);
            for &s in &cfg.s_grid {
                let spec_s = SparseSignalSpec::new(n, s, derive_seed(cfg.seed, &[TAG_SIGNAL, s as u64]));
                let t = generate_sparse(&spec_s)?;
                let r = summary.stage(format!("wigner sparse {name} m={m} s={s}"), || {
                    wigner_forward_demo(&t, &pattern, b, &cfg.solver, cfg.noise_eps, noise_seed)
                })?;
                rows.push(format!(
                    "sparse,{s},{name},{m},{n},{:.16e},{},{},{},{:.16e}",
                    r.mu,
                    r.full_coherence,
                    fmt_opt(r.coef_error),
                    fmt_opt(r.resynthesis_error),
                    0.0
                ));
            }
            let r = summary.stage(format!("wigner compressible {name} m={m}"), || {
                wigner_forward_demo(&compressible, &pattern, b, &cfg.solver, cfg.noise_eps, noise_seed)
            })?;
            if r.full_coherence {
                summary
                    .notes
                    .push(format!("{name} m={m}: coherence {:.12} flags full coherence; not solved", r.mu));
            }
            for &s in &cfg.s_grid {
                let tail = if s == 0 { 0.0 } else { best_s_term_error(&compressible, s, 1.0) / (s as f64).sqrt() };
                rows.push(format!(
                    "compressible,{s},{name},{m},{n},{:.16e},{},{},{},{:.16e}",
                    r.mu,
                    r.full_coherence,
                    fmt_opt(r.coef_error),
                    fmt_opt(r.resynthesis_error),
                    tail
                ));
            }
        }
    }
    out.write("wigner.csv", &csv(WIGNER_HEADER, &context(cfg), rows))
}
