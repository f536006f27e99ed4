//! Success-rate sweeps over measurement count and sparsity.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{
    generate_sparse, omp_solve, relative_error, NonzeroDistribution, OmpOptions, QcbpOptions,
    QcbpSolver, RecoveryProblem, SparseSignalSpec,
};
use crate::error::{Error, Result};
use crate::optimize::{optimized_pattern, OptimizerConfig};
use crate::patterns::{
    derive_seed, random_pattern, regular_pattern, Domain, Measure, RegularKind, SamplingPattern,
};
use crate::sensing::{build_matrix, dimension};

/// Relative ℓ₂ error at or below which a trial succeeds.
pub const SUCCESS_THRESHOLD: f64 = 1e-3;

pub const PHASE_CSV_HEADER: &str = "m,s,trials,successes,rate";

#[derive(Debug, Clone, PartialEq)]
pub enum PatternFamily {
    Regular(RegularKind),
    /// Redrawn for every trial; rows are preconditioned.
    Random(Measure),
    /// Optimized once per `m`.
    Optimized { config: OptimizerConfig, restarts: usize },
    /// Caller-supplied patterns, one per grid value of `m`.
    Provided { label: String, patterns: Vec<SamplingPattern> },
}

impl PatternFamily {
    pub fn label(&self) -> String {
        match self {
            PatternFamily::Regular(k) => k.name().to_string(),
            PatternFamily::Random(meas) => format!("random-{}", meas.name()),
            PatternFamily::Optimized { .. } => "optimized".to_string(),
            PatternFamily::Provided { label, .. } => label.clone(),
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, PatternFamily::Random(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverKind {
    Qcbp(QcbpOptions),
    /// Stops at `s` atoms.
    Omp,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Qcbp(_) => "qcbp",
            SolverKind::Omp => "omp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTransitionConfig {
    pub domain: Domain,
    pub b: usize,
    pub family: PatternFamily,
    pub m_grid: Vec<usize>,
    pub s_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverKind,
    pub threshold: f64,
    pub distribution: NonzeroDistribution,
}

impl PhaseTransitionConfig {
    pub fn new(domain: Domain, b: usize, family: PatternFamily, m_grid: Vec<usize>, s_grid: Vec<usize>) -> Self {
        PhaseTransitionConfig {
            domain,
            b,
            family,
            m_grid,
            s_grid,
            trials: 50,
            seed: 0,
            solver: SolverKind::Qcbp(QcbpOptions::sweep()),
            threshold: SUCCESS_THRESHOLD,
            distribution: NonzeroDistribution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_grid.is_empty() || self.s_grid.is_empty() {
            return Err(Error::invalid("m and s grids must be nonempty"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.b == 0 {
            return Err(Error::invalid("bandwidth must be at least 1"));
        }
        let n = dimension(self.domain, self.b);
        if let Some(&s) = self.s_grid.iter().find(|&&s| s > n) {
            return Err(Error::invalid(format!("sparsity {s} exceeds N = {n}")));
        }
        if self.m_grid.contains(&0) {
            return Err(Error::invalid("m must be at least 1"));
        }
        if let PatternFamily::Provided { patterns, .. } = &self.family {
            if patterns.len() != self.m_grid.len() {
                return Err(Error::invalid("one provided pattern is required per m"));
            }
            for (p, &m) in patterns.iter().zip(&self.m_grid) {
                if p.len() != m || p.domain() != self.domain {
                    return Err(Error::invalid(format!("provided pattern does not match m = {m}")));
                }
            }
        }
        if !(self.threshold > 0.0) {
            return Err(Error::invalid("success threshold must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionCell {
    pub m: usize,
    pub s: usize,
    pub trials: usize,
    pub successes: usize,
    /// Trials whose solver returned an error; counted as failures too.
    pub solver_errors: usize,
}

impl TransitionCell {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{:.6}", self.m, self.s, self.trials, self.successes, self.rate())
    }
}

#[derive(Debug, Clone)]
pub struct PhaseTransitionGrid {
    pub family: String,
    pub solver: &'static str,
    pub m_grid: Vec<usize>,
    pub s_grid: Vec<usize>,
    /// Row-major in `m`, then `s`.
    pub cells: Vec<TransitionCell>,
    /// Pattern generation, including optimization.
    pub pattern_time: Duration,
    pub solve_time: Duration,
}

impl PhaseTransitionGrid {
    pub fn cell(&self, m: usize, s: usize) -> Option<&TransitionCell> {
        self.cells.iter().find(|c| c.m == m && c.s == s)
    }

    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        self.cells.iter().map(TransitionCell::csv_row)
    }

    pub fn solver_errors(&self) -> usize {
        self.cells.iter().map(|c| c.solver_errors).sum()
    }
}

/// Smallest `m` whose success rate at sparsity `s` reaches one half.
pub fn transition_boundary(grid: &PhaseTransitionGrid, s: usize) -> Option<usize> {
    grid.m_grid
        .iter()
        .copied()
        .find(|&m| grid.cell(m, s).is_some_and(|c| c.rate() >= 0.5))
}

/// Runs the sweep. Trials are independent and run in parallel; each draws
/// its signal from `(seed, m, s, trial)` and, for random families, its
/// pattern from `(seed, m, trial)`, so one pattern serves every `s`.
pub fn phase_transition(cfg: &PhaseTransitionConfig) -> Result<PhaseTransitionGrid> {
    cfg.validate()?;
    let n = dimension(cfg.domain, cfg.b);
    let mut cells = Vec::with_capacity(cfg.m_grid.len() * cfg.s_grid.len());
    let mut pattern_time = Duration::ZERO;
    let mut solve_time = Duration::ZERO;

    for (mi, &m) in cfg.m_grid.iter().enumerate() {
        let t0 = Instant::now();
        let fixed = match &cfg.family {
            PatternFamily::Random(_) => None,
            PatternFamily::Regular(kind) => Some(regular_pattern(*kind, m, cfg.domain)?),
            PatternFamily::Optimized { config, restarts } => {
                Some(optimized_pattern(m, cfg.domain, cfg.b, config, *restarts)?)
            }
            PatternFamily::Provided { patterns, .. } => Some(patterns[mi].clone()),
        };
        let shared = match &fixed {
            Some(p) => Some(build_matrix(p, cfg.b, false)?.into_entries()),
            None => None,
        };
        pattern_time += t0.elapsed();

        let t1 = Instant::now();
        let outcomes: Vec<Vec<Outcome>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| -> Result<Vec<Outcome>> {
                let own;
                let a = match &shared {
                    Some(a) => a,
                    None => {
                        let PatternFamily::Random(measure) = cfg.family else {
                            unreachable!("only random families lack a shared matrix")
                        };
                        let seed = derive_seed(cfg.seed, &[m as u64, trial as u64, 1]);
                        let p = random_pattern(measure, m, cfg.domain, seed)?;
                        own = build_matrix(&p, cfg.b, true)?.into_entries();
                        &own
                    }
                };
                run_trial(cfg, a, n, m, trial)
            })
            .collect::<Result<_>>()?;
        solve_time += t1.elapsed();

        for (si, &s) in cfg.s_grid.iter().enumerate() {
            let mut cell = TransitionCell {
                m,
                s,
                trials: cfg.trials,
                successes: 0,
                solver_errors: 0,
            };
            for trial in &outcomes {
                match trial[si] {
                    Outcome::Success => cell.successes += 1,
                    Outcome::Failure => {}
                    Outcome::SolverError => cell.solver_errors += 1,
                }
            }
            cells.push(cell);
        }
    }

    Ok(PhaseTransitionGrid {
        family: cfg.family.label(),
        solver: cfg.solver.name(),
        m_grid: cfg.m_grid.clone(),
        s_grid: cfg.s_grid.clone(),
        cells,
        pattern_time,
        solve_time,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Success,
    Failure,
    SolverError,
}

fn run_trial(
    cfg: &PhaseTransitionConfig,
    a: &DMatrix<Complex64>,
    n: usize,
    m: usize,
    trial: usize,
) -> Result<Vec<Outcome>> {
    let qcbp = match &cfg.solver {
        SolverKind::Qcbp(_) => Some(QcbpSolver::new(a)?),
        SolverKind::Omp => None,
    };
    let mut out = Vec::with_capacity(cfg.s_grid.len());
    for &s in &cfg.s_grid {
        let spec = SparseSignalSpec {
            distribution: cfg.distribution,
            ..SparseSignalSpec::new(n, s, derive_seed(cfg.seed, &[m as u64, s as u64, trial as u64]))
        };
        let g = generate_sparse(&spec)?;
        let y: Vec<Complex64> = (a * nalgebra::DVector::from_column_slice(&g)).as_slice().to_vec();
        let solved = match (&cfg.solver, &qcbp) {
            (SolverKind::Qcbp(opts), Some(solver)) => solver.solve(&y, 0.0, opts),
            _ => {
                let prob = RecoveryProblem::new(a, &y, 0.0)?;
                omp_solve(&prob, &OmpOptions::new(s.min(m).min(n)))
            }
        };
        out.push(match solved {
            Ok(r) if relative_error(&r.z, &g) <= cfg.threshold => Outcome::Success,
            Ok(_) => Outcome::Failure,
            Err(_) => Outcome::SolverError,
        });
    }
    Ok(out)
}
