use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spherecs::experiment::{run_experiment, ExperimentConfig, ExperimentKind};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Run a sampling-design experiment described by a config file.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// coherence_compare | optimize_pattern | phase_transition | igrf_demo | wigner_forward_demo
    experiment: String,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides SPHERECS_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("spherecs: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(msg) = configure_threads(cli.threads) {
        eprintln!("spherecs: {msg}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match run_experiment(&cfg) {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("spherecs: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, String> {
    let kind: ExperimentKind = cli.experiment.parse()?;
    let mut cfg = ExperimentConfig::load(&cli.config).map_err(|e| e.to_string())?;
    if cfg.kind != kind {
        return Err(format!(
            "{}: config describes '{}' but '{}' was requested",
            cli.config.display(),
            cfg.kind,
            kind
        ));
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn configure_threads(flag: Option<usize>) -> Result<(), String> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("SPHERECS_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("SPHERECS_THREADS must be a positive integer, got '{v}'"))?,
            ),
            Err(_) => None,
        },
    };
    match threads {
        Some(0) => Err("thread count must be at least 1".into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string()),
        None => Ok(()),
    }
}
