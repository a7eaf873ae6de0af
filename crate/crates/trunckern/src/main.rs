use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trunckern::{exit, ExperimentConfig, Stage};

#[derive(Parser)]
#[command(
    name = "trunckern",
    version,
    about = "Truncated nonlocal operators: experiments and oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report.
    Run {
        config: PathBuf,
        /// Output directory (overrides `out.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse a configuration and build its operator without running it.
    Validate { config: PathBuf },
    /// Run an oracle suite (half_laplacian, lemma_a1, bump, holder, harnack_constant, all).
    Oracle { suite: String },
    /// Run the configuration as a truncation sweep over the given cutoffs.
    Sweep {
        config: PathBuf,
        /// Strictly decreasing cutoffs, e.g. `0.5,0.25,0.125,0`.
        #[arg(long)]
        rho: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    trunckern::parse_config(path).map_err(|e| fail(exit::CONFIG, e))
}

fn run(cfg: &ExperimentConfig, config_path: &Path, out: Option<PathBuf>) -> ExitCode {
    let record = match trunckern::run_experiment(cfg) {
        Ok(r) => r,
        Err(e) if e.stage == Stage::Setup => return fail(exit::CONFIG, e),
        Err(e) => return fail(exit::NUMERICAL, e),
    };
    let dir = out.unwrap_or_else(|| {
        let base = config_path.parent().unwrap_or(Path::new("."));
        base.join(&cfg.out_dir)
    });
    match trunckern::emit_report(&record, &dir) {
        Ok(files) => {
            for f in files {
                println!("{}", dir.join(f).display());
            }
            ExitCode::from(exit::OK)
        }
        Err(e) => fail(exit::IO, format!("writing {}: {e}", dir.display())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = trunckern::init_threads() {
        return fail(exit::CONFIG, e);
    }
    match cli.command {
        Command::Run { config, out } => match load(&config) {
            Ok(cfg) => run(&cfg, &config, out),
            Err(code) => code,
        },
        Command::Sweep { config, rho, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let sweep = trunckern::parse_rho_list(&rho).and_then(|list| cfg.into_sweep(list));
            match sweep {
                Ok(cfg) => run(&cfg, &config, out),
                Err(e) => fail(exit::CONFIG, e),
            }
        }
        Command::Validate { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Err(e) = trunckern::experiment::prepare(&cfg) {
                return fail(exit::CONFIG, e);
            }
            print!("{}", cfg.canonical());
            println!("digest = {}", cfg.digest);
            ExitCode::from(exit::OK)
        }
        Command::Oracle { suite } => match trunckern::run_suite(&suite) {
            Ok(checks) => {
                for c in &checks {
                    println!("{c}");
                }
                if checks.iter().all(|c| c.passed) {
                    ExitCode::from(exit::OK)
                } else {
                    ExitCode::from(exit::NUMERICAL)
                }
            }
            Err(e @ trunckern::SuiteError::Unknown(_)) => fail(exit::CONFIG, e),
            Err(e) => fail(exit::NUMERICAL, e),
        },
    }
}
