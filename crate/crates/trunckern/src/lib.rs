//! Experiment configurations, runs, reports and oracle suites for
//! `trunckern-core`.

pub mod config;
pub mod experiment;
pub mod report;
pub mod suites;

pub use config::{parse_config, parse_rho_list, ConfigError, ExperimentConfig};
pub use experiment::{run_experiment, MetricRow, RunError, RunRecord, Stage};
pub use report::{emit_report, metrics_csv, read_snapshots, write_snapshots, CSV_HEADER};
pub use suites::{run_suite, Check, SuiteError};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const NUMERICAL: u8 = 3;
}

/// Builds the global thread pool, capped by `TRUNCKERN_THREADS` when set.
pub fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("TRUNCKERN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("TRUNCKERN_THREADS = `{v}` is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}
