//! Kernel construction, evolution and metrics for one configuration.

use std::sync::Arc;
use std::time::Instant;

use trunckern_core::{
    estimate_alpha, make_truncated_fractional_kernel, make_user_kernel, oscillation_decay,
    regularity::partial_holder_seminorm_seeded, solve_cauchy, solve_elliptic, solve_truncation_sequence,
    weak_harnack_ratio, Cylinder, Drift, Error, EvolutionConfig, Extension, Forcing, GridFunction, GridSpec,
    IsaacMember, KernelFn, KernelParams, OperatorConfig, OperatorKind, Profile, SpaceTimeField,
};

use crate::config::{ExperimentConfig, ExtensionKind, KernelFamily, OpKind, ProblemKind};

/// Pipeline stage that raised an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Setup,
    Evolution,
    Metrics,
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Setup => "setup",
            Stage::Evolution => "evolution",
            Stage::Metrics => "metrics",
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{} stage: {source}", stage.name())]
pub struct RunError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

fn at(stage: Stage) -> impl Fn(Error) -> RunError {
    move |source| RunError { stage, source }
}

/// One `metrics.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub experiment: String,
    pub rho: f64,
    pub s: f64,
    pub radius: f64,
    pub alpha: f64,
    pub seminorm: f64,
    pub harnack_c: Option<f64>,
    pub osc: Vec<f64>,
    pub alpha_hat: Option<f64>,
    pub harnack_c_avg: Option<f64>,
    pub sup_error: Option<f64>,
}

/// A solved field with the truncation it was computed at.
#[derive(Debug, Clone)]
pub struct Run {
    pub rho: f64,
    pub field: SpaceTimeField,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub digest: String,
    pub input_hash: String,
    pub wall_seconds: f64,
    pub runs: Vec<Run>,
    pub rows: Vec<MetricRow>,
}

pub fn grid_spec(cfg: &ExperimentConfig) -> Result<GridSpec, RunError> {
    let g = &cfg.grid;
    let ext = match g.extension {
        ExtensionKind::Constant(c) => Extension::Constant(c),
        ExtensionKind::Periodic => Extension::Periodic,
    };
    GridSpec::new(g.d, g.half_width, g.n, ext).map_err(at(Stage::Setup))
}

pub fn kernel_params(cfg: &ExperimentConfig) -> Result<KernelParams, RunError> {
    let k = &cfg.kernel;
    KernelParams::new(cfg.grid.d, k.s, k.lambda, k.lambda_upper, k.rho).map_err(at(Stage::Setup))
}

fn kernel(cfg: &ExperimentConfig, params: KernelParams) -> Result<KernelFn, RunError> {
    let k = cfg.kernel;
    match k.family {
        KernelFamily::TruncatedFractional => {
            make_truncated_fractional_kernel(params, k.scale).map_err(at(Stage::Setup))
        }
        KernelFamily::User => {
            let e = params.exponent();
            let cap = params.rho.value();
            let eval = move |y: &[f64]| {
                let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                let tilt = if y[0] > 0.0 { 1.0 + k.asymmetry } else { 1.0 };
                k.scale * tilt * r.max(cap).powf(-e)
            };
            Ok(make_user_kernel(eval, params, k.asymmetry == 0.0))
        }
    }
}

pub fn operator_config(cfg: &ExperimentConfig) -> Result<OperatorConfig, RunError> {
    let params = kernel_params(cfg)?;
    let d = cfg.grid.d;
    let kind = match cfg.op.kind {
        OpKind::Linear => OperatorKind::Linear(kernel(cfg, params)?),
        OpKind::PucciPlus => OperatorKind::PucciPlus,
        OpKind::PucciMinus => OperatorKind::PucciMinus,
        OpKind::Isaac => OperatorKind::Isaac(
            cfg.op
                .members
                .iter()
                .map(|m| {
                    Ok(IsaacMember {
                        alpha: m.alpha,
                        beta: m.beta,
                        kernel: make_truncated_fractional_kernel(params, m.scale).map_err(at(Stage::Setup))?,
                        drift: m.drift.clone(),
                    })
                })
                .collect::<Result<_, RunError>>()?,
        ),
    };
    let op = OperatorConfig::new(params, kind);
    match cfg.op.drift_lambda {
        Some(b) if b > 0.0 => {
            let mut v = vec![0.0; d];
            v[0] = b;
            op.with_drift(Drift::Constant(v)).map_err(at(Stage::Setup))
        }
        _ => {
            op.validate().map_err(at(Stage::Setup))?;
            Ok(op)
        }
    }
}

fn forcing(p: Profile) -> Forcing {
    match p {
        Profile::Constant(0.0) => Forcing::Zero,
        Profile::Constant(c) => Forcing::Constant(c),
        other => Forcing::Field {
            f: Arc::new(move |x: &[f64], _t: f64| other.value(x)),
            bound: other.sup_bound(),
        },
    }
}

pub fn evolution_config(cfg: &ExperimentConfig) -> Result<EvolutionConfig, RunError> {
    let grid = grid_spec(cfg)?;
    let evo = EvolutionConfig {
        initial: cfg.problem.initial.sample(&grid).map_err(at(Stage::Setup))?,
        grid,
        operator: operator_config(cfg)?,
        forcing: forcing(cfg.problem.forcing),
        horizon: cfg.time.horizon,
        dt_policy: cfg.time.dt_policy,
        snapshot_stride: cfg.time.snapshot_stride,
    };
    evo.validate().map_err(at(Stage::Setup))?;
    Ok(evo)
}

/// Builds everything a run needs without stepping.
pub fn prepare(cfg: &ExperimentConfig) -> Result<EvolutionConfig, RunError> {
    let evo = evolution_config(cfg)?;
    if cfg.problem.kind == ProblemKind::TruncationSweep {
        for &r in &cfg.problem.rho_list {
            evo.operator.params.with_rho(r).check().map_err(at(Stage::Setup))?;
        }
    }
    Ok(evo)
}

fn solve(cfg: &ExperimentConfig, evo: &EvolutionConfig) -> Result<(Vec<Run>, Vec<Option<f64>>), RunError> {
    let ev = at(Stage::Evolution);
    match cfg.problem.kind {
        ProblemKind::Cauchy => Ok((
            vec![Run {
                rho: cfg.kernel.rho,
                field: solve_cauchy(evo).map_err(&ev)?,
            }],
            vec![None],
        )),
        ProblemKind::TruncationSweep => {
            let report = solve_truncation_sequence(evo, &cfg.problem.rho_list).map_err(&ev)?;
            let runs = report
                .rho_sequence
                .iter()
                .zip(report.fields)
                .map(|(&rho, field)| Run { rho, field })
                .collect();
            Ok((runs, report.sup_errors.into_iter().map(Some).collect()))
        }
        ProblemKind::Elliptic => {
            let g = &evo.grid;
            let f = cfg.problem.forcing.sample(g).map_err(at(Stage::Setup))?;
            let exterior = GridFunction::constant(g.clone(), cfg.grid_extension_value()).map_err(at(Stage::Setup))?;
            let u = solve_elliptic(g, &evo.operator, &f, &exterior).map_err(&ev)?;
            // stationary solution seen on the cylinder's time window
            let t0 = -cfg.metrics.radius.powf(2.0 * cfg.kernel.s);
            let field = SpaceTimeField::new(g.clone(), -t0, vec![(t0, u.clone()), (0.0, u)]).map_err(&ev)?;
            Ok((
                vec![Run {
                    rho: cfg.kernel.rho,
                    field,
                }],
                vec![None],
            ))
        }
    }
}

const ALPHA_FLOOR: f64 = 0.01;
const ALPHA_CEIL: f64 = 0.99;

fn fitted_alpha(field: &SpaceTimeField, q: &Cylinder, rho: f64) -> Option<f64> {
    estimate_alpha(field, q, rho)
        .ok()
        .filter(|f| !f.degenerate && f.alpha_hat.is_finite())
        .map(|f| f.alpha_hat)
}

fn metrics(cfg: &ExperimentConfig, runs: &[Run], sup_errors: &[Option<f64>]) -> Result<Vec<MetricRow>, RunError> {
    let s = cfg.kernel.s;
    let m = cfg.metrics;
    let q = Cylinder::at_origin(m.radius, s);
    let reference = runs.last().expect("at least one run");
    let alpha = m.alpha.unwrap_or_else(|| {
        fitted_alpha(&reference.field, &q, reference.rho)
            .map(|a| a.clamp(ALPHA_FLOOR, ALPHA_CEIL * 2.0 * s))
            .unwrap_or(s)
    });
    let me = at(Stage::Metrics);
    let mut rows = Vec::with_capacity(runs.len());
    for (run, sup_error) in runs.iter().zip(sup_errors) {
        let semi = partial_holder_seminorm_seeded(&run.field, &q, run.rho, alpha, cfg.seed).map_err(&me)?;
        let harnack = match weak_harnack_ratio(&run.field, &q, m.harnack_a) {
            Ok(h) if !h.degenerate => Some(h),
            Ok(_) | Err(Error::HypothesisViolated(_)) | Err(Error::Unsupported(_)) => None,
            Err(e) => return Err(me(e)),
        };
        let osc = oscillation_decay(&run.field, &q, run.rho, m.levels).map_err(&me)?;
        rows.push(MetricRow {
            experiment: cfg.name.clone(),
            rho: run.rho,
            s,
            radius: m.radius,
            alpha,
            seminorm: semi.seminorm,
            harnack_c: harnack.as_ref().map(|h| h.empirical_c),
            osc: osc.levels.iter().map(|l| l.1).collect(),
            alpha_hat: fitted_alpha(&run.field, &q, run.rho),
            harnack_c_avg: harnack.as_ref().map(|h| h.empirical_c_avg),
            sup_error: *sup_error,
        });
    }
    Ok(rows)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord, RunError> {
    let start = Instant::now();
    let evo = prepare(cfg)?;
    let (runs, sup_errors) = solve(cfg, &evo)?;
    let rows = metrics(cfg, &runs, &sup_errors)?;
    Ok(RunRecord {
        config: cfg.clone(),
        digest: cfg.digest.clone(),
        input_hash: cfg.input_hash.clone(),
        wall_seconds: start.elapsed().as_secs_f64(),
        runs,
        rows,
    })
}

impl ExperimentConfig {
    pub fn grid_extension_value(&self) -> f64 {
        match self.grid.extension {
            ExtensionKind::Constant(c) => c,
            ExtensionKind::Periodic => 0.0,
        }
    }
}
