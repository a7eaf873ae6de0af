//! Monotone explicit time stepping on `[-T, 0]`, truncation sweeps and the
//! elliptic solver.
//!
//! Data are imposed at `t = -T` and the scheme integrates forward, so every
//! field ends at `t = 0` and cylinders are anchored there.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::operators::{GradientScheme, IsaacMember, Operator, OperatorConfig, OperatorKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    /// `dt = theta / M` with `M` the stability mass of the discretization.
    Auto {
        cfl_fraction: f64,
    },
    Fixed(f64),
}

pub type ForcingFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Right-hand side `f(x, t)`.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    Constant(f64),
    /// A bounded field with its sup-norm bound.
    Field {
        f: ForcingFn,
        bound: f64,
    },
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::Constant(c) => write!(f, "Constant({c})"),
            Forcing::Field { bound, .. } => write!(f, "Field {{ bound: {bound} }}"),
        }
    }
}

impl Forcing {
    pub fn bound(&self) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Constant(c) => c.abs(),
            Forcing::Field { bound, .. } => *bound,
        }
    }

    fn add_into(&self, grid: &GridSpec, t: f64, out: &mut [f64]) {
        match self {
            Forcing::Zero => {}
            Forcing::Constant(c) => out.iter_mut().for_each(|v| *v += c),
            Forcing::Field { f, .. } => {
                for (i, v) in out.iter_mut().enumerate() {
                    let x = grid.node(i);
                    *v += f(&x[..grid.dim], t);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub grid: GridSpec,
    pub operator: OperatorConfig,
    pub forcing: Forcing,
    /// Data at `t = -T`.
    pub initial: GridFunction,
    pub horizon: f64,
    pub dt_policy: DtPolicy,
    pub snapshot_stride: usize,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.check()?;
        self.operator.validate()?;
        if !self.grid.compatible(self.initial.spec()) {
            return Err(Error::GridMismatch("initial data is not on the evolution grid".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invalid("T", format!("{} is not positive", self.horizon)));
        }
        match self.dt_policy {
            DtPolicy::Auto { cfl_fraction } if !(cfl_fraction > 0.0 && cfl_fraction <= 1.0) => {
                return Err(invalid("cfl_fraction", format!("{cfl_fraction} is not in (0, 1]")))
            }
            DtPolicy::Fixed(dt) if !(dt.is_finite() && dt > 0.0) => {
                return Err(invalid("dt", format!("{dt} is not positive")))
            }
            _ => {}
        }
        if !self.forcing.bound().is_finite() {
            return Err(invalid("forcing", "unbounded"));
        }
        if self.snapshot_stride == 0 {
            return Err(invalid("snapshot_stride", "must be at least 1"));
        }
        Ok(())
    }
}

/// Snapshots `(t, u(., t))` with strictly increasing `t`, the last at 0.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    pub grid: GridSpec,
    pub dt: f64,
    pub snapshots: Vec<(f64, GridFunction)>,
}

impl SpaceTimeField {
    pub fn new(grid: GridSpec, dt: f64, snapshots: Vec<(f64, GridFunction)>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::Degenerate("field without snapshots".into()));
        }
        for w in snapshots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(invalid("snapshots", "times must increase strictly"));
            }
        }
        for (_, u) in &snapshots {
            if !grid.compatible(u.spec()) {
                return Err(Error::GridMismatch("snapshot grid".into()));
            }
        }
        Ok(Self { grid, dt, snapshots })
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.snapshots.iter().map(|s| s.0)
    }

    pub fn first_time(&self) -> f64 {
        self.snapshots[0].0
    }

    pub fn last(&self) -> &GridFunction {
        &self.snapshots[self.snapshots.len() - 1].1
    }

    /// `c u` for every snapshot, extension included.
    pub fn scaled(&self, c: f64) -> SpaceTimeField {
        let snapshots: Vec<(f64, GridFunction)> = self.snapshots.iter().map(|(t, u)| (*t, u.scaled(c))).collect();
        SpaceTimeField {
            grid: snapshots[0].1.spec().clone(),
            dt: self.dt,
            snapshots,
        }
    }
}

/// `||u_{rho_n} - u_ref||_inf` over every node and snapshot, per truncation
/// level.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rho_sequence: Vec<f64>,
    pub sup_errors: Vec<f64>,
    /// Truncation of the reference run (`0.0` for the untruncated kernel).
    pub reference_rho: f64,
    pub dt: f64,
    pub fields: Vec<SpaceTimeField>,
}

impl ConvergenceReport {
    pub fn finals(&self) -> impl Iterator<Item = &GridFunction> + '_ {
        self.fields.iter().map(|f| f.last())
    }
}

/// Largest stable step for `cfg` (or the fixed step).
pub fn cfl_dt(cfg: &EvolutionConfig) -> Result<f64> {
    let op = Operator::new(&cfg.operator, &cfg.grid)?;
    dt_for(&op, cfg)
}

fn dt_for(op: &Operator, cfg: &EvolutionConfig) -> Result<f64> {
    match cfg.dt_policy {
        DtPolicy::Fixed(dt) => Ok(dt),
        DtPolicy::Auto { cfl_fraction } => {
            let m = op.stability_mass();
            if !m.is_finite() {
                return Err(Error::Degenerate(format!("stability mass {m} is not finite")));
            }
            if m == 0.0 {
                Ok(cfg.horizon)
            } else {
                Ok(cfl_fraction / m)
            }
        }
    }
}

fn step_with(
    op: &Operator,
    forcing: &Forcing,
    u: &GridFunction,
    t: f64,
    dt: f64,
    step: usize,
    buf: &mut Vec<f64>,
) -> Result<GridFunction> {
    buf.resize(u.values().len(), 0.0);
    op.apply_into(u, GradientScheme::Upwind, buf).map_err(|e| match e {
        Error::NonFiniteResult { node, .. } => Error::NonFiniteResult { node, step: Some(step) },
        other => other,
    })?;
    forcing.add_into(u.spec(), t, buf);
    let next: Vec<f64> = u.values().iter().zip(buf.iter()).map(|(v, f)| v + dt * f).collect();
    if let Some(i) = next.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteResult {
            node: i,
            step: Some(step),
        });
    }
    Ok(GridFunction::from_parts(u.spec().clone(), next))
}

/// `u + dt (F(u) + f(., t))` with monotone (upwind) gradients.
pub fn step_explicit(u: &GridFunction, t: f64, cfg: &EvolutionConfig, dt: f64) -> Result<GridFunction> {
    let op = Operator::new(&cfg.operator, u.spec())?;
    let mut buf = Vec::new();
    step_with(&op, &cfg.forcing, u, t, dt, 0, &mut buf)
}

/// Evolves `cfg.initial` from `t = -T` to `t = 0`.
pub fn solve_cauchy(cfg: &EvolutionConfig) -> Result<SpaceTimeField> {
    cfg.validate()?;
    let op = Operator::new(&cfg.operator, &cfg.grid)?;
    let dt = dt_for(&op, cfg)?;
    run(&op, cfg, dt)
}

fn run(op: &Operator, cfg: &EvolutionConfig, dt_max: f64) -> Result<SpaceTimeField> {
    let t_total = cfg.horizon;
    let steps = (t_total / dt_max).ceil().max(1.0) as usize;
    let dt = t_total / steps as f64;
    let mut u = cfg.initial.clone();
    let mut snaps = vec![(-t_total, u.clone())];
    let mut buf = Vec::new();
    for k in 0..steps {
        let t = -t_total + k as f64 * dt;
        u = step_with(op, &cfg.forcing, &u, t, dt, k, &mut buf)?;
        let done = k + 1 == steps;
        if done || (k + 1) % cfg.snapshot_stride == 0 {
            let tk = if done { 0.0 } else { -t_total + (k + 1) as f64 * dt };
            snaps.push((tk, u.clone()));
        }
    }
    SpaceTimeField::new(cfg.grid.clone(), dt, snaps)
}

fn truncated_operator(op: &OperatorConfig, rho: f64) -> Result<OperatorConfig> {
    let mut out = op.clone();
    out.params = op.params.with_rho(rho);
    out.kind = match &op.kind {
        OperatorKind::Linear(k) => OperatorKind::Linear(k.truncate(rho)?),
        OperatorKind::PucciMinus => OperatorKind::PucciMinus,
        OperatorKind::PucciPlus => OperatorKind::PucciPlus,
        OperatorKind::Isaac(family) => OperatorKind::Isaac(
            family
                .iter()
                .map(|m| {
                    Ok(IsaacMember {
                        kernel: m.kernel.truncate(rho)?,
                        ..m.clone()
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    Ok(out)
}

/// Runs the Cauchy problem once per truncation level on a common grid and
/// step (taken from the smallest `rho`), against the `rho = 0` run or the
/// finest level.
pub fn solve_truncation_sequence(cfg: &EvolutionConfig, rho_list: &[f64]) -> Result<ConvergenceReport> {
    cfg.validate()?;
    if rho_list.is_empty() {
        return Err(invalid("rho_list", "empty"));
    }
    for w in rho_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(invalid("rho_list", "must be strictly decreasing"));
        }
    }
    if rho_list.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(invalid("rho_list", "entries must be nonnegative lengths"));
    }
    let configs: Vec<OperatorConfig> = rho_list
        .iter()
        .map(|&r| truncated_operator(&cfg.operator, r))
        .collect::<Result<_>>()?;
    let finest = Operator::new(&configs[configs.len() - 1], &cfg.grid)?;
    let dt = dt_for(&finest, cfg)?;
    let solve = |op_cfg: &OperatorConfig| -> Result<SpaceTimeField> {
        let op = Operator::new(op_cfg, &cfg.grid)?;
        run(&op, cfg, dt)
    };
    #[cfg(feature = "parallel")]
    let fields: Vec<SpaceTimeField> = {
        use rayon::prelude::*;
        configs.par_iter().map(solve).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let fields: Vec<SpaceTimeField> = configs.iter().map(solve).collect::<Result<_>>()?;
    let reference = &fields[fields.len() - 1];
    let sup_errors = fields
        .iter()
        .map(|f| {
            f.snapshots
                .iter()
                .zip(&reference.snapshots)
                .map(|((_, a), (_, b))| a.sup_distance(b))
                .fold(0.0, f64::max)
        })
        .collect();
    let dt = reference.dt;
    Ok(ConvergenceReport {
        rho_sequence: rho_list.to_vec(),
        sup_errors,
        reference_rho: rho_list[rho_list.len() - 1],
        dt,
        fields,
    })
}

#[derive(Debug, Clone)]
pub struct EllipticSolution {
    pub u: GridFunction,
    pub iterations: usize,
    pub residual: f64,
}

const LINEAR_TOL: f64 = 1e-8;
const NONLINEAR_TOL: f64 = 1e-6;
const CHECK_EVERY: usize = 50;
const MAX_ITERATIONS: usize = 1_000_000;

/// Solves `F(u) = f` on the grid nodes with exterior data taken from the
/// extension of `exterior` (whose node values are the starting guess).
pub fn solve_elliptic(
    grid: &GridSpec,
    operator: &OperatorConfig,
    f: &GridFunction,
    exterior: &GridFunction,
) -> Result<GridFunction> {
    Ok(solve_elliptic_detailed(grid, operator, f, exterior)?.u)
}

pub fn solve_elliptic_detailed(
    grid: &GridSpec,
    operator: &OperatorConfig,
    f: &GridFunction,
    exterior: &GridFunction,
) -> Result<EllipticSolution> {
    if !grid.compatible(f.spec()) || !grid.compatible(exterior.spec()) {
        return Err(Error::GridMismatch("elliptic data grids".into()));
    }
    let op = Operator::new(operator, exterior.spec())?;
    let m = op.stability_mass();
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::Degenerate(format!("stability mass {m}")));
    }
    let linear = matches!(operator.kind, OperatorKind::Linear(_));
    let (tol, check) = if linear {
        (LINEAR_TOL, 1)
    } else {
        (NONLINEAR_TOL, CHECK_EVERY)
    };
    let tau = 0.9 / m;
    let mut u = exterior.clone();
    let mut buf = vec![0.0; grid.len()];
    let mut residual = f64::INFINITY;
    for it in 0..MAX_ITERATIONS {
        op.apply_into(&u, GradientScheme::Upwind, &mut buf)?;
        for (b, fv) in buf.iter_mut().zip(f.values()) {
            *b -= fv;
        }
        if it % check == 0 {
            residual = buf.iter().fold(0.0, |a, v| a.max(v.abs()));
            if residual < tol {
                return Ok(EllipticSolution {
                    u,
                    iterations: it,
                    residual,
                });
            }
        }
        let next: Vec<f64> = u.values().iter().zip(&buf).map(|(v, r)| v + tau * r).collect();
        if let Some(i) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResult {
                node: i,
                step: Some(it),
            });
        }
        u = GridFunction::from_parts(u.spec().clone(), next);
    }
    Err(Error::NotConverged {
        iterations: MAX_ITERATIONS,
        residual,
    })
}
