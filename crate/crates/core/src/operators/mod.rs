//! Discrete nonlocal operators on grid functions.
//!
//! Offsets `y = jh` of the infinite lattice carry weights `w(j)`; offsets
//! that land outside the data box see the exterior value, and everything
//! beyond the dyadic ring `2^I h` covering the box is a continuum tail with
//! exactly integrated mass. The central cell `[-h/2, h/2]^d` is replaced by
//! the second-difference model `1/2 sum_i m_i D_i^2 u`.

mod pucci;
mod stencil;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::grid::{DataLattice, GridFunction, GridSpec};
use crate::kernel::{make_truncated_fractional_kernel, KernelFn, KernelParams};

pub(crate) use pucci::PucciStencil;
pub(crate) use stencil::{LinearStencil, View};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NearFieldMode {
    #[default]
    SecondDifference,
    Drop,
}

/// Gradient discretization inside compensators and drift terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientScheme {
    /// Centered differences (operator evaluation).
    #[default]
    Centered,
    /// One-sided differences chosen for monotonicity (time stepping).
    Upwind,
}

/// Drift vector field `b`.
#[derive(Debug, Clone, PartialEq)]
pub enum Drift {
    Constant(Vec<f64>),
    /// `d` components per node, node-major.
    Nodal(Vec<f64>),
}

impl Drift {
    fn sup(&self, d: usize) -> f64 {
        let v = match self {
            Drift::Constant(b) => b,
            Drift::Nodal(b) => b,
        };
        v.chunks(d.max(1))
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Member `(alpha, beta)` of an Isaac family.
#[derive(Debug, Clone)]
pub struct IsaacMember {
    pub alpha: usize,
    pub beta: usize,
    pub kernel: KernelFn,
    pub drift: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum OperatorKind {
    Linear(KernelFn),
    PucciMinus,
    PucciPlus,
    Isaac(Vec<IsaacMember>),
}

#[derive(Debug, Clone)]
pub struct OperatorConfig {
    pub params: KernelParams,
    pub kind: OperatorKind,
    /// For linear kinds the drift `b`; for Pucci kinds its presence adds the
    /// envelope `+- |b|_inf |grad u|`.
    pub drift: Option<Drift>,
    pub near_field: NearFieldMode,
}

impl OperatorConfig {
    pub fn new(params: KernelParams, kind: OperatorKind) -> Self {
        Self {
            params,
            kind,
            drift: None,
            near_field: NearFieldMode::SecondDifference,
        }
    }

    pub fn linear(kernel: KernelFn) -> Self {
        Self::new(*kernel.params(), OperatorKind::Linear(kernel))
    }

    pub fn with_drift(mut self, drift: Drift) -> Result<Self> {
        self.drift = Some(drift);
        self.validate()?;
        Ok(self)
    }

    pub fn with_near_field(mut self, mode: NearFieldMode) -> Self {
        self.near_field = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.check()?;
        let d = self.params.dim;
        let lam = self.params.lambda_upper;
        let allows_drift = self.params.s >= 0.5;
        if let Some(drift) = &self.drift {
            if !allows_drift {
                return Err(Error::DriftRequiresCriticalOrder { s: self.params.s });
            }
            if let Drift::Constant(b) = drift {
                if b.len() != d {
                    return Err(invalid("drift", format!("{} components in dimension {d}", b.len())));
                }
            }
            if drift.sup(d) > lam * (1.0 + 1e-12) {
                return Err(invalid("drift", format!("|b| exceeds Lambda = {lam}")));
            }
        }
        match &self.kind {
            OperatorKind::Linear(k) => {
                if k.dim() != d {
                    return Err(Error::GridMismatch("kernel dimension".into()));
                }
            }
            OperatorKind::Isaac(family) => {
                if family.is_empty() {
                    return Err(Error::EmptyFamily);
                }
                for m in family {
                    if m.kernel.dim() != d || m.drift.len() != d {
                        return Err(Error::GridMismatch("Isaac member dimension".into()));
                    }
                    let b = m.drift.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if b > 0.0 && !allows_drift {
                        return Err(Error::DriftRequiresCriticalOrder { s: self.params.s });
                    }
                    if b > lam * (1.0 + 1e-12) {
                        return Err(invalid("drift", format!("Isaac drift exceeds Lambda = {lam}")));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The lower-bound kernel `lambda min(|y|^{-d-2s}, rho^{-d-2s})`.
    pub fn lower_kernel(&self) -> Result<KernelFn> {
        make_truncated_fractional_kernel(self.params, self.params.lambda)
    }
}

enum Body {
    Linear(LinearStencil),
    Pucci {
        stencil: PucciStencil,
        minus: bool,
        envelope: Option<f64>,
    },
    Isaac(Vec<(usize, usize, LinearStencil)>),
}

/// An operator discretized on a fixed grid geometry.
pub struct Operator {
    grid: GridSpec,
    s: f64,
    body: Body,
}

impl Operator {
    pub fn new(cfg: &OperatorConfig, grid: &GridSpec) -> Result<Self> {
        cfg.validate()?;
        grid.check()?;
        if grid.dim != cfg.params.dim {
            return Err(Error::GridMismatch(format!(
                "grid dimension {} but kernel dimension {}",
                grid.dim, cfg.params.dim
            )));
        }
        let near = cfg.near_field;
        let body = match &cfg.kind {
            OperatorKind::Linear(k) => Body::Linear(LinearStencil::new(k, grid, near, cfg.drift.clone())?),
            OperatorKind::PucciMinus | OperatorKind::PucciPlus => {
                let low = cfg.lower_kernel()?;
                Body::Pucci {
                    stencil: PucciStencil::new(&low, &cfg.params, grid, near)?,
                    minus: matches!(cfg.kind, OperatorKind::PucciMinus),
                    envelope: cfg.drift.as_ref().map(|b| b.sup(cfg.params.dim)),
                }
            }
            OperatorKind::Isaac(family) => {
                let mut members = Vec::with_capacity(family.len());
                for m in family {
                    let drift = if m.drift.iter().any(|b| *b != 0.0) {
                        Some(Drift::Constant(m.drift.clone()))
                    } else {
                        None
                    };
                    members.push((m.alpha, m.beta, LinearStencil::new(&m.kernel, grid, near, drift)?));
                }
                Body::Isaac(members)
            }
        };
        Ok(Self {
            grid: grid.clone(),
            s: cfg.params.s,
            body,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Largest diagonal coefficient of the scheme: total discrete kernel
    /// mass seen by one node plus near-field and gradient weights.
    pub fn stability_mass(&self) -> f64 {
        match &self.body {
            Body::Linear(st) => st.stability_mass(),
            Body::Pucci { stencil, envelope, .. } => {
                let h = self.grid.h();
                stencil.stability_mass() + envelope.map_or(0.0, |l| l * (self.grid.dim as f64).sqrt() / h)
            }
            Body::Isaac(ms) => ms.iter().map(|m| m.2.stability_mass()).fold(0.0, f64::max),
        }
    }

    pub fn apply(&self, u: &GridFunction, scheme: GradientScheme) -> Result<GridFunction> {
        let mut out = vec![0.0; self.grid.len()];
        self.apply_into(u, scheme, &mut out)?;
        Ok(GridFunction::from_parts(u.spec().clone(), out))
    }

    pub fn apply_into(&self, u: &GridFunction, scheme: GradientScheme, out: &mut [f64]) -> Result<()> {
        if !self.grid.compatible(u.spec()) {
            return Err(Error::GridMismatch(
                "grid function does not match the operator grid".into(),
            ));
        }
        match &self.body {
            Body::Linear(st) => {
                let lat = DataLattice::new(u);
                let view = View::new(&lat, &self.grid);
                fill(out, |p| st.eval(&view, p, scheme));
            }
            Body::Pucci {
                stencil,
                minus,
                envelope,
            } => {
                // M^-(u) = -M^+(-u), so the two are exact mirror images
                let lat = if *minus {
                    DataLattice::new(&u.negated())
                } else {
                    DataLattice::new(u)
                };
                let view = View::new(&lat, &self.grid);
                let env = *envelope;
                fill(out, |p| {
                    let mut v = stencil.eval_plus(&view, p, scheme, self.s);
                    if let Some(l) = env {
                        v += l * view.gradient_norm(p, scheme);
                    }
                    if *minus {
                        -v
                    } else {
                        v
                    }
                });
            }
            Body::Isaac(members) => {
                let lat = DataLattice::new(u);
                let view = View::new(&lat, &self.grid);
                fill(out, |p| isaac_value(members, &view, p, scheme));
            }
        }
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResult { node: i, step: None });
        }
        Ok(())
    }
}

fn isaac_value(members: &[(usize, usize, LinearStencil)], view: &View, p: usize, scheme: GradientScheme) -> f64 {
    // inf over alpha of sup over beta, members grouped by alpha in any order
    let mut alphas: Vec<(usize, f64)> = Vec::new();
    for (a, _, st) in members {
        let v = st.eval(view, p, scheme);
        match alphas.iter_mut().find(|(k, _)| k == a) {
            Some((_, best)) => *best = best.max(v),
            None => alphas.push((*a, v)),
        }
    }
    alphas.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min)
}

#[cfg(feature = "parallel")]
fn fill<F: Fn(usize) -> f64 + Sync + Send>(out: &mut [f64], f: F) {
    use rayon::prelude::*;
    out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
}

#[cfg(not(feature = "parallel"))]
fn fill<F: Fn(usize) -> f64>(out: &mut [f64], f: F) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(i);
    }
}

/// `delta_y u(x)` with the compensator dictated by `s`.
pub fn apply_difference(u: &GridFunction, x: &[f64], y: &[f64], gradient_at_x: &[f64], s: f64) -> f64 {
    let d = u.spec().dim;
    let mut xy = [0.0; crate::grid::MAX_GRID_DIM];
    for k in 0..d {
        xy[k] = x[k] + y[k];
    }
    let diff = u.eval(&xy[..d]) - u.eval(x);
    let dot: f64 = (0..d)
        .map(|k| y[k] * gradient_at_x.get(k).copied().unwrap_or(0.0))
        .sum();
    if s < 0.5 {
        diff
    } else if s == 0.5 {
        let r2: f64 = y[..d].iter().map(|v| v * v).sum();
        if r2 < 1.0 {
            diff - dot
        } else {
            diff
        }
    } else {
        diff - dot
    }
}

fn expect_kind<'a>(cfg: &'a OperatorConfig, what: &str, ok: bool) -> Result<&'a OperatorConfig> {
    if ok {
        Ok(cfg)
    } else {
        Err(invalid("kind", format!("expected a {what} operator")))
    }
}

/// `L_K u (+ b . grad u)` at every node, centered gradients.
pub fn apply_linear(u: &GridFunction, cfg: &OperatorConfig) -> Result<GridFunction> {
    let cfg = expect_kind(cfg, "linear", matches!(cfg.kind, OperatorKind::Linear(_)))?;
    Operator::new(cfg, u.spec())?.apply(u, GradientScheme::Centered)
}

/// Dyadic bang-bang Pucci extremal operator.
pub fn apply_pucci(u: &GridFunction, cfg: &OperatorConfig) -> Result<GridFunction> {
    let cfg = expect_kind(
        cfg,
        "Pucci",
        matches!(cfg.kind, OperatorKind::PucciMinus | OperatorKind::PucciPlus),
    )?;
    Operator::new(cfg, u.spec())?.apply(u, GradientScheme::Centered)
}

/// `inf_alpha sup_beta (b . grad u + L_K u)`.
pub fn apply_isaac(u: &GridFunction, cfg: &OperatorConfig) -> Result<GridFunction> {
    let cfg = expect_kind(cfg, "Isaac", matches!(cfg.kind, OperatorKind::Isaac(_)))?;
    Operator::new(cfg, u.spec())?.apply(u, GradientScheme::Centered)
}

/// `Lambda |grad u|` node-wise.
pub fn drift_envelope(u: &GridFunction, lambda_upper: f64, scheme: GradientScheme) -> GridFunction {
    let lat = DataLattice::new(u);
    let view = View::new(&lat, u.spec());
    let mut out = vec![0.0; u.spec().len()];
    fill(&mut out, |p| lambda_upper * view.gradient_norm(p, scheme));
    GridFunction::from_parts(u.spec().clone(), out)
}
