//! Admissible kernels: the truncated fractional family and user kernels.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{self, adaptive, geometric_series, polar_shell, sphere_area};

/// Truncation scale. `None` is the untruncated (singular) kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    None,
    At(f64),
}

impl Truncation {
    pub fn from_value(rho: f64) -> Self {
        if rho == 0.0 {
            Truncation::None
        } else {
            Truncation::At(rho)
        }
    }

    /// `0.0` for the untruncated kernel.
    pub fn value(&self) -> f64 {
        match *self {
            Truncation::None => 0.0,
            Truncation::At(r) => r,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Truncation::None)
    }
}

/// Ellipticity class parameters `(d, s, lambda, Lambda, rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub dim: usize,
    pub s: f64,
    pub lambda: f64,
    pub lambda_upper: f64,
    pub rho: Truncation,
}

impl KernelParams {
    pub fn new(dim: usize, s: f64, lambda: f64, lambda_upper: f64, rho: f64) -> Result<Self> {
        let p = Self {
            dim,
            s,
            lambda,
            lambda_upper,
            rho: Truncation::from_value(rho),
        };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        if !(self.s.is_finite() && self.s > 0.0 && self.s < 1.0) {
            return Err(invalid("s", format!("{} is not in (0, 1)", self.s)));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(invalid("lambda", format!("{} is not positive", self.lambda)));
        }
        if !(self.lambda_upper.is_finite() && self.lambda_upper > 0.0) {
            return Err(invalid("Lambda", format!("{} is not positive", self.lambda_upper)));
        }
        if let Truncation::At(r) = self.rho {
            if !(r.is_finite() && r > 0.0) {
                return Err(invalid("rho", format!("{r} is not a nonnegative length")));
            }
        }
        Ok(())
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = Truncation::from_value(rho);
        self
    }

    /// `d + 2s`.
    pub fn exponent(&self) -> f64 {
        self.dim as f64 + 2.0 * self.s
    }

    /// `lambda * min(|y|^{-d-2s}, rho^{-d-2s})` as a function of `|y|`.
    pub fn lower_bound(&self, r: f64) -> f64 {
        self.lambda * capped_power(r, self.rho, self.exponent())
    }

    /// Annulus constant of the pure kernel: `int_{B_2r \ B_r} |y|^{-d-2s} = a r^{-2s}`.
    pub fn pure_annulus_constant(&self) -> f64 {
        sphere_area(self.dim) * (1.0 - (-2.0 * self.s).exp2()) / (2.0 * self.s)
    }
}

fn capped_power(r: f64, cap: Truncation, e: f64) -> f64 {
    match cap {
        Truncation::None => r.powf(-e),
        Truncation::At(c) => r.max(c).powf(-e),
    }
}

/// Total mass or a divergent integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mass {
    Finite(f64),
    Infinite,
}

impl Mass {
    pub fn finite(self) -> Option<f64> {
        match self {
            Mass::Finite(v) => Some(v),
            Mass::Infinite => None,
        }
    }
}

pub type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Truncated { scale: f64, cap: Truncation },
    User(EvalFn),
}

/// A concrete kernel `y -> K(y)` together with its class parameters.
#[derive(Clone)]
pub struct KernelFn {
    params: KernelParams,
    shape: Shape,
    symmetric: bool,
}

impl fmt::Debug for KernelFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("KernelFn");
        d.field("params", &self.params);
        match &self.shape {
            Shape::Truncated { scale, cap } => {
                d.field("scale", scale).field("cap", cap);
            }
            Shape::User(_) => {
                d.field("user", &true);
            }
        }
        d.field("symmetric", &self.symmetric).finish()
    }
}

/// `scale * min(|y|^{-d-2s}, rho^{-d-2s})`.
pub fn make_truncated_fractional_kernel(params: KernelParams, scale: f64) -> Result<KernelFn> {
    params.check()?;
    if !scale.is_finite() {
        return Err(invalid("scale", "not finite"));
    }
    if scale < params.lambda {
        return Err(invalid(
            "scale",
            format!(
                "{scale} is below lambda = {}; the kernel would violate the lower bound",
                params.lambda
            ),
        ));
    }
    Ok(KernelFn {
        params,
        shape: Shape::Truncated { scale, cap: params.rho },
        symmetric: true,
    })
}

/// Wraps an arbitrary kernel. Nothing is validated here.
pub fn make_user_kernel<F>(eval: F, params: KernelParams, symmetric: bool) -> KernelFn
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    KernelFn {
        params,
        shape: Shape::User(Arc::new(eval)),
        symmetric,
    }
}

const QUAD_TOL: f64 = 1e-10;

impl KernelFn {
    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Built-in kernels are integrable iff truncated; user kernels are
    /// integrable iff the shell series for their mass converges.
    pub fn is_integrable(&self) -> bool {
        match &self.shape {
            Shape::Truncated { cap, .. } => !cap.is_none(),
            Shape::User(_) => matches!(kernel_l1_norm(self), Mass::Finite(_)),
        }
    }

    /// Multiplier of the built-in family, `None` for user kernels.
    pub fn scale(&self) -> Option<f64> {
        match self.shape {
            Shape::Truncated { scale, .. } => Some(scale),
            Shape::User(_) => None,
        }
    }

    pub fn is_builtin(&self) -> bool {
        matches!(self.shape, Shape::Truncated { .. })
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match &self.shape {
            Shape::Truncated { scale, cap } => {
                let r = norm(y);
                scale * capped_power(r, *cap, self.params.exponent())
            }
            Shape::User(f) => f(y),
        }
    }

    /// Radial profile of a built-in kernel.
    pub fn radial(&self, r: f64) -> Option<f64> {
        match self.shape {
            Shape::Truncated { scale, cap } => Some(scale * capped_power(r, cap, self.params.exponent())),
            Shape::User(_) => None,
        }
    }

    /// Kinks of the radial profile (the cap radius).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.shape {
            Shape::Truncated {
                cap: Truncation::At(c), ..
            } => vec![c],
            _ => match self.params.rho {
                Truncation::At(r) => vec![r],
                Truncation::None => vec![],
            },
        }
    }

    /// The same kernel capped at `lambda * rho^{-d-2s}`.
    pub fn truncate(&self, rho: f64) -> Result<KernelFn> {
        let params = self.params.with_rho(rho);
        params.check()?;
        if rho == 0.0 {
            return Ok(KernelFn { params, ..self.clone() });
        }
        let e = params.exponent();
        let cap_value = params.lambda * rho.powf(-e);
        match &self.shape {
            Shape::Truncated { scale, cap } => {
                // min(scale r^-e, lambda rho^-e) = scale min(r^-e, rho'^-e)
                let r_eff = rho * (scale / params.lambda).powf(1.0 / e);
                let new_cap = match *cap {
                    Truncation::None => r_eff,
                    Truncation::At(c) => c.max(r_eff),
                };
                Ok(KernelFn {
                    params,
                    shape: Shape::Truncated {
                        scale: *scale,
                        cap: Truncation::At(new_cap),
                    },
                    symmetric: true,
                })
            }
            Shape::User(f) => {
                let f = f.clone();
                Ok(KernelFn {
                    params,
                    shape: Shape::User(Arc::new(move |y: &[f64]| f(y).min(cap_value))),
                    symmetric: self.symmetric,
                })
            }
        }
    }

    /// Closed-form `int_{B_2r \ B_r} K` for the built-in family.
    pub fn closed_form_annulus_mass(&self, r: f64) -> Option<f64> {
        match self.shape {
            Shape::Truncated { .. } => self.closed_radial_moment(0.0, r, 2.0 * r).finite(),
            Shape::User(_) => None,
        }
    }

    /// `int_{a < |y| < b} |y|^p K(y) dy`; `b` may be infinite.
    pub fn radial_moment(&self, p: f64, a: f64, b: f64) -> Result<Mass> {
        if !(a >= 0.0 && b >= a) {
            return Err(invalid("radius", format!("bad shell [{a}, {b}]")));
        }
        if a == b {
            return Ok(Mass::Finite(0.0));
        }
        match self.shape {
            Shape::Truncated { .. } => Ok(self.closed_radial_moment(p, a, b)),
            Shape::User(_) => self.quadrature_radial_moment(p, a, b),
        }
    }

    fn closed_radial_moment(&self, p: f64, a: f64, b: f64) -> Mass {
        let Shape::Truncated { scale, cap } = self.shape else {
            unreachable!()
        };
        let d = self.params.dim as f64;
        let two_s = 2.0 * self.params.s;
        let omega = sphere_area(self.params.dim);
        let c = cap.value();
        let mut total = 0.0;
        // |y| < cap: constant kernel cap^{-d-2s}
        if a < c {
            let hi = b.min(c);
            if p + d <= 0.0 {
                return Mass::Infinite;
            }
            total += c.powf(-(d + two_s)) * (hi.powf(p + d) - a.powf(p + d)) / (p + d);
        }
        // |y| > cap: pure power t^{p-2s-1}
        let lo = a.max(c);
        if b > lo {
            let q = p - two_s;
            if lo == 0.0 && q <= 0.0 {
                return Mass::Infinite;
            }
            if b.is_infinite() {
                if q >= 0.0 {
                    return Mass::Infinite;
                }
                total += -lo.powf(q) / q;
            } else if q == 0.0 {
                total += (b / lo).ln();
            } else {
                total += (b.powf(q) - lo.powf(q)) / q;
            }
        }
        Mass::Finite(scale * omega * total)
    }

    fn quadrature_radial_moment(&self, p: f64, a: f64, b: f64) -> Result<Mass> {
        let d = self.params.dim;
        let breaks = self.breakpoints();
        let shell = |lo: f64, hi: f64| -> Result<f64> {
            polar_shell(d, lo, hi, &breaks, QUAD_TOL, |y| {
                let r = norm(y);
                r.powf(p) * self.eval(y)
            })
        };
        let mut total = 0.0;
        let (mut lo, hi_finite) = (a, b.min(if b.is_infinite() { a.max(1.0) * 2.0 } else { b }));
        if a == 0.0 {
            let top = hi_finite;
            match geometric_series(
                |k| shell(top * 0.5.powi(k as i32 + 1), top * 0.5.powi(k as i32)),
                QUAD_TOL,
                0.0,
                200,
            )? {
                Some(v) => total += v,
                None => return Ok(Mass::Infinite),
            }
            lo = top;
        }
        while lo < hi_finite {
            let next = (lo * 2.0).min(hi_finite);
            total += shell(lo, next)?;
            lo = next;
        }
        if b.is_infinite() {
            let base = hi_finite;
            match geometric_series(
                |k| shell(base * 2.0.powi(k as i32), base * 2.0.powi(k as i32 + 1)),
                QUAD_TOL,
                0.0,
                200,
            )? {
                Some(v) => total += v,
                None => return Ok(Mass::Infinite),
            }
        }
        Ok(Mass::Finite(total))
    }

    /// `int K(y) y dy` over `a < |y| < b` (vector first moment); `b` may be
    /// infinite when the series converges.
    pub fn first_moment(&self, a: f64, b: f64) -> Result<Vec<f64>> {
        let d = self.params.dim;
        let mut out = vec![0.0; d];
        if self.symmetric || b <= a {
            return Ok(out);
        }
        let breaks = self.breakpoints();
        for (i, o) in out.iter_mut().enumerate() {
            let shell = |lo: f64, hi: f64| polar_shell(d, lo, hi, &breaks, QUAD_TOL, |y| y[i] * self.eval(y));
            if a == 0.0 {
                return Err(invalid("radius", "first moments need a positive inner radius"));
            }
            if b.is_infinite() {
                let series = geometric_series(
                    |k| shell(a * 2.0.powi(k as i32), a * 2.0.powi(k as i32 + 1)),
                    QUAD_TOL,
                    1e-15 * self.params.lambda_upper * a.powf(1.0 - 2.0 * self.params.s),
                    400,
                )?;
                match series {
                    Some(v) => *o = v,
                    None => return Err(Error::Degenerate("first moment of the kernel tail diverges".into())),
                }
            } else {
                let mut lo = a;
                while lo < b {
                    let next = (lo * 2.0).min(b);
                    *o += shell(lo, next)?;
                    lo = next;
                }
            }
        }
        Ok(out)
    }
}

pub(crate) fn norm(y: &[f64]) -> f64 {
    match y.len() {
        1 => y[0].abs(),
        2 => y[0].hypot(y[1]),
        _ => y.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

/// `int_{B_2r \ B_r} K`.
pub fn annulus_mass(kernel: &KernelFn, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("r", format!("{r} is not a positive radius")));
    }
    if let Some(m) = kernel.closed_form_annulus_mass(r) {
        return Ok(m);
    }
    match kernel.radial_moment(0.0, r, 2.0 * r)? {
        Mass::Finite(m) => Ok(m),
        Mass::Infinite => Err(Error::Degenerate(format!("infinite annulus mass at r = {r}"))),
    }
}

/// Total mass `int K`.
pub fn kernel_l1_norm(kernel: &KernelFn) -> Mass {
    kernel.radial_moment(0.0, 0.0, f64::INFINITY).unwrap_or(Mass::Infinite)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub lower_bound_ok: bool,
    /// Smallest `K / (lambda min(...))` over the sampled nodes, clamped at 0.
    pub lower_bound_ratio: f64,
    pub annulus_bound_ok: bool,
    /// Largest annulus mass over `Lambda r^{-2s}`.
    pub annulus_ratio: f64,
    /// Only evaluated when `s = 1/2`.
    pub symmetry_ok: Option<bool>,
    pub symmetry_ratio: Option<f64>,
    pub sampled_radii: Vec<f64>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.lower_bound_ok && self.annulus_bound_ok && self.symmetry_ok.unwrap_or(true)
    }
}

const RATIO_SLACK: f64 = 1e-12;

/// Checks the lower bound at quadrature nodes, the annulus bound and (for
/// `s = 1/2`) the annulus cancellation of the first moment at every radius.
pub fn validate_ellipticity(kernel: &KernelFn, radii: &[f64], nodes_per_annulus: usize) -> Result<ValidationReport> {
    if radii.is_empty() {
        return Err(invalid("radii", "empty"));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(invalid("radii", format!("{r} is not positive")));
    }
    let p = *kernel.params();
    let n = nodes_per_annulus.max(2);
    let rule = quadrature::GaussLegendre::new(n);
    let dirs = directions(p.dim, n);

    let mut worst = f64::INFINITY;
    let mut y = vec![0.0; p.dim];
    for &r in radii {
        for (t, _) in rule.mapped(r, 2.0 * r) {
            let low = p.lower_bound(t);
            for dir in &dirs {
                for (yi, di) in y.iter_mut().zip(dir) {
                    *yi = t * di;
                }
                let k = kernel.eval(&y);
                if !k.is_finite() {
                    return Err(Error::NonFiniteKernel { node: y.clone() });
                }
                worst = worst.min(k / low);
            }
        }
    }
    let lower_bound_ratio = worst.max(0.0);
    let lower_bound_ok = worst >= 1.0 - RATIO_SLACK;

    let mut annulus_ratio: f64 = 0.0;
    for &r in radii {
        let m = annulus_mass(kernel, r)?;
        if !m.is_finite() {
            return Err(Error::NonFiniteKernel { node: vec![r] });
        }
        annulus_ratio = annulus_ratio.max(m / (p.lambda_upper * r.powf(-2.0 * p.s)));
    }
    let annulus_bound_ok = annulus_ratio <= 1.0 + RATIO_SLACK;

    let (symmetry_ok, symmetry_ratio) = if p.s == 0.5 {
        let mut worst: f64 = 0.0;
        for &r in radii {
            let m = kernel.first_moment(r, 2.0 * r)?;
            let size = norm(&m);
            worst = worst.max(size / (r * p.lambda_upper * r.powf(-2.0 * p.s)));
        }
        (Some(worst <= 1e-9), Some(worst))
    } else {
        (None, None)
    };

    Ok(ValidationReport {
        lower_bound_ok,
        lower_bound_ratio,
        annulus_bound_ok,
        annulus_ratio,
        symmetry_ok,
        symmetry_ratio,
        sampled_radii: radii.to_vec(),
    })
}

/// Unit directions used to sample the lower bound.
fn directions(d: usize, n: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let m = 2 * n;
            (0..m)
                .map(|k| {
                    let th = 2.0 * core::f64::consts::PI * (k as f64 + 0.5) / m as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect()
        }
        _ => {
            let mut out = Vec::new();
            for i in 0..d {
                for sign in [1.0, -1.0] {
                    let mut v = vec![0.0; d];
                    v[i] = sign;
                    out.push(v);
                }
            }
            for mask in 0..(1usize << d.min(6)) {
                let v: Vec<f64> = (0..d)
                    .map(|i| {
                        let sgn = if i < 6 && mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                        sgn / (d as f64).sqrt()
                    })
                    .collect();
                out.push(v);
            }
            out
        }
    }
}

/// Dyadic radii `r_min 2^k` up to `r_max`.
pub fn geometric_radii(r_min: f64, r_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r_min;
    while r <= r_max * (1.0 + 1e-12) {
        out.push(r);
        r *= 2.0;
    }
    out
}

/// `int_{cell} y_i^2 K` over the cube `[-h/2, h/2]^d` and the first moments
/// `int_{cell} y_i K`, by polar quadrature with a graded radial map.
pub(crate) fn cell_moments(kernel: &KernelFn, h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = kernel.dim();
    let half = 0.5 * h;
    let mut m2 = vec![0.0; d];
    let mut m1 = vec![0.0; d];
    match d {
        1 => {
            if kernel.is_builtin() {
                m2[0] = kernel
                    .closed_radial_moment(2.0, 0.0, half)
                    .finite()
                    .unwrap_or(f64::INFINITY);
                return Ok((m2, m1));
            }
            for sign in [1.0, -1.0] {
                let f = |r: f64| kernel.eval(&[sign * r]);
                m2[0] += radial_integral(kernel, half, 2.0, &f)?;
                if !kernel.is_symmetric() {
                    m1[0] += sign * radial_integral(kernel, half, 1.0, &f)?;
                }
            }
        }
        2 => {
            let rule = quadrature::GaussLegendre::new(16);
            let quarter = core::f64::consts::FRAC_PI_4;
            for oct in 0..8 {
                let lo = oct as f64 * quarter;
                for (th, wt) in rule.mapped(lo, lo + quarter) {
                    let (c, s) = (th.cos(), th.sin());
                    let edge = half / c.abs().max(s.abs());
                    let f = |r: f64| kernel.eval(&[r * c, r * s]);
                    // the extra power of r is the polar Jacobian
                    let a2 = radial_integral(kernel, edge, 3.0, &f)?;
                    m2[0] += wt * a2 * c * c;
                    m2[1] += wt * a2 * s * s;
                    if !kernel.is_symmetric() {
                        let a1 = radial_integral(kernel, edge, 2.0, &f)?;
                        m1[0] += wt * a1 * c;
                        m1[1] += wt * a1 * s;
                    }
                }
            }
        }
        _ => return Err(Error::Unsupported(format!("near-field cell moments in dimension {d}"))),
    }
    Ok((m2, m1))
}

/// `int_0^edge r^q f(r) dr` with the substitution `r = edge t^4`.
fn radial_integral(kernel: &KernelFn, edge: f64, q: f64, f: &dyn Fn(f64) -> f64) -> Result<f64> {
    let mut cuts = vec![0.0];
    for b in kernel.breakpoints() {
        if b < edge {
            cuts.push((b / edge).powf(0.25));
        }
    }
    cuts.push(1.0);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += adaptive(
            |t| {
                let r = edge * t.powi(4);
                r.powf(q) * f(r) * 4.0 * edge * t.powi(3)
            },
            w[0],
            w[1],
            1e-12,
            0.0,
        )?;
    }
    Ok(total)
}
