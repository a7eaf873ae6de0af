//! Independent references: brute-force quadrature of nonlocal operators,
//! the half-Laplacian of `x|x|/2` on a line, kernel moment bounds and
//! bump-function bounds.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::grid::{Extension, GridFunction, GridSpec};
use crate::kernel::{norm, KernelFn, KernelParams, Mass};
use crate::operators::{apply_pucci, OperatorConfig, OperatorKind};
use crate::profiles::smoothstep;
use crate::quadrature::{adaptive, geometric_series, polar_shell};

/// Oracle tolerances.
pub mod tol {
    /// Relative change accepted when refining a quadrature shell.
    pub const SHELL: f64 = 1e-9;
    /// Agreement between two independent references.
    pub const CROSS_CHECK: f64 = 1e-6;
    /// Compensator-radius independence for `s = 1/2`.
    pub const COMPENSATOR: f64 = 1e-9;
}

/// Innermost and outermost dyadic shell radii of the brute-force rule.
pub const INNER_RADIUS: f64 = 1.0 / 1_048_576.0;
pub const OUTER_RADIUS: f64 = 1_048_576.0;

/// `beta = 1` on `[0, 1/2]`, a quintic ramp down to `0` on `[1/2, 1]`.
pub fn beta(t: f64) -> f64 {
    1.0 - smoothstep(2.0 * t - 1.0)
}

pub fn beta_prime(t: f64) -> f64 {
    if !(0.5..1.0).contains(&t) {
        return 0.0;
    }
    let u = 2.0 * t - 1.0;
    -2.0 * 30.0 * u * u * (1.0 - u) * (1.0 - u)
}

pub fn beta_second(t: f64) -> f64 {
    if !(0.5..1.0).contains(&t) {
        return 0.0;
    }
    let u = 2.0 * t - 1.0;
    -4.0 * 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)
}

/// `min beta' = -15/4`, attained at `t = 3/4`.
pub const BETA_MIN_SLOPE: f64 = -3.75;
/// `max |beta''| = 40 / sqrt(3)`.
pub const BETA_MAX_CURVATURE: f64 = 23.094_010_767_585_03;

/// `eta(x) = beta(|x| / R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile {
    pub radius: f64,
}

impl BumpProfile {
    /// `|grad eta| <= GRAD_CONSTANT / R`.
    pub const GRAD_CONSTANT: f64 = 3.75;
    /// `|D^2 eta| <= HESS_CONSTANT / R^2` (radial and tangential parts).
    pub const HESS_CONSTANT: f64 = BETA_MAX_CURVATURE;

    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid("R", format!("{radius} is not positive")));
        }
        Ok(Self { radius })
    }

    pub fn eta(&self, x: &[f64]) -> f64 {
        beta(norm(x) / self.radius)
    }

    /// `d/dr eta` at radius `r`.
    pub fn eta_radial_prime(&self, r: f64) -> f64 {
        beta_prime(r / self.radius) / self.radius
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<GridFunction> {
        GridFunction::from_fn(grid.clone(), |x| self.eta(x))
    }
}

/// `int_{B_1} beta(|y|) dy` in closed form.
pub fn beta_ball_integral(dim: usize) -> Result<f64> {
    match dim {
        // 2 (1/2 + 1/4)
        1 => Ok(1.5),
        // 2 pi (1/8 + 9/56)
        2 => Ok(4.0 * core::f64::consts::PI / 7.0),
        _ => Err(Error::Unsupported(format!("bump integral in dimension {dim}"))),
    }
}

/// `mu = 2^{-d-2s} lambda int_{B_1} beta(|y|) dy`.
pub fn mu(dim: usize, s: f64, lambda: f64) -> Result<f64> {
    Ok((-(dim as f64) - 2.0 * s).exp2() * lambda * beta_ball_integral(dim)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForce {
    /// Radius of the gradient compensator for `s = 1/2`.
    pub compensator_radius: f64,
    /// Pieces per dyadic shell.
    pub subdivisions: usize,
    /// Average `y` and `-y` for symmetric kernels.
    pub symmetrize: bool,
}

impl Default for BruteForce {
    fn default() -> Self {
        Self {
            compensator_radius: 1.0,
            subdivisions: 1,
            symmetrize: true,
        }
    }
}

/// `int (u(x+y) - u(x) - 1 grad.y) K(y) dy` by adaptive quadrature over the
/// dyadic shells between [`INNER_RADIUS`] and [`OUTER_RADIUS`].
///
/// Inside the inner ball `u` is replaced by its second-order Taylor
/// polynomial (difference quotients of `u`); beyond the outer radius `u` is
/// taken constant, equal to its value at twice that distance.
pub fn brute_force_operator(u: &dyn Fn(&[f64]) -> f64, kernel: &KernelFn, x: &[f64], gradient: &[f64]) -> Result<f64> {
    brute_force_with(u, kernel, x, gradient, &BruteForce::default())
}

pub fn brute_force_with(
    u: &dyn Fn(&[f64]) -> f64,
    kernel: &KernelFn,
    x: &[f64],
    gradient: &[f64],
    opts: &BruteForce,
) -> Result<f64> {
    let d = kernel.dim();
    if x.len() != d || gradient.len() != d {
        return Err(invalid("x", "point and gradient must match the kernel dimension"));
    }
    if d > 2 {
        return Err(Error::Unsupported(format!("brute force in dimension {d}")));
    }
    if opts.subdivisions == 0 || !(opts.compensator_radius > 0.0) {
        return Err(invalid("brute_force", "bad refinement options"));
    }
    let s = kernel.params().s;
    let sym = kernel.is_symmetric() && opts.symmetrize;
    let comp_r = opts.compensator_radius;
    let compensated = |r: f64| s > 0.5 || (s == 0.5 && r < comp_r);
    let u0 = u(x);
    let mut y_buf = [0.0; 2];
    let shifted = |y: &[f64], sign: f64, buf: &mut [f64; 2]| {
        for k in 0..d {
            buf[k] = x[k] + sign * y[k];
        }
        u(&buf[..d])
    };
    let integrand = |y: &[f64]| -> f64 {
        let mut b = [0.0; 2];
        if sym {
            (0.5 * (shifted(y, 1.0, &mut b) + shifted(y, -1.0, &mut b)) - u0) * kernel.eval(y)
        } else {
            let r = norm(y);
            let dot: f64 = y.iter().zip(gradient).map(|(a, g)| a * g).sum();
            let comp = if compensated(r) { dot } else { 0.0 };
            (shifted(y, 1.0, &mut b) - u0 - comp) * kernel.eval(y)
        }
    };

    let mut breaks = kernel.breakpoints();
    if s == 0.5 {
        breaks.push(comp_r);
    }
    let mut total = 0.0;
    let octaves = (OUTER_RADIUS / INNER_RADIUS).log2().round() as i32;
    for k in 0..octaves {
        let a0 = INNER_RADIUS * 2f64.powi(k);
        let m = opts.subdivisions;
        for j in 0..m {
            let a = a0 * 2f64.powf(j as f64 / m as f64);
            let b = a0 * 2f64.powf((j + 1) as f64 / m as f64);
            let mut cuts = vec![a];
            cuts.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
            cuts.push(b);
            for w in cuts.windows(2) {
                total += match d {
                    1 => {
                        let f = |r: f64| {
                            if sym {
                                2.0 * integrand(&[r])
                            } else {
                                integrand(&[r]) + integrand(&[-r])
                            }
                        };
                        adaptive(f, w[0], w[1], 0.1 * tol::SHELL, 1e-17)?
                    }
                    _ => polar_shell(2, w[0], w[1], &[], 0.1 * tol::SHELL, integrand)?,
                };
            }
        }
    }

    // inner ball: second-order Taylor polynomial
    let step = 1e-3 * (1.0 + norm(x));
    let m2 = match kernel.radial_moment(2.0, 0.0, INNER_RADIUS)? {
        Mass::Finite(v) => v,
        Mass::Infinite => return Err(Error::Degenerate("infinite second moment".into())),
    };
    let mut lap = 0.0;
    for k in 0..d {
        let mut e = [0.0; 2];
        e[k] = step;
        let up = shifted(&e[..d], 1.0, &mut y_buf);
        let dn = shifted(&e[..d], -1.0, &mut y_buf);
        lap += (up + dn - 2.0 * u0) / (step * step);
    }
    total += 0.5 * lap * m2 / d as f64;
    if !sym && !compensated(0.0) {
        let series = geometric_series(
            |k| {
                let hi = INNER_RADIUS * 0.5f64.powi(k as i32);
                let m1 = kernel.first_moment(0.5 * hi, hi)?;
                Ok(m1.iter().zip(gradient).map(|(a, g)| a * g).sum())
            },
            tol::SHELL,
            1e-18,
            400,
        )?;
        total += series.ok_or_else(|| Error::Degenerate("inner first moment diverges".into()))?;
    }

    // far field: constant continuation
    let far = match kernel.radial_moment(0.0, OUTER_RADIUS, f64::INFINITY)? {
        Mass::Finite(v) => v,
        Mass::Infinite => return Err(Error::Degenerate("kernel tail is not integrable".into())),
    };
    let mut e = [0.0; 2];
    e[0] = 2.0 * OUTER_RADIUS;
    let u_far = 0.5 * (shifted(&e[..d], 1.0, &mut y_buf) + shifted(&e[..d], -1.0, &mut y_buf));
    total += (u_far - u0) * far;
    if !sym && s > 0.5 {
        let m1 = kernel.first_moment(OUTER_RADIUS, f64::INFINITY)?;
        total -= m1.iter().zip(gradient).map(|(a, g)| a * g).sum::<f64>();
    }
    if !total.is_finite() {
        return Err(Error::NonFiniteResult { node: 0, step: None });
    }
    Ok(total)
}

/// Bump of the half-Laplacian example: `1` on `[-1, 1]`, supported in
/// `[-2, 2]`.
pub const EXAMPLE_BUMP: BumpProfile = BumpProfile { radius: 2.0 };

/// `u(x) = x|x| eta(x) / 2` with the example bump.
pub fn half_laplacian_test_function(x: f64) -> f64 {
    0.5 * x * x.abs() * EXAMPLE_BUMP.eta(&[x])
}

/// `2x log|x| - x log(1 - x^2)` (zero at the origin).
pub fn half_laplacian_closed_terms(x: f64) -> f64 {
    let a = if x == 0.0 { 0.0 } else { 2.0 * x * x.abs().ln() };
    a - x * (1.0 - x * x).ln()
}

/// `(-Delta)^{1/2} u(x)` for `u = x|x| eta / 2`, `|x| < 1`: the closed-form
/// terms plus the contribution of `|y| >= 1`, where `eta` varies.
pub fn half_laplacian_example(x: f64, eta: &BumpProfile) -> Result<f64> {
    if !(x.abs() < 1.0) {
        return Err(invalid("x", format!("{x} is outside (-1, 1)")));
    }
    if !(eta.radius >= 1.0) {
        return Err(invalid("eta", "the bump must equal 1 on [-1, 1]"));
    }
    let du = |y: f64| y.abs() * eta.eta(&[y]) + 0.5 * y * y.abs() * eta.eta_radial_prime(y.abs()) * y.signum();
    let top = 2.0 * eta.radius;
    let right = adaptive(|y| du(y) / (x - y), 1.0, top, tol::SHELL, 1e-16)?;
    let left = adaptive(|y| du(y) / (x - y), -top, -1.0, tol::SHELL, 1e-16)?;
    Ok(half_laplacian_closed_terms(x) + right + left)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LemmaPart {
    /// `int_{|y| > R} K`.
    TailMass,
    /// `int_{B_R} |y|^alpha K` for `alpha > 2s`.
    InnerMoment { alpha: f64 },
    /// `int_{B_R} |y| K` for `s < 1/2`.
    InnerFirst,
    /// `int_{|y| > R} |y| K` for `s > 1/2`.
    OuterFirst,
    /// `int_{B_R} |y|^2 K`.
    InnerSecond,
    /// `|L_K u (x)|` with compensator radius `R` minus radius `1`.
    CompensatorShift,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaRow {
    pub part: LemmaPart,
    pub radius: f64,
    pub integral: f64,
    /// `integral * R^{-power}`, the radius-free part of the bound.
    pub scaled: f64,
    /// `scaled / Lambda`.
    pub ratio: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Moment bounds of an admissible kernel at the given radii.
pub fn lemma_a1_check(kernel: &KernelFn, radii: &[f64]) -> Result<Vec<LemmaRow>> {
    let p = *kernel.params();
    let s = p.s;
    let two_s = 2.0 * s;
    let lam = p.lambda_upper;
    let finite = |m: Mass| m.finite().ok_or_else(|| Error::Degenerate("infinite moment".into()));
    let mut rows = Vec::new();
    let row = |part, radius: f64, integral: f64, power: f64, bound: f64| {
        let scaled = integral * radius.powf(-power);
        let ratio = scaled / lam;
        LemmaRow {
            part,
            radius,
            integral,
            scaled,
            ratio,
            bound,
            ok: ratio <= bound * (1.0 + 1e-9),
        }
    };
    for &r in radii {
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid("R", format!("{r} is not positive")));
        }
        let tail = finite(kernel.radial_moment(0.0, r, f64::INFINITY)?)?;
        rows.push(row(LemmaPart::TailMass, r, tail, -two_s, 1.0 / (1.0 - (-two_s).exp2())));
        let alpha = 1.0 + s;
        let inner = finite(kernel.radial_moment(alpha, 0.0, r)?)?;
        rows.push(row(
            LemmaPart::InnerMoment { alpha },
            r,
            inner,
            alpha - two_s,
            two_s.exp2() / (1.0 - (two_s - alpha).exp2()),
        ));
        if s < 0.5 {
            let m = finite(kernel.radial_moment(1.0, 0.0, r)?)?;
            rows.push(row(
                LemmaPart::InnerFirst,
                r,
                m,
                1.0 - two_s,
                two_s.exp2() / (1.0 - (two_s - 1.0).exp2()),
            ));
        }
        if s > 0.5 {
            let m = finite(kernel.radial_moment(1.0, r, f64::INFINITY)?)?;
            rows.push(row(
                LemmaPart::OuterFirst,
                r,
                m,
                1.0 - two_s,
                2.0 / (1.0 - (1.0 - two_s).exp2()),
            ));
        }
        let second = finite(kernel.radial_moment(2.0, 0.0, r)?)?;
        rows.push(row(
            LemmaPart::InnerSecond,
            r,
            second,
            2.0 - two_s,
            two_s.exp2() / (1.0 - (two_s - 2.0).exp2()),
        ));
        if s == 0.5 && kernel.is_symmetric() {
            // u(y) = exp(-(y_1 - 0.3)^2) (1 + y_2 / 2) at x = (0.1, 0)
            let test =
                |y: &[f64]| (-(y[0] - 0.3) * (y[0] - 0.3)).exp() * (1.0 + 0.5 * y.get(1).copied().unwrap_or(0.0));
            let x = [0.1, 0.0];
            let x = &x[..kernel.dim()];
            let g = (-0.04f64).exp();
            let grad = [0.4 * g, 0.5 * g];
            let grad = &grad[..kernel.dim()];
            let at = |rc: f64| {
                brute_force_with(
                    &test,
                    kernel,
                    x,
                    grad,
                    &BruteForce {
                        compensator_radius: rc,
                        subdivisions: 1,
                        symmetrize: false,
                    },
                )
            };
            let diff = (at(r)? - at(1.0)?).abs();
            rows.push(LemmaRow {
                part: LemmaPart::CompensatorShift,
                radius: r,
                integral: diff,
                scaled: diff,
                ratio: diff,
                bound: tol::COMPENSATOR,
                ok: diff < tol::COMPENSATOR,
            });
        }
    }
    Ok(rows)
}

/// Grid used to resolve `eta_R`: spacing `R / nodes_per_radius` on
/// `[-box_factor R, box_factor R]^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpResolution {
    pub nodes_per_radius: usize,
    pub box_factor: f64,
}

impl Default for BumpResolution {
    fn default() -> Self {
        Self {
            nodes_per_radius: 256,
            box_factor: 4.0,
        }
    }
}

impl BumpResolution {
    pub fn grid(&self, dim: usize, radius: f64) -> Result<GridSpec> {
        if 2 * self.nodes_per_radius < 16 {
            return Err(invalid(
                "nodes_per_radius",
                "fewer than 16 nodes across the bump support",
            ));
        }
        let h = radius / self.nodes_per_radius as f64;
        let half = self.box_factor * radius;
        let n = (2.0 * half / h).round() as usize + 1;
        GridSpec::new(dim, half, n, Extension::Constant(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpRow {
    pub radius: f64,
    /// `||M^+ eta_R|| R^{2s}`.
    pub sup_plus: f64,
    /// `||M^- eta_R|| R^{2s}`.
    pub sup_minus: f64,
    /// `min M^- eta_R` over the nodes nearest the sphere `|x| = R`, times `R^{2s}`.
    pub boundary_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BumpReport {
    pub rows: Vec<BumpRow>,
    pub mu: f64,
    /// Largest max/min ratio of the scaled sup-norms across radii.
    pub spread: f64,
    /// `boundary_min >= mu` at every radius.
    pub mu_ok: bool,
}

fn pucci_pair(eta: &GridFunction, params: &KernelParams) -> Result<(GridFunction, GridFunction)> {
    let plus = apply_pucci(eta, &OperatorConfig::new(*params, OperatorKind::PucciPlus))?;
    let minus = apply_pucci(eta, &OperatorConfig::new(*params, OperatorKind::PucciMinus))?;
    Ok((plus, minus))
}

fn spread(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let hi = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Scaled sup-norms of `M^+- eta_R` and the boundary lower bound `mu`.
pub fn bump_bound_check(params: &KernelParams, radii: &[f64], res: &BumpResolution) -> Result<BumpReport> {
    params.check()?;
    let rho = params.rho.value();
    let mut rows = Vec::new();
    for &r in radii {
        if !(r > rho) {
            return Err(invalid("R", format!("{r} does not exceed rho = {rho}")));
        }
        let grid = res.grid(params.dim, r)?;
        let eta = BumpProfile::new(r)?.sample(&grid)?;
        let (plus, minus) = pucci_pair(&eta, params)?;
        let scale = r.powf(2.0 * params.s);
        let h = grid.h();
        let mut boundary_min = f64::INFINITY;
        for (i, v) in minus.values().iter().enumerate() {
            let x = grid.node(i);
            if (norm(&x[..params.dim]) - r).abs() <= 0.5 * h * (1.0 + 1e-9) {
                boundary_min = boundary_min.min(*v);
            }
        }
        rows.push(BumpRow {
            radius: r,
            sup_plus: plus.sup_norm() * scale,
            sup_minus: minus.sup_norm() * scale,
            boundary_min: boundary_min * scale,
        });
    }
    let mu = mu(params.dim, params.s, params.lambda)?;
    let spread = spread(rows.iter().map(|r| r.sup_plus)).max(spread(rows.iter().map(|r| r.sup_minus)));
    let mu_ok = rows.iter().all(|r| r.boundary_min >= mu);
    Ok(BumpReport {
        rows,
        mu,
        spread,
        mu_ok,
    })
}

/// Hölder exponent of `M^+- phi` used for smooth bumps.
pub fn holder_gamma(s: f64) -> f64 {
    if s < 0.5 {
        1.0 - 2.0 * s
    } else if s > 0.5 {
        2.0 - 2.0 * s
    } else {
        0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderQuotient {
    pub gamma: f64,
    /// `max |M phi(x) - M phi(y)| R^{2s} (R / |x - y|)^gamma` over `M^+-`.
    pub quotient: f64,
    pub pairs: u64,
    pub degenerate: bool,
}

const MAX_PAIRS: u64 = 10_000_000;

/// Measured constant of the Hölder bound for `M^+- phi`, `supp phi` in `B_R`.
pub fn pucci_holder_quotient(phi: &GridFunction, params: &KernelParams, radius: f64) -> Result<HolderQuotient> {
    let gamma = holder_gamma(params.s);
    if phi.values().iter().all(|v| *v == 0.0) {
        return Ok(HolderQuotient {
            gamma,
            quotient: 0.0,
            pairs: 0,
            degenerate: true,
        });
    }
    let (plus, minus) = pucci_pair(phi, params)?;
    let grid = phi.spec();
    let nodes: Vec<[f64; 2]> = (0..grid.len()).map(|i| grid.node(i)).collect();
    let scale = radius.powf(2.0 * params.s) * radius.powf(gamma);
    let dim = grid.dim;
    let mut best = 0.0f64;
    let mut pairs = 0u64;
    let mut visit = |i: usize, j: usize| {
        let dist = norm(
            &[
                nodes[i][0] - nodes[j][0],
                if dim == 2 { nodes[i][1] - nodes[j][1] } else { 0.0 },
            ][..dim],
        );
        let w = scale / dist.powf(gamma);
        let a = (plus.values()[i] - plus.values()[j]).abs();
        let b = (minus.values()[i] - minus.values()[j]).abs();
        best = best.max(a.max(b) * w);
        pairs += 1;
    };
    let n = nodes.len();
    let total = (n as u64) * (n as u64 - 1) / 2;
    if total <= MAX_PAIRS {
        for i in 0..n {
            for j in i + 1..n {
                visit(i, j);
            }
        }
    } else {
        let per = MAX_PAIRS.div_ceil(n as u64) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for i in 0..n {
            for _ in 0..per {
                let j = rng.random_range(0..n - 1);
                visit(i, if j >= i { j + 1 } else { j });
            }
        }
    }
    Ok(HolderQuotient {
        gamma,
        quotient: best,
        pairs,
        degenerate: false,
    })
}
