//! Quadrature primitives shared by the kernel catalog and the oracles.
//!
//! Polar integrals over radial ranges use composite Gauss–Legendre panels
//! in the radius and a midpoint rule in the angle (periodic, so it converges
//! fast for smooth angular dependence). Both resolutions are doubled until
//! the relative change drops below the requested tolerance.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-like initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Adaptive bisection with a 10-point Gauss–Legendre rule.
///
/// A panel is accepted when splitting it changes its estimate by less than
/// `rel_tol * |total estimate| + abs_tol`.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let rule = GaussLegendre::new(10);
    let whole = rule.integrate(a, b, &mut f);
    let scale_hint = whole.abs();
    let mut stack: Vec<(f64, f64, f64, u32)> = vec![(a, b, whole, 0)];
    let mut total = 0.0;
    let mut previous = whole;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &mut f);
        let right = rule.integrate(mid, hi, &mut f);
        let refined = left + right;
        let width_frac = (hi - lo).abs() / (b - a).abs();
        let allowed = rel_tol * scale_hint.max(refined.abs()) * width_frac.max(1e-3) + abs_tol;
        if (refined - est).abs() <= allowed || (hi - lo).abs() < 1e-14 * (1.0 + lo.abs()) {
            total += refined;
        } else if depth >= 48 {
            return Err(Error::QuadratureNonConvergence {
                estimate: total + refined,
                previous,
            });
        } else {
            previous = total + refined;
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(total)
}

/// Surface measure of the unit sphere `S^{d-1}`.
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            let half = d as f64 / 2.0;
            2.0 * PI.powf(half) / num_traits::float::FloatCore::max(tgamma(half), f64::MIN_POSITIVE)
        }
    }
}

fn tgamma(x: f64) -> f64 {
    // Lanczos approximation (g = 7, n = 9); only used for d >= 4.
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * tgamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Integral of `g(y)` over the shell `a < |y| < b` in dimension `d <= 3`,
/// in polar coordinates. `breaks` are radii where the integrand may have a
/// kink (e.g. the truncation radius); panels are split there.
pub fn polar_shell<G: FnMut(&[f64]) -> f64>(
    d: usize,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
    mut g: G,
) -> Result<f64> {
    if d == 0 || d > 3 {
        return Err(Error::Unsupported(alloc::format!("polar quadrature in dimension {d}")));
    }
    if b <= a {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = vec![a];
    for &r in breaks {
        if r > a && r < b {
            cuts.push(r);
        }
    }
    cuts.push(b);

    let rule = GaussLegendre::new(8);
    let mut panels = 2usize;
    let mut angles = if d == 1 { 1 } else { 16usize };
    let mut prev = polar_pass(d, &cuts, panels, angles, &rule, &mut g);
    let mut last_change = f64::INFINITY;
    for _ in 0..10 {
        panels *= 2;
        if d > 1 {
            angles *= 2;
        }
        let next = polar_pass(d, &cuts, panels, angles, &rule, &mut g);
        let change = (next - prev).abs();
        if change <= rel_tol * next.abs() || change <= 1e-300 {
            return Ok(next);
        }
        last_change = change;
        prev = next;
    }
    let _ = last_change;
    let again = polar_pass(d, &cuts, panels * 2, angles * 2, &rule, &mut g);
    if (again - prev).abs() <= rel_tol * again.abs() {
        Ok(again)
    } else {
        Err(Error::QuadratureNonConvergence {
            estimate: again,
            previous: prev,
        })
    }
}

fn polar_pass<G: FnMut(&[f64]) -> f64>(
    d: usize,
    cuts: &[f64],
    panels: usize,
    angles: usize,
    rule: &GaussLegendre,
    g: &mut G,
) -> f64 {
    let mut total = 0.0;
    let mut y = [0.0f64; 3];
    for seg in cuts.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let width = (hi - lo) / panels as f64;
        for p in 0..panels {
            let pa = lo + width * p as f64;
            let pb = pa + width;
            for (r, wr) in rule.mapped(pa, pb) {
                match d {
                    1 => {
                        y[0] = r;
                        let plus = g(&y[..1]);
                        y[0] = -r;
                        let minus = g(&y[..1]);
                        total += wr * (plus + minus);
                    }
                    2 => {
                        let dt = 2.0 * PI / angles as f64;
                        let mut acc = 0.0;
                        for k in 0..angles {
                            let th = (k as f64 + 0.5) * dt;
                            y[0] = r * th.cos();
                            y[1] = r * th.sin();
                            acc += g(&y[..2]);
                        }
                        total += wr * r * acc * dt;
                    }
                    _ => {
                        // cos(phi) by Gauss–Legendre, azimuth by midpoint.
                        let polar_rule = GaussLegendre::new((angles / 2).max(4));
                        let dt = 2.0 * PI / angles as f64;
                        let mut acc = 0.0;
                        for (c, wc) in polar_rule.mapped(-1.0, 1.0) {
                            let sphi = (1.0 - c * c).max(0.0).sqrt();
                            for k in 0..angles {
                                let th = (k as f64 + 0.5) * dt;
                                y[0] = r * sphi * th.cos();
                                y[1] = r * sphi * th.sin();
                                y[2] = r * c;
                                acc += wc * g(&y[..3]) * dt;
                            }
                        }
                        total += wr * r * r * acc;
                    }
                }
            }
        }
    }
    total
}

/// Sums `term(k)` for `k = 0, 1, ...` (a dyadic shell decomposition) until
/// the terms become negligible, adding a geometric estimate of the
/// remainder. Returns `None` when the terms do not decay.
pub fn geometric_series<F: FnMut(usize) -> Result<f64>>(
    mut term: F,
    rel_tol: f64,
    abs_tol: f64,
    max_terms: usize,
) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut prev: Option<f64> = None;
    let mut small_run = 0;
    for k in 0..max_terms {
        let t = term(k)?;
        sum += t;
        if t.abs() <= abs_tol {
            small_run += 1;
            if small_run >= 3 && k >= 4 {
                return Ok(Some(sum));
            }
        } else {
            small_run = 0;
        }
        if let Some(p) = prev {
            let q = if p != 0.0 { t / p } else { 0.0 };
            if (0.0..1.0).contains(&q) {
                let remainder = t * q / (1.0 - q);
                if remainder.abs() <= rel_tol * sum.abs() + abs_tol && k >= 3 {
                    return Ok(Some(sum + remainder));
                }
            } else if k > 8 && q >= 1.0 {
                return Ok(None);
            }
        }
        prev = Some(t);
    }
    Ok(None)
}
