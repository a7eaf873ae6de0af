//! Parabolic distance, partial Hölder seminorms, weak Harnack ratios and
//! oscillation decay measured on computed fields.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::evolution::SpaceTimeField;
use crate::grid::{Extension, MAX_GRID_DIM};
use crate::quadrature::GaussLegendre;

/// Largest number of pairs enumerated exhaustively.
pub const MAX_EXHAUSTIVE_PAIRS: u64 = 10_000_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: [f64; MAX_GRID_DIM],
    pub t: f64,
}

/// `Q_R(x0, t0) = B_R(x0) x (t0 - R^{2s}, t0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    pub x0: [f64; MAX_GRID_DIM],
    pub t0: f64,
    pub radius: f64,
    pub s: f64,
}

impl Cylinder {
    pub fn at_origin(radius: f64, s: f64) -> Self {
        Self {
            x0: [0.0; MAX_GRID_DIM],
            t0: 0.0,
            radius,
            s,
        }
    }

    pub fn with_radius(&self, radius: f64) -> Self {
        Self { radius, ..*self }
    }

    pub fn time_length(&self) -> f64 {
        self.radius.powf(2.0 * self.s)
    }

    fn check(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(invalid("R", format!("{} is not positive", self.radius)));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(invalid("s", format!("{} is not in (0, 1)", self.s)));
        }
        if !(self.t0 <= 0.0) {
            return Err(invalid("t0", "cylinders are anchored at t0 <= 0"));
        }
        Ok(())
    }

    fn in_ball(&self, x: &[f64], r: f64) -> bool {
        let d2: f64 = x.iter().zip(&self.x0).map(|(a, b)| (a - b) * (a - b)).sum();
        d2.sqrt() <= r * (1.0 + 1e-12)
    }

    fn in_window(&self, t: f64, r: f64) -> bool {
        let len = r.powf(2.0 * self.s);
        t <= self.t0 + 1e-12 * len && t >= self.t0 - len * (1.0 + 1e-12)
    }

    fn inside(&self, field: &SpaceTimeField) -> Result<()> {
        let g = &field.grid;
        if !g.is_periodic() {
            let reach = self.x0[..g.dim].iter().fold(0.0f64, |m, v| m.max(v.abs())) + self.radius;
            if reach > g.half_width * (1.0 + 1e-12) {
                return Err(invalid("Q", format!("ball of radius {} leaves the box", self.radius)));
            }
        }
        let start = self.t0 - self.time_length();
        if start < field.first_time() - 1e-12 * self.time_length().max(1.0) {
            return Err(invalid(
                "Q",
                format!(
                    "time window starts at {start} before the field ({})",
                    field.first_time()
                ),
            ));
        }
        Ok(())
    }
}

/// `max{|x - y|, |t - tau|^{1/(2s)}}`.
pub fn parabolic_distance(p: (&[f64], f64), q: (&[f64], f64), s: f64) -> f64 {
    let dx: f64 = p.0.iter().zip(q.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    dx.max((p.1 - q.1).abs().powf(1.0 / (2.0 * s)))
}

fn point_distance(p: &Point, q: &Point, s: f64) -> f64 {
    parabolic_distance((&p.x, p.t), (&q.x, q.t), s)
}

/// Snapshot nodes in `Q_r` (same center as `q`) with their values.
fn samples(field: &SpaceTimeField, q: &Cylinder, r: f64) -> Vec<(Point, f64)> {
    let g = &field.grid;
    let mut out = Vec::new();
    for (t, u) in &field.snapshots {
        if !q.in_window(*t, r) {
            continue;
        }
        for (i, v) in u.values().iter().enumerate() {
            let x = g.node(i);
            if q.in_ball(&x[..g.dim], r) {
                out.push((Point { x, t: *t }, *v));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub alpha: f64,
    pub seminorm: f64,
    pub cutoff: f64,
    pub pairs_evaluated: u64,
    pub argmax_pair: Option<(Point, Point)>,
    /// Seed of the pair subsampling, `None` when exhaustive.
    pub sample_seed: Option<u64>,
    /// No admissible pairs.
    pub degenerate: bool,
}

/// `sup |u(p) - u(q)| / d(p, q)^alpha` over snapshot-node pairs in `Q` with
/// `d(p, q) > rho`.
pub fn partial_holder_seminorm(field: &SpaceTimeField, q: &Cylinder, rho: f64, alpha: f64) -> Result<RegularityReport> {
    partial_holder_seminorm_seeded(field, q, rho, alpha, DEFAULT_SEED)
}

pub fn partial_holder_seminorm_seeded(
    field: &SpaceTimeField,
    q: &Cylinder,
    rho: f64,
    alpha: f64,
    seed: u64,
) -> Result<RegularityReport> {
    q.check()?;
    q.inside(field)?;
    if !(alpha > 0.0 && alpha < 2.0 * q.s) {
        return Err(invalid("alpha", format!("{alpha} is not in (0, 2s)")));
    }
    if !(rho >= 0.0) {
        return Err(invalid("rho", format!("{rho} is negative")));
    }
    let pts = samples(field, q, q.radius);
    let n = pts.len() as u64;
    let total = n * n.saturating_sub(1) / 2;
    let mut best = 0.0;
    let mut arg = None;
    let mut evaluated = 0u64;
    let mut visit = |i: usize, j: usize| {
        let (p, a) = &pts[i];
        let (r, b) = &pts[j];
        let d = point_distance(p, r, q.s);
        if d > rho {
            evaluated += 1;
            let v = (a - b).abs() / d.powf(alpha);
            if v > best || arg.is_none() {
                best = v;
                arg = Some((*p, *r));
            }
        }
    };
    let sample_seed = if total <= MAX_EXHAUSTIVE_PAIRS {
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                visit(i, j);
            }
        }
        None
    } else {
        // every point is the first member of the same number of pairs
        let per = MAX_EXHAUSTIVE_PAIRS.div_ceil(n) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..pts.len() {
            for _ in 0..per {
                let j = rng.random_range(0..pts.len() - 1);
                visit(i, if j >= i { j + 1 } else { j });
            }
        }
        Some(seed)
    };
    Ok(RegularityReport {
        alpha,
        seminorm: best,
        cutoff: rho,
        pairs_evaluated: evaluated,
        argmax_pair: arg,
        sample_seed,
        degenerate: evaluated == 0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnackReport {
    pub inf_value: f64,
    /// `int_{I_R \ I_{R/2}} int u(x, t) / (R + |x|)^{d+2s} dx dt`.
    pub weighted_mass: f64,
    pub forcing_bound: f64,
    pub empirical_c: f64,
    /// Mean of `u` over `B_R x (I_R \ I_{R/2})`.
    pub average: f64,
    pub empirical_c_avg: f64,
    pub degenerate: bool,
}

/// Quadrature weights of the snapshot times for `[a, b]`: each snapshot
/// owns the part of its Voronoi cell inside the interval.
fn time_weights(times: &[f64], a: f64, b: f64) -> Vec<f64> {
    let n = times.len();
    (0..n)
        .map(|k| {
            let lo = if k == 0 {
                times[0]
            } else {
                0.5 * (times[k - 1] + times[k])
            };
            let hi = if k + 1 == n {
                f64::INFINITY
            } else {
                0.5 * (times[k] + times[k + 1])
            };
            (hi.min(b) - lo.max(a)).max(0.0)
        })
        .collect()
}

/// `int_{R^d \ [-a, a]^d} (R + |x - x0|)^{-d-2s} dx` for `x0` at the origin.
fn weight_tail(dim: usize, a: f64, r: f64, s: f64) -> f64 {
    let e = 2.0 * s;
    match dim {
        1 => 2.0 * (r + a).powf(-e) / e,
        _ => {
            // octant in polar coordinates, inner radial integral in closed form
            let q = 2.0 + e;
            let radial = |b: f64| (r + b).powf(2.0 - q) / (q - 2.0) - r * (r + b).powf(1.0 - q) / (q - 1.0);
            8.0 * GaussLegendre::new(24).integrate(0.0, core::f64::consts::FRAC_PI_4, |th| radial(a / th.cos()))
        }
    }
}

/// Empirical weak Harnack constant on `Q` for a globally nonnegative field.
pub fn weak_harnack_ratio(field: &SpaceTimeField, q: &Cylinder, a: f64) -> Result<HarnackReport> {
    q.check()?;
    q.inside(field)?;
    if !(a.is_finite() && a >= 0.0) {
        return Err(invalid("a", format!("{a} is not a nonnegative bound")));
    }
    let g = &field.grid;
    let c_ext = match g.extension {
        Extension::Constant(c) => c,
        _ => {
            return Err(Error::Unsupported(
                "weighted mass needs a constant exterior extension".into(),
            ))
        }
    };
    if q.x0[..g.dim].iter().any(|v| *v != 0.0) {
        return Err(Error::Unsupported("weighted mass for off-center cylinders".into()));
    }
    for (t, u) in &field.snapshots {
        let m = u.global_min();
        if m < 0.0 {
            return Err(Error::HypothesisViolated(format!(
                "field takes the negative value {m} at t = {t}"
            )));
        }
    }

    let r = q.radius;
    let inner = samples(field, q, r / 2.0);
    let inf_value = inner.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if inner.is_empty() {
        return Err(Error::Degenerate("no snapshot nodes in Q_{R/2}".into()));
    }

    let (t_a, t_b) = (q.t0 - q.time_length(), q.t0 - (r / 2.0).powf(2.0 * q.s));
    let times: Vec<f64> = field.times().collect();
    let tw = time_weights(&times, t_a, t_b);
    let h = g.h();
    let cell = h.powi(g.dim as i32);
    let e = g.dim as f64 + 2.0 * q.s;
    let box_edge = if g.is_periodic() {
        g.half_width
    } else {
        g.half_width + 0.5 * h
    };
    let tail = c_ext * weight_tail(g.dim, box_edge, r, q.s);
    let mut mass = 0.0;
    let mut plain = 0.0;
    for ((_, u), w) in field.snapshots.iter().zip(&tw) {
        if *w == 0.0 {
            continue;
        }
        let mut sm = 0.0;
        let mut sp = 0.0;
        let mut ball_nodes = 0usize;
        for (i, v) in u.values().iter().enumerate() {
            let x = g.node(i);
            let x = &x[..g.dim];
            let nx = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            sm += v * (r + nx).powf(-e);
            if q.in_ball(x, r) {
                sp += v;
                ball_nodes += 1;
            }
        }
        mass += w * (sm * cell + tail);
        plain += w * sp / ball_nodes.max(1) as f64;
    }
    let window = tw.iter().sum::<f64>();
    let average = if window > 0.0 { plain / window } else { 0.0 };
    let degenerate = !(mass > 0.0);
    Ok(HarnackReport {
        inf_value,
        weighted_mass: mass,
        forcing_bound: a,
        empirical_c: if degenerate { 0.0 } else { (inf_value + a) / mass },
        average,
        empirical_c_avg: if average > 0.0 { (inf_value + a) / average } else { 0.0 },
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationProfile {
    /// `(k, sup - inf over Q_{4^{-k} R})`.
    pub levels: Vec<(usize, f64)>,
    /// Levels dropped because `4^{-k} R < max(rho, 2h)`.
    pub truncated: bool,
}

/// Oscillation of the field over the nested cylinders `Q_{4^{-k} R}`,
/// `k = 0..=levels`, stopping at the resolution floor `max(rho, 2h)`.
pub fn oscillation_decay(field: &SpaceTimeField, q: &Cylinder, rho: f64, levels: usize) -> Result<OscillationProfile> {
    q.check()?;
    q.inside(field)?;
    let floor = rho.max(2.0 * field.grid.h());
    let mut out = Vec::new();
    let mut truncated = false;
    for k in 0..=levels {
        let r = q.radius * 0.25f64.powi(k as i32);
        if r < floor {
            truncated = true;
            break;
        }
        let pts = samples(field, q, r);
        let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
        out.push((k, if pts.is_empty() { 0.0 } else { hi - lo }));
    }
    Ok(OscillationProfile { levels: out, truncated })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaFit {
    pub alpha_hat: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in `log osc`.
    pub residual_rms: f64,
    pub levels: Vec<(usize, f64)>,
    /// All oscillations vanish (or too few are positive to fit).
    pub degenerate: bool,
}

/// Deepest level used by [`estimate_alpha`].
pub const MAX_FIT_LEVELS: usize = 32;

/// Least-squares decay exponent of `osc_k` against `k log 4` over every
/// resolved level.
pub fn estimate_alpha(field: &SpaceTimeField, q: &Cylinder, rho: f64) -> Result<AlphaFit> {
    let prof = oscillation_decay(field, q, rho, MAX_FIT_LEVELS)?;
    if prof.levels.len() < 3 {
        return Err(Error::Degenerate(format!(
            "only {} resolved levels (need 3)",
            prof.levels.len()
        )));
    }
    let pts: Vec<(f64, f64)> = prof
        .levels
        .iter()
        .filter(|(_, o)| *o > 0.0)
        .map(|&(k, o)| (k as f64 * 4f64.ln(), o.ln()))
        .collect();
    if pts.len() < 3 {
        return Ok(AlphaFit {
            alpha_hat: 0.0,
            intercept: 0.0,
            residual_rms: 0.0,
            levels: prof.levels,
            degenerate: true,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(AlphaFit {
        alpha_hat: -slope,
        intercept,
        residual_rms: (rss / n).sqrt(),
        levels: prof.levels,
        degenerate: false,
    })
}
