use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::stencil::{build_lattice, offset_index, ring_of, LinearStencil, View};
use super::{GradientScheme, NearFieldMode};
use crate::error::Result;
use crate::grid::GridSpec;
use crate::kernel::{annulus_mass, make_truncated_fractional_kernel, KernelFn, KernelParams};

const MAX_RINGS: usize = 64;
/// Continuum rings beyond the lattice that are tracked one by one.
const TAIL_RINGS: usize = 64;

/// Dyadic bang-bang construction of `M^+`: the lower-bound kernel
/// everywhere, plus on every ring `A_i = [2^i h, 2^{i+1} h)` the mass left
/// under the cap placed on the largest difference in `A_i`. Lattice rings
/// are capped by the lattice weights of `(Lambda / a) |y|^{-d-2s}`,
/// continuum rings by `Lambda (2^i h)^{-2s}`.
pub(crate) struct PucciStencil {
    base: LinearStencil,
    ring: Vec<u8>,
    slack: Vec<f64>,
    ring_count: Vec<u64>,
    /// `(slack, outer radius)` for the first continuum rings.
    tail: Vec<(f64, f64)>,
    tail_slack: f64,
    rest_slack: f64,
    rest_slack_r: f64,
    m2_lo: [f64; 2],
    m2_hi: [f64; 2],
    compensated: bool,
}

impl PucciStencil {
    pub fn new(low: &KernelFn, params: &KernelParams, grid: &GridSpec, near: NearFieldMode) -> Result<Self> {
        let base = LinearStencil::new(low, grid, near, None)?;
        let dim = grid.dim;
        let h = grid.h();
        let s = params.s;
        let lam = params.lambda_upper;
        let lat = &base.lattice;
        let rings = lat.rings.min(MAX_RINGS);

        let nd = base.nd;
        let width = base.width;
        let half = nd as i64 - 1;
        let mut ring = vec![u8::MAX; width.pow(dim as u32)];
        for j0 in -half..=half {
            let j1_range = if dim == 2 { -half..=half } else { 0..=0 };
            for j1 in j1_range {
                let m = (j0 * j0 + j1 * j1) as u64;
                if m > 0 {
                    ring[offset_index(dim, width, nd, j0, j1)] = ring_of(m) as u8;
                }
            }
        }

        let cap = |r: f64| lam * r.powf(-2.0 * s);
        // lattice rings are capped by the lattice image of the pure kernel
        // of annulus constant Lambda, measured with the same cell weights
        let a = params.pure_annulus_constant();
        let top = lam / a;
        let lattice_cap: Vec<f64> = if !(top > params.lambda) {
            lat.ring_sum[..rings].to_vec()
        } else if params.rho.is_none() {
            lat.ring_sum[..rings].iter().map(|m| m * top / params.lambda).collect()
        } else {
            let pure = make_truncated_fractional_kernel(params.with_rho(0.0), top)?;
            build_lattice(&pure, grid)?.ring_sum[..rings].to_vec()
        };
        let slack: Vec<f64> = (0..rings)
            .map(|i| (lattice_cap[i] - lat.ring_sum[i]).max(0.0))
            .collect();

        let mut tail = Vec::with_capacity(TAIL_RINGS);
        let mut r = (1u64 << rings) as f64 * h;
        for _ in 0..TAIL_RINGS {
            let m = annulus_mass(low, r)?;
            tail.push(((cap(r) - m).max(0.0), 2.0 * r));
            r *= 2.0;
        }
        // beyond the tracked rings the truncation is inactive:
        // slack_i = (Lambda - lambda a) r_i^{-2s}
        let excess = (lam - params.lambda * a).max(0.0);
        let rest_slack = excess * r.powf(-2.0 * s) / (1.0 - (-2.0 * s).exp2());
        let rest_slack_r = if s > 0.5 {
            excess * 2.0 * r.powf(1.0 - 2.0 * s) / (1.0 - (1.0 - 2.0 * s).exp2())
        } else {
            0.0
        };
        let tail_slack = tail.iter().map(|t| t.0).sum::<f64>() + rest_slack;

        let (m2_lo, m2_hi) = match near {
            NearFieldMode::Drop => ([0.0; 2], [0.0; 2]),
            NearFieldMode::SecondDifference => {
                let rc = (dim as f64).sqrt() * h / 2.0;
                let e = 2.0 - 2.0 * s;
                let hi = lam * rc.powf(e) * (2.0 * s).exp2() / (1.0 - (-e).exp2());
                let mut hi_v = [0.0; 2];
                for v in hi_v.iter_mut().take(dim) {
                    *v = hi;
                }
                (base.m2, hi_v)
            }
        };

        Ok(Self {
            slack,
            ring_count: lat.ring_count[..rings].to_vec(),
            ring,
            tail,
            tail_slack,
            rest_slack,
            rest_slack_r,
            m2_lo,
            m2_hi,
            compensated: s > 0.5,
            base,
        })
    }

    pub fn stability_mass(&self) -> f64 {
        let b = &self.base;
        let h = b.h;
        let dim = b.dim;
        let mut m = b.mass + self.slack.iter().sum::<f64>() + self.tail_slack;
        m += self.m2_hi[..dim].iter().sum::<f64>() / (h * h);
        if !self.compensated {
            return m;
        }
        // compensated candidates: |y . g| <= r_out d max|D| / h
        let weighted: f64 = self
            .slack
            .iter()
            .enumerate()
            .map(|(i, sl)| sl * (2u64 << i) as f64 * h)
            .sum::<f64>()
            + self.tail.iter().map(|(sl, r)| sl * r).sum::<f64>()
            + self.rest_slack_r;
        m + weighted * dim as f64 / h
    }

    /// `M^+ u` at inner node `p`.
    pub fn eval_plus(&self, view: &View, p: usize, scheme: GradientScheme, s: f64) -> f64 {
        let b = &self.base;
        let q = view.q(p);
        let ux = view.vals[view.flat(q)];
        let mut acc = b.lattice_sum(view, p, q, ux);

        let rings = self.slack.len();
        let mut best = [f64::NEG_INFINITY; MAX_RINGS];
        let mut count = [0u64; MAX_RINGS];
        let nd = b.nd;
        let dim = b.dim;
        let h = b.h;

        // gradient pieces for compensated differences
        let mut fwd = [0.0; 2];
        let mut bwd = [0.0; 2];
        let mut gw = 0.0;
        if s > 0.5 {
            for k in 0..dim {
                let (dn, up) = view.neighbors(q, k);
                fwd[k] = (up - ux) / h;
                bwd[k] = (ux - dn) / h;
                gw += match scheme {
                    GradientScheme::Centered => 0.25 * (fwd[k] + bwd[k]).powi(2),
                    // bounds -y . slope(y) over |y| <= 1, monotone in the neighbours
                    GradientScheme::Upwind => fwd[k].max(-bwd[k]).max(0.0),
                };
            }
            if scheme == GradientScheme::Centered {
                gw = gw.sqrt();
            }
        }
        let slope = |k: usize, y: f64| -> f64 {
            match scheme {
                GradientScheme::Centered => 0.5 * (fwd[k] + bwd[k]),
                GradientScheme::Upwind => {
                    if y > 0.0 {
                        bwd[k]
                    } else {
                        fwd[k]
                    }
                }
            }
        };

        if s == 0.5 {
            // symmetrized candidates over every offset pair touching data
            let half = nd as i64 - 1;
            let qi = [q[0] as isize, q[1] as isize];
            let j1_range = if dim == 2 { -half..=half } else { 0..=0 };
            for j0 in -half..=half {
                for j1 in j1_range.clone() {
                    let r = self.ring[offset_index(dim, b.width, nd, j0, j1)];
                    if r == u8::MAX {
                        continue;
                    }
                    let (a, ina) = view.value_at([qi[0] + j0 as isize, qi[1] + j1 as isize]);
                    let (c, inc) = view.value_at([qi[0] - j0 as isize, qi[1] - j1 as isize]);
                    if !(ina || inc) {
                        continue;
                    }
                    let cand = 0.5 * (a + c) - ux;
                    let r = r as usize;
                    if cand > best[r] {
                        best[r] = cand;
                    }
                    count[r] += 1;
                }
            }
        } else if view.periodic {
            let half = nd as i64 - 1;
            let qi = [q[0] as isize, q[1] as isize];
            let j1_range = if dim == 2 { -half..=half } else { 0..=0 };
            for j0 in -half..=half {
                for j1 in j1_range.clone() {
                    let r = self.ring[offset_index(dim, b.width, nd, j0, j1)];
                    if r == u8::MAX {
                        continue;
                    }
                    let mut cand = view.value_at([qi[0] + j0 as isize, qi[1] + j1 as isize]).0 - ux;
                    if s > 0.5 {
                        let y0 = j0 as f64 * h;
                        cand -= y0 * slope(0, y0);
                        if dim == 2 {
                            let y1 = j1 as f64 * h;
                            cand -= y1 * slope(1, y1);
                        }
                    }
                    let r = r as usize;
                    if cand > best[r] {
                        best[r] = cand;
                    }
                    count[r] += 1;
                }
            }
        } else if dim == 1 {
            let start = nd - 1 - q[0];
            for k in 0..nd {
                let r = self.ring[start + k];
                if r == u8::MAX {
                    continue;
                }
                let mut cand = view.vals[k] - ux;
                if s > 0.5 {
                    let y = (k as f64 - q[0] as f64) * h;
                    cand -= y * slope(0, y);
                }
                let r = r as usize;
                if cand > best[r] {
                    best[r] = cand;
                }
                count[r] += 1;
            }
        } else {
            for k0 in 0..nd {
                let row = (k0 + nd - 1 - q[0]) * b.width + nd - 1 - q[1];
                let y0 = (k0 as f64 - q[0] as f64) * h;
                let g0 = if s > 0.5 { y0 * slope(0, y0) } else { 0.0 };
                for k1 in 0..nd {
                    let r = self.ring[row + k1];
                    if r == u8::MAX {
                        continue;
                    }
                    let mut cand = view.vals[k0 * nd + k1] - ux;
                    if s > 0.5 {
                        let y1 = (k1 as f64 - q[1] as f64) * h;
                        cand -= g0 + y1 * slope(1, y1);
                    }
                    let r = r as usize;
                    if cand > best[r] {
                        best[r] = cand;
                    }
                    count[r] += 1;
                }
            }
        }

        let ext = if view.periodic {
            view.max_all - ux
        } else {
            view.far - ux
        };
        for i in 0..rings {
            let mut m = best[i];
            if self.ring_count[i] > count[i] {
                let widen = if s > 0.5 { (2u64 << i) as f64 * h * gw } else { 0.0 };
                m = m.max(ext + widen);
            }
            if m > 0.0 {
                acc += self.slack[i] * m;
            }
        }
        if s > 0.5 {
            for &(sl, r) in &self.tail {
                let m = ext + r * gw;
                if m > 0.0 {
                    acc += sl * m;
                }
            }
            let rest = if gw > 0.0 {
                self.rest_slack * ext + self.rest_slack_r * gw
            } else {
                self.rest_slack * ext
            };
            if rest > 0.0 {
                acc += rest;
            }
        } else if ext > 0.0 {
            acc += self.tail_slack * ext;
        }

        let h2 = h * h;
        for k in 0..dim {
            let (dn, up) = view.neighbors(q, k);
            let d2 = (up - ux) + (dn - ux);
            let m = if d2 >= 0.0 { self.m2_hi[k] } else { self.m2_lo[k] };
            if m != 0.0 {
                acc += 0.5 * m * d2 / h2;
            }
        }
        acc
    }
}
