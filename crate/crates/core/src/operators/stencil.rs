use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{Drift, GradientScheme, NearFieldMode};
use crate::error::{Error, Result};
use crate::grid::{DataLattice, GridSpec};
use crate::kernel::{cell_moments, KernelFn, Mass};
use crate::quadrature::{adaptive, GaussLegendre};

/// Cells with `|j|_inf <= NEAR_CELLS` get weights that reproduce the cell's
/// second moment `int_cell |y|^2 K` exactly.
const NEAR_CELLS: i64 = 3;

/// Read access to a data lattice from the inner grid's node numbering.
pub(crate) struct View<'a> {
    pub vals: &'a [f64],
    pub nd: usize,
    pub off: usize,
    pub n: usize,
    pub dim: usize,
    pub periodic: bool,
    pub far: f64,
    pub h: f64,
    /// Largest data value (the exterior candidate on a torus).
    pub max_all: f64,
}

impl<'a> View<'a> {
    pub fn new(lat: &'a DataLattice, grid: &GridSpec) -> Self {
        let periodic = lat.far.is_none();
        let max_all = if periodic {
            lat.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        } else {
            0.0
        };
        View {
            vals: &lat.values,
            nd: lat.n,
            off: lat.offset,
            n: grid.n,
            dim: grid.dim,
            periodic,
            far: lat.far.unwrap_or(0.0),
            h: grid.h(),
            max_all,
        }
    }

    /// Data-lattice multi-index of inner node `p`.
    #[inline]
    pub fn q(&self, p: usize) -> [usize; 2] {
        if self.dim == 1 {
            [p + self.off, 0]
        } else {
            [p / self.n + self.off, p % self.n + self.off]
        }
    }

    #[inline]
    pub fn flat(&self, q: [usize; 2]) -> usize {
        if self.dim == 1 {
            q[0]
        } else {
            q[0] * self.nd + q[1]
        }
    }

    /// Value at a data-lattice position that may lie outside the lattice.
    #[inline]
    pub fn value_at(&self, a: [isize; 2]) -> (f64, bool) {
        let nd = self.nd as isize;
        let mut a = a;
        for ak in a.iter_mut().take(self.dim) {
            if *ak < 0 || *ak >= nd {
                if self.periodic {
                    *ak = ak.rem_euclid(nd);
                } else {
                    return (self.far, false);
                }
            }
        }
        (self.vals[self.flat([a[0] as usize, a[1] as usize])], true)
    }

    /// `(u(x - h e_k), u(x + h e_k))`.
    #[inline]
    pub fn neighbors(&self, q: [usize; 2], k: usize) -> (f64, f64) {
        let mut lo = [q[0] as isize, q[1] as isize];
        let mut hi = lo;
        lo[k] -= 1;
        hi[k] += 1;
        (self.value_at(lo).0, self.value_at(hi).0)
    }

    /// `|grad u|` at inner node `p`: centered, or the monotone upwind
    /// magnitude `sqrt(sum max(D+, -D-, 0)^2)`.
    pub fn gradient_norm(&self, p: usize, scheme: GradientScheme) -> f64 {
        let q = self.q(p);
        let ux = self.vals[self.flat(q)];
        let mut acc = 0.0;
        for k in 0..self.dim {
            let (dn, up) = self.neighbors(q, k);
            let g = match scheme {
                GradientScheme::Centered => (up - dn) / (2.0 * self.h),
                GradientScheme::Upwind => {
                    let fwd = (up - ux) / self.h;
                    let bwd = (ux - dn) / self.h;
                    fwd.max(-bwd).max(0.0)
                }
            };
            acc += g * g;
        }
        acc.sqrt()
    }
}

/// Weights of one kernel on the lattice offsets reachable from the data box,
/// plus the dyadic ring sums over the full lattice.
pub(crate) struct LatticeBuild {
    pub weights: Vec<f64>,
    pub width: usize,
    pub rings: usize,
    pub ring_sum: Vec<f64>,
    pub ring_count: Vec<u64>,
    /// Lattice mass of all rings plus the continuum tail.
    pub mass: f64,
    /// `sum y w(y)` over the rings and the continuum tail.
    pub first_all: [f64; 2],
    /// `sum y w(y)` over `|y| < 1`.
    pub first_unit: [f64; 2],
}

/// Ring index of an integer offset with squared norm `m >= 1`:
/// `4^i <= m < 4^{i+1}`.
#[inline]
pub(crate) fn ring_of(m: u64) -> usize {
    ((63 - m.leading_zeros()) / 2) as usize
}

pub(crate) fn ring_count_for(dim: usize, nd: usize) -> usize {
    let reach = (dim as f64).sqrt() * (nd - 1) as f64;
    let mut i = 1;
    while ((1u64 << i) as f64) <= reach {
        i += 1;
    }
    i
}

fn lattice_weight(kernel: &KernelFn, h: f64, j: [i64; 2], dim: usize) -> Result<f64> {
    let linf = j[..dim].iter().map(|v| v.abs()).max().unwrap_or(0);
    let y = [j[0] as f64 * h, j[1] as f64 * h];
    if linf > NEAR_CELLS {
        let k = kernel.eval(&y[..dim]);
        return Ok(k * h.powi(dim as i32));
    }
    let r2 = y[..dim].iter().map(|v| v * v).sum::<f64>();
    let m = cell_second_moment(kernel, h, j, dim)?;
    Ok(m / r2)
}

fn cell_second_moment(kernel: &KernelFn, h: f64, j: [i64; 2], dim: usize) -> Result<f64> {
    if dim == 1 {
        let a = (j[0].abs() as f64 - 0.5) * h;
        let b = a + h;
        if kernel.is_builtin() {
            let m = kernel.radial_moment(2.0, a, b)?;
            return Ok(m.finite().unwrap_or(f64::INFINITY) / 2.0);
        }
        let sign = if j[0] > 0 { 1.0 } else { -1.0 };
        let mut cuts = vec![a];
        for r in kernel.breakpoints() {
            if r > a && r < b {
                cuts.push(r);
            }
        }
        cuts.push(b);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += adaptive(|t| t * t * kernel.eval(&[sign * t]), w[0], w[1], 1e-13, 0.0)?;
        }
        return Ok(total);
    }
    let rule = GaussLegendre::new(8);
    let mut total = 0.0;
    for sx in 0..2 {
        let x0 = (j[0] as f64 - 0.5 + 0.5 * sx as f64) * h;
        for sy in 0..2 {
            let y0 = (j[1] as f64 - 0.5 + 0.5 * sy as f64) * h;
            for (x, wx) in rule.mapped(x0, x0 + 0.5 * h) {
                for (y, wy) in rule.mapped(y0, y0 + 0.5 * h) {
                    total += wx * wy * (x * x + y * y) * kernel.eval(&[x, y]);
                }
            }
        }
    }
    Ok(total)
}

pub(crate) fn build_lattice(kernel: &KernelFn, grid: &GridSpec) -> Result<LatticeBuild> {
    let dim = grid.dim;
    let h = grid.h();
    let (nd, _) = DataLattice::geometry(grid);
    let periodic = grid.is_periodic();
    let width = 2 * nd - 1;
    let rings = ring_count_for(dim, nd);
    let reach = (1i64 << rings) - 1;
    let outer = (1u64 << rings) as f64 * h;
    let mut weights = vec![0.0; width.pow(dim as u32)];
    let mut torus = if periodic {
        vec![0.0; nd.pow(dim as u32)]
    } else {
        Vec::new()
    };
    let mut ring_sum = vec![0.0; rings];
    let mut ring_count = vec![0u64; rings];
    let mut first_all = [0.0; 2];
    let mut first_unit = [0.0; 2];
    let half = nd as i64 - 1;
    let limit = 1u64 << (2 * rings);
    let j1_range = if dim == 2 { -reach..=reach } else { 0..=0 };
    for j0 in -reach..=reach {
        for j1 in j1_range.clone() {
            let m = (j0 * j0 + j1 * j1) as u64;
            if m == 0 || m >= limit {
                continue;
            }
            let j = [j0, j1];
            let w = lattice_weight(kernel, h, j, dim)?;
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::NonFiniteKernel {
                    node: j[..dim].iter().map(|v| *v as f64 * h).collect(),
                });
            }
            let i = ring_of(m);
            ring_sum[i] += w;
            ring_count[i] += 1;
            let y = [j0 as f64 * h, j1 as f64 * h];
            for k in 0..dim {
                first_all[k] += y[k] * w;
                if (m as f64) * h * h < 1.0 {
                    first_unit[k] += y[k] * w;
                }
            }
            if periodic {
                let a = j0.rem_euclid(nd as i64) as usize;
                let b = j1.rem_euclid(nd as i64) as usize;
                let t = if dim == 1 { a } else { a * nd + b };
                torus[t] += w;
            } else if j0.abs() <= half && j1.abs() <= half {
                weights[offset_index(dim, width, nd, j0, j1)] = w;
            }
        }
    }
    let tail = match kernel.radial_moment(0.0, outer, f64::INFINITY)? {
        Mass::Finite(t) => t,
        Mass::Infinite => {
            return Err(Error::Degenerate(format!(
                "kernel mass beyond |y| = {outer} is infinite"
            )))
        }
    };
    if !kernel.is_symmetric() {
        let far = kernel.first_moment(outer, f64::INFINITY)?;
        for k in 0..dim {
            first_all[k] += far[k];
        }
        if outer < 1.0 {
            let mid = kernel.first_moment(outer, 1.0)?;
            for k in 0..dim {
                first_unit[k] += mid[k];
            }
        }
    }
    let mass = ring_sum.iter().sum::<f64>() + tail;
    if periodic {
        let count = torus.len() as f64;
        for (z, t) in torus.iter_mut().enumerate() {
            if z != 0 {
                *t += tail / count;
            }
        }
        torus[0] = 0.0;
        for j0 in -half..=half {
            let j1_range = if dim == 2 { -half..=half } else { 0..=0 };
            for j1 in j1_range {
                let a = j0.rem_euclid(nd as i64) as usize;
                let b = j1.rem_euclid(nd as i64) as usize;
                let t = if dim == 1 { a } else { a * nd + b };
                weights[offset_index(dim, width, nd, j0, j1)] = torus[t];
            }
        }
    }
    Ok(LatticeBuild {
        weights,
        width,
        rings,
        ring_sum,
        ring_count,
        mass,
        first_all,
        first_unit,
    })
}

#[inline]
pub(crate) fn offset_index(dim: usize, width: usize, nd: usize, j0: i64, j1: i64) -> usize {
    let c = nd as i64 - 1;
    if dim == 1 {
        (j0 + c) as usize
    } else {
        (j0 + c) as usize * width + (j1 + c) as usize
    }
}

/// A linear operator `L_K + b . grad` on a fixed grid.
pub(crate) struct LinearStencil {
    pub dim: usize,
    pub nd: usize,
    pub width: usize,
    pub h: f64,
    pub periodic: bool,
    pub weights: Vec<f64>,
    /// Exterior mass per inner node (empty when periodic).
    pub ext: Vec<f64>,
    pub m2: [f64; 2],
    pub drift: [f64; 2],
    pub nodal: Option<Vec<f64>>,
    pub mass: f64,
    pub lattice: LatticeBuild,
}

impl LinearStencil {
    pub fn new(kernel: &KernelFn, grid: &GridSpec, near: NearFieldMode, drift: Option<Drift>) -> Result<Self> {
        let dim = grid.dim;
        let h = grid.h();
        let (nd, off) = DataLattice::geometry(grid);
        let mut lattice = build_lattice(kernel, grid)?;
        let weights = core::mem::take(&mut lattice.weights);
        let width = lattice.width;
        let periodic = grid.is_periodic();
        let ext = if periodic {
            Vec::new()
        } else {
            exterior_mass(&weights, dim, nd, width, grid.n, off, lattice.mass)
        };
        let (m2v, m1v) = match near {
            NearFieldMode::SecondDifference => cell_moments(kernel, h)?,
            NearFieldMode::Drop => (vec![0.0; dim], vec![0.0; dim]),
        };
        let mut m2 = [0.0; 2];
        m2[..dim].copy_from_slice(&m2v);
        let s = kernel.params().s;
        let mut b = [0.0; 2];
        if !kernel.is_symmetric() {
            for k in 0..dim {
                b[k] = if s < 0.5 {
                    m1v[k]
                } else if s == 0.5 {
                    -lattice.first_unit[k]
                } else {
                    -lattice.first_all[k]
                };
            }
        }
        let mut nodal = None;
        match drift {
            Some(Drift::Constant(c)) => {
                for k in 0..dim {
                    b[k] += c[k];
                }
            }
            Some(Drift::Nodal(v)) => {
                if v.len() != grid.len() * dim {
                    return Err(Error::GridMismatch(format!(
                        "nodal drift has {} entries for {} nodes",
                        v.len(),
                        grid.len()
                    )));
                }
                nodal = Some(v);
            }
            None => {}
        }
        let mass = lattice.mass;
        Ok(Self {
            dim,
            nd,
            width,
            h,
            periodic,
            weights,
            ext,
            m2,
            drift: b,
            nodal,
            mass,
            lattice,
        })
    }

    pub fn stability_mass(&self) -> f64 {
        let h = self.h;
        let near: f64 = self.m2[..self.dim].iter().sum::<f64>() / (h * h);
        let mut b: f64 = self.drift[..self.dim].iter().map(|v| v.abs()).sum();
        if let Some(v) = &self.nodal {
            let worst = v
                .chunks(self.dim)
                .map(|c| c.iter().zip(&self.drift).map(|(a, b)| (a + b).abs()).sum::<f64>())
                .fold(0.0, f64::max);
            b = b.max(worst);
        }
        self.mass + near + b / h
    }

    /// `sum_z w(z) (u(x+z) - u(x))` over data offsets plus the exterior term.
    #[inline]
    pub fn lattice_sum(&self, view: &View, p: usize, q: [usize; 2], ux: f64) -> f64 {
        let nd = self.nd;
        let mut acc = 0.0;
        if self.dim == 1 {
            let start = nd - 1 - q[0];
            let w = &self.weights[start..start + nd];
            for (wk, vk) in w.iter().zip(view.vals) {
                acc += wk * (vk - ux);
            }
        } else {
            for k0 in 0..nd {
                let row = (k0 + nd - 1 - q[0]) * self.width + nd - 1 - q[1];
                let w = &self.weights[row..row + nd];
                let v = &view.vals[k0 * nd..(k0 + 1) * nd];
                let mut r = 0.0;
                for (wk, vk) in w.iter().zip(v) {
                    r += wk * (vk - ux);
                }
                acc += r;
            }
        }
        if !self.periodic {
            acc += self.ext[p] * (view.far - ux);
        }
        acc
    }

    #[inline]
    pub fn near_field(&self, view: &View, q: [usize; 2], ux: f64) -> f64 {
        let mut acc = 0.0;
        let h2 = self.h * self.h;
        for k in 0..self.dim {
            if self.m2[k] != 0.0 {
                let (dn, up) = view.neighbors(q, k);
                acc += 0.5 * self.m2[k] * ((up - ux) + (dn - ux)) / h2;
            }
        }
        acc
    }

    #[inline]
    pub fn drift_term(&self, view: &View, p: usize, q: [usize; 2], ux: f64, scheme: GradientScheme) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.dim {
            let mut b = self.drift[k];
            if let Some(v) = &self.nodal {
                b += v[p * self.dim + k];
            }
            if b == 0.0 {
                continue;
            }
            let (dn, up) = view.neighbors(q, k);
            let g = match scheme {
                GradientScheme::Centered => (up - dn) / (2.0 * self.h),
                GradientScheme::Upwind => {
                    if b > 0.0 {
                        (up - ux) / self.h
                    } else {
                        (ux - dn) / self.h
                    }
                }
            };
            acc += b * g;
        }
        acc
    }

    pub fn eval(&self, view: &View, p: usize, scheme: GradientScheme) -> f64 {
        let q = view.q(p);
        let ux = view.vals[view.flat(q)];
        self.lattice_sum(view, p, q, ux) + self.near_field(view, q, ux) + self.drift_term(view, p, q, ux, scheme)
    }
}

/// `mass - sum of data-offset weights` for every inner node, via a
/// summed-area table of the weight box.
fn exterior_mass(weights: &[f64], dim: usize, nd: usize, width: usize, n: usize, off: usize, mass: f64) -> Vec<f64> {
    if dim == 1 {
        let mut prefix = vec![0.0; width + 1];
        for i in 0..width {
            prefix[i + 1] = prefix[i] + weights[i];
        }
        (0..n)
            .map(|p| {
                let q = p + off;
                let start = nd - 1 - q;
                (mass - (prefix[start + nd] - prefix[start])).max(0.0)
            })
            .collect()
    } else {
        let w1 = width + 1;
        let mut sat = vec![0.0; w1 * w1];
        for a in 0..width {
            let mut row = 0.0;
            for b in 0..width {
                row += weights[a * width + b];
                sat[(a + 1) * w1 + b + 1] = sat[a * w1 + b + 1] + row;
            }
        }
        let rect = |a0: usize, b0: usize| {
            let (a1, b1) = (a0 + nd, b0 + nd);
            sat[a1 * w1 + b1] - sat[a0 * w1 + b1] - sat[a1 * w1 + b0] + sat[a0 * w1 + b0]
        };
        (0..n * n)
            .map(|p| {
                let q0 = p / n + off;
                let q1 = p % n + off;
                (mass - rect(nd - 1 - q0, nd - 1 - q1)).max(0.0)
            })
            .collect()
    }
}
