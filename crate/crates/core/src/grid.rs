//! Uniform box grids and grid functions with an exterior extension.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};

/// How a grid function is continued outside its box.
#[derive(Debug, Clone, PartialEq)]
pub enum Extension {
    Constant(f64),
    Periodic,
    /// Values on a larger, node-aligned box; constant beyond it (the outer
    /// function's own constant extension).
    Given(Arc<GridFunction>),
}

/// `n` points per axis on `[-L, L]^d` (`[-L, L)^d` when periodic).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub half_width: f64,
    pub n: usize,
    pub extension: Extension,
}

/// Maximum grid dimension supported by the operators.
pub const MAX_GRID_DIM: usize = 2;

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, n: usize, extension: Extension) -> Result<Self> {
        let g = Self {
            dim,
            half_width,
            n,
            extension,
        };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_GRID_DIM {
            return Err(Error::Unsupported(format!(
                "grids of dimension {} (supported: 1, 2)",
                self.dim
            )));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(invalid("L", format!("{} is not positive", self.half_width)));
        }
        if self.n < 8 {
            return Err(invalid("n", format!("{} points per axis (need at least 8)", self.n)));
        }
        match &self.extension {
            Extension::Constant(c) if !c.is_finite() => return Err(invalid("extension_value", "not finite")),
            Extension::Given(outer) => {
                let o = outer.spec();
                if !matches!(o.extension, Extension::Constant(_)) {
                    return Err(Error::GridMismatch(
                        "exterior data must itself use a constant extension".into(),
                    ));
                }
                if o.dim != self.dim {
                    return Err(Error::GridMismatch("exterior data dimension".into()));
                }
                if (o.h() - self.h()).abs() > 1e-12 * self.h() {
                    return Err(Error::GridMismatch(format!(
                        "exterior spacing {} differs from {}",
                        o.h(),
                        self.h()
                    )));
                }
                let m = (o.half_width - self.half_width) / self.h();
                if m < -1e-9 || (m - m.round()).abs() > 1e-6 {
                    return Err(Error::GridMismatch(
                        "exterior box is not a node-aligned superset".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.extension, Extension::Periodic)
    }

    pub fn h(&self) -> f64 {
        if self.is_periodic() {
            2.0 * self.half_width / self.n as f64
        } else {
            2.0 * self.half_width / (self.n - 1) as f64
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }

    pub fn multi_index(&self, flat: usize) -> [usize; MAX_GRID_DIM] {
        let mut out = [0; MAX_GRID_DIM];
        let mut rest = flat;
        for k in (0..self.dim).rev() {
            out[k] = rest % self.n;
            rest /= self.n;
        }
        out
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Coordinates of node `flat`.
    pub fn node(&self, flat: usize) -> [f64; MAX_GRID_DIM] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; MAX_GRID_DIM];
        for k in 0..self.dim {
            x[k] = self.coord(idx[k]);
        }
        x
    }

    /// Index of the node nearest to `x` along one axis, if inside the box.
    fn nearest_axis(&self, x: f64) -> Option<usize> {
        let t = (x + self.half_width) / self.h();
        let i = libm_round(t);
        let top = if self.is_periodic() { self.n } else { self.n - 1 };
        if i < -0.5 || i > top as f64 + 0.5 {
            return None;
        }
        if self.is_periodic() {
            return Some((i as i64).rem_euclid(self.n as i64) as usize);
        }
        // nodes strictly outside [-L, L] by more than half a cell are exterior
        if x < -self.half_width - 1e-12 * self.half_width || x > self.half_width + 1e-12 * self.half_width {
            return None;
        }
        Some(i.clamp(0.0, top as f64) as usize)
    }

    /// Same geometry and same kind of extension (values may differ).
    pub fn compatible(&self, other: &GridSpec) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && self.half_width == other.half_width
            && match (&self.extension, &other.extension) {
                (Extension::Constant(_), Extension::Constant(_)) => true,
                (Extension::Periodic, Extension::Periodic) => true,
                (Extension::Given(a), Extension::Given(b)) => {
                    a.spec().n == b.spec().n && a.spec().half_width == b.spec().half_width
                }
                _ => false,
            }
    }

    pub fn with_extension(&self, extension: Extension) -> Result<GridSpec> {
        GridSpec::new(self.dim, self.half_width, self.n, extension)
    }
}

fn libm_round(x: f64) -> f64 {
    num_traits::Float::round(x)
}

/// Values on the nodes of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.check()?;
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                spec.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResult { node: i, step: None });
        }
        Ok(Self { spec, values })
    }

    pub(crate) fn from_parts(spec: GridSpec, values: Vec<f64>) -> Self {
        Self { spec, values }
    }

    pub fn from_fn<F: FnMut(&[f64]) -> f64>(spec: GridSpec, mut f: F) -> Result<Self> {
        let values = (0..spec.len())
            .map(|i| {
                let x = spec.node(i);
                f(&x[..spec.dim])
            })
            .collect();
        Self::new(spec, values)
    }

    /// `c` on the nodes; the extension is left as in `spec`.
    pub fn constant(spec: GridSpec, c: f64) -> Result<Self> {
        let n = spec.len();
        Self::new(spec, vec![c; n])
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value used beyond every box (`None` when periodic).
    pub fn far_value(&self) -> Option<f64> {
        match &self.spec.extension {
            Extension::Constant(c) => Some(*c),
            Extension::Periodic => None,
            Extension::Given(outer) => outer.far_value(),
        }
    }

    /// `u(y)` for any `y`: nearest node inside the box, the extension outside.
    pub fn eval(&self, y: &[f64]) -> f64 {
        let mut idx = [0usize; MAX_GRID_DIM];
        for k in 0..self.spec.dim {
            match self.spec.nearest_axis(y[k]) {
                Some(i) => idx[k] = i,
                None => return self.exterior(y),
            }
        }
        self.values[self.spec.flat(&idx[..self.spec.dim])]
    }

    fn exterior(&self, y: &[f64]) -> f64 {
        match &self.spec.extension {
            Extension::Constant(c) => *c,
            Extension::Periodic => unreachable!("periodic grids have no exterior"),
            Extension::Given(outer) => outer.eval(y),
        }
    }

    /// Piecewise-linear interpolation in 1D (nearest node otherwise).
    pub fn interpolate(&self, y: &[f64]) -> f64 {
        if self.spec.dim != 1 || self.spec.is_periodic() {
            return self.eval(y);
        }
        let h = self.spec.h();
        let t = (y[0] + self.spec.half_width) / h;
        if t < 0.0 || t > (self.spec.n - 1) as f64 {
            return self.eval(y);
        }
        let i = (t as usize).min(self.spec.n - 2);
        let w = t - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    /// `-u`, including the extension.
    pub fn negated(&self) -> GridFunction {
        let extension = match &self.spec.extension {
            Extension::Constant(c) => Extension::Constant(-c),
            Extension::Periodic => Extension::Periodic,
            Extension::Given(outer) => Extension::Given(Arc::new(outer.negated())),
        };
        GridFunction {
            spec: GridSpec {
                extension,
                ..self.spec.clone()
            },
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// `a u + b v` node-wise with the matching combination of extensions.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        if !self.spec.compatible(&other.spec) {
            return Err(Error::GridMismatch("combining incompatible grids".into()));
        }
        let extension = match (&self.spec.extension, &other.spec.extension) {
            (Extension::Constant(c), Extension::Constant(e)) => Extension::Constant(a * c + b * e),
            (Extension::Periodic, Extension::Periodic) => Extension::Periodic,
            (Extension::Given(x), Extension::Given(y)) => Extension::Given(Arc::new(x.combine(a, y, b)?)),
            _ => unreachable!(),
        };
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        GridFunction::new(
            GridSpec {
                extension,
                ..self.spec.clone()
            },
            values,
        )
    }

    /// `c u` including the extension.
    pub fn scaled(&self, c: f64) -> GridFunction {
        let zero = GridFunction {
            spec: self.spec.clone(),
            values: vec![0.0; self.values.len()],
        };
        self.combine(c, &zero, 0.0)
            .unwrap_or_else(|_| unreachable!("same grid"))
    }

    /// Same values on a grid whose extension is replaced.
    pub fn with_extension(&self, extension: Extension) -> Result<GridFunction> {
        GridFunction::new(self.spec.with_extension(extension)?, self.values.clone())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest value over the nodes and every exterior value.
    pub fn global_min(&self) -> f64 {
        let inner = self.min();
        match &self.spec.extension {
            Extension::Constant(c) => inner.min(*c),
            Extension::Periodic => inner,
            Extension::Given(outer) => inner.min(outer.global_min()),
        }
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// The lattice that carries data for an operator: the box itself or the
/// exterior box of a `Given` extension, with the inner values written in.
#[derive(Debug, Clone)]
pub(crate) struct DataLattice {
    pub n: usize,
    pub offset: usize,
    pub values: Vec<f64>,
    /// Value beyond the lattice; `None` when periodic.
    pub far: Option<f64>,
}

impl DataLattice {
    pub fn geometry(spec: &GridSpec) -> (usize, usize) {
        match &spec.extension {
            Extension::Given(outer) => {
                let o = outer.spec();
                let m = ((o.half_width - spec.half_width) / spec.h()).round() as usize;
                (o.n, m)
            }
            _ => (spec.n, 0),
        }
    }

    pub fn new(u: &GridFunction) -> DataLattice {
        let spec = u.spec();
        match &spec.extension {
            Extension::Constant(c) => DataLattice {
                n: spec.n,
                offset: 0,
                values: u.values.clone(),
                far: Some(*c),
            },
            Extension::Periodic => DataLattice {
                n: spec.n,
                offset: 0,
                values: u.values.clone(),
                far: None,
            },
            Extension::Given(outer) => {
                let (nd, m) = Self::geometry(spec);
                let mut values = outer.values.clone();
                let n = spec.n;
                match spec.dim {
                    1 => values[m..m + n].copy_from_slice(&u.values),
                    _ => {
                        for r in 0..n {
                            let dst = (r + m) * nd + m;
                            values[dst..dst + n].copy_from_slice(&u.values[r * n..(r + 1) * n]);
                        }
                    }
                }
                DataLattice {
                    n: nd,
                    offset: m,
                    values,
                    far: outer.far_value(),
                }
            }
        }
    }
}
