//! Named initial-data and forcing profiles.

use alloc::format;
use alloc::string::{String, ToString};

#[allow(unused_imports)]
use num_traits::Float;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::grid::{GridFunction, GridSpec};

/// Side length of the cells on which `rough_seeded` is constant.
pub const ROUGH_CELL: f64 = 1.0 / 32.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// Indicator of `|x|_inf <= radius` with both edges smoothed over
    /// `[radius - width, radius + width]`.
    Box {
        radius: f64,
        width: f64,
    },
    /// `prod_k cos(x_k)`.
    Cosine,
    /// Values uniform in `[0, 1)`, constant on cells of side [`ROUGH_CELL`].
    RoughSeeded(u64),
}

impl Profile {
    pub const DEFAULT_BOX: Profile = Profile::Box {
        radius: 1.0,
        width: 0.25,
    };

    /// Parses `constant`, `constant(c)`, `box`, `cosine`, `rough_seeded`
    /// and `rough_seeded(n)`; a bare `rough_seeded` takes `seed`.
    pub fn parse(text: &str, seed: u64) -> Result<Profile> {
        let t = text.trim();
        let (name, arg) = match t.find('(') {
            Some(i) if t.ends_with(')') => (&t[..i], Some(t[i + 1..t.len() - 1].trim())),
            Some(_) => return Err(invalid("profile", format!("unbalanced parentheses in `{t}`"))),
            None => (t, None),
        };
        let bad_arg = |a: &str| invalid("profile", format!("bad argument `{a}` for `{name}`"));
        match (name.trim(), arg) {
            ("constant", None) => Ok(Profile::Constant(1.0)),
            ("constant", Some(a)) => {
                let c: f64 = a.parse().map_err(|_| bad_arg(a))?;
                if !c.is_finite() {
                    return Err(bad_arg(a));
                }
                Ok(Profile::Constant(c))
            }
            ("zero", None) => Ok(Profile::Constant(0.0)),
            ("box", None) => Ok(Profile::DEFAULT_BOX),
            ("cosine", None) => Ok(Profile::Cosine),
            ("rough_seeded", None) => Ok(Profile::RoughSeeded(seed)),
            ("rough_seeded", Some(a)) => Ok(Profile::RoughSeeded(a.parse().map_err(|_| bad_arg(a))?)),
            _ => Err(invalid("profile", format!("unknown profile `{t}`"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Profile::Constant(c) => format!("constant({c})"),
            Profile::Box { .. } => "box".to_string(),
            Profile::Cosine => "cosine".to_string(),
            Profile::RoughSeeded(s) => format!("rough_seeded({s})"),
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match self {
            Profile::Constant(c) => c.abs(),
            _ => 1.0,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Profile::Constant(c) => c,
            Profile::Box { radius, width } => x
                .iter()
                .map(|xi| 1.0 - smoothstep((xi.abs() - radius + width) / (2.0 * width)))
                .product(),
            Profile::Cosine => x.iter().map(|xi| xi.cos()).product(),
            Profile::RoughSeeded(seed) => rough_value(seed, x),
        }
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<GridFunction> {
        GridFunction::from_fn(grid.clone(), |x| self.value(x))
    }
}

/// Quintic ramp from 0 (t <= 0) to 1 (t >= 1) with two vanishing
/// derivatives at both ends.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

fn zigzag(i: i64) -> u64 {
    ((i << 1) ^ (i >> 63)) as u64
}

fn rough_value(seed: u64, x: &[f64]) -> f64 {
    let cell = |v: f64| (v / ROUGH_CELL).floor() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(x.get(1).map_or(0, |&v| zigzag(cell(v))));
    rng.set_word_pos(2 * zigzag(cell(x[0])) as u128);
    (rng.next_u64() >> 11) as f64 * (-53.0f64).exp2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Extension;

    #[test]
    fn parsing() {
        assert_eq!(Profile::parse("constant(2.5)", 0).unwrap(), Profile::Constant(2.5));
        assert_eq!(Profile::parse("rough_seeded", 9).unwrap(), Profile::RoughSeeded(9));
        assert_eq!(Profile::parse(" rough_seeded(3) ", 9).unwrap(), Profile::RoughSeeded(3));
        assert!(Profile::parse("gaussian", 0).is_err());
        assert!(Profile::parse("constant(x)", 0).is_err());
        assert!(Profile::parse("box(", 0).is_err());
    }

    #[test]
    fn box_profile() {
        let b = Profile::DEFAULT_BOX;
        assert_eq!(b.value(&[0.0]), 1.0);
        assert_eq!(b.value(&[0.75]), 1.0);
        assert_eq!(b.value(&[1.25]), 0.0);
        assert!((b.value(&[1.0]) - 0.5).abs() < 1e-15);
        assert!((b.value(&[0.2, -1.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rough_is_cellwise_and_resolution_independent() {
        let p = Profile::RoughSeeded(0);
        let a = p.value(&[0.01]);
        assert_eq!(a, p.value(&[0.02]));
        assert_ne!(a, p.value(&[0.04]));
        assert_ne!(p.value(&[0.01]), Profile::RoughSeeded(1).value(&[0.01]));
        let coarse = GridSpec::new(1, 1.0, 65, Extension::Constant(0.0)).unwrap();
        let fine = GridSpec::new(1, 1.0, 129, Extension::Constant(0.0)).unwrap();
        let uc = p.sample(&coarse).unwrap();
        let uf = p.sample(&fine).unwrap();
        for i in 0..65 {
            assert_eq!(uc.values()[i], uf.values()[2 * i]);
        }
        assert!(uf.values().iter().all(|v| (0.0..1.0).contains(v)));
        let q = p.value(&[0.01, 0.3]);
        assert!((0.0..1.0).contains(&q));
        assert_ne!(q, p.value(&[0.01, 0.4]));
    }
}
