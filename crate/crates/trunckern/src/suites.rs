//! Oracle suites behind `trunckern oracle <suite>`.

use trunckern_core::oracles::{
    bump_bound_check, half_laplacian_example, half_laplacian_test_function, holder_gamma, lemma_a1_check,
    pucci_holder_quotient, BumpProfile, BumpResolution, LemmaPart, EXAMPLE_BUMP,
};
use trunckern_core::{
    apply_linear, kernel_l1_norm, make_truncated_fractional_kernel, make_user_kernel, weak_harnack_ratio, Cylinder,
    Error, Extension, GridFunction, GridSpec, KernelParams, Mass, OperatorConfig, SpaceTimeField,
};

pub const SUITES: &[&str] = &["half_laplacian", "lemma_a1", "bump", "holder", "harnack_constant"];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("unknown suite `{0}` (expected one of {list}, all)", list = SUITES.join(", "))]
    Unknown(String),
    #[error("suite {suite}: {source}")]
    Numerical {
        suite: &'static str,
        #[source]
        source: Error,
    },
}

fn wrap(suite: &'static str) -> impl Fn(Error) -> SuiteError {
    move |source| SuiteError::Numerical { suite, source }
}

/// `Lambda = 2 lambda a_s`.
pub fn default_params(dim: usize, s: f64, rho: f64) -> Result<KernelParams, Error> {
    let a = KernelParams::new(dim, s, 1.0, 1.0, 0.0)?.pure_annulus_constant();
    KernelParams::new(dim, s, 1.0, 2.0 * a, rho)
}

pub fn run_suite(name: &str) -> Result<Vec<Check>, SuiteError> {
    match name {
        "half_laplacian" => half_laplacian(),
        "lemma_a1" => lemma_a1(),
        "bump" => bump(),
        "holder" => holder(),
        "harnack_constant" => harnack_constant(),
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(run_suite(s)?);
            }
            Ok(out)
        }
        other => Err(SuiteError::Unknown(other.to_string())),
    }
}

pub const HALF_LAPLACIAN_POINTS: [f64; 6] = [-0.5, -0.25, -0.1, 0.1, 0.25, 0.5];

/// Relative errors of the lattice operator against the example at spacing
/// `2^-level`, on `[-4, 4]`.
pub fn half_laplacian_errors(level: u32) -> Result<Vec<f64>, Error> {
    let h = (-(level as f64)).exp2();
    let n = (8.0 / h) as usize + 1;
    let g = GridSpec::new(1, 4.0, n, Extension::Constant(0.0))?;
    let u = GridFunction::from_fn(g.clone(), |x| half_laplacian_test_function(x[0]))?;
    let p = KernelParams::new(1, 0.5, 1.0, 1.0, 0.0)?;
    let out = apply_linear(&u, &OperatorConfig::linear(make_truncated_fractional_kernel(p, 1.0)?))?;
    HALF_LAPLACIAN_POINTS
        .iter()
        .map(|&x| {
            let i = ((x - g.coord(0)) / h).round() as usize;
            // the operator is minus the half-Laplacian
            let want = -half_laplacian_example(x, &EXAMPLE_BUMP)?;
            Ok((out.values()[i] - want).abs() / want.abs())
        })
        .collect()
}

fn half_laplacian() -> Result<Vec<Check>, SuiteError> {
    let w = wrap("half_laplacian");
    let coarse = half_laplacian_errors(10).map_err(&w)?;
    let fine = half_laplacian_errors(11).map_err(&w)?;
    let worst = coarse.iter().copied().fold(0.0, f64::max);
    let ratio = HALF_LAPLACIAN_POINTS
        .iter()
        .zip(coarse.iter().zip(&fine))
        .map(|(_, (c, f))| c / f)
        .fold(f64::INFINITY, f64::min);
    Ok(vec![
        Check::new(
            "half_laplacian.rel_error",
            worst <= 1e-2,
            format!("max relative error {worst:.3e} at h = 2^-10 (limit 1e-2)"),
        ),
        Check::new(
            "half_laplacian.refinement",
            ratio >= 1.5,
            format!("smallest error ratio under halving {ratio:.3} (limit 1.5)"),
        ),
    ])
}

fn lemma_a1() -> Result<Vec<Check>, SuiteError> {
    let w = wrap("lemma_a1");
    let mut out = Vec::new();
    let p = KernelParams::new(1, 0.25, 1.0, 10.0, 1.0).map_err(&w)?;
    let k = make_truncated_fractional_kernel(p, 1.0).map_err(&w)?;
    let l1 = kernel_l1_norm(&k);
    out.push(Check::new(
        "lemma_a1.l1_norm",
        l1 == Mass::Finite(6.0),
        format!("{l1:?} (want exactly 6)"),
    ));

    let radii = [0.1, 1.0, 10.0];
    for s in [0.25, 0.5, 0.75] {
        let p = default_params(1, s, 0.0).map_err(&w)?;
        let pure = make_truncated_fractional_kernel(p, 1.0).map_err(&w)?;
        let rows = lemma_a1_check(&pure, &radii).map_err(&w)?;
        let tail: Vec<f64> = rows
            .iter()
            .filter(|r| r.part == LemmaPart::TailMass)
            .map(|r| r.scaled)
            .collect();
        let dev = tail.iter().map(|v| (v - 1.0 / s).abs()).fold(0.0, f64::max);
        out.push(Check::new(
            format!("lemma_a1.tail_ratio(s={s})"),
            dev <= 1e-10 && tail.len() == 3,
            format!("max |ratio - 1/s| = {dev:.2e} over R in {{0.1, 1, 10}}"),
        ));
        out.push(Check::new(
            format!("lemma_a1.bounds(s={s})"),
            rows.iter().all(|r| r.ok),
            format!("{} rows within the moment bounds", rows.iter().filter(|r| r.ok).count()),
        ));

        // the same kernel through the quadrature path
        let e = p.exponent();
        let user = make_user_kernel(move |y: &[f64]| y[0].abs().powf(-e), p, true);
        let mut dev = 0.0f64;
        for &r in &radii {
            let got = user
                .radial_moment(2.0, 0.0, r)
                .map_err(&w)?
                .finite()
                .unwrap_or(f64::INFINITY);
            let want = 2.0 * r.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
            dev = dev.max((got - want).abs() / want);
        }
        out.push(Check::new(
            format!("lemma_a1.second_moment(s={s})"),
            dev <= 1e-8,
            format!("max relative error {dev:.2e} (limit 1e-8)"),
        ));
    }
    Ok(out)
}

pub const BUMP_RADII: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

fn bump() -> Result<Vec<Check>, SuiteError> {
    let w = wrap("bump");
    let res = BumpResolution {
        nodes_per_radius: 256,
        box_factor: 4.0,
    };
    let mut out = Vec::new();
    for s in [0.25, 0.5, 0.75] {
        let p = default_params(1, s, 0.0).map_err(&w)?;
        let report = bump_bound_check(&p, &BUMP_RADII, &res).map_err(&w)?;
        out.push(Check::new(
            format!("bump.scaling(s={s})"),
            report.spread <= 1.25,
            format!(
                "max/min of sup |M eta_R| R^2s over R in {{1,2,4,8}}: {:.4} (limit 1.25)",
                report.spread
            ),
        ));
        let least = report.rows.iter().map(|r| r.boundary_min).fold(f64::INFINITY, f64::min);
        out.push(Check::new(
            format!("bump.mu(s={s})"),
            report.mu_ok,
            format!(
                "min of M^- eta_R R^2s near the sphere {least:.4} vs mu = {:.4}",
                report.mu
            ),
        ));
    }
    Ok(out)
}

pub const HOLDER_RADII: [f64; 3] = [1.0, 2.0, 4.0];

/// Scaled quotients of `eta_R` at each radius in [`HOLDER_RADII`].
pub fn holder_quotients(s: f64, nodes_per_radius: usize) -> Result<Vec<f64>, Error> {
    let p = default_params(1, s, 0.0)?;
    let res = BumpResolution {
        nodes_per_radius,
        box_factor: 3.0,
    };
    HOLDER_RADII
        .iter()
        .map(|&r| {
            let eta = BumpProfile::new(r)?.sample(&res.grid(1, r)?)?;
            Ok(pucci_holder_quotient(&eta, &p, r)?.quotient)
        })
        .collect()
}

fn holder() -> Result<Vec<Check>, SuiteError> {
    let w = wrap("holder");
    let mut out = Vec::new();
    for (s, want) in [(0.25, 0.5), (0.75, 0.5), (0.5, 0.5), (0.1, 0.8)] {
        let gamma = holder_gamma(s);
        out.push(Check::new(
            format!("holder.gamma(s={s})"),
            gamma == want,
            format!("{gamma} (want {want})"),
        ));
    }
    for s in [0.25, 0.5, 0.75] {
        let q = holder_quotients(s, 64).map_err(&w)?;
        let hi = q.iter().copied().fold(0.0, f64::max);
        let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = hi / lo;
        out.push(Check::new(
            format!("holder.quotient(s={s})"),
            lo > 0.0 && spread <= 1.5,
            format!("quotients {q:.4?} over R in {{1,2,4}}, max/min {spread:.4} (limit 1.5)"),
        ));
    }
    Ok(out)
}

/// `empirical_c` for `u = 1`, `a = 0`, `d = 1`, `s = 1/2`, `R = 1`.
pub fn harnack_constant_value() -> Result<f64, Error> {
    let g = GridSpec::new(1, 4.0, 1025, Extension::Constant(1.0))?;
    let one = GridFunction::constant(g.clone(), 1.0)?;
    let steps = 256;
    let dt = 1.0 / steps as f64;
    let snaps = (0..=steps).map(|k| (-1.0 + k as f64 * dt, one.clone())).collect();
    let field = SpaceTimeField::new(g, dt, snaps)?;
    Ok(weak_harnack_ratio(&field, &Cylinder::at_origin(1.0, 0.5), 0.0)?.empirical_c)
}

fn harnack_constant() -> Result<Vec<Check>, SuiteError> {
    let c = harnack_constant_value().map_err(wrap("harnack_constant"))?;
    Ok(vec![Check::new(
        "harnack_constant",
        (c - 1.0).abs() <= 1e-3,
        format!("empirical_c = {c:.6} for u = 1 (want 1 within 1e-3)"),
    )])
}
