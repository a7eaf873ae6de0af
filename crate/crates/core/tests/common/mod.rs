#![allow(dead_code)]

use trunckern_core::{
    make_truncated_fractional_kernel, Extension, GridFunction, GridSpec, KernelFn, KernelParams, OperatorConfig,
    OperatorKind,
};

/// `Lambda = 2 lambda a_s`, twice the annulus constant of the lower kernel.
pub fn params(dim: usize, s: f64, rho: f64) -> KernelParams {
    let probe = KernelParams::new(dim, s, 1.0, 1.0e6, rho).unwrap();
    let upper = 2.0 * probe.pure_annulus_constant();
    KernelParams::new(dim, s, 1.0, upper, rho).unwrap()
}

pub fn kernel(dim: usize, s: f64, rho: f64) -> KernelFn {
    make_truncated_fractional_kernel(params(dim, s, rho), 1.0).unwrap()
}

pub fn grid(dim: usize, half_width: f64, n: usize, ext: f64) -> GridSpec {
    GridSpec::new(dim, half_width, n, Extension::Constant(ext)).unwrap()
}

pub fn pucci(dim: usize, s: f64, rho: f64, plus: bool) -> OperatorConfig {
    let kind = if plus {
        OperatorKind::PucciPlus
    } else {
        OperatorKind::PucciMinus
    };
    OperatorConfig::new(params(dim, s, rho), kind)
}

pub fn smooth_bump(g: &GridSpec) -> GridFunction {
    GridFunction::from_fn(g.clone(), |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-r2).exp() * (1.0 + 0.3 * x[0])
    })
    .unwrap()
}
