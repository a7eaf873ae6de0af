//! Truncated nonlocal operators on uniform grids.
//!
//! The crate covers the whole numerical pipeline for fully nonlinear
//! nonlocal parabolic problems whose kernels are capped at a length scale
//! `rho`:
//!
//! * [`kernel`]: the admissible kernel class, its validation and the
//!   closed-form / quadrature integrals of kernels over annuli, balls and
//!   exteriors.
//! * [`grid`]: box grids and grid functions with an exterior extension.
//! * [`operators`]: the difference operator, linear operators with drift,
//!   the dyadic bang-bang Pucci extremal operators and Isaac operators.
//! * [`evolution`]: monotone explicit time stepping, truncation sweeps and
//!   the elliptic solver.
//! * [`regularity`]: parabolic distance, partial Hölder seminorms, weak
//!   Harnack ratios and oscillation decay.
//! * [`oracles`]: independent references (adaptive quadrature, the
//!   half-Laplacian closed form, kernel moment bounds, bump-function bounds).
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the CLI
//! live in the `trunckern` companion crate.

#![no_std]

extern crate alloc;

pub mod error;
pub mod evolution;
pub mod grid;
pub mod kernel;
pub mod operators;
pub mod oracles;
pub mod profiles;
pub mod quadrature;
pub mod regularity;

pub use error::{Error, Result};
pub use evolution::{
    cfl_dt, solve_cauchy, solve_elliptic, solve_truncation_sequence, step_explicit, ConvergenceReport, DtPolicy,
    EllipticSolution, EvolutionConfig, Forcing, SpaceTimeField,
};
pub use grid::{Extension, GridFunction, GridSpec};
pub use kernel::{
    annulus_mass, kernel_l1_norm, make_truncated_fractional_kernel, make_user_kernel, validate_ellipticity, KernelFn,
    KernelParams, Mass, Truncation, ValidationReport,
};
pub use operators::{
    apply_difference, apply_isaac, apply_linear, apply_pucci, drift_envelope, Drift, GradientScheme, IsaacMember,
    NearFieldMode, Operator, OperatorConfig, OperatorKind,
};
pub use profiles::Profile;
pub use regularity::{
    estimate_alpha, oscillation_decay, parabolic_distance, partial_holder_seminorm, weak_harnack_ratio, AlphaFit,
    Cylinder, HarnackReport, OscillationProfile, Point, RegularityReport,
};
