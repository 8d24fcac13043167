//! Levi's parametrix method for `d_t + H` with Hoelder-continuous coefficients.

mod family;
pub mod kernel;
pub mod operator;
pub mod solve;

pub use kernel::{apply, apply_at, iterate_k, Layout, LeftKernel, SpaceTimeKernel, Tag};
pub use operator::{
    frozen_kernel, levi_k, uniform_ellipticity_constant, Coefficient, Ellipticity, OperatorCertificate,
    VarCoeffOperator,
};
pub use solve::{
    approximate_identity_check, correction_w, fd_weights, fundamental_solution, heat_residual, phi_sum,
    residual_check, BoundFits, FdSteps, FundamentalSolution, Levi, LeviConfig, PhiSeries, ResidualReport,
};
