//! Numerical primitives shared by every solver: matrix-free linear operators,
//! proximity operators, projections and a power-iteration estimate of
//! `ρ(AᵀA)`.

mod linear;
mod projection;
mod prox;
mod spectral;
pub mod vector;

pub use linear::{DenseOperator, LinearOperator};
pub use projection::{project_l2_ball_sitewise, project_nonneg, project_nonneg_in_place, ProjectionSet};
pub use prox::{
    prox_l1, prox_quadratic, L1Norm, L1Quadratic, ProxFunction, Quadratic, Restricted, ZeroFunction,
};
pub use spectral::{
    estimate_spectral_radius, SpectralEstimate, DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_SEED,
    DEFAULT_POWER_TOL,
};
