use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linear::LinearOperator;
use super::vector::{dot, norm, scale};
use crate::error::{Error, Result};

pub const DEFAULT_POWER_TOL: f64 = 1e-6;
pub const DEFAULT_POWER_MAX_ITER: usize = 5000;
pub const DEFAULT_POWER_SEED: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate {
    /// Rayleigh-quotient estimate of `ρ(AᵀA)`, already inflated by `1 + tol`.
    pub rho: f64,
    pub iterations: usize,
}

/// Power iteration on `AᵀA` from a seeded random start.
///
/// Stops when two successive Rayleigh quotients differ relatively by less
/// than `tol`; the returned estimate is multiplied by `1 + tol` so that
/// `r = β·rho` keeps `r > βρ(AᵀA)` in practice.
pub fn estimate_spectral_radius(
    op: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SpectralEstimate> {
    if op.rows() == 0 || op.cols() == 0 {
        return Err(Error::DegenerateOperator(format!(
            "{}x{} operator has no spectrum",
            op.rows(),
            op.cols()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..op.cols()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    scale(1.0 / nv, &mut v);

    let mut av = vec![0.0; op.rows()];
    let mut w = vec![0.0; op.cols()];
    let mut previous = f64::NAN;
    for it in 1..=max_iter {
        op.apply(&v, &mut av);
        op.apply_adjoint(&av, &mut w);
        let rayleigh = dot(&v, &w);
        let nw = norm(&w);
        if nw == 0.0 {
            return Err(Error::DegenerateOperator("AᵀA annihilated the iterate; operator is zero".into()));
        }
        if (rayleigh - previous).abs() <= tol * rayleigh.abs() {
            return Ok(SpectralEstimate {
                rho: rayleigh * (1.0 + tol),
                iterations: it,
            });
        }
        previous = rayleigh;
        v.copy_from_slice(&w);
        scale(1.0 / nw, &mut v);
    }
    Err(Error::PowerIterationStalled {
        iterations: max_iter,
        estimate: previous,
    })
}
