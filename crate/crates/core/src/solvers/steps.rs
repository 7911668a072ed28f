use crate::error::{Error, Result};
use crate::operators::project_nonneg_in_place;
use crate::operators::vector::{all_finite, sub};
use crate::problem::{PredictorPoint, PrimalDualPoint, ProblemSpec, ResolvedConfig};

use super::inner::{accelerated_prox_gradient, InnerOutcome, Subsolver};

/// `λ − β(Ax − b)`, projected onto `ℝ₊^m` when `project` is set.
pub(crate) fn predicted_multiplier(
    problem: &ProblemSpec,
    beta: f64,
    x: &[f64],
    lambda: &[f64],
    project: bool,
) -> Vec<f64> {
    let mut lt = problem.constraint_value(x);
    for (v, l) in lt.iter_mut().zip(lambda) {
        *v = l - beta * *v;
    }
    if project {
        project_nonneg_in_place(&mut lt);
    }
    lt
}

/// `argmin { θ(z) − λ̃ᵀAz + (τr/2)‖z − x‖² : z ∈ X }`, realized as
/// `prox(x + Aᵀλ̃/(τr), 1/(τr))`.
pub(crate) fn linearized_primal(
    problem: &ProblemSpec,
    tau_r: f64,
    x: &[f64],
    lambda_tilde: &[f64],
) -> Result<Vec<f64>> {
    let mut y = problem.operator().adjoint(lambda_tilde);
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = xi + *yi / tau_r;
    }
    problem.theta().prox_vec(&y, 1.0 / tau_r)
}

/// `λ̃ + βA(x − x⁺)`
pub(crate) fn corrected_multiplier(
    problem: &ProblemSpec,
    beta: f64,
    x: &[f64],
    x_next: &[f64],
    lambda_tilde: &[f64],
) -> Vec<f64> {
    let ad = problem.operator().forward(&sub(x, x_next));
    lambda_tilde.iter().zip(&ad).map(|(l, a)| l + beta * a).collect()
}

fn ensure_finite(v: &[f64], what: &str) -> Result<()> {
    if all_finite(v) {
        Ok(())
    } else {
        Err(Error::NumericalFailure {
            iteration: 0,
            reason: format!("{what} is not finite"),
        })
    }
}

fn linearized_step(
    problem: &ProblemSpec,
    config: &ResolvedConfig,
    w: &PrimalDualPoint,
    project: bool,
) -> Result<(PrimalDualPoint, PredictorPoint)> {
    problem.check_point(w)?;
    let lambda_tilde = predicted_multiplier(problem, config.beta, &w.x, &w.lambda, project);
    let x_next = linearized_primal(problem, config.tau_r(), &w.x, &lambda_tilde)?;
    ensure_finite(&x_next, "primal update")?;
    let lambda_next = corrected_multiplier(problem, config.beta, &w.x, &x_next, &lambda_tilde);
    let predictor = PredictorPoint {
        x_tilde: x_next.clone(),
        lambda_tilde,
    };
    Ok((PrimalDualPoint::new(x_next, lambda_next), predictor))
}

/// One iteration of the inequality-constrained indefinite linearized ALM:
///
/// ```text
/// λ̃   = [λ − β(Ax − b)]₊
/// x⁺  = argmin { θ(z) − λ̃ᵀAz + (τr/2)‖z − x‖² : z ∈ X }
/// λ⁺  = λ̃ + βA(x − x⁺)
/// ```
///
/// Returns the corrected point and the predictor `(x̃, λ̃) = (x⁺, λ̃)`.
pub fn i_idl_alm_step(
    problem: &ProblemSpec,
    config: &ResolvedConfig,
    w: &PrimalDualPoint,
) -> Result<(PrimalDualPoint, PredictorPoint)> {
    linearized_step(problem, config, w, true)
}

/// The equality-constrained indefinite linearized ALM: identical to
/// [`i_idl_alm_step`] except that `λ̃ = λ − β(Ax − b)` is not projected.
pub fn equality_idl_alm_step(
    problem: &ProblemSpec,
    config: &ResolvedConfig,
    w: &PrimalDualPoint,
) -> Result<(PrimalDualPoint, PredictorPoint)> {
    linearized_step(problem, config, w, false)
}

/// Classic inequality ALM. The x-update approximately minimizes
///
/// ```text
/// θ(x) + (1/(2β))‖[λ − β(Ax − b)]₊‖²
/// ```
///
/// by accelerated proximal gradient (step `1/(βρ)`, warm start at `x`),
/// then `λ⁺ = [λ − β(Ax⁺ − b)]₊`.
pub fn inequality_alm_step(
    problem: &ProblemSpec,
    config: &ResolvedConfig,
    w: &PrimalDualPoint,
    inner_budget: usize,
    inner_tol: f64,
) -> Result<(PrimalDualPoint, InnerOutcome)> {
    problem.check_point(w)?;
    if inner_budget == 0 {
        return Err(Error::param("inner_budget", "must be at least 1"));
    }
    let a = problem.operator();
    let beta = config.beta;
    let b = problem.b();
    let mut shifted = vec![0.0; problem.m()];
    let grad = |x: &[f64], out: &mut [f64]| {
        a.apply(x, &mut shifted);
        for ((s, l), bi) in shifted.iter_mut().zip(&w.lambda).zip(b) {
            *s = -(l - beta * (*s - bi)).max(0.0);
        }
        a.apply_adjoint(&shifted, out);
    };
    let inner = accelerated_prox_gradient(
        problem.theta(),
        grad,
        beta * config.rho,
        &w.x,
        inner_tol,
        inner_budget,
    )?;
    let lambda_next = predicted_multiplier(problem, beta, &inner.x, &w.lambda, true);
    ensure_finite(&lambda_next, "multiplier update")?;
    Ok((PrimalDualPoint::new(inner.x.clone(), lambda_next), inner))
}

/// Indefinite ALM that keeps the `‖A(z − x)‖²` coupling:
///
/// ```text
/// λ̃   = [λ − β(Ax − b)]₊
/// x⁺  = argmin { θ(z) − λ̃ᵀAz + (τ+δ)(β/2)‖A(z − x)‖² : z ∈ X }
/// λ⁺  = λ̃ + βA(x − x⁺)
/// ```
pub fn indefinite_alm_step(
    problem: &ProblemSpec,
    config: &ResolvedConfig,
    w: &PrimalDualPoint,
    subsolver: &dyn Subsolver,
) -> Result<(PrimalDualPoint, PredictorPoint, InnerOutcome)> {
    problem.check_point(w)?;
    let lambda_tilde = predicted_multiplier(problem, config.beta, &w.x, &w.lambda, true);
    let weight = (config.tau + config.delta) * config.beta;
    let inner = subsolver.solve(problem, config, &lambda_tilde, &w.x, weight)?;
    ensure_finite(&inner.x, "indefinite-ALM primal update")?;
    let lambda_next = corrected_multiplier(problem, config.beta, &w.x, &inner.x, &lambda_tilde);
    let predictor = PredictorPoint {
        x_tilde: inner.x.clone(),
        lambda_tilde,
    };
    Ok((PrimalDualPoint::new(inner.x.clone(), lambda_next), predictor, inner))
}
