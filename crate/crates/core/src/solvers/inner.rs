//! Inner minimizers for the schemes whose x-subproblem is not a single prox.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::operators::vector::{all_finite, axpy, dist, dot, sub};
use crate::operators::ProxFunction;
use crate::problem::{ProblemSpec, ResolvedConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct InnerOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Gradient-mapping norm at the returned point (0 for exact solves).
    pub residual: f64,
    pub converged: bool,
}

/// Accelerated proximal gradient with adaptive restart on
/// `min f(x) + g(x)` where `g` is given by its prox and `∇f` is
/// `lipschitz`-Lipschitz. Stops when `L‖x⁺ − y‖ ≤ tol`.
pub fn accelerated_prox_gradient(
    g: &dyn ProxFunction,
    mut grad: impl FnMut(&[f64], &mut [f64]),
    lipschitz: f64,
    x0: &[f64],
    tol: f64,
    budget: usize,
) -> Result<InnerOutcome> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::param("lipschitz", format!("must be positive and finite, got {lipschitz}")));
    }
    let n = x0.len();
    let step = 1.0 / lipschitz;
    let mut x_prev = x0.to_vec();
    let mut y = x0.to_vec();
    let mut gy = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut t = 1.0f64;
    let mut residual = f64::INFINITY;

    for it in 1..=budget {
        grad(&y, &mut gy);
        trial.copy_from_slice(&y);
        axpy(-step, &gy, &mut trial);
        g.prox(&trial, step, &mut x_new)?;
        if !all_finite(&x_new) {
            return Err(Error::NumericalFailure {
                iteration: it,
                reason: "inner proximal-gradient iterate is not finite".into(),
            });
        }
        residual = lipschitz * dist(&x_new, &y);
        if residual <= tol {
            return Ok(InnerOutcome {
                x: x_new,
                iterations: it,
                residual,
                converged: true,
            });
        }
        // gradient-based restart
        let restart = dot(&sub(&y, &x_new), &sub(&x_new, &x_prev)) > 0.0;
        if restart {
            t = 1.0;
            y.copy_from_slice(&x_new);
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let momentum = (t - 1.0) / t_next;
            for i in 0..n {
                y[i] = x_new[i] + momentum * (x_new[i] - x_prev[i]);
            }
            t = t_next;
        }
        x_prev.copy_from_slice(&x_new);
    }
    Ok(InnerOutcome {
        x: x_new,
        iterations: budget,
        residual,
        converged: false,
    })
}

/// Solver for the indefinite-ALM x-subproblem
///
/// ```text
/// argmin_z { θ(z) − λ̃ᵀAz + (weight/2)‖A(z − x)‖² : z ∈ X },   weight = (τ+δ)β.
/// ```
pub trait Subsolver: Send + Sync + std::fmt::Debug {
    fn solve(
        &self,
        problem: &ProblemSpec,
        config: &ResolvedConfig,
        lambda_tilde: &[f64],
        x: &[f64],
        weight: f64,
    ) -> Result<InnerOutcome>;
}

/// Generic subsolver: accelerated proximal gradient with step
/// `1/(weight·ρ(AᵀA))`, warm-started at `x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProxGradientSubsolver;

impl Subsolver for ProxGradientSubsolver {
    fn solve(
        &self,
        problem: &ProblemSpec,
        config: &ResolvedConfig,
        lambda_tilde: &[f64],
        x: &[f64],
        weight: f64,
    ) -> Result<InnerOutcome> {
        let a = problem.operator();
        let mut residual = vec![0.0; a.rows()];
        let mut diff = vec![0.0; x.len()];
        let grad = |z: &[f64], out: &mut [f64]| {
            for ((d, zi), xi) in diff.iter_mut().zip(z).zip(x) {
                *d = zi - xi;
            }
            a.apply(&diff, &mut residual);
            for (r, l) in residual.iter_mut().zip(lambda_tilde) {
                *r = weight * *r - l;
            }
            a.apply_adjoint(&residual, out);
        };
        accelerated_prox_gradient(
            problem.theta(),
            grad,
            weight * config.rho,
            x,
            config.inner_tol,
            config.inner_budget,
        )
    }
}

/// Exact subsolver for `θ(z) = ½zᵀPz + qᵀz` on `X = ℝⁿ` with a dense `A`:
/// solves `(P + weight·AᵀA) z = Aᵀλ̃ + weight·AᵀA x − q`.
#[derive(Clone, Debug)]
pub struct QuadraticSubsolver {
    p: DMatrix<f64>,
    q: DVector<f64>,
    ata: DMatrix<f64>,
    at: DMatrix<f64>,
}

impl QuadraticSubsolver {
    pub fn new(p: DMatrix<f64>, q: DVector<f64>, a: &DMatrix<f64>) -> Result<Self> {
        check_len("quadratic subsolver P", a.ncols(), p.nrows())?;
        check_len("quadratic subsolver q", a.ncols(), q.len())?;
        Ok(Self {
            p,
            q,
            ata: a.transpose() * a,
            at: a.transpose(),
        })
    }
}

impl Subsolver for QuadraticSubsolver {
    fn solve(
        &self,
        _problem: &ProblemSpec,
        _config: &ResolvedConfig,
        lambda_tilde: &[f64],
        x: &[f64],
        weight: f64,
    ) -> Result<InnerOutcome> {
        let system = &self.p + &self.ata * weight;
        let xv = DVector::from_column_slice(x);
        let rhs = &self.at * DVector::from_column_slice(lambda_tilde) + &self.ata * xv * weight - &self.q;
        let z = match system.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => system
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::NumericalFailure {
                    iteration: 0,
                    reason: "indefinite-ALM subproblem matrix P + wAᵀA is singular".into(),
                })?,
        };
        Ok(InnerOutcome {
            x: z.as_slice().to_vec(),
            iterations: 1,
            residual: 0.0,
            converged: true,
        })
    }
}
