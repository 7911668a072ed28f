//! The iteration schemes and the driver loop that runs them.

mod inner;
mod steps;

use serde::{Deserialize, Serialize};

pub use inner::{accelerated_prox_gradient, InnerOutcome, ProxGradientSubsolver, QuadraticSubsolver, Subsolver};
pub use steps::{equality_idl_alm_step, i_idl_alm_step, indefinite_alm_step, inequality_alm_step};
pub(crate) use steps::{linearized_primal, predicted_multiplier};

pub use crate::problem::{IterationTrace, SolveResult, Status};

use crate::error::{Error, Result};
use crate::problem::{
    aer_absolute, aer_normalized, constraint_residuals, kkt_residuals, PredictorPoint, PrimalDualPoint,
    ProblemSpec, ResolvedConfig, StoppingRule,
};
use crate::operators::vector::dist;

/// Iterates whose norm exceeds this are treated as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Scheme selector as it appears in configuration files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    #[default]
    Iidl,
    ClassicIneq,
    EqualityIdl,
    IndefiniteAlm,
}

/// Runtime scheme, carrying the subsolver where one is needed.
#[derive(Clone, Copy, Debug)]
pub enum Scheme<'a> {
    IIdl,
    ClassicIneq,
    EqualityIdl,
    IndefiniteAlm(&'a dyn Subsolver),
}

impl Scheme<'_> {
    pub fn kind(&self) -> SchemeKind {
        match self {
            Scheme::IIdl => SchemeKind::Iidl,
            Scheme::ClassicIneq => SchemeKind::ClassicIneq,
            Scheme::EqualityIdl => SchemeKind::EqualityIdl,
            Scheme::IndefiniteAlm(_) => SchemeKind::IndefiniteAlm,
        }
    }
}

static DEFAULT_SUBSOLVER: ProxGradientSubsolver = ProxGradientSubsolver;

impl SchemeKind {
    /// Runtime scheme using [`ProxGradientSubsolver`] for the indefinite ALM.
    pub fn with_default_subsolver(self) -> Scheme<'static> {
        match self {
            SchemeKind::Iidl => Scheme::IIdl,
            SchemeKind::ClassicIneq => Scheme::ClassicIneq,
            SchemeKind::EqualityIdl => Scheme::EqualityIdl,
            SchemeKind::IndefiniteAlm => Scheme::IndefiniteAlm(&DEFAULT_SUBSOLVER),
        }
    }
}

/// Output of one iteration of any scheme.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub next: PrimalDualPoint,
    /// Absent for the classic ALM, which has no prediction-correction form.
    pub predictor: Option<PredictorPoint>,
    pub inner: Option<InnerOutcome>,
}

pub fn step(
    problem: &ProblemSpec,
    config: &ResolvedConfig,
    w: &PrimalDualPoint,
    scheme: Scheme<'_>,
) -> Result<StepOutput> {
    Ok(match scheme {
        Scheme::IIdl => {
            let (next, p) = i_idl_alm_step(problem, config, w)?;
            StepOutput { next, predictor: Some(p), inner: None }
        }
        Scheme::EqualityIdl => {
            let (next, p) = equality_idl_alm_step(problem, config, w)?;
            StepOutput { next, predictor: Some(p), inner: None }
        }
        Scheme::ClassicIneq => {
            let (next, inner) = inequality_alm_step(problem, config, w, config.inner_budget, config.inner_tol)?;
            StepOutput { next, predictor: None, inner: Some(inner) }
        }
        Scheme::IndefiniteAlm(sub) => {
            let (next, p, inner) = indefinite_alm_step(problem, config, w, sub)?;
            StepOutput { next, predictor: Some(p), inner: Some(inner) }
        }
    })
}

/// What the observer sees after every iteration.
#[derive(Debug)]
pub struct IterationEvent<'a> {
    pub k: usize,
    pub prev: &'a PrimalDualPoint,
    pub next: &'a PrimalDualPoint,
    pub predictor: Option<&'a PredictorPoint>,
    pub trace: &'a IterationTrace,
}

fn stopping_metric(
    problem: &ProblemSpec,
    config: &ResolvedConfig,
    prev: &PrimalDualPoint,
    out: &StepOutput,
) -> Result<f64> {
    match config.stopping_rule {
        StoppingRule::AbsoluteStep => Ok(aer_absolute(prev, &out.next)),
        StoppingRule::PrimalDualStep => Ok(prev.distance(&out.next)),
        StoppingRule::NormalizedStep => {
            let reference = out
                .predictor
                .as_ref()
                .map_or(&out.next.lambda, |p| &p.lambda_tilde);
            if reference.is_empty() {
                Ok(0.0)
            } else {
                aer_normalized(reference, &prev.lambda)
            }
        }
        StoppingRule::KktResidual => Ok(kkt_residuals(problem, &out.next)?.max()),
    }
}

fn build_trace(
    problem: &ProblemSpec,
    k: usize,
    aer: f64,
    prev: &PrimalDualPoint,
    out: &StepOutput,
) -> IterationTrace {
    let residual = problem.constraint_value(&out.next.x);
    let (primal_infeasibility, multiplier_negativity, complementarity) =
        constraint_residuals(&residual, &out.next.lambda);
    IterationTrace {
        k,
        aer,
        primal_infeasibility,
        complementarity,
        multiplier_negativity,
        objective: problem.theta().value(&out.next.x),
        step_x: dist(&prev.x, &out.next.x),
        step_lambda: dist(&prev.lambda, &out.next.lambda),
        inner_iterations: out.inner.as_ref().map(|i| i.iterations),
        inner_residual: out.inner.as_ref().map(|i| i.residual),
        phi: None,
        varphi: None,
    }
}

/// Runs `scheme` from `w0` until the configured stopping rule drops below
/// `tol` or `max_iter` iterations are spent. `observer` is called once per
/// iteration.
///
/// A non-finite iterate or one whose norm exceeds [`DIVERGENCE_THRESHOLD`]
/// ends the run with [`Status::NumericalFailure`] and the last good point.
pub fn solve(
    problem: &ProblemSpec,
    config: &ResolvedConfig,
    w0: PrimalDualPoint,
    scheme: Scheme<'_>,
    mut observer: impl FnMut(&IterationEvent<'_>),
) -> Result<SolveResult> {
    problem.check_point(&w0)?;
    let mut w = w0;
    let mut traces = Vec::new();
    let mut status = Status::MaxIterReached;

    for k in 0..config.max_iter {
        let out = match step(problem, config, &w, scheme) {
            Ok(out) => out,
            Err(Error::NumericalFailure { reason, .. }) => {
                log::warn!("iteration {k}: {reason}");
                status = Status::NumericalFailure;
                break;
            }
            Err(e) => return Err(e),
        };
        if !out.next.is_finite() || out.next.norm() > DIVERGENCE_THRESHOLD {
            log::warn!("iteration {k}: iterate diverged");
            status = Status::NumericalFailure;
            break;
        }
        let aer = stopping_metric(problem, config, &w, &out)?;
        let trace = build_trace(problem, k, aer, &w, &out);
        observer(&IterationEvent {
            k,
            prev: &w,
            next: &out.next,
            predictor: out.predictor.as_ref(),
            trace: &trace,
        });
        traces.push(trace);
        w = out.next;
        // the normalized gap ‖λ̃ − λ‖ vanishes at any primal-feasible start
        let trivial = k == 0 && config.stopping_rule == StoppingRule::NormalizedStep;
        if aer < config.tol && !trivial {
            status = Status::Converged;
            break;
        }
    }

    Ok(SolveResult {
        final_point: w,
        status,
        iterations: traces.len(),
        traces,
        warnings: config.warnings.clone(),
    })
}

#[cfg(test)]
mod tests;
