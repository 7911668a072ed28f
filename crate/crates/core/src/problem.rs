//! Problem, configuration and iterate types shared by all solvers, plus the
//! optimality residuals used for stopping and reporting.

use std::fmt;
use std::sync::Arc;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{check_len, Error, Result};
use crate::operators::vector::{dist, dot};
use crate::operators::{
    estimate_spectral_radius, LinearOperator, ProjectionSet, ProxFunction, DEFAULT_POWER_MAX_ITER,
    DEFAULT_POWER_TOL,
};

/// `min θ(x)  s.t.  A x ≥ b,  x ∈ X`.
///
/// `theta` must already account for `X`: its prox is the prox of
/// `θ + ι_X`. `domain` is kept separately for initialization and membership
/// checks.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    theta: Arc<dyn ProxFunction>,
    domain: ProjectionSet,
    operator: Arc<dyn LinearOperator>,
    b: Vec<f64>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("n", &self.n())
            .field("m", &self.m())
            .field("domain", &self.domain)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        theta: Arc<dyn ProxFunction>,
        domain: ProjectionSet,
        operator: Arc<dyn LinearOperator>,
        b: Vec<f64>,
    ) -> Result<Self> {
        check_len("b vs rows of A", operator.rows(), b.len())?;
        domain.check_dim(operator.cols())?;
        if !b.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidData("b contains non-finite entries".into()));
        }
        Ok(Self {
            name: String::from("problem"),
            theta,
            domain,
            operator,
            b,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Primal dimension.
    pub fn n(&self) -> usize {
        self.operator.cols()
    }

    /// Number of inequality constraints.
    pub fn m(&self) -> usize {
        self.operator.rows()
    }

    pub fn theta(&self) -> &dyn ProxFunction {
        self.theta.as_ref()
    }

    pub fn domain(&self) -> &ProjectionSet {
        &self.domain
    }

    pub fn operator(&self) -> &dyn LinearOperator {
        self.operator.as_ref()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `A x − b`
    pub fn constraint_value(&self, x: &[f64]) -> Vec<f64> {
        let mut ax = self.operator.forward(x);
        for (v, bi) in ax.iter_mut().zip(&self.b) {
            *v -= bi;
        }
        ax
    }

    pub(crate) fn check_point(&self, w: &PrimalDualPoint) -> Result<()> {
        check_len("primal iterate", self.n(), w.x.len())?;
        check_len("multiplier", self.m(), w.lambda.len())
    }
}

/// Which quantity is compared against `tol` after every iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingRule {
    /// `‖x^{k+1} − x^k‖`
    AbsoluteStep,
    /// `‖w^{k+1} − w^k‖` over the stacked primal-dual point. A primal-only
    /// step can vanish while the multiplier is still moving (e.g. an ℓ1
    /// objective whose prox thresholds to zero), so this is the default.
    #[default]
    PrimalDualStep,
    /// `‖λ̃^k − λ^k‖ / m`
    NormalizedStep,
    /// Largest KKT residual at `w^{k+1}`.
    KktResidual,
}

/// The proximal scalar `r`: explicit, or `β·ρ̂(AᵀA)·(1 + margin)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum ProximalScalar {
    #[default]
    Auto,
    Value(f64),
}

impl Serialize for ProximalScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ProximalScalar::Auto => s.serialize_str("auto"),
            ProximalScalar::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ProximalScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = ProximalScalar;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive number or \"auto\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                if v == "auto" {
                    Ok(ProximalScalar::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                Ok(ProximalScalar::Value(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                Ok(ProximalScalar::Value(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                Ok(ProximalScalar::Value(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

/// User-facing solver parameters. Call [`SolverConfig::resolve`] against a
/// problem to obtain the validated [`ResolvedConfig`] the step functions use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub beta: f64,
    pub tau: f64,
    pub r: ProximalScalar,
    pub margin: f64,
    pub delta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub stopping_rule: StoppingRule,
    /// Known value (or upper bound) of `ρ(AᵀA)`; estimated when absent.
    pub rho: Option<f64>,
    pub inner_tol: f64,
    pub inner_budget: usize,
    pub power_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            tau: 0.8,
            r: ProximalScalar::Auto,
            margin: 0.01,
            delta: 0.3,
            tol: 1e-6,
            max_iter: 10_000,
            stopping_rule: StoppingRule::PrimalDualStep,
            rho: None,
            inner_tol: 1e-10,
            inner_budget: 10_000,
            power_seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolverConfigBuilder {
    config: SolverConfig,
}

macro_rules! setter {
    ($name:ident: $ty:ty) => {
        pub fn $name(mut self, v: $ty) -> Self {
            self.config.$name = v;
            self
        }
    };
}

impl SolverConfigBuilder {
    setter!(beta: f64);
    setter!(tau: f64);
    setter!(margin: f64);
    setter!(delta: f64);
    setter!(tol: f64);
    setter!(max_iter: usize);
    setter!(stopping_rule: StoppingRule);
    setter!(inner_tol: f64);
    setter!(inner_budget: usize);
    setter!(power_seed: u64);

    pub fn r(mut self, r: f64) -> Self {
        self.config.r = ProximalScalar::Value(r);
        self
    }

    pub fn auto_r(mut self) -> Self {
        self.config.r = ProximalScalar::Auto;
        self
    }

    pub fn rho(mut self, rho: f64) -> Self {
        self.config.rho = Some(rho);
        self
    }

    pub fn build(self) -> SolverConfig {
        self.config
    }
}

/// Validated parameters with `r` and `ρ(AᵀA)` fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub beta: f64,
    pub tau: f64,
    pub r: f64,
    pub delta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub stopping_rule: StoppingRule,
    pub rho: f64,
    pub inner_tol: f64,
    pub inner_budget: usize,
    pub warnings: Vec<String>,
}

impl ResolvedConfig {
    /// `τ r`, the weight of the proximal term in the x-subproblem.
    pub fn tau_r(&self) -> f64 {
        self.tau * self.r
    }

    /// Whether `τ` lies in the range covered by the convergence theory.
    pub fn tau_in_proven_range(&self) -> bool {
        (0.75..=1.0).contains(&self.tau)
    }
}

impl SolverConfig {
    pub fn builder() -> SolverConfigBuilder {
        SolverConfigBuilder::default()
    }

    pub fn resolve(&self, problem: &ProblemSpec) -> Result<ResolvedConfig> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("beta", self.beta)?;
        positive("tau", self.tau)?;
        positive("delta", self.delta)?;
        positive("inner_tol", self.inner_tol)?;
        if !(self.tol >= 0.0) {
            return Err(Error::param("tol", "must be nonnegative"));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::param("margin", "must be nonnegative"));
        }
        if self.inner_budget == 0 {
            return Err(Error::param("inner_budget", "must be at least 1"));
        }

        let mut warnings = Vec::new();
        if !(0.75..=1.0).contains(&self.tau) {
            let msg = format!("tau = {} lies outside [0.75, 1]; convergence is not guaranteed", self.tau);
            log::warn!("{msg}");
            warnings.push(msg);
        }

        let rho = match self.rho {
            Some(rho) if rho >= 0.0 && rho.is_finite() => rho,
            Some(rho) => return Err(Error::param("rho", format!("must be nonnegative, got {rho}"))),
            None => {
                estimate_spectral_radius(
                    problem.operator(),
                    DEFAULT_POWER_TOL,
                    DEFAULT_POWER_MAX_ITER,
                    self.power_seed,
                )?
                .rho
            }
        };

        let bound = self.beta * rho;
        let r = match self.r {
            ProximalScalar::Auto => {
                let r = bound * (1.0 + self.margin);
                if !(r > 0.0) {
                    return Err(Error::param("r", "auto mode needs a nonzero operator and positive margin"));
                }
                r
            }
            ProximalScalar::Value(r) => {
                if !(r > bound) || !r.is_finite() {
                    return Err(Error::ProximalTooSmall { r, bound });
                }
                r
            }
        };

        Ok(ResolvedConfig {
            beta: self.beta,
            tau: self.tau,
            r,
            delta: self.delta,
            tol: self.tol,
            max_iter: self.max_iter,
            stopping_rule: self.stopping_rule,
            rho,
            inner_tol: self.inner_tol,
            inner_budget: self.inner_budget,
            warnings,
        })
    }
}

/// The joint iterate `w = (x; λ)`. The multiplier carries no sign
/// restriction: only the predicted multiplier is projected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimalDualPoint {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl PrimalDualPoint {
    pub fn new(x: Vec<f64>, lambda: Vec<f64>) -> Self {
        Self { x, lambda }
    }

    /// `x = Π_X(0)`, `λ = 0`.
    pub fn origin(problem: &ProblemSpec) -> Self {
        let mut x = vec![0.0; problem.n()];
        problem.domain().project_in_place(&mut x);
        Self {
            x,
            lambda: vec![0.0; problem.m()],
        }
    }

    /// `(x; λ)` stacked into one vector.
    pub fn stacked(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.x.len() + self.lambda.len());
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.lambda);
        v
    }

    pub fn norm(&self) -> f64 {
        (dot(&self.x, &self.x) + dot(&self.lambda, &self.lambda)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.lambda).all(|v| v.is_finite())
    }

    pub fn distance(&self, other: &PrimalDualPoint) -> f64 {
        let dx = dist(&self.x, &other.x);
        let dl = dist(&self.lambda, &other.lambda);
        (dx * dx + dl * dl).sqrt()
    }
}

/// The predictor `w̃ = (x̃; λ̃)` of one iteration; `λ̃ ≥ 0` for the
/// inequality schemes.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorPoint {
    pub x_tilde: Vec<f64>,
    pub lambda_tilde: Vec<f64>,
}

impl PredictorPoint {
    pub fn as_point(&self) -> PrimalDualPoint {
        PrimalDualPoint::new(self.x_tilde.clone(), self.lambda_tilde.clone())
    }
}

/// One row of per-iteration diagnostics. Residuals are evaluated at the new
/// iterate `w^{k+1}`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct IterationTrace {
    pub k: usize,
    pub aer: f64,
    pub primal_infeasibility: f64,
    pub complementarity: f64,
    pub multiplier_negativity: f64,
    pub objective: Option<f64>,
    pub step_x: f64,
    pub step_lambda: f64,
    pub inner_iterations: Option<usize>,
    pub inner_residual: Option<f64>,
    pub phi: Option<f64>,
    pub varphi: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterReached,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub final_point: PrimalDualPoint,
    pub status: Status,
    pub iterations: usize,
    pub traces: Vec<IterationTrace>,
    pub warnings: Vec<String>,
}

/// `F(w) = (−Aᵀλ; Ax − b)`.
pub fn eval_f(problem: &ProblemSpec, w: &PrimalDualPoint) -> Result<Vec<f64>> {
    problem.check_point(w)?;
    let mut out = problem.operator().adjoint(&w.lambda);
    for v in out.iter_mut() {
        *v = -*v;
    }
    out.extend(problem.constraint_value(&w.x));
    Ok(out)
}

/// Optimality residuals of a candidate saddle point. All four vanish exactly
/// at a solution.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `‖[b − Ax]₊‖∞`
    pub primal_infeasibility: f64,
    /// `‖[−λ]₊‖∞`
    pub multiplier_negativity: f64,
    /// `|λᵀ(Ax − b)|`
    pub complementarity: f64,
    /// `‖x − prox_{θ+ι_X}(x + Aᵀλ, 1)‖`
    pub stationarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal_infeasibility
            .max(self.multiplier_negativity)
            .max(self.complementarity)
            .max(self.stationarity)
    }
}

/// Feasibility/complementarity part of the residuals; no prox evaluation.
pub(crate) fn constraint_residuals(residual: &[f64], lambda: &[f64]) -> (f64, f64, f64) {
    let infeas = residual.iter().fold(0.0f64, |acc, v| acc.max(-v));
    let neg = lambda.iter().fold(0.0f64, |acc, v| acc.max(-v));
    let comp = dot(lambda, residual).abs();
    (infeas, neg, comp)
}

pub fn kkt_residuals(problem: &ProblemSpec, w: &PrimalDualPoint) -> Result<KktResiduals> {
    problem.check_point(w)?;
    let residual = problem.constraint_value(&w.x);
    let (primal_infeasibility, multiplier_negativity, complementarity) =
        constraint_residuals(&residual, &w.lambda);
    let mut y = problem.operator().adjoint(&w.lambda);
    for (yi, xi) in y.iter_mut().zip(&w.x) {
        *yi += xi;
    }
    let z = problem.theta().prox_vec(&y, 1.0)?;
    Ok(KktResiduals {
        primal_infeasibility,
        multiplier_negativity,
        complementarity,
        stationarity: dist(&w.x, &z),
    })
}

/// `‖x_next − x_prev‖`; the multiplier is ignored.
pub fn aer_absolute(prev: &PrimalDualPoint, next: &PrimalDualPoint) -> f64 {
    dist(&prev.x, &next.x)
}

/// `‖ũ − u‖ / N` with `N` the number of scalar entries.
pub fn aer_normalized(u_tilde: &[f64], u: &[f64]) -> Result<f64> {
    check_len("normalized Aer fields", u.len(), u_tilde.len())?;
    if u.is_empty() {
        return Err(Error::InvalidData("normalized Aer of an empty field".into()));
    }
    Ok(dist(u_tilde, u) / u.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::qp::{oracle_p1, oracle_p2};
    use proptest::prelude::*;

    #[test]
    fn eval_f_examples() {
        let p1 = oracle_p1();
        let f = eval_f(&p1, &PrimalDualPoint::new(vec![0.0], vec![0.0])).unwrap();
        assert_eq!(f, vec![0.0, -1.0]);
        let f = eval_f(&p1, &PrimalDualPoint::new(vec![1.0], vec![1.0])).unwrap();
        assert_eq!(f, vec![-1.0, 0.0]);
        assert!(eval_f(&p1, &PrimalDualPoint::new(vec![1.0, 2.0], vec![1.0])).is_err());
    }

    #[test]
    fn kkt_examples() {
        let p1 = oracle_p1();
        let r = kkt_residuals(&p1, &PrimalDualPoint::new(vec![1.0], vec![1.0])).unwrap();
        assert_eq!(r.max(), 0.0);

        let r = kkt_residuals(&p1, &PrimalDualPoint::new(vec![0.0], vec![0.0])).unwrap();
        assert_eq!(r.primal_infeasibility, 1.0);
        assert_eq!((r.multiplier_negativity, r.complementarity, r.stationarity), (0.0, 0.0, 0.0));

        let r = kkt_residuals(&p1, &PrimalDualPoint::new(vec![2.0], vec![0.0])).unwrap();
        assert_eq!((r.primal_infeasibility, r.multiplier_negativity, r.complementarity), (0.0, 0.0, 0.0));
        assert!((r.stationarity - 1.0).abs() < 1e-15);

        let p2 = oracle_p2();
        let r = kkt_residuals(&p2, &PrimalDualPoint::new(vec![0.5], vec![1.0])).unwrap();
        assert!(r.max() < 1e-15);
    }

    #[test]
    fn aer_examples() {
        let a = PrimalDualPoint::new(vec![1.0, 1.0], vec![0.0]);
        assert_eq!(aer_absolute(&a, &a), 0.0);
        let b = PrimalDualPoint::new(vec![4.0, 5.0], vec![0.0]);
        assert_eq!(aer_absolute(&a, &b), 5.0);
        let c = PrimalDualPoint::new(vec![1.0, 1.0], vec![7.0]);
        assert_eq!(aer_absolute(&a, &c), 0.0);

        assert_eq!(aer_normalized(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(aer_normalized(&[1.0; 4], &[0.0; 4]).unwrap(), 0.5);
        assert_eq!(aer_normalized(&[0.0, 0.0, -3.0], &[0.0; 3]).unwrap(), 1.0);
        assert!(aer_normalized(&[], &[]).is_err());
    }

    #[test]
    fn resolve_validates() {
        let p1 = oracle_p1();
        let ok = SolverConfig::builder().beta(1.0).tau(0.8).r(1.1).build().resolve(&p1).unwrap();
        assert!(ok.warnings.is_empty());
        assert!((ok.tau_r() - 0.88).abs() < 1e-15);

        let small = SolverConfig::builder().beta(1.0).r(0.9).build().resolve(&p1);
        assert!(matches!(small, Err(Error::ProximalTooSmall { .. })));

        let bad_beta = SolverConfig::builder().beta(0.0).build().resolve(&p1);
        assert!(matches!(bad_beta, Err(Error::InvalidParameter { name: "beta", .. })));

        let warned = SolverConfig::builder().tau(0.5).r(1.1).build().resolve(&p1).unwrap();
        assert_eq!(warned.warnings.len(), 1);

        // closed interval endpoints accepted silently
        for tau in [0.75, 1.0] {
            let c = SolverConfig::builder().tau(tau).r(1.1).build().resolve(&p1).unwrap();
            assert!(c.warnings.is_empty());
        }

        let auto = SolverConfig::builder().beta(2.0).margin(0.01).build().resolve(&p1).unwrap();
        assert!(auto.r > 2.0 && auto.r < 2.0 * 1.0101);
    }

    #[test]
    fn proximal_scalar_serde() {
        let c: SolverConfig = serde_json::from_str(r#"{"r": "auto", "beta": 2}"#).unwrap();
        assert_eq!(c.r, ProximalScalar::Auto);
        assert_eq!(c.beta, 2.0);
        let c: SolverConfig = serde_json::from_str(r#"{"r": 1.5}"#).unwrap();
        assert_eq!(c.r, ProximalScalar::Value(1.5));
        assert!(serde_json::from_str::<SolverConfig>(r#"{"r": "big"}"#).is_err());
        assert!(serde_json::from_str::<SolverConfig>(r#"{"rr": 1}"#).is_err());
    }

    proptest! {
        #[test]
        fn f_is_affine_and_skew(
            x1 in -3.0f64..3.0, l1 in -3.0f64..3.0,
            x2 in -3.0f64..3.0, l2 in -3.0f64..3.0,
            t in 0.0f64..1.0,
        ) {
            let p1 = oracle_p1();
            let u = PrimalDualPoint::new(vec![x1], vec![l1]);
            let v = PrimalDualPoint::new(vec![x2], vec![l2]);
            let fu = eval_f(&p1, &u).unwrap();
            let fv = eval_f(&p1, &v).unwrap();
            let mix = PrimalDualPoint::new(vec![t * x1 + (1.0 - t) * x2], vec![t * l1 + (1.0 - t) * l2]);
            let fm = eval_f(&p1, &mix).unwrap();
            for i in 0..2 {
                prop_assert!((fm[i] - (t * fu[i] + (1.0 - t) * fv[i])).abs() <= 1e-12);
            }
            let du = [x1 - x2, l1 - l2];
            let df = [fu[0] - fv[0], fu[1] - fv[1]];
            let inner = du[0] * df[0] + du[1] * df[1];
            prop_assert!(inner.abs() <= 1e-10 * (1.0 + du[0].abs() * df[0].abs() + du[1].abs() * df[1].abs()));
        }
    }
}
