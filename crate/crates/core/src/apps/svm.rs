//! Hard-margin linear SVM `min ½‖w‖²  s.t.  yᵢ(wᵀxᵢ + a) ≥ 1` with the
//! stacked unknown `u = (w; a)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::operators::{
    estimate_spectral_radius, LinearOperator, ProjectionSet, ProxFunction, DEFAULT_POWER_MAX_ITER,
    DEFAULT_POWER_TOL,
};
use crate::problem::{ProblemSpec, ResolvedConfig, SolveResult, SolverConfig, StoppingRule};
use crate::solvers::{solve, QuadraticSubsolver, Scheme, SchemeKind};

pub const SVM_BETA: f64 = 0.01;
pub const SVM_R_OFFSET: f64 = 0.1;

const PERCEPTRON_EPOCHS: usize = 1000;
const MAX_DRAWS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct SvmDataset {
    points: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

impl SvmDataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        check_len("SVM labels", points.len(), labels.len())?;
        let dim = points.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidData("SVM dataset needs at least one non-empty point".into()));
        }
        if let Some(i) = points.iter().position(|p| p.len() != dim) {
            return Err(Error::InvalidData(format!(
                "point {i} has dimension {}, expected {dim}",
                points[i].len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("SVM features must be finite".into()));
        }
        if let Some(l) = labels.iter().find(|l| **l != 1.0 && **l != -1.0) {
            return Err(Error::InvalidData(format!("SVM labels must be +1 or -1, got {l}")));
        }
        if !labels.contains(&1.0) || !labels.contains(&-1.0) {
            return Err(Error::InvalidData("SVM dataset needs both classes".into()));
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Runs a perceptron (with bias) for a bounded number of epochs. `true`
    /// proves separability; `false` is inconclusive for tiny margins.
    pub fn perceptron_separable(&self) -> bool {
        let mut w = vec![0.0; self.dim()];
        let mut a = 0.0;
        for _ in 0..PERCEPTRON_EPOCHS {
            let mut mistakes = 0;
            for (x, &y) in self.points.iter().zip(&self.labels) {
                let s: f64 = x.iter().zip(&w).map(|(xi, wi)| xi * wi).sum::<f64>() + a;
                if y * s <= 0.0 {
                    for (wi, xi) in w.iter_mut().zip(x) {
                        *wi += y * xi;
                    }
                    a += y;
                    mistakes += 1;
                }
            }
            if mistakes == 0 {
                return true;
            }
        }
        false
    }
}

/// Rows `yᵢ(xᵢᵀ, 1)` applied matrix-free.
#[derive(Clone, Debug)]
pub struct SvmOperator {
    features: Vec<f64>,
    labels: Vec<f64>,
    dim: usize,
}

impl SvmOperator {
    pub fn new(data: &SvmDataset) -> Self {
        Self {
            features: data.points.iter().flatten().copied().collect(),
            labels: data.labels.clone(),
            dim: data.dim(),
        }
    }
}

impl LinearOperator for SvmOperator {
    fn rows(&self) -> usize {
        self.labels.len()
    }

    fn cols(&self) -> usize {
        self.dim + 1
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let (w, a) = u.split_at(self.dim);
        for (i, o) in out.iter_mut().enumerate() {
            let x = &self.features[i * self.dim..(i + 1) * self.dim];
            let s: f64 = x.iter().zip(w).map(|(xi, wi)| xi * wi).sum();
            *o = self.labels[i] * (s + a[0]);
        }
    }

    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &yi) in y.iter().enumerate() {
            let c = yi * self.labels[i];
            let x = &self.features[i * self.dim..(i + 1) * self.dim];
            for (o, xi) in out[..self.dim].iter_mut().zip(x) {
                *o += c * xi;
            }
            out[self.dim] += c;
        }
    }
}

/// `½‖w‖²` on `u = (w; a)`; the intercept is unpenalized.
#[derive(Clone, Copy, Debug)]
pub struct SvmObjective {
    pub dim: usize,
}

impl ProxFunction for SvmObjective {
    fn prox(&self, y: &[f64], c: f64, out: &mut [f64]) -> Result<()> {
        check_len("SVM prox input", self.dim + 1, y.len())?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", format!("prox weight must be positive, got {c}")));
        }
        for i in 0..self.dim {
            out[i] = y[i] / (1.0 + c);
        }
        out[self.dim] = y[self.dim];
        Ok(())
    }

    fn value(&self, u: &[f64]) -> Option<f64> {
        Some(0.5 * u[..self.dim].iter().map(|v| v * v).sum::<f64>())
    }
}

pub fn build_svm_problem(data: &SvmDataset) -> Result<ProblemSpec> {
    Ok(ProblemSpec::new(
        Arc::new(SvmObjective { dim: data.dim() }),
        ProjectionSet::Whole,
        Arc::new(SvmOperator::new(data)),
        vec![1.0; data.len()],
    )?
    .with_name("svm"))
}

/// `u⁺ = (HᵀH + τrI)⁻¹(Aᵀλ̃ + τr·u)`; `HᵀH` is the identity on `w` and zero on
/// the intercept, so the solve is diagonal.
pub fn svm_x_update(u: &[f64], lambda_tilde: &[f64], tau_r: f64, a: &dyn LinearOperator) -> Result<Vec<f64>> {
    if !(tau_r > 0.0 && tau_r.is_finite()) {
        return Err(Error::param("tau_r", format!("must be positive, got {tau_r}")));
    }
    check_len("SVM iterate", a.cols(), u.len())?;
    check_len("SVM multiplier", a.rows(), lambda_tilde.len())?;
    let mut v = a.adjoint(lambda_tilde);
    for (vi, ui) in v.iter_mut().zip(u) {
        *vi += tau_r * ui;
    }
    let n = v.len() - 1;
    for vi in &mut v[..n] {
        *vi /= 1.0 + tau_r;
    }
    v[n] /= tau_r;
    Ok(v)
}

/// Two unit-variance Gaussian clouds centred at `±separation/2` on the first
/// axis, `n_per_class` points each. A draw that the perceptron cannot separate
/// is replaced by one from `seed + 1`, up to ten draws.
pub fn generate_gaussian_dataset(n_per_class: usize, dim: usize, separation: f64, seed: u64) -> Result<SvmDataset> {
    if n_per_class == 0 || dim == 0 {
        return Err(Error::param("n_per_class/dim", "must be positive"));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::param("separation", format!("must be finite and nonnegative, got {separation}")));
    }
    for draw in 0..MAX_DRAWS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(draw as u64));
        let mut points = Vec::with_capacity(2 * n_per_class);
        let mut labels = Vec::with_capacity(2 * n_per_class);
        for label in [1.0, -1.0] {
            for _ in 0..n_per_class {
                let mut p: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                p[0] += label * separation / 2.0;
                points.push(p);
                labels.push(label);
            }
        }
        let data = SvmDataset::new(points, labels)?;
        if data.perceptron_separable() {
            if draw > 0 {
                log::info!("SVM generator: seed {seed} not separable, used seed {}", seed + draw as u64);
            }
            return Ok(data);
        }
    }
    Err(Error::NonSeparable { attempts: MAX_DRAWS })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub w: Vec<f64>,
    pub intercept: f64,
    /// `2/‖w‖`
    pub margin: f64,
}

impl SvmModel {
    pub fn from_stacked(u: &[f64]) -> Self {
        let (w, a) = u.split_at(u.len() - 1);
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            w: w.to_vec(),
            intercept: a[0],
            margin: if norm > 0.0 { 2.0 / norm } else { f64::INFINITY },
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>() + self.intercept
    }

    /// `max_i (1 − yᵢ(wᵀxᵢ + a))`, positive when some margin constraint fails.
    pub fn worst_violation(&self, data: &SvmDataset) -> f64 {
        data.points
            .iter()
            .zip(&data.labels)
            .map(|(x, y)| 1.0 - y * self.decision(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Solver settings for SVM training: `β = 0.01`, `r = βρ̂(AᵀA) + 0.1`, and the
/// primal step as stopping metric.
pub fn svm_solver_config(problem: &ProblemSpec, tau: f64, tol: f64, max_iter: usize) -> Result<ResolvedConfig> {
    let rho = estimate_spectral_radius(problem.operator(), DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER, 0)?.rho;
    SolverConfig::builder()
        .beta(SVM_BETA)
        .tau(tau)
        .rho(rho)
        .r(SVM_BETA * rho + SVM_R_OFFSET)
        .tol(tol)
        .max_iter(max_iter)
        .stopping_rule(StoppingRule::AbsoluteStep)
        .build()
        .resolve(problem)
}

#[derive(Clone, Debug)]
pub struct SvmTraining {
    pub model: SvmModel,
    pub result: SolveResult,
}

pub fn train_svm(data: &SvmDataset, config: &ResolvedConfig, scheme: SchemeKind) -> Result<SvmTraining> {
    let problem = build_svm_problem(data)?;
    let w0 = crate::problem::PrimalDualPoint::origin(&problem);
    let result = match scheme {
        SchemeKind::IndefiniteAlm => {
            let n = data.dim();
            let mut p = DMatrix::identity(n + 1, n + 1);
            p[(n, n)] = 0.0;
            let sub = QuadraticSubsolver::new(p, DVector::zeros(n + 1), &problem.operator().to_dense())?;
            solve(&problem, config, w0, Scheme::IndefiniteAlm(&sub), |_| {})?
        }
        SchemeKind::Iidl => solve(&problem, config, w0, Scheme::IIdl, |_| {})?,
        SchemeKind::ClassicIneq => solve(&problem, config, w0, Scheme::ClassicIneq, |_| {})?,
        SchemeKind::EqualityIdl => solve(&problem, config, w0, Scheme::EqualityIdl, |_| {})?,
    };
    Ok(SvmTraining {
        model: SvmModel::from_stacked(&result.final_point.x),
        result,
    })
}
