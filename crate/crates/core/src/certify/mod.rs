//! Dense verification of the prediction-correction analysis on small
//! problems: the matrices `Q`, `M`, `H = QM⁻¹`, `G = Qᵀ + Q − MᵀHM`, `D`, `D₀`,
//! and per-iteration checks of the identity for `‖w^k − w̃^k‖²_G`, the two
//! cross-term lower bounds, the descent inequality, and the contraction
//! inequality with its summability consequence.
//!
//! Notation: `Δx = x^k − x^{k+1}`, `Δλ = λ^k − λ^{k+1}`,
//! `φ_k = ½{τ‖Δx‖²_D + (1−τ)β‖AΔx‖²}`,
//! `ϕ_k = τ‖Δx‖²_D + 2(τ − ¾){β‖AΔx‖² + ‖Δλ‖²/β}`.

pub mod suite;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{kkt_residuals, PredictorPoint, PrimalDualPoint, ProblemSpec, ResolvedConfig, StoppingRule};
use crate::solvers::{linearized_primal, predicted_multiplier, solve, IterationEvent, Scheme, SolveResult, Status};

/// Dense certification is refused beyond this many unknowns `n + m`.
pub const MAX_CERT_SIZE: usize = 2000;

/// Relative tolerance of every check: `1e-9·(1 + |lhs| + |rhs|)`.
pub const CHECK_TOL: f64 = 1e-9;

const MATRIX_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertScheme {
    /// Linearized scheme: `Q = [[τrI, 0], [−A, I/β]]`.
    Iidl,
    /// Indefinite ALM: `Q = [[(τ+δ)βAᵀA, 0], [−A, I/β]]`, `D = δβAᵀA/τ`.
    IndefiniteAlm,
}

impl CertScheme {
    pub fn of(scheme: &Scheme<'_>) -> Result<Self> {
        match scheme {
            Scheme::IIdl => Ok(CertScheme::Iidl),
            Scheme::IndefiniteAlm(_) => Ok(CertScheme::IndefiniteAlm),
            other => Err(Error::param(
                "scheme",
                format!("{:?} has no prediction-correction form to certify", other.kind()),
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CertMatrices {
    pub scheme: CertScheme,
    pub beta: f64,
    pub tau: f64,
    pub a: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub d0: DMatrix<f64>,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn block(n: usize, m: usize, tl: &DMatrix<f64>, bl: &DMatrix<f64>, tr: &DMatrix<f64>, br: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(tl);
    out.view_mut((n, 0), (m, n)).copy_from(bl);
    out.view_mut((0, n), (n, m)).copy_from(tr);
    out.view_mut((n, n), (m, m)).copy_from(br);
    out
}

/// Builds the analysis matrices and checks `H = QM⁻¹` and
/// `G = Qᵀ + Q − MᵀHM` against their closed block forms.
pub fn assemble_matrices(a: &DMatrix<f64>, config: &ResolvedConfig, scheme: CertScheme) -> Result<CertMatrices> {
    let (m, n) = a.shape();
    if n + m > MAX_CERT_SIZE {
        return Err(Error::TooLargeForCertification {
            size: n + m,
            limit: MAX_CERT_SIZE,
        });
    }
    let (beta, tau) = (config.beta, config.tau);
    let ata = a.transpose() * a;
    let id_n = DMatrix::<f64>::identity(n, n);
    let id_m = DMatrix::<f64>::identity(m, m);

    let (qx, d) = match scheme {
        CertScheme::Iidl => (&id_n * config.tau_r(), &id_n * config.r - &ata * beta),
        CertScheme::IndefiniteAlm => (
            &ata * ((tau + config.delta) * beta),
            &ata * (config.delta * beta / tau),
        ),
    };
    let d0 = &d * tau - &ata * ((1.0 - tau) * beta);

    let q = block(n, m, &qx, &(-a), &DMatrix::zeros(n, m), &(&id_m / beta));
    let mm = block(n, m, &id_n, &(-a * beta), &DMatrix::zeros(n, m), &id_m);
    let m_inv = block(n, m, &id_n, &(a * beta), &DMatrix::zeros(n, m), &id_m);
    let h = &q * &m_inv;
    let g = q.transpose() + &q - mm.transpose() * &h * &mm;

    let h_expected = block(n, m, &qx, &DMatrix::zeros(m, n), &DMatrix::zeros(n, m), &(&id_m / beta));
    let g_expected = block(n, m, &d0, &DMatrix::zeros(m, n), &DMatrix::zeros(n, m), &(&id_m / beta));
    for (what, got, want) in [("H = QM⁻¹", &h, &h_expected), ("G", &g, &g_expected)] {
        let err = max_abs(&(got - want));
        if err > MATRIX_TOL * (1.0 + max_abs(want)) {
            return Err(Error::NumericalFailure {
                iteration: 0,
                reason: format!("{what} deviates from its block form by {err:e}"),
            });
        }
    }
    if max_abs(&(&mm * &m_inv - DMatrix::identity(n + m, n + m))) > MATRIX_TOL * (1.0 + beta * max_abs(a)).powi(2) {
        return Err(Error::NumericalFailure {
            iteration: 0,
            reason: "M·M⁻¹ is not the identity".into(),
        });
    }

    Ok(CertMatrices {
        scheme,
        beta,
        tau,
        a: a.clone(),
        q,
        m: mm,
        h,
        g,
        d,
        d0,
    })
}

impl CertMatrices {
    pub fn for_problem(problem: &ProblemSpec, config: &ResolvedConfig, scheme: CertScheme) -> Result<Self> {
        if problem.n() + problem.m() > MAX_CERT_SIZE {
            return Err(Error::TooLargeForCertification {
                size: problem.n() + problem.m(),
                limit: MAX_CERT_SIZE,
            });
        }
        assemble_matrices(&problem.operator().to_dense(), config, scheme)
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    fn quad(mat: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
        v.dot(&(mat * v))
    }

    fn stacked(w: &PrimalDualPoint) -> DVector<f64> {
        DVector::from_vec(w.stacked())
    }

    /// `‖u − v‖²_H`
    pub fn h_norm_sq(&self, u: &PrimalDualPoint, v: &PrimalDualPoint) -> f64 {
        Self::quad(&self.h, &(Self::stacked(u) - Self::stacked(v)))
    }

    /// `‖u − v‖²_G`
    pub fn g_norm_sq(&self, u: &PrimalDualPoint, v: &PrimalDualPoint) -> f64 {
        Self::quad(&self.g, &(Self::stacked(u) - Self::stacked(v)))
    }

    fn parts(&self, from: &PrimalDualPoint, to: &PrimalDualPoint) -> Parts {
        let dx = DVector::from_iterator(self.n(), from.x.iter().zip(&to.x).map(|(a, b)| a - b));
        let dl = DVector::from_iterator(from.lambda.len(), from.lambda.iter().zip(&to.lambda).map(|(a, b)| a - b));
        let adx = &self.a * &dx;
        Parts {
            dx_d: Self::quad(&self.d, &dx),
            adx_sq: adx.norm_squared(),
            dl_sq: dl.norm_squared(),
            cross: dl.dot(&adx),
        }
    }

    /// Recovers the predictor from two consecutive iterates:
    /// `x̃ = x^{k+1}`, `λ̃ = λ^{k+1} − βA(x^k − x^{k+1})`.
    pub fn predictor_from(&self, w_k: &PrimalDualPoint, w_next: &PrimalDualPoint) -> PredictorPoint {
        let dx = DVector::from_iterator(self.n(), w_k.x.iter().zip(&w_next.x).map(|(a, b)| a - b));
        let adx = &self.a * dx;
        PredictorPoint {
            x_tilde: w_next.x.clone(),
            lambda_tilde: w_next.lambda.iter().zip(adx.iter()).map(|(l, v)| l - self.beta * v).collect(),
        }
    }
}

/// Quadratic forms of one displacement `(Δx, Δλ)`.
#[derive(Clone, Copy, Debug)]
struct Parts {
    dx_d: f64,
    adx_sq: f64,
    dl_sq: f64,
    cross: f64,
}

impl Parts {
    fn phi(&self, tau: f64, beta: f64) -> f64 {
        0.5 * (tau * self.dx_d + (1.0 - tau) * beta * self.adx_sq)
    }

    fn varphi(&self, tau: f64, beta: f64) -> f64 {
        tau * self.dx_d + 2.0 * (tau - 0.75) * (beta * self.adx_sq + self.dl_sq / beta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Identity,
    Inequality,
}

/// One evaluated relation. Inequalities are stated as `lhs ≥ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub kind: CheckKind,
    pub iteration: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn identity(name: &str, iteration: usize, lhs: f64, rhs: f64) -> Self {
        let slack = lhs - rhs;
        Self {
            name: name.into(),
            kind: CheckKind::Identity,
            iteration,
            lhs,
            rhs,
            slack,
            pass: slack.abs() <= CHECK_TOL * (1.0 + lhs.abs()),
        }
    }

    pub fn inequality(name: &str, iteration: usize, lhs: f64, rhs: f64) -> Self {
        let slack = lhs - rhs;
        Self {
            name: name.into(),
            kind: CheckKind::Inequality,
            iteration,
            lhs,
            rhs,
            slack,
            pass: slack >= -CHECK_TOL * (1.0 + lhs.abs() + rhs.abs()),
        }
    }
}

pub const CHECK_IDENTITY_G: &str = "identity_g";
pub const CHECK_CROSS_HISTORY: &str = "cross_term_history_bound";
pub const CHECK_CROSS_QUADRATIC: &str = "cross_term_quadratic_bound";
pub const CHECK_DESCENT: &str = "descent";
pub const CHECK_CONTRACTION: &str = "contraction";
pub const CHECK_SUMMABILITY: &str = "summability";

/// `‖w^k − w̃^k‖²_G = τ‖Δx‖²_D + τβ‖AΔx‖² + ‖Δλ‖²/β + 2ΔλᵀAΔx`.
pub fn check_identity_g(
    cert: &CertMatrices,
    iteration: usize,
    w_k: &PrimalDualPoint,
    w_next: &PrimalDualPoint,
    w_tilde: &PredictorPoint,
) -> CheckReport {
    let lhs = cert.g_norm_sq(w_k, &w_tilde.as_point());
    let p = cert.parts(w_k, w_next);
    let (tau, beta) = (cert.tau, cert.beta);
    let rhs = tau * p.dx_d + tau * beta * p.adx_sq + p.dl_sq / beta + 2.0 * p.cross;
    CheckReport::identity(CHECK_IDENTITY_G, iteration, lhs, rhs)
}

/// Consecutive iterates `[w^{k−1}, w^k, w^{k+1}]`.
pub type History<'a> = [&'a PrimalDualPoint; 3];

/// Both lower bounds on `ΔλᵀAΔx`:
/// `≥ φ_k − φ_{k−1} − 2(1−τ)β‖AΔx‖²` and
/// `≥ −(τ − ½)β‖AΔx‖² − (5/2 − 2τ)‖Δλ‖²/β`.
pub fn check_cross_term_bounds(cert: &CertMatrices, iteration: usize, history: History<'_>) -> [CheckReport; 2] {
    let (tau, beta) = (cert.tau, cert.beta);
    let prev = cert.parts(history[0], history[1]);
    let cur = cert.parts(history[1], history[2]);
    let history_bound = cur.phi(tau, beta) - prev.phi(tau, beta) - 2.0 * (1.0 - tau) * beta * cur.adx_sq;
    let quadratic_bound = -(tau - 0.5) * beta * cur.adx_sq - (2.5 - 2.0 * tau) * cur.dl_sq / beta;
    [
        CheckReport::inequality(CHECK_CROSS_HISTORY, iteration, cur.cross, history_bound),
        CheckReport::inequality(CHECK_CROSS_QUADRATIC, iteration, cur.cross, quadratic_bound),
    ]
}

/// `‖w^k − w̃^k‖²_G ≥ φ_k − φ_{k−1} + ϕ_k`.
pub fn check_descent(cert: &CertMatrices, iteration: usize, history: History<'_>) -> CheckReport {
    let (tau, beta) = (cert.tau, cert.beta);
    let w_tilde = cert.predictor_from(history[1], history[2]);
    let lhs = cert.g_norm_sq(history[1], &w_tilde.as_point());
    let prev = cert.parts(history[0], history[1]);
    let cur = cert.parts(history[1], history[2]);
    let rhs = cur.phi(tau, beta) - prev.phi(tau, beta) + cur.varphi(tau, beta);
    CheckReport::inequality(CHECK_DESCENT, iteration, lhs, rhs)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialRecord {
    pub phi: f64,
    pub varphi: f64,
    /// `‖w^k − w*‖²_H` when a reference solution is known.
    pub h_distance_sq: Option<f64>,
}

pub fn potential_terms(
    cert: &CertMatrices,
    w_k: &PrimalDualPoint,
    w_next: &PrimalDualPoint,
    w_star: Option<&PrimalDualPoint>,
) -> PotentialRecord {
    let p = cert.parts(w_k, w_next);
    PotentialRecord {
        phi: p.phi(cert.tau, cert.beta),
        varphi: p.varphi(cert.tau, cert.beta),
        h_distance_sq: w_star.map(|s| cert.h_norm_sq(w_k, s)),
    }
}

/// `‖w^k − w*‖²_H + φ_{k−1} − ϕ_k ≥ ‖w^{k+1} − w*‖²_H + φ_k`.
pub fn check_contraction(cert: &CertMatrices, iteration: usize, history: History<'_>, w_star: &PrimalDualPoint) -> CheckReport {
    let (tau, beta) = (cert.tau, cert.beta);
    let prev = cert.parts(history[0], history[1]);
    let cur = cert.parts(history[1], history[2]);
    let lhs = cert.h_norm_sq(history[1], w_star) + prev.phi(tau, beta) - cur.varphi(tau, beta);
    let rhs = cert.h_norm_sq(history[2], w_star) + cur.phi(tau, beta);
    CheckReport::inequality(CHECK_CONTRACTION, iteration, lhs, rhs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub h_min: f64,
    pub h_max: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub d0_min: f64,
    pub d0_max: f64,
    pub h_positive_definite: bool,
    pub d_positive_semidefinite: bool,
    /// `D₀` (hence `G`) has a negative eigenvalue.
    pub d0_indefinite: bool,
}

fn eig_range(mat: &DMatrix<f64>) -> Result<(f64, f64)> {
    let sym = (mat + mat.transpose()) * 0.5;
    let eig = sym
        .try_symmetric_eigen(1e-14, 10_000)
        .ok_or_else(|| Error::Eigen(format!("{}x{} symmetric eigensolve did not converge", mat.nrows(), mat.ncols())))?;
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

pub fn spectrum_report(cert: &CertMatrices) -> Result<SpectrumReport> {
    let (h_min, h_max) = eig_range(&cert.h)?;
    let (g_min, g_max) = eig_range(&cert.g)?;
    let (d_min, d_max) = eig_range(&cert.d)?;
    let (d0_min, d0_max) = eig_range(&cert.d0)?;
    let eps = 1e-12 * (1.0 + h_max.abs().max(d_max.abs()));
    Ok(SpectrumReport {
        h_min,
        h_max,
        g_min,
        g_max,
        d_min,
        d_max,
        d0_min,
        d0_max,
        h_positive_definite: h_min > eps,
        d_positive_semidefinite: d_min >= -eps,
        d0_indefinite: d0_min < -eps,
    })
}

/// One iteration written as prediction followed by the correction
/// `w⁺ = w − M(w − w̃)` with `M` materialized.
pub fn predict_correct_step(
    problem: &ProblemSpec,
    config: &ResolvedConfig,
    w: &PrimalDualPoint,
) -> Result<(PrimalDualPoint, PredictorPoint)> {
    problem.check_point(w)?;
    let lambda_tilde = predicted_multiplier(problem, config.beta, &w.x, &w.lambda, true);
    let x_tilde = linearized_primal(problem, config.tau_r(), &w.x, &lambda_tilde)?;
    let n = problem.n();
    let m = problem.m();
    if n + m > MAX_CERT_SIZE {
        return Err(Error::TooLargeForCertification {
            size: n + m,
            limit: MAX_CERT_SIZE,
        });
    }
    let a = problem.operator().to_dense();
    let mm = block(
        n,
        m,
        &DMatrix::identity(n, n),
        &(-&a * config.beta),
        &DMatrix::zeros(n, m),
        &DMatrix::identity(m, m),
    );
    let predictor = PredictorPoint { x_tilde, lambda_tilde };
    let w_vec = DVector::from_vec(w.stacked());
    let gap = &w_vec - DVector::from_vec(predictor.as_point().stacked());
    let next = w_vec - mm * gap;
    Ok((
        PrimalDualPoint::new(next.as_slice()[..n].to_vec(), next.as_slice()[n..].to_vec()),
        predictor,
    ))
}

/// Runs the linearized scheme with tolerance `1e-12` (on the full primal-dual
/// step) and ten times the iteration budget, then requires every KKT residual
/// to be at most `1e-10·max(1, ‖w‖)`.
pub fn reference_solution(problem: &ProblemSpec, config: &ResolvedConfig, w0: PrimalDualPoint) -> Result<PrimalDualPoint> {
    let mut cfg = config.clone();
    cfg.tol = 1e-12;
    cfg.max_iter = config.max_iter.saturating_mul(10);
    cfg.stopping_rule = StoppingRule::PrimalDualStep;
    let res = solve(problem, &cfg, w0, Scheme::IIdl, |_| {})?;
    let residual = kkt_residuals(problem, &res.final_point)?.max();
    if res.status == Status::NumericalFailure || residual > 1e-10 * res.final_point.norm().max(1.0) {
        return Err(Error::UnreliableReference { residual });
    }
    Ok(res.final_point)
}

/// Observer that certifies every iteration of a running solve.
#[derive(Debug)]
pub struct Certifier {
    cert: CertMatrices,
    w_star: Option<PrimalDualPoint>,
    prev: Option<PrimalDualPoint>,
    summability_bound: Option<f64>,
    varphi_sum: f64,
    pub reports: Vec<CheckReport>,
    pub potentials: Vec<PotentialRecord>,
}

impl Certifier {
    pub fn new(cert: CertMatrices, w_star: Option<PrimalDualPoint>) -> Self {
        Self {
            cert,
            w_star,
            prev: None,
            summability_bound: None,
            varphi_sum: 0.0,
            reports: Vec::new(),
            potentials: Vec::new(),
        }
    }

    pub fn matrices(&self) -> &CertMatrices {
        &self.cert
    }

    pub fn observe(&mut self, ev: &IterationEvent<'_>) {
        let (k, w_k, w_next) = (ev.k, ev.prev, ev.next);
        let derived;
        let w_tilde = match ev.predictor {
            Some(p) => p,
            None => {
                derived = self.cert.predictor_from(w_k, w_next);
                &derived
            }
        };
        self.reports.push(check_identity_g(&self.cert, k, w_k, w_next, w_tilde));
        let potential = potential_terms(&self.cert, w_k, w_next, self.w_star.as_ref());
        self.potentials.push(potential);

        if let Some(w_prev) = self.prev.as_ref() {
            let history = [w_prev, w_k, w_next];
            self.reports.extend(check_cross_term_bounds(&self.cert, k, history));
            self.reports.push(check_descent(&self.cert, k, history));
            if let Some(w_star) = self.w_star.as_ref() {
                self.reports.push(check_contraction(&self.cert, k, history, w_star));
                // Σ_{j≥1} ϕ_j ≤ ‖w¹ − w*‖²_H + φ(w⁰, w¹)
                let bound = *self.summability_bound.get_or_insert_with(|| {
                    self.cert.h_norm_sq(w_k, w_star) + self.potentials[self.potentials.len() - 2].phi
                });
                self.varphi_sum += potential.varphi;
                self.reports
                    .push(CheckReport::inequality(CHECK_SUMMABILITY, k, bound, self.varphi_sum));
            }
        }
        self.prev = Some(w_k.clone());
    }

    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.reports.iter().filter(|r| !r.pass)
    }
}

#[derive(Debug)]
pub struct CertifiedRun {
    pub result: SolveResult,
    pub certifier: Certifier,
    pub spectrum: SpectrumReport,
}

/// Solves while certifying every iteration; `φ` and `ϕ` are copied into the
/// iteration traces.
pub fn certify_run(
    problem: &ProblemSpec,
    config: &ResolvedConfig,
    scheme: Scheme<'_>,
    w0: PrimalDualPoint,
    w_star: Option<PrimalDualPoint>,
) -> Result<CertifiedRun> {
    let cert = CertMatrices::for_problem(problem, config, CertScheme::of(&scheme)?)?;
    let spectrum = spectrum_report(&cert)?;
    let mut certifier = Certifier::new(cert, w_star);
    let mut result = solve(problem, config, w0, scheme, |ev| certifier.observe(ev))?;
    for (trace, p) in result.traces.iter_mut().zip(&certifier.potentials) {
        trace.phi = Some(p.phi);
        trace.varphi = Some(p.varphi);
    }
    Ok(CertifiedRun {
        result,
        certifier,
        spectrum,
    })
}

#[cfg(test)]
mod tests;
