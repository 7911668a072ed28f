//! Convex-relaxed Potts segmentation through the abbreviated continuous
//! max-flow model
//!
//! ```text
//! max_{p_s, q}  Σ_x p_s(x)   s.t.  |q_i(x)| ≤ α,   Div q_i − p_s ≥ −ρ(l_i, ·),  i = 1..m
//! ```
//!
//! The labeling functions `u_i` are the multipliers of the flow constraints.
//! Storage: scalar fields are site-major with site index `x + nx·(y + ny·z)`;
//! a vector field keeps the `d` components of each site contiguous. The
//! primal stack is `(p_s; q_1; …; q_m)` and the multiplier stack `(u_1; …; u_m)`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::operators::{project_l2_ball_sitewise, LinearOperator, ProjectionSet, ProxFunction};
use crate::problem::{
    IterationTrace, PrimalDualPoint, ProblemSpec, ResolvedConfig, SolverConfig, Status, StoppingRule,
};
use crate::solvers::DIVERGENCE_THRESHOLD;

/// Offset added to the spectral bound when choosing `r = β(bound + offset)`.
pub const POTTS_R_OFFSET: f64 = 0.1;

/// A 2D or 3D grid of sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if !(dims.len() == 2 || dims.len() == 3) {
            return Err(Error::param("grid", format!("expected 2 or 3 dimensions, got {}", dims.len())));
        }
        if dims.contains(&0) {
            return Err(Error::param("grid", "every dimension must be positive"));
        }
        let mut strides = Vec::with_capacity(dims.len());
        let mut s = 1;
        for &n in dims {
            strides.push(s);
            s *= n;
        }
        Ok(Self { dims: dims.to_vec(), strides })
    }

    pub fn planar(nx: usize, ny: usize) -> Result<Self> {
        Self::new(&[nx, ny])
    }

    pub fn volume(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        Self::new(&[nx, ny, nz])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of spatial dimensions `d`.
    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn sites(&self) -> usize {
        self.dims.iter().product()
    }

    /// Forward differences with a zero last difference (Neumann boundary).
    pub fn gradient(&self, u: &[f64], out: &mut [f64]) {
        let d = self.ndim();
        for s in 0..u.len() {
            for k in 0..d {
                let c = (s / self.strides[k]) % self.dims[k];
                out[s * d + k] = if c + 1 < self.dims[k] {
                    u[s + self.strides[k]] - u[s]
                } else {
                    0.0
                };
            }
        }
    }

    /// `Div = −∇ᵀ`.
    pub fn divergence(&self, q: &[f64], out: &mut [f64]) {
        let d = self.ndim();
        for (s, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..d {
                let c = (s / self.strides[k]) % self.dims[k];
                if c + 1 < self.dims[k] {
                    acc += q[s * d + k];
                }
                if c > 0 {
                    acc -= q[(s - self.strides[k]) * d + k];
                }
            }
            *o = acc;
        }
    }
}

/// Upper bound on `ρ(AᵀA)` for the stacked max-flow operator: `4d + m`,
/// i.e. `8 + m` on images and `12 + m` on volumes.
pub fn rho_bound_potts(ndim: usize, m: usize) -> f64 {
    (4 * ndim + m) as f64
}

#[derive(Clone, Debug)]
pub struct PottsInstance {
    grid: Grid,
    image: Vec<f64>,
    m: usize,
    alpha: f64,
    label_values: Vec<f64>,
    /// `ρ(l_i, x)` stored label-major: `fidelity[i·N + x]`.
    fidelity: Vec<f64>,
}

impl PottsInstance {
    /// Fidelity `|I(x) − c_i|` with `c_i = i/(m−1)` evenly spaced in `[0, 1]`.
    pub fn new(grid: Grid, image: Vec<f64>, m: usize, alpha: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::param("m", format!("need at least two labels, got {m}")));
        }
        let values = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        Self::with_label_values(grid, image, alpha, values)
    }

    pub fn with_label_values(grid: Grid, image: Vec<f64>, alpha: f64, label_values: Vec<f64>) -> Result<Self> {
        check_len("Potts image", grid.sites(), image.len())?;
        let m = label_values.len();
        if m < 2 {
            return Err(Error::param("m", format!("need at least two labels, got {m}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be positive and finite, got {alpha}")));
        }
        if image.iter().chain(&label_values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("image and label values must be finite".into()));
        }
        let fidelity = label_values
            .iter()
            .flat_map(|c| image.iter().map(move |v| (v - c).abs()))
            .collect();
        Ok(Self {
            grid,
            image,
            m,
            alpha,
            label_values,
            fidelity,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn image(&self) -> &[f64] {
        &self.image
    }

    pub fn labels(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn label_values(&self) -> &[f64] {
        &self.label_values
    }

    pub fn fidelity(&self, label: usize) -> &[f64] {
        let n = self.grid.sites();
        &self.fidelity[label * n..(label + 1) * n]
    }

    pub fn rho_bound(&self) -> f64 {
        rho_bound_potts(self.grid.ndim(), self.m)
    }

    fn primal_len(&self) -> usize {
        self.grid.sites() * (1 + self.m * self.grid.ndim())
    }
}

/// `(p_s, q) ↦ (−p_s + Div q_i)_i`, matrix-free.
#[derive(Clone, Debug)]
pub struct PottsOperator {
    grid: Grid,
    m: usize,
}

impl PottsOperator {
    pub fn new(grid: Grid, m: usize) -> Self {
        Self { grid, m }
    }
}

impl LinearOperator for PottsOperator {
    fn rows(&self) -> usize {
        self.m * self.grid.sites()
    }

    fn cols(&self) -> usize {
        self.grid.sites() * (1 + self.m * self.grid.ndim())
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.grid.sites();
        let dn = n * self.grid.ndim();
        let (ps, q) = x.split_at(n);
        for i in 0..self.m {
            let o = &mut out[i * n..(i + 1) * n];
            self.grid.divergence(&q[i * dn..(i + 1) * dn], o);
            for (oi, p) in o.iter_mut().zip(ps) {
                *oi -= p;
            }
        }
    }

    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]) {
        let n = self.grid.sites();
        let dn = n * self.grid.ndim();
        let (ps, q) = out.split_at_mut(n);
        ps.fill(0.0);
        for i in 0..self.m {
            let yi = &y[i * n..(i + 1) * n];
            for (p, v) in ps.iter_mut().zip(yi) {
                *p -= v;
            }
            let qi = &mut q[i * dn..(i + 1) * dn];
            self.grid.gradient(yi, qi);
            for v in qi.iter_mut() {
                *v = -*v;
            }
        }
    }
}

/// `θ(p_s, q) = −Σ p_s + indicator(|q_i(x)| ≤ α)`.
#[derive(Clone, Debug)]
pub struct PottsObjective {
    sites: usize,
    ndim: usize,
    alpha: f64,
}

impl ProxFunction for PottsObjective {
    fn prox(&self, y: &[f64], c: f64, out: &mut [f64]) -> Result<()> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", format!("prox weight must be positive, got {c}")));
        }
        let (ps, q) = y.split_at(self.sites);
        for (o, v) in out[..self.sites].iter_mut().zip(ps) {
            *o = v + c;
        }
        out[self.sites..].copy_from_slice(q);
        project_l2_ball_sitewise(&mut out[self.sites..], self.ndim, self.alpha);
        Ok(())
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        Some(-x[..self.sites].iter().sum::<f64>())
    }
}

/// The max-flow model as a generic problem `min θ(x)  s.t.  Ax ≥ b` with
/// `b = −(ρ(l_1,·); …; ρ(l_m,·))`.
pub fn build_potts_problem(inst: &PottsInstance) -> Result<ProblemSpec> {
    let theta = PottsObjective {
        sites: inst.grid.sites(),
        ndim: inst.grid.ndim(),
        alpha: inst.alpha,
    };
    let b = inst.fidelity.iter().map(|v| -v).collect();
    Ok(ProblemSpec::new(
        Arc::new(theta),
        ProjectionSet::Whole,
        Arc::new(PottsOperator::new(inst.grid.clone(), inst.m)),
        b,
    )?
    .with_name("potts"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PottsState {
    pub p_s: Vec<f64>,
    /// One vector field per label.
    pub q: Vec<Vec<f64>>,
    /// One labeling function per label.
    pub u: Vec<Vec<f64>>,
}

impl PottsState {
    pub fn zeros(inst: &PottsInstance) -> Self {
        let n = inst.grid.sites();
        Self {
            p_s: vec![0.0; n],
            q: vec![vec![0.0; n * inst.grid.ndim()]; inst.m],
            u: vec![vec![0.0; n]; inst.m],
        }
    }

    pub fn to_point(&self) -> PrimalDualPoint {
        let mut x = self.p_s.clone();
        x.extend(self.q.iter().flatten());
        PrimalDualPoint::new(x, self.u.iter().flatten().copied().collect())
    }

    pub fn from_point(inst: &PottsInstance, w: &PrimalDualPoint) -> Result<Self> {
        let n = inst.grid.sites();
        let dn = n * inst.grid.ndim();
        check_len("Potts primal stack", inst.primal_len(), w.x.len())?;
        check_len("Potts multiplier stack", inst.m * n, w.lambda.len())?;
        Ok(Self {
            p_s: w.x[..n].to_vec(),
            q: w.x[n..].chunks(dn).map(<[f64]>::to_vec).collect(),
            u: w.lambda.chunks(n).map(<[f64]>::to_vec).collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.p_s.iter().chain(self.q.iter().flatten()).chain(self.u.iter().flatten()).all(|v| v.is_finite())
    }

    fn norm(&self) -> f64 {
        self.p_s
            .iter()
            .chain(self.q.iter().flatten())
            .chain(self.u.iter().flatten())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// One iteration of the linearized scheme specialised to the max-flow model.
/// Returns the new state and the predicted labeling functions `ũ`.
/// Labels are updated in parallel; the `p_s` update sums `ũ_i` in label order,
/// so the result does not depend on the thread count.
pub fn potts_step(inst: &PottsInstance, state: &PottsState, config: &ResolvedConfig) -> Result<(PottsState, Vec<Vec<f64>>)> {
    let grid = &inst.grid;
    let n = grid.sites();
    let d = grid.ndim();
    let beta = config.beta;
    let tr = config.tau_r();

    // ũ_i = [u_i − β(−p_s + ρ_i + Div q_i)]₊
    let u_tilde: Vec<Vec<f64>> = (0..inst.m)
        .into_par_iter()
        .map(|i| {
            let mut div = vec![0.0; n];
            grid.divergence(&state.q[i], &mut div);
            let rho = inst.fidelity(i);
            (0..n)
                .map(|s| (state.u[i][s] - beta * (-state.p_s[s] + rho[s] + div[s])).max(0.0))
                .collect()
        })
        .collect();

    let mut p_s = state.p_s.clone();
    for (s, p) in p_s.iter_mut().enumerate() {
        let total: f64 = u_tilde.iter().map(|ui| ui[s]).sum();
        *p += (1.0 - total) / tr;
    }

    // q_i⁺ = Π_α(q_i − ∇ũ_i/(τr)),  u_i⁺ = ũ_i + β(p_s⁺ − p_s + Div(q_i − q_i⁺))
    let (q, u): (Vec<Vec<f64>>, Vec<Vec<f64>>) = (0..inst.m)
        .into_par_iter()
        .map(|i| {
            let mut grad = vec![0.0; n * d];
            grid.gradient(&u_tilde[i], &mut grad);
            let mut qi: Vec<f64> = state.q[i].iter().zip(&grad).map(|(q, g)| q - g / tr).collect();
            project_l2_ball_sitewise(&mut qi, d, inst.alpha);
            let dq: Vec<f64> = state.q[i].iter().zip(&qi).map(|(a, b)| a - b).collect();
            let mut div = vec![0.0; n];
            grid.divergence(&dq, &mut div);
            let ui = (0..n)
                .map(|s| u_tilde[i][s] + beta * (p_s[s] - state.p_s[s] + div[s]))
                .collect();
            (qi, ui)
        })
        .unzip();

    let next = PottsState { p_s, q, u };
    if !next.is_finite() {
        return Err(Error::NumericalFailure {
            iteration: 0,
            reason: "Potts state is not finite".into(),
        });
    }
    Ok((next, u_tilde))
}

/// Solver settings for Potts runs: `ρ(AᵀA)` replaced by its bound and
/// `r = β(bound + 0.1)`, stopping on the normalized multiplier gap.
pub fn potts_config(inst: &PottsInstance, beta: f64, tau: f64, tol: f64, max_iter: usize) -> SolverConfig {
    let bound = inst.rho_bound();
    SolverConfig::builder()
        .beta(beta)
        .tau(tau)
        .rho(bound)
        .r(beta * (bound + POTTS_R_OFFSET))
        .tol(tol)
        .max_iter(max_iter)
        .stopping_rule(StoppingRule::NormalizedStep)
        .build()
}

#[derive(Clone, Debug)]
pub struct SegmentationResult {
    /// Per-site label in `1..=m`.
    pub label_map: Vec<usize>,
    pub state: PottsState,
    pub iterations: usize,
    pub final_aer: f64,
    pub status: Status,
    pub traces: Vec<IterationTrace>,
}

/// Per-site argmax of the labeling functions, 1-based; ties go to the
/// smallest label.
pub fn extract_labels(state: &PottsState) -> Vec<usize> {
    let n = state.p_s.len();
    (0..n)
        .map(|s| {
            let mut best = 0;
            for i in 1..state.u.len() {
                if state.u[i][s] > state.u[best][s] {
                    best = i;
                }
            }
            best + 1
        })
        .collect()
}

fn stacked_gap(u_tilde: &[Vec<f64>], u: &[Vec<f64>]) -> f64 {
    let total: usize = u.iter().map(Vec::len).sum();
    let sq: f64 = u_tilde
        .iter()
        .flatten()
        .zip(u.iter().flatten())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    sq.sqrt() / total as f64
}

fn potts_trace(inst: &PottsInstance, k: usize, aer: f64, prev: &PottsState, next: &PottsState) -> IterationTrace {
    let n = inst.grid.sites();
    let mut infeas = 0.0f64;
    let mut comp = 0.0;
    let mut neg = 0.0f64;
    let mut div = vec![0.0; n];
    for i in 0..inst.m {
        inst.grid.divergence(&next.q[i], &mut div);
        let rho = inst.fidelity(i);
        for s in 0..n {
            let res = -next.p_s[s] + div[s] + rho[s];
            infeas = infeas.max(-res);
            comp += next.u[i][s] * res;
            neg = neg.max(-next.u[i][s]);
        }
    }
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let step_x = dist(&prev.p_s, &next.p_s)
        + prev.q.iter().zip(&next.q).map(|(a, b)| dist(a, b)).sum::<f64>();
    let step_lambda: f64 = prev.u.iter().zip(&next.u).map(|(a, b)| dist(a, b)).sum();
    IterationTrace {
        k,
        aer,
        primal_infeasibility: infeas.max(0.0),
        complementarity: comp.abs(),
        multiplier_negativity: neg.max(0.0),
        objective: Some(-next.p_s.iter().sum::<f64>()),
        step_x: step_x.sqrt(),
        step_lambda: step_lambda.sqrt(),
        ..IterationTrace::default()
    }
}

/// Iterates `potts_step` from the zero state until `‖ũ − u‖/(m·N) < tol`.
pub fn solve_potts(inst: &PottsInstance, config: &ResolvedConfig) -> Result<SegmentationResult> {
    solve_potts_from(inst, config, PottsState::zeros(inst))
}

pub fn solve_potts_from(inst: &PottsInstance, config: &ResolvedConfig, start: PottsState) -> Result<SegmentationResult> {
    let mut state = start;
    let mut traces = Vec::new();
    let mut status = Status::MaxIterReached;
    let mut final_aer = f64::INFINITY;
    for k in 0..config.max_iter {
        let (next, u_tilde) = match potts_step(inst, &state, config) {
            Ok(out) => out,
            Err(Error::NumericalFailure { reason, .. }) => {
                log::warn!("iteration {k}: {reason}");
                status = Status::NumericalFailure;
                break;
            }
            Err(e) => return Err(e),
        };
        if next.norm() > DIVERGENCE_THRESHOLD {
            log::warn!("iteration {k}: Potts iterate diverged");
            status = Status::NumericalFailure;
            break;
        }
        let aer = stacked_gap(&u_tilde, &state.u);
        traces.push(potts_trace(inst, k, aer, &state, &next));
        state = next;
        final_aer = aer;
        // ũ⁰ = u⁰ whenever the start is primal feasible, so k = 0 cannot converge
        if k > 0 && aer < config.tol {
            status = Status::Converged;
            break;
        }
    }
    Ok(SegmentationResult {
        label_map: extract_labels(&state),
        iterations: traces.len(),
        state,
        final_aer,
        status,
        traces,
    })
}

/// A synthetic image or volume with its ground-truth label map.
#[derive(Clone, Debug)]
pub struct SyntheticImage {
    pub grid: Grid,
    pub image: Vec<f64>,
    /// Labels in `1..=m`, matching the label values `c_i = (i−1)/(m−1)`.
    pub truth: Vec<usize>,
    pub m: usize,
}

impl SyntheticImage {
    fn from_truth(grid: Grid, truth: Vec<usize>, m: usize, noise: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let image = truth
            .iter()
            .map(|&l| {
                let e: f64 = rng.sample(StandardNormal);
                ((l - 1) as f64 / (m - 1) as f64 + noise * e).clamp(0.0, 1.0)
            })
            .collect();
        Self { grid, image, truth, m }
    }

    /// Dark background with a bright centred rectangle spanning half of each
    /// side, plus Gaussian noise of standard deviation `noise`.
    pub fn two_region(nx: usize, ny: usize, noise: f64, seed: u64) -> Result<Self> {
        let grid = Grid::planar(nx, ny)?;
        let inside = |c: usize, n: usize| c >= n / 4 && c < n / 4 + n / 2;
        let truth = (0..grid.sites())
            .map(|s| if inside(s % nx, nx) && inside(s / nx, ny) { 2 } else { 1 })
            .collect();
        Ok(Self::from_truth(grid, truth, 2, noise, seed))
    }

    /// Four quadrants with intensities 0, 1/3, 2/3, 1.
    pub fn four_region(nx: usize, ny: usize, noise: f64, seed: u64) -> Result<Self> {
        let grid = Grid::planar(nx, ny)?;
        let truth = (0..grid.sites())
            .map(|s| 1 + usize::from(s % nx >= nx / 2) + 2 * usize::from(s / nx >= ny / 2))
            .collect();
        Ok(Self::from_truth(grid, truth, 4, noise, seed))
    }

    /// Nested shells around the volume centre, one label per shell.
    pub fn nested_volume(n: usize, m: usize, noise: f64, seed: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::param("m", "need at least two labels"));
        }
        let grid = Grid::volume(n, n, n)?;
        let centre = (n as f64 - 1.0) / 2.0;
        let radius = n as f64 / 2.0;
        let truth = (0..grid.sites())
            .map(|s| {
                let (x, y, z) = (s % n, (s / n) % n, s / (n * n));
                let r = [x, y, z]
                    .iter()
                    .map(|&c| (c as f64 - centre).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let shell = ((1.0 - r / radius).max(0.0) * m as f64) as usize;
                shell.min(m - 1) + 1
            })
            .collect();
        Ok(Self::from_truth(grid, truth, m, noise, seed))
    }

    pub fn instance(&self, alpha: f64) -> Result<PottsInstance> {
        PottsInstance::new(self.grid.clone(), self.image.clone(), self.m, alpha)
    }
}

/// Fraction of sites whose label matches the ground truth.
pub fn label_accuracy(labels: &[usize], truth: &[usize]) -> f64 {
    let hits = labels.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{estimate_spectral_radius, vector::dot};
    use crate::solvers::i_idl_alm_step;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn divergence_is_negative_adjoint_of_gradient() {
        for dims in [vec![5, 4], vec![3, 4, 2], vec![1, 1]] {
            let g = Grid::new(&dims).unwrap();
            let n = g.sites();
            let u = random(n, 1);
            let q = random(n * g.ndim(), 2);
            let mut gu = vec![0.0; n * g.ndim()];
            let mut dq = vec![0.0; n];
            g.gradient(&u, &mut gu);
            g.divergence(&q, &mut dq);
            assert!((dot(&gu, &q) + dot(&u, &dq)).abs() < 1e-12);
        }
    }

    #[test]
    fn stacked_operator_adjoint() {
        let g = Grid::planar(4, 3).unwrap();
        let op = PottsOperator::new(g, 3);
        let x = random(op.cols(), 3);
        let y = random(op.rows(), 4);
        let lhs = dot(&op.forward(&x), &y);
        let rhs = dot(&x, &op.adjoint(&y));
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn bounds() {
        assert_eq!(rho_bound_potts(2, 2), 10.0);
        assert_eq!(rho_bound_potts(3, 2), 14.0);
        assert_eq!(rho_bound_potts(2, 4), 12.0);
        let g = Grid::planar(16, 16).unwrap();
        for m in [2, 4] {
            let est = estimate_spectral_radius(&PottsOperator::new(g.clone(), m), 1e-6, 20_000, 0).unwrap();
            assert!(est.rho <= rho_bound_potts(2, m), "{}", est.rho);
        }
    }

    #[test]
    fn single_site_step() {
        // ρ₀ = 0.3 on both labels: ũ = [−β ρ₀]₊ = 0, p_s⁺ = 1/(τr), u⁺ = β/(τr)
        let g = Grid::planar(1, 1).unwrap();
        let inst = PottsInstance::with_label_values(g, vec![0.3], 0.5, vec![0.0, 0.0]).unwrap();
        let cfg = potts_config(&inst, 1.0, 0.8, 1e-8, 10).resolve(&build_potts_problem(&inst).unwrap()).unwrap();
        let (next, u_tilde) = potts_step(&inst, &PottsState::zeros(&inst), &cfg).unwrap();
        let tr = cfg.tau_r();
        assert_eq!(u_tilde, vec![vec![0.0], vec![0.0]]);
        assert!((next.p_s[0] - 1.0 / tr).abs() < 1e-15);
        for ui in &next.u {
            assert!((ui[0] - 1.0 / tr).abs() < 1e-15);
        }
    }

    #[test]
    fn single_site_optimum() {
        let g = Grid::planar(1, 1).unwrap();
        let inst = PottsInstance::new(g, vec![0.3], 2, 0.5).unwrap();
        let cfg = potts_config(&inst, 1.0, 0.8, 1e-10, 10_000).resolve(&build_potts_problem(&inst).unwrap()).unwrap();
        let res = solve_potts(&inst, &cfg).unwrap();
        assert_eq!(res.status, Status::Converged);
        // p_s* = min(ρ₁, ρ₂) = min(0.3, 0.7)
        assert!((res.state.p_s[0] - 0.3).abs() < 1e-6);
        assert_eq!(res.label_map, vec![1]);
    }

    #[test]
    fn specialised_step_matches_generic() {
        let img = SyntheticImage::two_region(8, 8, 0.1, 5).unwrap();
        let inst = img.instance(0.5).unwrap();
        let problem = build_potts_problem(&inst).unwrap();
        let cfg = potts_config(&inst, 0.3, 0.8, 0.0, 50).resolve(&problem).unwrap();
        let mut state = PottsState::zeros(&inst);
        let mut w = state.to_point();
        for _ in 0..50 {
            let (next, u_tilde) = potts_step(&inst, &state, &cfg).unwrap();
            let (wn, pred) = i_idl_alm_step(&problem, &cfg, &w).unwrap();
            let flat = next.to_point();
            let scale = 1.0 + wn.norm();
            assert!(flat.distance(&wn) <= 1e-12 * scale);
            let ut: Vec<f64> = u_tilde.into_iter().flatten().collect();
            assert!(ut.iter().zip(&pred.lambda_tilde).all(|(a, b)| (a - b).abs() <= 1e-12 * scale));
            state = next;
            w = wn;
        }
    }

    #[test]
    fn labels_and_ties() {
        let s = PottsState {
            p_s: vec![0.0; 3],
            q: vec![vec![]; 2],
            u: vec![vec![0.9, 0.5, 0.2], vec![0.1, 0.5, 0.8]],
        };
        assert_eq!(extract_labels(&s), vec![1, 1, 2]);
    }

    #[test]
    fn point_round_trip() {
        let img = SyntheticImage::four_region(4, 4, 0.0, 0).unwrap();
        let inst = img.instance(0.2).unwrap();
        let mut s = PottsState::zeros(&inst);
        s.p_s[3] = 1.0;
        s.q[2][5] = -2.0;
        s.u[3][7] = 0.5;
        assert_eq!(PottsState::from_point(&inst, &s.to_point()).unwrap(), s);
    }

    #[test]
    fn synthetic_truth() {
        let img = SyntheticImage::two_region(8, 8, 0.0, 0).unwrap();
        assert_eq!(img.truth.iter().filter(|&&l| l == 2).count(), 16);
        assert_eq!(img.image.iter().filter(|&&v| v == 1.0).count(), 16);
        let vol = SyntheticImage::nested_volume(8, 3, 0.0, 0).unwrap();
        assert!((1..=3).all(|l| vol.truth.contains(&l)));
    }

    #[test]
    fn constraint_fidelity_is_nonnegative() {
        let img = SyntheticImage::four_region(6, 6, 0.2, 1).unwrap();
        let inst = img.instance(0.3).unwrap();
        assert!((0..4).all(|i| inst.fidelity(i).iter().all(|v| *v >= 0.0)));
        assert!(PottsInstance::new(Grid::planar(2, 2).unwrap(), vec![0.0; 3], 2, 0.3).is_err());
        assert!(PottsInstance::new(Grid::planar(1, 1).unwrap(), vec![0.0], 1, 0.3).is_err());
    }
}
