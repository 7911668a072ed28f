//! Dense quadratic programs `min ½xᵀPx + qᵀx  s.t.  Ax ≥ b`, the two scalar
//! oracle problems, and a generator of random instances with a known saddle
//! point.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Result};
use crate::operators::{DenseOperator, L1Norm, ProjectionSet, Quadratic};
use crate::problem::{PrimalDualPoint, ProblemSpec};
use crate::solvers::QuadraticSubsolver;

/// `min ½x²  s.t.  x ≥ 1`; saddle point `(1, 1)`.
pub fn oracle_p1() -> ProblemSpec {
    ProblemSpec::new(
        Arc::new(Quadratic::diagonal(vec![1.0]).expect("valid diagonal")),
        ProjectionSet::Whole,
        Arc::new(DenseOperator::new(DMatrix::from_element(1, 1, 1.0))),
        vec![1.0],
    )
    .expect("consistent dimensions")
    .with_name("P1")
}

/// `min |x|  s.t.  x ≥ 0.5`; saddle point `(0.5, 1)`.
pub fn oracle_p2() -> ProblemSpec {
    ProblemSpec::new(
        Arc::new(L1Norm { weight: 1.0 }),
        ProjectionSet::Whole,
        Arc::new(DenseOperator::new(DMatrix::from_element(1, 1, 1.0))),
        vec![0.5],
    )
    .expect("consistent dimensions")
    .with_name("P2")
}

pub fn p1_saddle() -> PrimalDualPoint {
    PrimalDualPoint::new(vec![1.0], vec![1.0])
}

pub fn p2_saddle() -> PrimalDualPoint {
    PrimalDualPoint::new(vec![0.5], vec![1.0])
}

#[derive(Clone, Debug)]
pub struct QuadraticProgram {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Known saddle point, when the instance was built around one.
    pub saddle: Option<PrimalDualPoint>,
}

impl QuadraticProgram {
    pub fn new(p: DMatrix<f64>, q: DVector<f64>, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_len("QP P rows", a.ncols(), p.nrows())?;
        check_len("QP q", a.ncols(), q.len())?;
        check_len("QP b", a.nrows(), b.len())?;
        Ok(Self { p, q, a, b, saddle: None })
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn to_problem(&self) -> Result<ProblemSpec> {
        let theta = Quadratic::new(self.p.clone(), Some(self.q.clone()))?;
        ProblemSpec::new(
            Arc::new(theta),
            ProjectionSet::Whole,
            Arc::new(DenseOperator::new(self.a.clone())),
            self.b.as_slice().to_vec(),
        )
    }

    pub fn exact_subsolver(&self) -> Result<QuadraticSubsolver> {
        QuadraticSubsolver::new(self.p.clone(), self.q.clone(), &self.a)
    }

    /// Random strictly feasible QP with `P ≻ 0`, `m ≤ n ≤ max_n`, built
    /// around a chosen saddle point: active rows get `λ*ᵢ ∈ [0.5, 2]` and
    /// `(Ax*)ᵢ = bᵢ`; inactive rows get `λ*ᵢ = 0` and slack in `[0.5, 2]`;
    /// then `q = Aᵀλ* − Px*` makes `(x*, λ*)` satisfy the KKT system.
    pub fn random_with_saddle(seed: u64, max_n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max_n = max_n.max(2);
        let n = rng.random_range(2..=max_n);
        let m = rng.random_range(1..=n);
        let mut normal = || -> f64 { rng.sample(StandardNormal) };

        let b_factor = DMatrix::from_fn(n, n, |_, _| normal());
        let mut p = b_factor.transpose() * &b_factor / n as f64;
        for i in 0..n {
            p[(i, i)] += 0.1;
        }
        let a = DMatrix::from_fn(m, n, |_, _| normal());
        let x_star = DVector::from_fn(n, |_, _| normal());

        let mut lambda_star = DVector::zeros(m);
        let mut slack = DVector::zeros(m);
        let mut any_active = false;
        for i in 0..m {
            let active = rng.random_bool(0.5) || (i == m - 1 && !any_active);
            if active {
                any_active = true;
                lambda_star[i] = rng.random_range(0.5..2.0);
            } else {
                slack[i] = rng.random_range(0.5..2.0);
            }
        }
        let b = &a * &x_star - slack;
        let q = a.transpose() * &lambda_star - &p * &x_star;
        let saddle = PrimalDualPoint::new(x_star.as_slice().to_vec(), lambda_star.as_slice().to_vec());
        Self {
            p,
            q,
            a,
            b,
            saddle: Some(saddle),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::kkt_residuals;

    #[test]
    fn oracle_saddles_have_zero_residuals() {
        assert_eq!(kkt_residuals(&oracle_p1(), &p1_saddle()).unwrap().max(), 0.0);
        assert_eq!(kkt_residuals(&oracle_p2(), &p2_saddle()).unwrap().max(), 0.0);
    }

    #[test]
    fn random_instances_have_their_saddle() {
        for seed in 0..20 {
            let qp = QuadraticProgram::random_with_saddle(seed, 10);
            assert!(qp.m() <= qp.n() && qp.n() <= 10);
            let problem = qp.to_problem().unwrap();
            let res = kkt_residuals(&problem, qp.saddle.as_ref().unwrap()).unwrap();
            assert!(res.max() < 1e-10, "seed {seed}: {res:?}");
        }
    }

    #[test]
    fn random_instances_are_deterministic() {
        let a = QuadraticProgram::random_with_saddle(5, 10);
        let b = QuadraticProgram::random_with_saddle(5, 10);
        assert_eq!(a.a, b.a);
        assert_eq!(a.b, b.b);
    }
}
