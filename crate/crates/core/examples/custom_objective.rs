//! Plugging in a user-defined objective: a nonnegative least-distance
//! problem `min ½‖x − c‖²` over `x ≥ 0` with one budget constraint, given
//! only through its proximity operator.

use std::sync::Arc;

use ineqalm::operators::{DenseOperator, ProjectionSet, ProxFunction};
use ineqalm::problem::{kkt_residuals, PrimalDualPoint, ProblemSpec, SolverConfig};
use ineqalm::solvers::{solve, Scheme};

#[derive(Debug)]
struct NonnegDistance {
    c: Vec<f64>,
}

impl ProxFunction for NonnegDistance {
    fn prox(&self, y: &[f64], t: f64, out: &mut [f64]) -> ineqalm::Result<()> {
        for ((o, yi), ci) in out.iter_mut().zip(y).zip(&self.c) {
            *o = ((yi + t * ci) / (1.0 + t)).max(0.0);
        }
        Ok(())
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        if x.iter().any(|v| *v < 0.0) {
            return Some(f64::INFINITY);
        }
        Some(0.5 * x.iter().zip(&self.c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
    }
}

fn main() -> ineqalm::Result<()> {
    let c = vec![2.0, -1.0, 0.5, 3.0];
    // −Σxᵢ ≥ −3, i.e. Σxᵢ ≤ 3
    let a = DenseOperator::from_rows(1, 4, &[-1.0; 4])?;
    let problem = ProblemSpec::new(Arc::new(NonnegDistance { c }), ProjectionSet::Whole, Arc::new(a), vec![-3.0])?;
    let config = SolverConfig::builder().tau(0.75).tol(1e-10).build().resolve(&problem)?;
    let result = solve(&problem, &config, PrimalDualPoint::origin(&problem), Scheme::IIdl, |ev| {
        if ev.k % 20 == 0 {
            println!("k = {:>3}  aer = {:.3e}", ev.k, ev.trace.aer);
        }
    })?;
    let w = &result.final_point;
    println!("x = {:.6?}, lambda = {:.6?}", w.x, w.lambda);
    println!("max KKT residual {:.2e}", kkt_residuals(&problem, w)?.max());
    Ok(())
}
