//! Solves the two scalar oracle problems with the linearized ALM and prints
//! the final point and KKT residuals.
//!
//! ```text
//! cargo run --example solve_oracle
//! ```

use ineqalm::apps::qp::{oracle_p1, oracle_p2, p1_saddle, p2_saddle};
use ineqalm::problem::{kkt_residuals, PrimalDualPoint, SolverConfig};
use ineqalm::solvers::{solve, Scheme};

fn main() -> ineqalm::Result<()> {
    let config = SolverConfig::builder().beta(1.0).tau(0.8).r(1.1).tol(1e-6).build();
    for (problem, saddle) in [(oracle_p1(), p1_saddle()), (oracle_p2(), p2_saddle())] {
        let resolved = config.resolve(&problem)?;
        let result = solve(&problem, &resolved, PrimalDualPoint::origin(&problem), Scheme::IIdl, |_| {})?;
        let w = &result.final_point;
        let kkt = kkt_residuals(&problem, w)?;
        println!(
            "{}: {:?} in {} iterations, x = {:.8}, lambda = {:.8}, |w - w*| = {:.2e}, max KKT = {:.2e}",
            problem.name(),
            result.status,
            result.iterations,
            w.x[0],
            w.lambda[0],
            w.distance(&saddle),
            kkt.max()
        );
    }
    Ok(())
}
