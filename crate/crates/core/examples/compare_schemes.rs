//! Runs all four schemes on one random QP with a known saddle point and
//! compares iteration counts, inner work and accuracy.
//!
//! ```text
//! cargo run --release --example compare_schemes -- 7
//! ```

use ineqalm::apps::qp::QuadraticProgram;
use ineqalm::problem::{PrimalDualPoint, SolverConfig};
use ineqalm::solvers::{solve, Scheme};

fn main() -> ineqalm::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let qp = QuadraticProgram::random_with_saddle(seed, 10);
    let saddle = qp.saddle.clone().unwrap();
    let problem = qp.to_problem()?;
    let exact = qp.exact_subsolver()?;
    let config = SolverConfig::builder().tau(0.8).tol(1e-9).max_iter(100_000).build().resolve(&problem)?;
    println!("n = {}, m = {}, beta = {}, r = {:.4}", qp.n(), qp.m(), config.beta, config.r);

    for (name, scheme) in [
        ("linearized (inequality)", Scheme::IIdl),
        ("equality form (no projection)", Scheme::EqualityIdl),
        ("classic ALM", Scheme::ClassicIneq),
        ("indefinite ALM", Scheme::IndefiniteAlm(&exact)),
    ] {
        let result = solve(&problem, &config, PrimalDualPoint::origin(&problem), scheme, |_| {})?;
        let inner: usize = result.traces.iter().filter_map(|t| t.inner_iterations).sum();
        println!(
            "{name:<30} {:?} {:>6} iterations {:>8} inner  |x - x*| = {:.2e}",
            result.status,
            result.iterations,
            inner,
            ineqalm::operators::vector::dist(&result.final_point.x, &saddle.x)
        );
    }
    Ok(())
}
