//! Trains a hard-margin SVM on a seeded Gaussian dataset for several τ and
//! reports the iteration counts.

use ineqalm::apps::svm::{build_svm_problem, generate_gaussian_dataset, svm_solver_config, train_svm};
use ineqalm::solvers::SchemeKind;

fn main() -> ineqalm::Result<()> {
    let data = generate_gaussian_dataset(50, 10, 12.0, 1)?;
    let problem = build_svm_problem(&data)?;
    let mut baseline = None;
    for tau in [1.0, 0.9, 0.8, 0.75] {
        let config = svm_solver_config(&problem, tau, 1e-6, 100_000)?;
        let t = train_svm(&data, &config, SchemeKind::Iidl)?;
        let iters = t.result.iterations;
        let base = *baseline.get_or_insert(iters);
        println!(
            "tau {tau:<5} {:?} {iters:>6} iterations ({:+.1}%)  margin {:.5}  worst violation {:.1e}",
            t.result.status,
            100.0 * (iters as f64 - base as f64) / base as f64,
            t.model.margin,
            t.model.worst_violation(&data)
        );
    }
    Ok(())
}
