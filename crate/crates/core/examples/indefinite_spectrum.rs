//! Prints the spectra of the proximal matrices for P1 across τ and shows
//! that the run converges even when `D₀` has a negative eigenvalue.

use ineqalm::apps::qp::{oracle_p1, p1_saddle};
use ineqalm::certify::{certify_run, spectrum_report, CertMatrices, CertScheme};
use ineqalm::problem::{PrimalDualPoint, SolverConfig};
use ineqalm::solvers::Scheme;

fn main() -> ineqalm::Result<()> {
    let problem = oracle_p1();
    println!("{:>5} {:>9} {:>9} {:>9} {:>11} {:>7}", "tau", "min D", "min D0", "min H", "iterations", "checks");
    for tau in [1.0, 0.9, 0.8, 0.75] {
        let config = SolverConfig::builder().beta(1.0).tau(tau).r(1.1).tol(1e-10).build().resolve(&problem)?;
        let s = spectrum_report(&CertMatrices::for_problem(&problem, &config, CertScheme::Iidl)?)?;
        let run = certify_run(&problem, &config, Scheme::IIdl, PrimalDualPoint::origin(&problem), Some(p1_saddle()))?;
        println!(
            "{tau:>5} {:>9.4} {:>9.4} {:>9.4} {:>11} {:>7}",
            s.d_min,
            s.d0_min,
            s.h_min,
            run.result.iterations,
            if run.certifier.all_passed() { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}
