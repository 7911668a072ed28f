//! Runs the certification suite and prints one line per case. Pass a τ
//! outside `[0.75, 1]` to watch the checks fail.
//!
//! ```text
//! cargo run --release --example certify_suite -- 0.8
//! ```

use ineqalm::certify::suite::{run_suite, SuiteOptions};
use ineqalm::solvers::SchemeKind;

fn main() -> ineqalm::Result<()> {
    let tau = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.8);
    for scheme in [SchemeKind::Iidl, SchemeKind::IndefiniteAlm] {
        let report = run_suite(&SuiteOptions {
            scheme,
            tau,
            ..SuiteOptions::default()
        })?;
        println!("{scheme:?}, tau = {tau}: {} checks", report.check_count());
        for case in &report.cases {
            let failed = case.failures().count();
            println!(
                "  {:<8} {:?} {:>6} iterations  min eig D0 {:>10.2e}  {}",
                case.name,
                case.status,
                case.iterations,
                case.spectrum.d0_min,
                if failed == 0 { "ok".to_string() } else { format!("{failed} failed") }
            );
        }
    }
    Ok(())
}
