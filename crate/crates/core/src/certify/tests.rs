use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::suite::{run_suite, SuiteOptions};
use super::*;
use crate::apps::qp::{oracle_p1, p1_saddle, QuadraticProgram};
use crate::problem::SolverConfig;
use crate::solvers::{i_idl_alm_step, SchemeKind};

fn p1_config(tau: f64) -> ResolvedConfig {
    SolverConfig::builder()
        .beta(1.0)
        .tau(tau)
        .r(1.1)
        .delta(0.3)
        .tol(1e-10)
        .build()
        .resolve(&oracle_p1())
        .unwrap()
}

fn one() -> DMatrix<f64> {
    DMatrix::from_element(1, 1, 1.0)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn p1_matrices() {
    let c = assemble_matrices(&one(), &p1_config(0.8), CertScheme::Iidl).unwrap();
    let m = |rows: &[f64]| DMatrix::from_row_slice(2, 2, rows);
    let eq = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).abs().max() < 1e-15;
    assert!(eq(&c.q, &m(&[0.88, 0.0, -1.0, 1.0])));
    assert!(eq(&c.m, &m(&[1.0, 0.0, -1.0, 1.0])));
    assert!(eq(&c.h, &m(&[0.88, 0.0, 0.0, 1.0])));
    assert!(eq(&c.g, &m(&[-0.12, 0.0, 0.0, 1.0])));
    assert!(close(c.d[(0, 0)], 0.1, 1e-15));
    assert!(close(c.d0[(0, 0)], -0.12, 1e-15));
}

#[test]
fn indefinite_alm_matrices() {
    let c = assemble_matrices(&one(), &p1_config(0.8), CertScheme::IndefiniteAlm).unwrap();
    assert!(close(c.h[(0, 0)], 1.1, 1e-15) && close(c.h[(1, 1)], 1.0, 1e-15));
    assert!(close(c.g[(0, 0)], 0.1, 1e-15));
    assert!(close(c.d[(0, 0)], 0.3 / 0.8, 1e-15));
}

#[test]
fn size_guard() {
    let a = DMatrix::zeros(1500, 600);
    assert!(matches!(
        assemble_matrices(&a, &p1_config(0.8), CertScheme::Iidl),
        Err(Error::TooLargeForCertification { size: 2100, .. })
    ));
}

#[test]
fn spectrum_examples() {
    let s = spectrum_report(&assemble_matrices(&one(), &p1_config(0.8), CertScheme::Iidl).unwrap()).unwrap();
    assert!(close(s.d0_min, -0.12, 1e-12) && s.d0_indefinite);
    assert!(close(s.h_min, 0.88, 1e-12) && s.h_positive_definite);
    let s = spectrum_report(&assemble_matrices(&one(), &p1_config(1.0), CertScheme::Iidl).unwrap()).unwrap();
    assert!(close(s.d0_min, 0.1, 1e-12) && !s.d0_indefinite && s.g_min > 0.0);

    // random 5×3 A with r = 1.01·βρ and τ = 0.8 forces τr < βρ
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = DMatrix::from_fn(5, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qp = QuadraticProgram::new(DMatrix::identity(3, 3), nalgebra::DVector::zeros(3), a.clone(), nalgebra::DVector::zeros(5)).unwrap();
    let cfg = SolverConfig::builder().tau(0.8).build().resolve(&qp.to_problem().unwrap()).unwrap();
    let s = spectrum_report(&assemble_matrices(&a, &cfg, CertScheme::Iidl).unwrap()).unwrap();
    assert!(s.d0_indefinite && s.d_positive_semidefinite && s.h_positive_definite);
}

#[test]
fn first_iteration_identity_and_potentials() {
    let cfg = p1_config(0.8);
    let cert = assemble_matrices(&one(), &cfg, CertScheme::Iidl).unwrap();
    let w0 = PrimalDualPoint::new(vec![0.0], vec![0.0]);
    let (w1, pred) = i_idl_alm_step(&oracle_p1(), &cfg, &w0).unwrap();
    let r = check_identity_g(&cert, 0, &w0, &w1, &pred);
    assert!(r.pass);
    // G = diag(−0.12, 1) on (−1/1.88, −1)
    let x = 1.0 / 1.88;
    assert!(close(r.lhs, -0.12 * x * x + 1.0, 1e-15));
    assert!(close(r.lhs, 0.966048, 1e-6));

    let p = potential_terms(&cert, &w0, &w1, Some(&p1_saddle()));
    assert!(close(p.phi, 0.039611, 1e-6));
    assert!(close(p.varphi, 0.072839, 1e-6));
    assert!(close(p.h_distance_sq.unwrap(), 0.88 + 1.0, 1e-15));

    let still = potential_terms(&cert, &w1, &w1, None);
    assert_eq!((still.phi, still.varphi), (0.0, 0.0));
}

#[test]
fn varphi_at_lower_tau_endpoint() {
    let cfg = p1_config(0.75);
    let cert = assemble_matrices(&one(), &cfg, CertScheme::Iidl).unwrap();
    let a = PrimalDualPoint::new(vec![0.3], vec![0.7]);
    let b = PrimalDualPoint::new(vec![-0.2], vec![0.1]);
    let p = potential_terms(&cert, &a, &b, None);
    let dx = 0.5f64;
    assert!(close(p.varphi, 0.75 * cert.d[(0, 0)] * dx * dx, 1e-15));
    assert!(close((0.75 - 0.5) * (2.5 - 2.0 * 0.75), 0.25, 1e-15));
}

#[test]
fn stationary_history_is_tight() {
    let cert = assemble_matrices(&one(), &p1_config(0.8), CertScheme::Iidl).unwrap();
    let s = p1_saddle();
    let h = [&s, &s, &s];
    for r in check_cross_term_bounds(&cert, 1, h) {
        assert!(r.pass && r.lhs == 0.0 && r.rhs == 0.0);
    }
    let d = check_descent(&cert, 1, h);
    assert!(d.pass && d.lhs == 0.0 && d.rhs == 0.0);
    let c = check_contraction(&cert, 1, h, &s);
    assert!(c.pass && c.slack == 0.0);
    let pred = cert.predictor_from(&s, &s);
    assert_eq!(pred.as_point(), s);
    assert!(check_identity_g(&cert, 0, &s, &s, &pred).slack == 0.0);
}

#[test]
fn predict_correct_matches_direct_step() {
    let cfg = p1_config(0.8);
    let p1 = oracle_p1();
    let (w, _) = predict_correct_step(&p1, &cfg, &PrimalDualPoint::new(vec![0.0], vec![0.0])).unwrap();
    assert!(close(w.x[0], 1.0 / 1.88, 1e-15) && close(w.lambda[0], 1.0 - 1.0 / 1.88, 1e-15));
    let (w, pred) = predict_correct_step(&p1, &cfg, &p1_saddle()).unwrap();
    assert_eq!(pred.as_point(), p1_saddle());
    assert_eq!(w, p1_saddle());

    let qp = QuadraticProgram::random_with_saddle(4, 8);
    let problem = qp.to_problem().unwrap();
    let cfg = SolverConfig::default().resolve(&problem).unwrap();
    let mut a = PrimalDualPoint::origin(&problem);
    let mut b = a.clone();
    for _ in 0..100 {
        a = i_idl_alm_step(&problem, &cfg, &a).unwrap().0;
        b = predict_correct_step(&problem, &cfg, &b).unwrap().0;
        assert!(a.distance(&b) <= 1e-12 * (1.0 + a.norm()));
    }
}

#[test]
fn certified_p1_run() {
    let cfg = p1_config(0.8);
    let p1 = oracle_p1();
    let run = certify_run(&p1, &cfg, Scheme::IIdl, PrimalDualPoint::origin(&p1), Some(p1_saddle())).unwrap();
    assert_eq!(run.result.status, Status::Converged);
    assert!(run.certifier.all_passed());
    let names: std::collections::BTreeSet<_> = run.certifier.reports.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names.len(), 6);
    assert!(run.result.traces.iter().all(|t| t.phi.is_some() && t.varphi.unwrap() >= 0.0));
    assert!(run.spectrum.d0_indefinite);
}

#[test]
fn reference_solution_recovers_saddle() {
    let p1 = oracle_p1();
    let w = reference_solution(&p1, &p1_config(0.8), PrimalDualPoint::origin(&p1)).unwrap();
    assert!(w.distance(&p1_saddle()) < 1e-9);
}

#[test]
fn default_suite_passes() {
    for scheme in [SchemeKind::Iidl, SchemeKind::IndefiniteAlm] {
        let report = run_suite(&SuiteOptions {
            scheme,
            ..SuiteOptions::default()
        })
        .unwrap();
        assert_eq!(report.cases.len(), 22);
        for case in &report.cases {
            assert_eq!(case.status, Status::Converged, "{} {scheme:?}", case.name);
            let first = case.failures().next();
            assert!(first.is_none(), "{} {scheme:?}: {first:?}", case.name);
        }
    }
}

#[test]
fn out_of_range_tau_is_reported() {
    let report = run_suite(&SuiteOptions {
        tau: 0.5,
        random_cases: 3,
        max_iter: 300,
        ..SuiteOptions::default()
    })
    .unwrap();
    assert!(!report.all_passed());
}
