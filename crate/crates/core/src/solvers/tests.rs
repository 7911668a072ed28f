use super::*;
use crate::apps::qp::{oracle_p1, oracle_p2, p1_saddle, p2_saddle, QuadraticProgram};
use crate::problem::SolverConfig;

fn p1_config(tau: f64) -> ResolvedConfig {
    SolverConfig::builder()
        .beta(1.0)
        .tau(tau)
        .r(1.1)
        .delta(0.3)
        .tol(1e-6)
        .build()
        .resolve(&oracle_p1())
        .unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn iidl_step_p1_from_origin() {
    let (next, pred) = i_idl_alm_step(&oracle_p1(), &p1_config(0.8), &PrimalDualPoint::new(vec![0.0], vec![0.0])).unwrap();
    assert_eq!(pred.lambda_tilde, vec![1.0]);
    assert!(close(next.x[0], 1.0 / 1.88, 1e-15));
    assert!(close(next.lambda[0], 1.0 - 1.0 / 1.88, 1e-15));
    assert_eq!(pred.x_tilde, next.x);
}

#[test]
fn iidl_step_p2_from_origin() {
    let (next, pred) = i_idl_alm_step(&oracle_p2(), &p1_config(0.8), &PrimalDualPoint::new(vec![0.0], vec![0.0])).unwrap();
    assert_eq!(pred.lambda_tilde, vec![0.5]);
    assert_eq!(next.x, vec![0.0]);
    assert_eq!(next.lambda, vec![0.5]);
}

#[test]
fn saddle_points_are_fixed_for_every_scheme() {
    let cfg = p1_config(0.8);
    let sub = ProxGradientSubsolver;
    for (problem, saddle) in [(oracle_p1(), p1_saddle()), (oracle_p2(), p2_saddle())] {
        for scheme in [Scheme::IIdl, Scheme::EqualityIdl, Scheme::ClassicIneq, Scheme::IndefiniteAlm(&sub)] {
            let out = step(&problem, &cfg, &saddle, scheme).unwrap();
            assert!(out.next.distance(&saddle) <= 1e-12, "{scheme:?} moved the saddle point of {}", problem.name());
        }
    }
}

#[test]
fn random_qp_saddles_are_fixed() {
    for seed in 0..5 {
        let qp = QuadraticProgram::random_with_saddle(seed, 8);
        let problem = qp.to_problem().unwrap();
        let cfg = SolverConfig::default().resolve(&problem).unwrap();
        let saddle = qp.saddle.clone().unwrap();
        let exact = qp.exact_subsolver().unwrap();
        for scheme in [Scheme::IIdl, Scheme::ClassicIneq, Scheme::IndefiniteAlm(&exact)] {
            let out = step(&problem, &cfg, &saddle, scheme).unwrap();
            let scale = 1.0 + saddle.norm();
            assert!(out.next.distance(&saddle) <= 1e-10 * scale, "seed {seed} {scheme:?}");
        }
    }
}

#[test]
fn classic_alm_steps_on_p1() {
    let cfg = p1_config(0.8);
    let p1 = oracle_p1();
    let (next, inner) = inequality_alm_step(&p1, &cfg, &PrimalDualPoint::new(vec![0.0], vec![0.0]), 10_000, 1e-12).unwrap();
    assert!(inner.converged);
    assert!(close(next.x[0], 0.5, 1e-10) && close(next.lambda[0], 0.5, 1e-10));

    let (next, _) = inequality_alm_step(&p1, &cfg, &PrimalDualPoint::new(vec![0.0], vec![0.5]), 10_000, 1e-12).unwrap();
    assert!(close(next.x[0], 0.75, 1e-10) && close(next.lambda[0], 0.75, 1e-10));

    assert!(inequality_alm_step(&p1, &cfg, &p1_saddle(), 0, 1e-12).is_err());
}

#[test]
fn equality_step_differs_only_when_projection_is_active() {
    let cfg = p1_config(0.8);
    let p1 = oracle_p1();
    let w = PrimalDualPoint::new(vec![0.0], vec![0.0]);
    let (a, _) = i_idl_alm_step(&p1, &cfg, &w).unwrap();
    let (b, _) = equality_idl_alm_step(&p1, &cfg, &w).unwrap();
    assert_eq!(a, b);

    // λ − β(Ax − b) = 0 − (3 − 1) < 0
    let w = PrimalDualPoint::new(vec![3.0], vec![0.0]);
    let (a, pa) = i_idl_alm_step(&p1, &cfg, &w).unwrap();
    let (b, pb) = equality_idl_alm_step(&p1, &cfg, &w).unwrap();
    assert_eq!(pa.lambda_tilde, vec![0.0]);
    assert_eq!(pb.lambda_tilde, vec![-2.0]);
    assert_ne!(a, b);
}

#[test]
fn indefinite_alm_step_on_p1() {
    let cfg = p1_config(0.8);
    let p1 = oracle_p1();
    let qp = QuadraticProgram::new(
        nalgebra::DMatrix::from_element(1, 1, 1.0),
        nalgebra::DVector::zeros(1),
        nalgebra::DMatrix::from_element(1, 1, 1.0),
        nalgebra::DVector::from_element(1, 1.0),
    )
    .unwrap();
    let exact = qp.exact_subsolver().unwrap();
    let w = PrimalDualPoint::new(vec![0.0], vec![0.0]);
    for sub in [&exact as &dyn Subsolver, &ProxGradientSubsolver] {
        let (next, pred, _) = indefinite_alm_step(&p1, &cfg, &w, sub).unwrap();
        assert_eq!(pred.lambda_tilde, vec![1.0]);
        assert!(close(next.x[0], 1.0 / 2.1, 1e-10));
        assert!(close(next.lambda[0], 1.0 - 1.0 / 2.1, 1e-10));
    }
}

#[test]
fn indefinite_alm_with_unit_weight_is_prototypical_alm() {
    // τ + δ = 1 and an unprojected λ̃ reproduce argmin L_β(x, λ), λ − β(Ax⁺ − b)
    for seed in 0..5 {
        let qp = QuadraticProgram::random_with_saddle(100 + seed, 6);
        let problem = qp.to_problem().unwrap();
        let cfg = SolverConfig::builder().beta(0.7).tau(0.8).delta(0.2).build().resolve(&problem).unwrap();
        let exact = qp.exact_subsolver().unwrap();
        // start where λ − β(Ax − b) ≥ 0: large multiplier
        let w = PrimalDualPoint::new(vec![0.0; qp.n()], vec![50.0; qp.m()]);
        let lt = predicted_multiplier(&problem, cfg.beta, &w.x, &w.lambda, false);
        assert!(lt.iter().all(|v| *v >= 0.0));
        let (next, _, _) = indefinite_alm_step(&problem, &cfg, &w, &exact).unwrap();

        let lam = nalgebra::DVector::from_column_slice(&w.lambda);
        let lhs = &qp.p + qp.a.transpose() * &qp.a * cfg.beta;
        let rhs = qp.a.transpose() * (&lam + &qp.b * cfg.beta) - &qp.q;
        let x_alm = lhs.cholesky().unwrap().solve(&rhs);
        let lambda_alm = &lam - (&qp.a * &x_alm - &qp.b) * cfg.beta;
        for i in 0..qp.n() {
            assert!(close(next.x[i], x_alm[i], 1e-9 * (1.0 + x_alm[i].abs())));
        }
        for i in 0..qp.m() {
            assert!(close(next.lambda[i], lambda_alm[i], 1e-8 * (1.0 + lambda_alm[i].abs())));
        }
    }
}

#[test]
fn solve_oracles_to_tolerance() {
    let cfg = p1_config(0.8);
    for (problem, x_star) in [(oracle_p1(), 1.0), (oracle_p2(), 0.5)] {
        let res = solve(&problem, &cfg, PrimalDualPoint::origin(&problem), Scheme::IIdl, |_| {}).unwrap();
        assert_eq!(res.status, Status::Converged);
        assert!(res.traces.last().unwrap().aer < cfg.tol);
        assert!(close(res.final_point.x[0], x_star, 1e-5), "{} → {:?}", problem.name(), res.final_point);
    }
}

#[test]
fn primal_only_metric_stalls_on_p2() {
    let mut cfg = p1_config(0.8);
    cfg.stopping_rule = StoppingRule::AbsoluteStep;
    let p2 = oracle_p2();
    let res = solve(&p2, &cfg, PrimalDualPoint::origin(&p2), Scheme::IIdl, |_| {}).unwrap();
    assert_eq!(res.iterations, 1);
    assert_eq!(res.final_point.x, vec![0.0]);
}

#[test]
fn zero_budget_returns_start() {
    let mut cfg = p1_config(0.8);
    cfg.max_iter = 0;
    let p1 = oracle_p1();
    let w0 = PrimalDualPoint::new(vec![0.3], vec![0.2]);
    let res = solve(&p1, &cfg, w0.clone(), Scheme::IIdl, |_| {}).unwrap();
    assert_eq!(res.status, Status::MaxIterReached);
    assert_eq!(res.final_point, w0);
    assert!(res.traces.is_empty());
}

#[test]
fn predictor_multiplier_is_nonnegative() {
    let qp = QuadraticProgram::random_with_saddle(9, 10);
    let problem = qp.to_problem().unwrap();
    let cfg = SolverConfig::builder().tau(0.75).max_iter(300).build().resolve(&problem).unwrap();
    let exact = qp.exact_subsolver().unwrap();
    for scheme in [Scheme::IIdl, Scheme::IndefiniteAlm(&exact)] {
        let mut seen = 0;
        solve(&problem, &cfg, PrimalDualPoint::origin(&problem), scheme, |ev| {
            seen += 1;
            assert!(ev.predictor.unwrap().lambda_tilde.iter().all(|v| *v >= 0.0));
        })
        .unwrap();
        assert!(seen > 0);
    }
}

#[test]
fn divergence_is_reported() {
    // τ far below the proven range on a tight r makes the iteration blow up
    let qp = QuadraticProgram::random_with_saddle(2, 6);
    let problem = qp.to_problem().unwrap();
    let cfg = SolverConfig::builder().tau(0.05).margin(0.0).max_iter(100_000).build().resolve(&problem).unwrap();
    assert!(!cfg.warnings.is_empty());
    let res = solve(&problem, &cfg, PrimalDualPoint::origin(&problem), Scheme::IIdl, |_| {}).unwrap();
    assert_eq!(res.status, Status::NumericalFailure);
    assert!(res.final_point.is_finite());
}

#[test]
fn kkt_stopping_rule() {
    let mut cfg = p1_config(0.8);
    cfg.stopping_rule = StoppingRule::KktResidual;
    cfg.tol = 1e-9;
    let p2 = oracle_p2();
    let res = solve(&p2, &cfg, PrimalDualPoint::origin(&p2), Scheme::IIdl, |_| {}).unwrap();
    assert_eq!(res.status, Status::Converged);
    assert!(kkt_residuals(&p2, &res.final_point).unwrap().max() < 1e-9);
}
