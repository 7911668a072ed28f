//! The built-in certification suite: the two scalar oracles and seeded
//! random QPs, each with a known saddle point.

use serde::{Deserialize, Serialize};

use super::{certify_run, CheckReport, SpectrumReport};
use crate::apps::qp::{oracle_p1, oracle_p2, p1_saddle, p2_saddle, QuadraticProgram};
use crate::error::{Error, Result};
use crate::problem::{PrimalDualPoint, ProblemSpec, ResolvedConfig, SolverConfig, Status};
use crate::solvers::{ProxGradientSubsolver, QuadraticSubsolver, Scheme, SchemeKind, Subsolver};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    pub scheme: SchemeKind,
    pub beta: f64,
    pub tau: f64,
    pub delta: f64,
    /// `r` for the scalar oracles; random QPs use the automatic choice.
    pub oracle_r: f64,
    pub random_cases: usize,
    pub seed: u64,
    pub max_dim: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::Iidl,
            beta: 1.0,
            tau: 0.8,
            delta: 0.3,
            oracle_r: 1.1,
            random_cases: 20,
            seed: 0,
            max_dim: 10,
            tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

pub struct SuiteCase {
    pub name: String,
    pub problem: ProblemSpec,
    pub config: ResolvedConfig,
    pub w_star: PrimalDualPoint,
    subsolver: Option<QuadraticSubsolver>,
}

impl SuiteCase {
    pub fn scheme(&self, kind: SchemeKind) -> Result<Scheme<'_>> {
        match kind {
            SchemeKind::Iidl => Ok(Scheme::IIdl),
            SchemeKind::IndefiniteAlm => Ok(Scheme::IndefiniteAlm(match &self.subsolver {
                Some(s) => s as &dyn Subsolver,
                None => &ProxGradientSubsolver,
            })),
            other => Err(Error::param("scheme", format!("{other:?} cannot be certified"))),
        }
    }
}

pub fn suite_cases(opts: &SuiteOptions) -> Result<Vec<SuiteCase>> {
    let base = SolverConfig::builder()
        .beta(opts.beta)
        .tau(opts.tau)
        .delta(opts.delta)
        .tol(opts.tol)
        .max_iter(opts.max_iter)
        .build();
    let mut cases = Vec::new();
    for (problem, w_star) in [(oracle_p1(), p1_saddle()), (oracle_p2(), p2_saddle())] {
        let mut cfg = base.clone();
        cfg.r = crate::problem::ProximalScalar::Value(opts.oracle_r);
        cases.push(SuiteCase {
            name: problem.name().to_string(),
            config: cfg.resolve(&problem)?,
            problem,
            w_star,
            subsolver: None,
        });
    }
    for i in 0..opts.random_cases {
        let seed = opts.seed + i as u64;
        let qp = QuadraticProgram::random_with_saddle(seed, opts.max_dim);
        let problem = qp.to_problem()?.with_name(format!("qp-{seed}"));
        cases.push(SuiteCase {
            name: problem.name().to_string(),
            config: base.resolve(&problem)?,
            w_star: qp.saddle.clone().expect("generated around a saddle point"),
            subsolver: Some(qp.exact_subsolver()?),
            problem,
        });
    }
    Ok(cases)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub name: String,
    pub status: Status,
    pub iterations: usize,
    pub final_distance: f64,
    pub spectrum: SpectrumReport,
    pub reports: Vec<CheckReport>,
}

impl CaseOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.reports.iter().filter(|r| !r.pass)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub options: SuiteOptions,
    pub cases: Vec<CaseOutcome>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.cases.iter().all(CaseOutcome::passed)
    }

    pub fn check_count(&self) -> usize {
        self.cases.iter().map(|c| c.reports.len()).sum()
    }
}

pub fn run_case(case: &SuiteCase, kind: SchemeKind) -> Result<CaseOutcome> {
    let run = certify_run(
        &case.problem,
        &case.config,
        case.scheme(kind)?,
        PrimalDualPoint::origin(&case.problem),
        Some(case.w_star.clone()),
    )?;
    Ok(CaseOutcome {
        name: case.name.clone(),
        status: run.result.status,
        iterations: run.result.iterations,
        final_distance: run.result.final_point.distance(&case.w_star),
        spectrum: run.spectrum,
        reports: run.certifier.reports,
    })
}

pub fn run_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let cases = suite_cases(opts)?
        .iter()
        .map(|c| run_case(c, opts.scheme))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        options: opts.clone(),
        cases,
    })
}
