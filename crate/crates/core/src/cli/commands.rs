use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde_json::json;

use super::archive::{fmt_f64, write_checks_csv, write_json, write_trace_csv};
use super::config::{ExperimentConfig, ObjectiveSpec, PottsSection, SvmSection, SweepTarget, SyntheticSpec};
use super::{status_code, EXIT_CHECKS_FAILED, EXIT_CONFIG, EXIT_OK};
use crate::apps::io::{self, GrayImage, Volume};
use crate::apps::potts::{self, label_accuracy, Grid, PottsInstance, SyntheticImage};
use crate::apps::svm::{self, SvmDataset};
use crate::certify::suite::{run_suite, SuiteOptions};
use crate::certify::{certify_run, reference_solution};
use crate::error::{Error, Result};
use crate::operators::{
    estimate_spectral_radius, DenseOperator, L1Norm, L1Quadratic, ProjectionSet, ProxFunction, Quadratic, Restricted,
    DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_TOL,
};
use crate::problem::{kkt_residuals, PrimalDualPoint, ProblemSpec, ProximalScalar, SolveResult, StoppingRule};
use crate::solvers::{solve, ProxGradientSubsolver, QuadraticSubsolver, Scheme, SchemeKind, Subsolver};

pub struct Context {
    pub out: PathBuf,
    pub quiet: bool,
    pub seed_override: Option<u64>,
}

impl Context {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn restrict<F: ProxFunction + 'static>(f: F, set: &ProjectionSet) -> Arc<dyn ProxFunction> {
    if set.is_whole() {
        Arc::new(f)
    } else {
        Arc::new(Restricted { inner: f, set: set.clone() })
    }
}

/// A user QP together with the exact indefinite-ALM subsolver when one applies.
struct LoadedQp {
    problem: ProblemSpec,
    exact: Option<QuadraticSubsolver>,
    w0: PrimalDualPoint,
}

fn load_qp(cfg: &ExperimentConfig) -> Result<LoadedQp> {
    let qp = cfg
        .qp
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs a `qp` section".into()))?;
    let a = io::read_matrix_csv(&qp.a)?;
    let b = io::read_vector_csv(&qp.b)?;
    let mut exact = None;
    let theta = match &qp.objective {
        ObjectiveSpec::Quadratic { p, q } => {
            let p = io::read_matrix_csv(p)?;
            let q = q.as_ref().map(io::read_vector_csv).transpose()?;
            if qp.domain.is_whole() && p.nrows() == a.ncols() {
                let q = q.clone().unwrap_or_else(|| DVector::zeros(p.nrows()));
                exact = Some(QuadraticSubsolver::new(p.clone(), q, &a)?);
            }
            restrict(Quadratic::new(p, q)?, &qp.domain)
        }
        ObjectiveSpec::L1 { weight } => {
            if !(*weight > 0.0) {
                return Err(Error::param("weight", "must be positive"));
            }
            restrict(L1Norm { weight: *weight }, &qp.domain)
        }
        ObjectiveSpec::L1Quadratic { weight, diag } => restrict(L1Quadratic::new(*weight, diag.clone())?, &qp.domain),
    };
    let problem = ProblemSpec::new(theta, qp.domain.clone(), Arc::new(DenseOperator::new(a)), b.as_slice().to_vec())?
        .with_name("qp");
    let origin = PrimalDualPoint::origin(&problem);
    let w0 = PrimalDualPoint::new(
        qp.x0.clone().unwrap_or(origin.x),
        qp.lambda0.clone().unwrap_or(origin.lambda),
    );
    problem.check_point(&w0)?;
    Ok(LoadedQp { problem, exact, w0 })
}

fn pick_scheme<'a>(kind: SchemeKind, exact: Option<&'a QuadraticSubsolver>) -> Scheme<'a> {
    match kind {
        SchemeKind::Iidl => Scheme::IIdl,
        SchemeKind::ClassicIneq => Scheme::ClassicIneq,
        SchemeKind::EqualityIdl => Scheme::EqualityIdl,
        SchemeKind::IndefiniteAlm => Scheme::IndefiniteAlm(match exact {
            Some(s) => s as &dyn Subsolver,
            None => &ProxGradientSubsolver,
        }),
    }
}

pub fn solve_qp(cfg: &ExperimentConfig, ctx: &Context) -> Result<i32> {
    let start = Instant::now();
    let loaded = load_qp(cfg)?;
    let problem = &loaded.problem;
    let config = cfg.solver.resolve(problem)?;
    let scheme = pick_scheme(cfg.scheme, loaded.exact.as_ref());

    let (result, checks) = if cfg.certify {
        let w_star = match reference_solution(problem, &config, loaded.w0.clone()) {
            Ok(w) => Some(w),
            Err(e) => {
                log::warn!("contraction checks skipped: {e}");
                None
            }
        };
        let run = certify_run(problem, &config, scheme, loaded.w0.clone(), w_star)?;
        (run.result, Some(run.certifier.reports))
    } else {
        (solve(problem, &config, loaded.w0.clone(), scheme, |_| {})?, None)
    };

    fs_prepare(&ctx.out)?;
    write_trace_csv(ctx.out.join("trace.csv"), &result.traces)?;
    let mut code = status_code(result.status);
    let mut failed = 0;
    if let Some(reports) = &checks {
        write_checks_csv(ctx.out.join("checks.csv"), [("qp", reports.as_slice())])?;
        failed = reports.iter().filter(|r| !r.pass).count();
        if failed > 0 {
            code = EXIT_CHECKS_FAILED;
        }
    }
    let kkt = kkt_residuals(problem, &result.final_point)?;
    write_json(
        ctx.out.join("summary.json"),
        &json!({
            "command": "solve-qp",
            "scheme": cfg.scheme,
            "status": result.status,
            "iterations": result.iterations,
            "final_aer": result.traces.last().map(|t| t.aer),
            "kkt": kkt,
            "x": result.final_point.x,
            "lambda": result.final_point.lambda,
            "failed_checks": checks.as_ref().map(|_| failed),
            "warnings": result.warnings,
            "wall_time_ms": ms(start),
            "config": cfg,
        }),
    )?;
    ctx.say(format!(
        "solve-qp: {:?} after {} iterations, max KKT residual {:.3e}",
        result.status,
        result.iterations,
        kkt.max()
    ));
    Ok(code)
}

fn fs_prepare(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn svm_data(section: &SvmSection, seed: u64) -> Result<(SvmDataset, bool)> {
    match &section.data {
        Some(path) => Ok((io::read_svm_csv(path)?, false)),
        None => {
            let g = &section.generator;
            Ok((svm::generate_gaussian_dataset(g.n_per_class, g.dim, g.separation, seed)?, true))
        }
    }
}

fn svm_config(cfg: &ExperimentConfig, section: &SvmSection, problem: &ProblemSpec, tau: f64, tol: f64) -> Result<crate::problem::ResolvedConfig> {
    let rho = estimate_spectral_radius(problem.operator(), DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER, cfg.solver.power_seed)?.rho;
    let mut sc = cfg.solver.clone();
    sc.beta = section.beta;
    sc.tau = tau;
    sc.tol = tol;
    sc.rho = Some(rho);
    sc.r = ProximalScalar::Value(section.beta * rho + section.r_offset);
    sc.stopping_rule = StoppingRule::AbsoluteStep;
    sc.resolve(problem)
}

pub fn svm(cfg: &ExperimentConfig, ctx: &Context) -> Result<i32> {
    let start = Instant::now();
    let section = cfg.svm.clone().unwrap_or_default();
    let (data, generated) = svm_data(&section, cfg.seed)?;
    let problem = svm::build_svm_problem(&data)?;
    let config = svm_config(cfg, &section, &problem, cfg.solver.tau, cfg.solver.tol)?;
    let trained = svm::train_svm(&data, &config, cfg.scheme)?;

    fs_prepare(&ctx.out)?;
    write_trace_csv(ctx.out.join("trace.csv"), &trained.result.traces)?;
    write_json(ctx.out.join("model.json"), &trained.model)?;
    if generated {
        io::write_svm_csv(ctx.out.join("dataset.csv"), &data)?;
    }
    write_json(
        ctx.out.join("summary.json"),
        &json!({
            "command": "svm",
            "scheme": cfg.scheme,
            "status": trained.result.status,
            "iterations": trained.result.iterations,
            "final_aer": trained.result.traces.last().map(|t| t.aer),
            "points": data.len(),
            "dim": data.dim(),
            "beta": config.beta,
            "r": config.r,
            "tau": config.tau,
            "worst_margin_violation": trained.model.worst_violation(&data),
            "warnings": trained.result.warnings,
            "wall_time_ms": ms(start),
            "config": cfg,
        }),
    )?;
    ctx.say(format!(
        "svm: {:?} after {} iterations, margin {:.6}",
        trained.result.status, trained.result.iterations, trained.model.margin
    ));
    Ok(status_code(trained.result.status))
}

/// The Potts instance plus ground truth for synthetic inputs.
struct LoadedImage {
    instance: PottsInstance,
    truth: Option<Vec<usize>>,
}

fn load_potts(section: &PottsSection, seed: u64) -> Result<LoadedImage> {
    let (grid, image, truth, m) = match &section.image {
        Some(path) => {
            let is_pgm = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
            let (grid, image) = if is_pgm {
                let img = io::read_pgm(path)?;
                (Grid::planar(img.width, img.height)?, img.to_unit())
            } else {
                let vol = io::read_raw3d(path)?;
                let [nx, ny, nz] = vol.dims;
                (Grid::volume(nx, ny, nz)?, vol.data.iter().map(|&v| f64::from(v)).collect())
            };
            if image.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidData(format!(
                    "{}: intensities must lie in [0, 1]",
                    path.display()
                )));
            }
            (grid, image, None, section.labels)
        }
        None => {
            let syn = match section.synthetic {
                SyntheticSpec::TwoRegion { width, height, noise } => SyntheticImage::two_region(width, height, noise, seed)?,
                SyntheticSpec::FourRegion { width, height, noise } => SyntheticImage::four_region(width, height, noise, seed)?,
                SyntheticSpec::NestedVolume { size, labels, noise } => SyntheticImage::nested_volume(size, labels, noise, seed)?,
            };
            let m = syn.m;
            (syn.grid, syn.image, Some(syn.truth), m)
        }
    };
    let instance = match &section.label_values {
        Some(values) => PottsInstance::with_label_values(grid, image, section.alpha, values.clone())?,
        None => PottsInstance::new(grid, image, m, section.alpha)?,
    };
    Ok(LoadedImage { instance, truth })
}

fn potts_solve(cfg: &ExperimentConfig, inst: &PottsInstance, tau: f64, tol: f64) -> Result<potts::SegmentationResult> {
    let problem = potts::build_potts_problem(inst)?;
    let config = potts::potts_config(inst, cfg.solver.beta, tau, tol, cfg.solver.max_iter).resolve(&problem)?;
    potts::solve_potts(inst, &config)
}

fn write_label_map(dir: &Path, inst: &PottsInstance, labels: &[usize]) -> Result<()> {
    let dims = inst.grid().dims();
    if let [nx, ny] = *dims {
        let maxval = inst.labels() as u16;
        let img = GrayImage::new(nx, ny, maxval, labels.iter().map(|&l| l as u16).collect())?;
        io::write_pgm(dir.join("labels.pgm"), &img, false)
    } else {
        let vol = Volume {
            dims: [dims[0], dims[1], dims[2]],
            data: labels.iter().map(|&l| l as f32).collect(),
        };
        io::write_raw3d(dir.join("labels.raw3d"), &vol)
    }
}

pub fn potts(cfg: &ExperimentConfig, ctx: &Context) -> Result<i32> {
    let start = Instant::now();
    let section = cfg.potts.clone().unwrap_or_default();
    let loaded = load_potts(&section, cfg.seed)?;
    let inst = &loaded.instance;
    let res = potts_solve(cfg, inst, cfg.solver.tau, cfg.solver.tol)?;
    let accuracy = loaded.truth.as_ref().map(|t| label_accuracy(&res.label_map, t));

    fs_prepare(&ctx.out)?;
    write_trace_csv(ctx.out.join("trace.csv"), &res.traces)?;
    write_label_map(&ctx.out, inst, &res.label_map)?;
    write_json(
        ctx.out.join("summary.json"),
        &json!({
            "command": "potts",
            "status": res.status,
            "iterations": res.iterations,
            "final_aer": res.final_aer,
            "grid": inst.grid().dims(),
            "labels": inst.labels(),
            "alpha": inst.alpha(),
            "accuracy": accuracy,
            "wall_time_ms": ms(start),
            "config": cfg,
        }),
    )?;
    ctx.say(format!(
        "potts: {:?} after {} iterations{}",
        res.status,
        res.iterations,
        accuracy.map(|a| format!(", accuracy {:.4}", a)).unwrap_or_default()
    ));
    Ok(status_code(res.status))
}

pub fn certify(cfg: &ExperimentConfig, ctx: &Context) -> Result<i32> {
    let start = Instant::now();
    fs_prepare(&ctx.out)?;
    if cfg.qp.is_some() {
        let loaded = load_qp(cfg)?;
        let config = cfg.solver.resolve(&loaded.problem)?;
        let w_star = reference_solution(&loaded.problem, &config, loaded.w0.clone())?;
        let scheme = pick_scheme(cfg.scheme, loaded.exact.as_ref());
        let run = certify_run(&loaded.problem, &config, scheme, loaded.w0.clone(), Some(w_star))?;
        let reports = &run.certifier.reports;
        let failed: Vec<_> = run.certifier.failures().cloned().collect();
        write_checks_csv(ctx.out.join("checks.csv"), [("qp", reports.as_slice())])?;
        write_checks_csv(ctx.out.join("failures.csv"), [("qp", failed.as_slice())])?;
        write_json(
            ctx.out.join("summary.json"),
            &json!({
                "command": "certify",
                "status": run.result.status,
                "iterations": run.result.iterations,
                "checks": reports.len(),
                "failed": failed.len(),
                "spectrum": run.spectrum,
                "wall_time_ms": ms(start),
                "config": cfg,
            }),
        )?;
        ctx.say(format!("certify: {} checks, {} failed", reports.len(), failed.len()));
        return Ok(if failed.is_empty() { EXIT_OK } else { EXIT_CHECKS_FAILED });
    }

    let mut opts: SuiteOptions = cfg.suite.clone().unwrap_or_default();
    if let Some(seed) = ctx.seed_override {
        opts.seed = seed;
    }
    let report = run_suite(&opts)?;
    write_checks_csv(
        ctx.out.join("checks.csv"),
        report.cases.iter().map(|c| (c.name.as_str(), c.reports.as_slice())),
    )?;
    let failures: Vec<(String, Vec<_>)> = report
        .cases
        .iter()
        .map(|c| (c.name.clone(), c.failures().cloned().collect()))
        .collect();
    write_checks_csv(
        ctx.out.join("failures.csv"),
        failures.iter().map(|(n, f)| (n.as_str(), f.as_slice())),
    )?;
    let cases: Vec<_> = report
        .cases
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "status": c.status,
                "iterations": c.iterations,
                "final_distance": c.final_distance,
                "checks": c.reports.len(),
                "failed": c.failures().count(),
                "spectrum": c.spectrum,
            })
        })
        .collect();
    write_json(
        ctx.out.join("summary.json"),
        &json!({
            "command": "certify",
            "options": opts,
            "passed": report.all_passed(),
            "checks": report.check_count(),
            "cases": cases,
            "wall_time_ms": ms(start),
        }),
    )?;
    let failed: usize = failures.iter().map(|(_, f)| f.len()).sum();
    ctx.say(format!(
        "certify: {} cases, {} checks, {} failed",
        report.cases.len(),
        report.check_count(),
        failed
    ));
    for (name, f) in failures.iter().filter(|(_, f)| !f.is_empty()) {
        let first = &f[0];
        ctx.say(format!(
            "  {name}: {} failures, first {} at iteration {} (slack {:.3e})",
            f.len(),
            first.name,
            first.iteration,
            first.slack
        ));
    }
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_CHECKS_FAILED })
}

/// One τ of a sweep.
struct SweepRow {
    tau: f64,
    outcome: Result<(usize, f64, String, Vec<crate::problem::IterationTrace>)>,
    wall_ms: f64,
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("INEQALM_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("INEQALM_THREADS must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn summarize(res: &SolveResult) -> (usize, f64, String, Vec<crate::problem::IterationTrace>) {
    (
        res.iterations,
        res.traces.last().map_or(f64::NAN, |t| t.aer),
        format!("{:?}", res.status),
        res.traces.clone(),
    )
}

pub fn sweep_tau(cfg: &ExperimentConfig, ctx: &Context) -> Result<i32> {
    let sweep = cfg.sweep.clone().unwrap_or_default();
    if sweep.taus.is_empty() {
        return Err(Error::Config("sweep.taus is empty".into()));
    }
    let tols = if sweep.tols.is_empty() { vec![cfg.solver.tol] } else { sweep.tols.clone() };
    let pool = thread_pool()?;
    fs_prepare(&ctx.out)?;

    enum Prepared {
        Svm(SvmDataset, ProblemSpec, SvmSection),
        Potts(PottsInstance),
    }
    let prepared = match sweep.target {
        SweepTarget::Svm => {
            let section = cfg.svm.clone().unwrap_or_default();
            let (data, _) = svm_data(&section, cfg.seed)?;
            let problem = svm::build_svm_problem(&data)?;
            Prepared::Svm(data, problem, section)
        }
        SweepTarget::Potts => Prepared::Potts(load_potts(&cfg.potts.clone().unwrap_or_default(), cfg.seed)?.instance),
    };

    let mut all_complete = true;
    for &tol in &tols {
        let rows: Vec<SweepRow> = pool.install(|| {
            sweep
                .taus
                .par_iter()
                .map(|&tau| {
                    let start = Instant::now();
                    let outcome = match &prepared {
                        Prepared::Svm(data, problem, section) => svm_config(cfg, section, problem, tau, tol)
                            .and_then(|c| svm::train_svm(data, &c, cfg.scheme))
                            .map(|t| summarize(&t.result)),
                        Prepared::Potts(inst) => potts_solve(cfg, inst, tau, tol).map(|r| {
                            (r.iterations, r.final_aer, format!("{:?}", r.status), r.traces)
                        }),
                    };
                    SweepRow {
                        tau,
                        outcome,
                        wall_ms: ms(start),
                    }
                })
                .collect()
        });

        let tol_dir = ctx.out.join(format!("tol_{tol:e}"));
        let summary = ctx.out.join(format!("summary_tol_{tol:e}.csv"));
        let file = std::fs::File::create(&summary).map_err(|e| Error::io(&summary, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["tau", "iterations", "final_aer", "wall_time_ms", "status"])?;
        ctx.say(format!("tol {tol:e}"));
        for row in &rows {
            let wall = if sweep.record_timings { format!("{:.3}", row.wall_ms) } else { String::new() };
            match &row.outcome {
                Ok((iterations, aer, status, traces)) => {
                    write_trace_csv(tol_dir.join(format!("tau_{}", row.tau)).join("trace.csv"), traces)?;
                    w.write_record([row.tau.to_string(), iterations.to_string(), fmt_f64(*aer), wall, status.clone()])?;
                    ctx.say(format!("  tau {:<6} iterations {:>8}  {status}", row.tau, iterations));
                }
                Err(e) => {
                    all_complete = false;
                    w.write_record([row.tau.to_string(), String::new(), String::new(), wall, format!("error: {e}")])?;
                    ctx.say(format!("  tau {:<6} error: {e}", row.tau));
                }
            }
        }
        w.flush().map_err(|e| Error::io(&summary, e))?;
    }
    Ok(if all_complete { EXIT_OK } else { EXIT_CONFIG })
}
