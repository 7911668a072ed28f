//! Augmented Lagrangian solvers for convex programs with linear inequality
//! constraints,
//!
//! ```text
//! min θ(x)   s.t.   A x ≥ b,  x ∈ X.
//! ```
//!
//! The central scheme is the inequality-constrained indefinite linearized
//! ALM ([`solvers::Scheme::IIdl`]): a projected multiplier prediction
//! followed by one proximity-operator evaluation of θ and an unprojected
//! multiplier correction. The proximal weight `τ r` may be taken with
//! `τ ∈ [0.75, 1]`, so the implied proximal matrix `τ r I − β AᵀA` is allowed to be
//! indefinite.
//!
//! Besides the solver the crate ships
//!
//! - three companion schemes (classic inequality ALM with an inner
//!   accelerated proximal-gradient solve, the equality-constrained
//!   indefinite linearized ALM, and the indefinite ALM that keeps the
//!   `‖A(x − xᵏ)‖²` coupling),
//! - a dense certification harness ([`certify`]) that evaluates the
//!   prediction-correction matrices and checks the convergence identities and
//!   inequalities at every iteration of a run,
//! - adapters for a hard-margin linear SVM and the continuous max-flow Potts
//!   segmentation model ([`apps`]),
//! - a JSON-configured command line front end ([`cli`]).
//!
//! # Example
//!
//! ```
//! use ineqalm::apps::qp::oracle_p1;
//! use ineqalm::problem::{PrimalDualPoint, SolverConfig};
//! use ineqalm::solvers::{solve, Scheme, Status};
//!
//! // min ½x²  s.t.  x ≥ 1
//! let problem = oracle_p1();
//! let config = SolverConfig::builder().beta(1.0).tau(0.8).r(1.1).tol(1e-6).build();
//! let resolved = config.resolve(&problem).unwrap();
//! let w0 = PrimalDualPoint::origin(&problem);
//! let result = solve(&problem, &resolved, w0, Scheme::IIdl, |_| {}).unwrap();
//! assert_eq!(result.status, Status::Converged);
//! assert!((result.final_point.x[0] - 1.0).abs() < 1e-5);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apps;
pub mod certify;
pub mod cli;
mod error;
pub mod operators;
pub mod problem;
pub mod solvers;

pub use error::{Error, Result};
