//! Sparse convex quadratic programming with an interior-point proximal
//! method of multipliers.
//!
//! Problems have the form
//!
//! ```text
//! minimize    ½ xᵀPx + cᵀx
//! subject to  Ax = b
//!             Gx ≤ h
//!             l ≤ x ≤ u      (optional)
//! ```
//!
//! with `P` symmetric positive semidefinite, stored as its upper triangle.
//! The equality rows need not be linearly independent.
//!
//! ```
//! use ippmm::{CscMatrix, QpProblem, Settings, SolveStatus, SolverInstance};
//!
//! // min ½‖x‖² s.t. x₀ + x₁ = 1
//! let prob = QpProblem::unconstrained(CscMatrix::identity(2), vec![0.0; 2])
//!     .with_equalities(CscMatrix::from_dense(1, 2, &[1.0, 1.0]), vec![1.0]);
//! let mut solver = SolverInstance::setup(&prob, &Settings::default()).unwrap();
//! let res = solver.solve();
//! assert_eq!(res.status, SolveStatus::Solved);
//! assert!((res.iterate.x[0] - 0.5).abs() < 1e-8);
//! ```
//!
//! Modules:
//!
//! * [`sparse`]: CSC storage, AMD ordering, pivot-free `LDLᵀ`.
//! * [`precond`]: Ruiz equilibration.
//! * [`solver`]: the iteration, settings and the setup/update/solve lifecycle.
//! * [`qps`]: reader and writer for QPS files.

pub mod error;
pub mod precond;
pub mod problem;
pub mod qps;
pub mod solver;
pub mod sparse;

pub use error::StructureError;
pub use precond::{ruiz_equilibrate, unscale_solution, Equilibration};
pub use problem::{Iterate, QpProblem};
pub use qps::{parse_qps, write_qps, QpsError, QpsFile};
pub use solver::{
    check_termination, IterationView, ProblemUpdate, Settings, SolveResult, SolveStatus,
    SolverInstance, TerminationInfo,
};
pub use sparse::CscMatrix;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/lifecycle.md")]
    mod lifecycle {}
    #[doc = include_str!("../../../book/src/algorithm.md")]
    mod algorithm {}
    #[doc = include_str!("../../../book/src/linear-algebra.md")]
    mod linear_algebra {}
    #[doc = include_str!("../../../book/src/equilibration.md")]
    mod equilibration {}
    #[doc = include_str!("../../../book/src/qps.md")]
    mod qps {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
}
