//! An adaptive-switching first-order method for smooth nonlinear optimization
//! with nonlinear equality constraints.
//!
//! Each iteration either takes a tangential AdaGrad-norm step in the nullspace
//! of the constraint Jacobian or a damped Gauss-Newton step that reduces the
//! constraint violation; a single scalar switching test decides which. The
//! objective function is never evaluated by the loop, which makes the method
//! robust to gradient noise.
//!
//! Crate layout:
//!
//! - [`problems`] — the problem abstraction, built-in analytic instances and
//!   finite-difference derivative checks;
//! - [`kkt`] — rank-revealing QR of Jᵀ, nullspace projection, least-squares
//!   multipliers and Gauss-Newton normal directions;
//! - [`solver`] — the main loop, switching test and stopping rules;
//! - [`diagnostics`] — history capture, invariant audits, CSV/JSON export;
//! - [`noise`] — relative Gaussian gradient noise and the reliability study.

// Dense numerical code: plain index loops mirror the matrix formulas, and
// negated comparisons like `!(x > 0.0)` deliberately treat NaN as a failure.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
mod error;
pub mod kkt;
pub mod linalg;
pub mod noise;
pub mod problems;
pub mod solver;

pub use diagnostics::{AuditCheck, AuditReport, IterationRecord, RunReport};
pub use error::Error;
pub use kkt::QrFactors;
pub use linalg::Matrix;
pub use noise::{NoiseSpec, StudyCell, StudySummary};
pub use problems::{DerivativeReport, ProblemInstance};
pub use solver::{SolverConfig, SolverState, StepType, TerminationKind, TerminationStatus};
