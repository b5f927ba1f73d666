//! Solvers for structured monotone inclusions `0 ∈ F(x) + B(x)` with
//! explicit residual certificates.
//!
//! `F` is a continuous monotone point operator evaluated through
//! [`PointMap`], `B` a maximal monotone operator whose resolvent is available
//! through [`ResolventMap`]. Every solver returns a [`Certificate`]: a point
//! `x` together with an explicit `v ∈ (F+B)(x)`, so the reported residual can
//! be checked independently of the solver.

pub mod adapters;
pub mod baselines;
pub mod certificate;
pub mod cli;
pub mod error;
pub mod operator;
pub mod oplib;
pub mod pde_general;
pub mod pde_strong;
pub mod problems;
pub mod trace;
pub mod vector;

pub use certificate::Certificate;
pub use error::{Error, Result};
pub use operator::{EvalCounts, PointMap, PointOperator, ResolventMap, ResolventOperator};
pub use pde_general::{solve_general, GeneralReport, GeneralSolverConfig};
pub use pde_strong::{solve_strong, StrongReport, StrongSolverConfig};
pub use trace::TraceRecord;
pub use vector::RealVector;
