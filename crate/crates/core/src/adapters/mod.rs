//! Reductions of conic programs, conic constrained saddle-point problems and
//! variational inequalities to `0 ∈ (F+B)(w)`, plus ε-KKT extraction from a
//! residual certificate.

mod conic;
mod kkt;
mod oracles;
mod saddle;

pub use conic::{conic_to_mi, ConicProgram};
pub use kkt::{extract_kkt, KktLayout, KktReport};
pub use oracles::{AffineMap, ConstraintMap, QuadraticFunction, QuadraticSaddle, SaddleFunction, SmoothFunction};
pub use saddle::{saddle_to_mi, SaddleProblem};

use crate::error::{Error, Result};
use crate::oplib::{BlockResolvent, ProxEntry};
use crate::operator::{PointMap, ResolventMap};

/// An inclusion ready for the solvers, with the block layout of its variable.
#[derive(Clone, Debug)]
pub struct MiProblem {
    pub f: PointMap,
    pub b: ResolventMap,
    pub resolvent: BlockResolvent,
    pub layout: KktLayout,
}

/// A variational inequality `g(y) − g(x) + ⟨y − x, F(x)⟩ ≥ 0 ∀y`.
#[derive(Clone, Debug)]
pub struct VIProblem {
    pub f: PointMap,
    pub g: ProxEntry,
}

/// Pairs `F` with the proximal resolvent of `g`: `0 ∈ (F + ∂g)(x)`.
pub fn vi_to_mi(prob: &VIProblem) -> Result<(PointMap, ResolventMap)> {
    if let Some(n) = prob.g.fixed_dim() {
        if n != prob.f.dim() {
            return Err(Error::DimensionMismatch {
                expected: prob.f.dim(),
                got: n,
            });
        }
    }
    Ok((prob.f.clone(), ResolventMap::new(prob.g.clone())))
}
