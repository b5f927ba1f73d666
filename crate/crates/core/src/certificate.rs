//! Explicit residual certificates.

use crate::vector::RealVector;
use serde::Serialize;

/// A point `x` together with an explicit `v ∈ (F+B)(x)`.
///
/// `v` is assembled as `F(x) + b`, where `b` is the element returned by the
/// resolvent evaluation that produced `x`, so membership holds by
/// construction and `‖v‖` upper-bounds the residual of `F+B` at `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub x: RealVector,
    pub v: RealVector,
    pub residual: f64,
}

impl Certificate {
    /// Builds `v = F(x) + element`.
    pub fn from_resolvent(x: RealVector, f_x: &RealVector, element: &RealVector) -> Self {
        Self::from_parts(x, f_x.add(element))
    }

    pub fn from_parts(x: RealVector, v: RealVector) -> Self {
        let residual = v.norm();
        Certificate { x, v, residual }
    }

    pub fn is_within(&self, eps: f64) -> bool {
        self.residual <= eps
    }
}
