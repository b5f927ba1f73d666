//! Exactly evaluable resolvents: proximal maps of simple functions and
//! Euclidean projections onto simple sets and cones.
//!
//! Every entry is exposed as a [`ResolventOperator`], so wrapping it in a
//! [`crate::operator::ResolventMap`] yields the point together with the
//! element `(u − point)/γ ∈ B(point)`.

mod block;
mod cone;

pub use block::{Block, BlockResolvent};
pub use cone::{Cone, ConeProduct};

use crate::error::{Error, Result};
use crate::operator::ResolventOperator;
use crate::vector::{dot, norm};
use nalgebra::{DMatrix, DVector};

pub type Matrix = DMatrix<f64>;

/// One catalog resolvent.
///
/// Indicator-type entries (box, cones, half-space, ball) are normal-cone
/// resolvents and therefore plain projections that ignore `γ`.
#[derive(Clone, Debug, PartialEq)]
pub enum ProxEntry {
    /// `B = 0`: the resolvent is the identity.
    Zero,
    /// `∂(w‖·‖₁)`
    L1 { weight: f64 },
    /// Normal cone of `{lo ≤ x ≤ hi}`; bounds may be infinite.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    NonnegOrthant,
    /// `{(x, t) : ‖x‖ ≤ t}` with the scalar part last.
    SecondOrderCone,
    /// The cone `{0}`.
    ZeroCone,
    /// All of ℝⁿ: the normal cone is `{0}`.
    FreeCone,
    /// Normal cone of `{x : ⟨a, x⟩ ≤ b}`.
    Halfspace { a: Vec<f64>, b: f64 },
    /// Gradient of `½xᵀQx + qᵀx` with `Q` symmetric PSD.
    Quadratic { q_mat: Matrix, q_vec: Vec<f64> },
    /// Normal cone of `{x : ‖x − center‖ ≤ radius}`.
    Ball { center: Vec<f64>, radius: f64 },
}

impl ProxEntry {
    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("l1 weight must be positive, got {weight}")));
        }
        Ok(ProxEntry::L1 { weight })
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_box(&lo, &hi)?;
        Ok(ProxEntry::Box { lo, hi })
    }

    pub fn halfspace(a: Vec<f64>, b: f64) -> Result<Self> {
        if a.is_empty() || norm(&a) == 0.0 || !b.is_finite() {
            return Err(Error::InvalidParameter(
                "half-space normal must be nonzero and offset finite".into(),
            ));
        }
        Ok(ProxEntry::Halfspace { a, b })
    }

    pub fn quadratic(q_mat: Matrix, q_vec: Vec<f64>) -> Result<Self> {
        let n = q_vec.len();
        if q_mat.nrows() != n || q_mat.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: q_mat.nrows(),
            });
        }
        let scale = 1.0 + q_mat.amax();
        if (&q_mat - q_mat.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidParameter("quadratic matrix is not symmetric".into()));
        }
        let sym = (&q_mat + q_mat.transpose()) * 0.5;
        if n > 0 && sym.clone().symmetric_eigen().eigenvalues.min() < -1e-10 * scale {
            return Err(Error::InvalidParameter("quadratic matrix is not PSD".into()));
        }
        Ok(ProxEntry::Quadratic { q_mat: sym, q_vec })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball radius must be ≥ 0, got {radius}")));
        }
        Ok(ProxEntry::Ball { center, radius })
    }

    /// Dimension imposed by the entry's parameters, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            ProxEntry::Box { lo, .. } => Some(lo.len()),
            ProxEntry::Halfspace { a, .. } => Some(a.len()),
            ProxEntry::Quadratic { q_vec, .. } => Some(q_vec.len()),
            ProxEntry::Ball { center, .. } => Some(center.len()),
            _ => None,
        }
    }

    /// True for normal-cone (projection) entries.
    pub fn is_indicator(&self) -> bool {
        !matches!(
            self,
            ProxEntry::Zero | ProxEntry::L1 { .. } | ProxEntry::Quadratic { .. }
        )
    }

    /// Value of the underlying convex function (`+∞` outside an indicator's set).
    /// `Zero` is represented by the constant function 0.
    pub fn value(&self, x: &[f64]) -> f64 {
        const TOL: f64 = 1e-12;
        let indicator = |inside: bool| if inside { 0.0 } else { f64::INFINITY };
        match self {
            ProxEntry::Zero | ProxEntry::FreeCone => 0.0,
            ProxEntry::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            ProxEntry::Box { lo, hi } => indicator(
                x.iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(v, (l, h))| *v >= l - TOL && *v <= h + TOL),
            ),
            ProxEntry::NonnegOrthant => indicator(x.iter().all(|v| *v >= -TOL)),
            ProxEntry::SecondOrderCone => {
                let (head, t) = x.split_at(x.len() - 1);
                indicator(norm(head) <= t[0] + TOL)
            }
            ProxEntry::ZeroCone => indicator(x.iter().all(|v| v.abs() <= TOL)),
            ProxEntry::Halfspace { a, b } => indicator(dot(a, x) <= b + TOL),
            ProxEntry::Quadratic { q_mat, q_vec } => {
                let xv = DVector::from_column_slice(x);
                0.5 * xv.dot(&(q_mat * &xv)) + dot(q_vec, x)
            }
            ProxEntry::Ball { center, radius } => {
                let d: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                indicator(d.sqrt() <= radius + TOL)
            }
        }
    }

    /// Writes `(I + γ∂h)⁻¹(z)` into `out`.
    pub fn prox_into(&self, gamma: f64, z: &[f64], out: &mut [f64]) -> Result<()> {
        if let Some(n) = self.fixed_dim() {
            if n != z.len() {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: z.len(),
                });
            }
        }
        match self {
            ProxEntry::Zero | ProxEntry::FreeCone => out.copy_from_slice(z),
            ProxEntry::L1 { weight } => out.copy_from_slice(&prox_l1(gamma, *weight, z)),
            ProxEntry::Box { lo, hi } => out.copy_from_slice(&project_box(lo, hi, z)?),
            ProxEntry::NonnegOrthant => {
                for (o, v) in out.iter_mut().zip(z) {
                    *o = v.max(0.0);
                }
            }
            ProxEntry::SecondOrderCone => out.copy_from_slice(&project_soc(z)?),
            ProxEntry::ZeroCone => out.fill(0.0),
            ProxEntry::Halfspace { a, b } => out.copy_from_slice(&project_halfspace(a, *b, z)),
            ProxEntry::Quadratic { q_mat, q_vec } => {
                out.copy_from_slice(&prox_quadratic(gamma, q_mat, q_vec, z)?)
            }
            ProxEntry::Ball { center, radius } => {
                out.copy_from_slice(&project_ball(center, *radius, z))
            }
        }
        Ok(())
    }

    pub fn prox(&self, gamma: f64, z: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; z.len()];
        self.prox_into(gamma, z, &mut out)?;
        Ok(out)
    }
}

impl ResolventOperator for ProxEntry {
    fn dim(&self) -> Option<usize> {
        self.fixed_dim()
    }

    fn resolve(&self, gamma: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.prox_into(gamma, u, out)
    }
}

/// Componentwise soft-thresholding at level `γw`.
pub fn prox_l1(gamma: f64, weight: f64, z: &[f64]) -> Vec<f64> {
    let thr = gamma * weight;
    z.iter()
        .map(|&v| v.signum() * (v.abs() - thr).max(0.0))
        .map(|v| if v == 0.0 { 0.0 } else { v })
        .collect()
}

fn check_box(lo: &[f64], hi: &[f64]) -> Result<()> {
    if lo.len() != hi.len() {
        return Err(Error::DimensionMismatch {
            expected: lo.len(),
            got: hi.len(),
        });
    }
    for (i, (l, h)) in lo.iter().zip(hi).enumerate() {
        if l.is_nan() || h.is_nan() || l > h || *l == f64::INFINITY || *h == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(format!(
                "box bounds invalid at coordinate {i}: lo = {l}, hi = {h}"
            )));
        }
    }
    Ok(())
}

/// Componentwise clamp of `z` to `[lo, hi]`; infinite bounds do not clamp.
pub fn project_box(lo: &[f64], hi: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    check_box(lo, hi)?;
    if z.len() != lo.len() {
        return Err(Error::DimensionMismatch {
            expected: lo.len(),
            got: z.len(),
        });
    }
    Ok(z.iter()
        .zip(lo.iter().zip(hi))
        .map(|(v, (l, h))| v.max(*l).min(*h))
        .collect())
}

/// Projection onto the second-order cone `{(x, t) : ‖x‖ ≤ t}`, `t` last.
pub fn project_soc(z: &[f64]) -> Result<Vec<f64>> {
    if z.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "second-order cone needs dimension ≥ 2, got {}",
            z.len()
        )));
    }
    let (head, t) = z.split_at(z.len() - 1);
    let t = t[0];
    let s = norm(head);
    if s <= t {
        return Ok(z.to_vec());
    }
    if s <= -t {
        return Ok(vec![0.0; z.len()]);
    }
    let alpha = 0.5 * (s + t);
    let mut out: Vec<f64> = head.iter().map(|v| alpha * v / s).collect();
    out.push(alpha);
    Ok(out)
}

/// Projection onto `{x : ⟨a, x⟩ ≤ b}`.
pub fn project_halfspace(a: &[f64], b: f64, z: &[f64]) -> Vec<f64> {
    let excess = dot(a, z) - b;
    if excess <= 0.0 {
        return z.to_vec();
    }
    let s = excess / dot(a, a);
    z.iter().zip(a).map(|(v, ai)| v - s * ai).collect()
}

/// Projection onto the closed ball of the given center and radius.
pub fn project_ball(center: &[f64], radius: f64, z: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = z.iter().zip(center).map(|(a, c)| a - c).collect();
    let dn = norm(&d);
    if dn <= radius {
        return z.to_vec();
    }
    center
        .iter()
        .zip(&d)
        .map(|(c, di)| c + radius * di / dn)
        .collect()
}

/// Solves `(I + γQ)x = z − γq`.
pub fn prox_quadratic(gamma: f64, q_mat: &Matrix, q_vec: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let n = z.len();
    if q_mat.nrows() != n || q_vec.len() != n {
        return Err(Error::DimensionMismatch {
            expected: q_mat.nrows(),
            got: n,
        });
    }
    let lhs = Matrix::identity(n, n) + q_mat * gamma;
    let rhs = DVector::from_iterator(n, z.iter().zip(q_vec).map(|(zi, qi)| zi - gamma * qi));
    let chol = lhs
        .cholesky()
        .ok_or_else(|| Error::Factorization("I + γQ is not positive definite".into()))?;
    let x = chol.solve(&rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Factorization("non-finite solution of I + γQ".into()));
    }
    Ok(x.as_slice().to_vec())
}
