//! Dense real vectors with finiteness enforced at construction.

use crate::error::{Error, Result};
use serde::Serialize;
use std::ops::Deref;

/// A finite, non-empty vector in ℝⁿ.
///
/// Construction through [`RealVector::new`] rejects NaN and ±∞ so the solvers
/// never have to re-check their state. Arithmetic between two finite vectors
/// is performed without re-validation; values leaving an operator are
/// re-validated by the operator wrappers in [`crate::operator`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(RealVector(entries))
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(entries.to_vec())
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "dimension must be at least 1");
        RealVector(vec![0.0; n])
    }

    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty());
        RealVector(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &RealVector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn sub(&self, other: &RealVector) -> RealVector {
        RealVector(zip_map(&self.0, &other.0, |a, b| a - b))
    }

    pub fn add(&self, other: &RealVector) -> RealVector {
        RealVector(zip_map(&self.0, &other.0, |a, b| a + b))
    }

    pub fn scale(&self, s: f64) -> RealVector {
        RealVector(self.0.iter().map(|a| s * a).collect())
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: f64, other: &RealVector) -> RealVector {
        RealVector(zip_map(&self.0, &other.0, |a, b| a + s * b))
    }

    pub fn distance(&self, other: &RealVector) -> f64 {
        norm(&zip_map(&self.0, &other.0, |a, b| a - b))
    }

    /// Splits into consecutive slices of the given sizes.
    pub fn split_blocks(&self, sizes: &[usize]) -> Result<Vec<&[f64]>> {
        let total: usize = sizes.iter().sum();
        if total != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: self.dim(),
            });
        }
        let mut out = Vec::with_capacity(sizes.len());
        let mut rest = self.as_slice();
        for &s in sizes {
            let (head, tail) = rest.split_at(s);
            out.push(head);
            rest = tail;
        }
        Ok(out)
    }
}

impl Deref for RealVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for RealVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        RealVector::new(v)
    }
}

fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "vector dimensions differ");
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm. Falls back to a rescaled sum when the squares overflow
/// or underflow, so entries near the ends of the f64 range are handled.
pub fn norm(x: &[f64]) -> f64 {
    let plain = x.iter().map(|v| v * v).sum::<f64>();
    if plain.is_finite() && plain > f64::MIN_POSITIVE {
        return plain.sqrt();
    }
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * x.iter().map(|v| (v / scale) * (v / scale)).sum::<f64>().sqrt()
}
