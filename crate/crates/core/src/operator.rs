//! Operator handles with evaluation accounting.
//!
//! [`PointMap`] wraps the single-valued operator `F` and [`ResolventMap`] wraps
//! the resolvent `(I + γB)⁻¹` of the maximal monotone operator `B`. Both are
//! cheap to clone; clones share the same evaluation counter so a solver and its
//! caller observe the same totals. Counters are atomic, so independent solves
//! may run on separate threads.

use crate::error::{Error, Result};
use crate::vector::{dot, RealVector};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// A point-valued operator `F: dom F → ℝⁿ`.
pub trait PointOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `F(x)` into `out`. Both slices have length [`Self::dim`].
    fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    fn contains(&self, _x: &[f64]) -> bool {
        true
    }
}

/// The resolvent `(I + γB)⁻¹` of a maximal monotone operator `B`.
pub trait ResolventOperator: Send + Sync {
    /// Fixed ambient dimension, or `None` if the operator acts on any ℝⁿ.
    fn dim(&self) -> Option<usize>;

    /// Writes `(I + γB)⁻¹(u)` into `out`.
    fn resolve(&self, gamma: f64, u: &[f64], out: &mut [f64]) -> Result<()>;
}

struct FnPointOperator<E, D> {
    dim: usize,
    eval: E,
    domain: D,
}

impl<E, D> PointOperator for FnPointOperator<E, D>
where
    E: Fn(&[f64], &mut [f64]) + Send + Sync,
    D: Fn(&[f64]) -> bool + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.eval)(x, out);
        Ok(())
    }

    fn contains(&self, x: &[f64]) -> bool {
        (self.domain)(x)
    }
}

/// Counted evaluation handle for `F`.
#[derive(Clone)]
pub struct PointMap {
    op: Arc<dyn PointOperator>,
    count: Arc<AtomicU64>,
}

impl fmt::Debug for PointMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointMap")
            .field("dim", &self.dim())
            .field("eval_count", &self.eval_count())
            .finish()
    }
}

impl PointMap {
    pub fn new(op: impl PointOperator + 'static) -> Self {
        Self::from_arc(Arc::new(op))
    }

    pub fn from_arc(op: Arc<dyn PointOperator>) -> Self {
        PointMap {
            op,
            count: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Operator defined on all of ℝⁿ by a closure writing `F(x)` into its second argument.
    pub fn from_fn<E>(dim: usize, eval: E) -> Self
    where
        E: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::new(FnPointOperator {
            dim,
            eval,
            domain: |_: &[f64]| true,
        })
    }

    pub fn from_fn_with_domain<E, D>(dim: usize, eval: E, domain: D) -> Self
    where
        E: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        D: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        Self::new(FnPointOperator { dim, eval, domain })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.op.contains(x)
    }

    /// Evaluates `F(x)`. Every call counts as one evaluation, including calls
    /// that fail the domain or finiteness checks.
    pub fn eval(&self, x: &RealVector) -> Result<RealVector> {
        self.count.fetch_add(1, Ordering::Relaxed);
        let n = self.dim();
        if x.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.dim(),
            });
        }
        if !self.op.contains(x) {
            return Err(Error::Domain { point: x.to_vec() });
        }
        let mut out = vec![0.0; n];
        self.op.apply(x, &mut out)?;
        RealVector::new(out)
    }

    pub fn eval_count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

/// Output of one resolvent evaluation: the point `z = (I+γB)⁻¹(u)` and the
/// element `(u − z)/γ`, which lies in `B(z)` by definition of the resolvent.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolventStep {
    pub point: RealVector,
    pub element: RealVector,
}

/// Counted evaluation handle for `(I + γB)⁻¹`.
#[derive(Clone)]
pub struct ResolventMap {
    op: Arc<dyn ResolventOperator>,
    count: Arc<AtomicU64>,
}

impl fmt::Debug for ResolventMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ResolventMap")
            .field("dim", &self.dim())
            .field("apply_count", &self.apply_count())
            .finish()
    }
}

impl ResolventMap {
    pub fn new(op: impl ResolventOperator + 'static) -> Self {
        Self::from_arc(Arc::new(op))
    }

    pub fn from_arc(op: Arc<dyn ResolventOperator>) -> Self {
        ResolventMap {
            op,
            count: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.op.dim()
    }

    pub fn apply(&self, gamma: f64, u: &RealVector) -> Result<ResolventStep> {
        self.count.fetch_add(1, Ordering::Relaxed);
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "resolvent step must be positive and finite, got {gamma}"
            )));
        }
        if let Some(n) = self.op.dim() {
            if n != u.dim() {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: u.dim(),
                });
            }
        }
        let mut point = vec![0.0; u.dim()];
        self.op.resolve(gamma, u, &mut point)?;
        let point = RealVector::new(point)?;
        let element = RealVector::new(
            u.iter()
                .zip(point.iter())
                .map(|(ui, zi)| (ui - zi) / gamma)
                .collect(),
        )?;
        Ok(ResolventStep { point, element })
    }

    pub fn apply_count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

/// Snapshot of the two evaluation counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub f_evals: u64,
    pub resolvent_evals: u64,
}

/// Per-solve evaluation accounting against an optional cap on `F` evaluations.
///
/// Counts are taken relative to the counters' values when the budget was
/// opened, so a shared handle can be reused across solves.
#[derive(Clone, Debug)]
pub struct EvalBudget {
    f_start: u64,
    resolvent_start: u64,
    pub max_f_evals: Option<u64>,
}

impl EvalBudget {
    pub fn open(f: &PointMap, b: &ResolventMap, max_f_evals: Option<u64>) -> Self {
        EvalBudget {
            f_start: f.eval_count(),
            resolvent_start: b.apply_count(),
            max_f_evals,
        }
    }

    pub fn used(&self, f: &PointMap, b: &ResolventMap) -> EvalCounts {
        EvalCounts {
            f_evals: f.eval_count() - self.f_start,
            resolvent_evals: b.apply_count() - self.resolvent_start,
        }
    }

    /// Fails if one more `F` evaluation would exceed the cap.
    pub fn ensure_room(&self, f: &PointMap) -> std::result::Result<(), u64> {
        let used = f.eval_count() - self.f_start;
        match self.max_f_evals {
            Some(cap) if used >= cap => Err(used),
            _ => Ok(()),
        }
    }
}

/// Sampled check of `⟨F(x) − F(y), x − y⟩ ≥ μ‖x − y‖²` over the given pairs,
/// with slack `10⁻¹⁰·(1 + ‖x − y‖²)`.
///
/// A point outside the operator's domain is an error naming that point.
pub fn check_monotonicity_sample(
    f: &PointMap,
    mu: f64,
    pairs: &[(RealVector, RealVector)],
) -> Result<bool> {
    for (x, y) in pairs {
        for p in [x, y] {
            if !f.in_domain(p) {
                return Err(Error::Domain { point: p.to_vec() });
            }
        }
        let fx = f.eval(x)?;
        let fy = f.eval(y)?;
        let d = x.sub(y);
        let d2 = dot(&d, &d);
        let lhs = dot(&fx.sub(&fy), &d);
        if lhs < mu * d2 - 1e-10 * (1.0 + d2) {
            return Ok(false);
        }
    }
    Ok(true)
}
