use super::oracles::{ConstraintMap, SmoothFunction};
use super::{KktLayout, MiProblem};
use crate::error::{Error, Result};
use crate::oplib::{Block, BlockResolvent, ConeProduct, ProxEntry};
use crate::operator::{PointMap, PointOperator, ResolventMap};
use std::sync::Arc;

/// `min f(x) + P(x)` subject to `g(x) ∈ −K`.
///
/// `f` is smooth convex, `P` a catalog entry, `g` smooth and `K`-convex.
/// Without `g` the cone must be empty and the reduction is `0 ∈ ∇f + ∂P`.
#[derive(Clone)]
pub struct ConicProgram {
    pub f: Arc<dyn SmoothFunction>,
    pub p: ProxEntry,
    pub g: Option<Arc<dyn ConstraintMap>>,
    pub k: ConeProduct,
}

impl ConicProgram {
    pub fn dims(&self) -> (usize, usize) {
        (self.f.dim(), self.k.dim())
    }

    fn validate(&self) -> Result<()> {
        let (n, m) = self.dims();
        if n == 0 {
            return Err(Error::EmptyVector);
        }
        check_constraint(self.g.as_deref(), n, m)
    }
}

pub(super) fn check_constraint(g: Option<&dyn ConstraintMap>, n: usize, m: usize) -> Result<()> {
    match g {
        Some(g) => {
            let (gn, gm) = g.dims();
            if gn != n {
                return Err(Error::DimensionMismatch { expected: n, got: gn });
            }
            if gm != m {
                return Err(Error::DimensionMismatch { expected: m, got: gm });
            }
        }
        None if m != 0 => {
            return Err(Error::InvalidParameter(format!(
                "cone of dimension {m} given without a constraint map"
            )))
        }
        None => {}
    }
    Ok(())
}

/// `F(x, λ) = (∇f(x) + ∇g(x)λ, −g(x))`.
struct ConicOperator {
    f: Arc<dyn SmoothFunction>,
    g: Option<Arc<dyn ConstraintMap>>,
    n: usize,
    m: usize,
}

impl PointOperator for ConicOperator {
    fn dim(&self) -> usize {
        self.n + self.m
    }

    fn apply(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        let (x, lambda) = w.split_at(self.n);
        let (fx, fl) = out.split_at_mut(self.n);
        self.f.gradient(x, fx);
        if let Some(g) = &self.g {
            let mut jt = vec![0.0; self.n];
            g.jacobian_t_apply(x, lambda, &mut jt);
            for (o, j) in fx.iter_mut().zip(&jt) {
                *o += j;
            }
            g.value(x, fl);
            for o in fl.iter_mut() {
                *o = -*o;
            }
        }
        Ok(())
    }
}

pub(super) fn primal_block(p: &ProxEntry, n: usize) -> Result<Block> {
    Block::new(p.clone(), n)
}

/// Reduces a conic program to `0 ∈ (F+B)(x, λ)` with
/// `B` resolvent `(prox_{γP}(x), Π_{K*}(λ))`.
pub fn conic_to_mi(prog: &ConicProgram) -> Result<MiProblem> {
    prog.validate()?;
    let (n, m) = prog.dims();
    let mut blocks = vec![primal_block(&prog.p, n)?];
    blocks.extend(prog.k.dual().projection_blocks());
    let resolvent = BlockResolvent::new(blocks)?;
    let f = PointMap::new(ConicOperator {
        f: prog.f.clone(),
        g: prog.g.clone(),
        n,
        m,
    });
    Ok(MiProblem {
        f,
        b: ResolventMap::new(resolvent.clone()),
        resolvent,
        layout: KktLayout::conic(n, m),
    })
}
