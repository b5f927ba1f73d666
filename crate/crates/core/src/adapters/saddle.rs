use super::conic::{check_constraint, primal_block};
use super::oracles::{ConstraintMap, SaddleFunction};
use super::{KktLayout, MiProblem};
use crate::error::{Error, Result};
use crate::oplib::{BlockResolvent, ConeProduct, ProxEntry};
use crate::operator::{PointMap, PointOperator, ResolventMap};
use std::sync::Arc;

/// `min_x max_y f(x, y) + P(x) − P̃(y)` subject to `g(x) ∈ −K`, `g̃(y) ∈ −K̃`.
#[derive(Clone)]
pub struct SaddleProblem {
    pub f: Arc<dyn SaddleFunction>,
    pub p: ProxEntry,
    pub p_tilde: ProxEntry,
    pub g: Option<Arc<dyn ConstraintMap>>,
    pub k: ConeProduct,
    pub g_tilde: Option<Arc<dyn ConstraintMap>>,
    pub k_tilde: ConeProduct,
}

impl SaddleProblem {
    /// Unconstrained, with `P = P̃ = 0`.
    pub fn unconstrained(f: Arc<dyn SaddleFunction>) -> Self {
        let empty = ConeProduct::new(vec![]).expect("empty product is valid");
        SaddleProblem {
            f,
            p: ProxEntry::Zero,
            p_tilde: ProxEntry::Zero,
            g: None,
            k: empty.clone(),
            g_tilde: None,
            k_tilde: empty,
        }
    }
}

/// `F(x, y, λ, λ̃) = (∇ₓf + ∇g λ, −∇ᵧf + ∇g̃ λ̃, −g(x), −g̃(y))`.
struct SaddleOperator {
    f: Arc<dyn SaddleFunction>,
    g: Option<Arc<dyn ConstraintMap>>,
    g_tilde: Option<Arc<dyn ConstraintMap>>,
    sizes: [usize; 4],
}

fn add_constraint(
    g: Option<&dyn ConstraintMap>,
    x: &[f64],
    mult: &[f64],
    grad: &mut [f64],
    feas: &mut [f64],
) {
    if let Some(g) = g {
        let mut jt = vec![0.0; grad.len()];
        g.jacobian_t_apply(x, mult, &mut jt);
        for (o, j) in grad.iter_mut().zip(&jt) {
            *o += j;
        }
        g.value(x, feas);
        for o in feas.iter_mut() {
            *o = -*o;
        }
    }
}

impl PointOperator for SaddleOperator {
    fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    fn apply(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        let [n, m, p, _] = self.sizes;
        let (x, rest) = w.split_at(n);
        let (y, rest) = rest.split_at(m);
        let (lambda, lambda_t) = rest.split_at(p);
        let (ox, rest) = out.split_at_mut(n);
        let (oy, rest) = rest.split_at_mut(m);
        let (ol, olt) = rest.split_at_mut(p);

        self.f.grad_x(x, y, ox);
        self.f.grad_y(x, y, oy);
        for o in oy.iter_mut() {
            *o = -*o;
        }
        add_constraint(self.g.as_deref(), x, lambda, ox, ol);
        add_constraint(self.g_tilde.as_deref(), y, lambda_t, oy, olt);
        Ok(())
    }
}

/// Reduces a conic constrained saddle problem to `0 ∈ (F+B)(x, y, λ, λ̃)`.
pub fn saddle_to_mi(prob: &SaddleProblem) -> Result<MiProblem> {
    let (n, m) = prob.f.dims();
    if n == 0 || m == 0 {
        return Err(Error::EmptyVector);
    }
    let (p, pt) = (prob.k.dim(), prob.k_tilde.dim());
    check_constraint(prob.g.as_deref(), n, p)?;
    check_constraint(prob.g_tilde.as_deref(), m, pt)?;

    let mut blocks = vec![primal_block(&prob.p, n)?, primal_block(&prob.p_tilde, m)?];
    blocks.extend(prob.k.dual().projection_blocks());
    blocks.extend(prob.k_tilde.dual().projection_blocks());
    let resolvent = BlockResolvent::new(blocks)?;
    let f = PointMap::new(SaddleOperator {
        f: prob.f.clone(),
        g: prob.g.clone(),
        g_tilde: prob.g_tilde.clone(),
        sizes: [n, m, p, pt],
    });
    Ok(MiProblem {
        f,
        b: ResolventMap::new(resolvent.clone()),
        resolvent,
        layout: KktLayout::saddle(n, m, p, pt),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::{AffineMap, QuadraticSaddle};
    use crate::oplib::{Cone, Matrix};
    use crate::vector::RealVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> RealVector {
        RealVector::from_slice(x).unwrap()
    }

    #[test]
    fn bilinear_scalar() {
        let f = Arc::new(QuadraticSaddle::bilinear(Matrix::from_element(1, 1, 1.0)));
        let mi = saddle_to_mi(&SaddleProblem::unconstrained(f)).unwrap();
        assert_eq!(mi.f.eval(&v(&[1.0, 0.0])).unwrap(), v(&[0.0, -1.0]));
        assert_eq!(mi.f.eval(&v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
    }

    #[test]
    fn bilinear_coupling_is_skew() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = Matrix::from_fn(3, 2, |_, _| rng.gen_range(-1.0..1.0));
        let q = Matrix::identity(3, 3) * 0.5;
        let r = Matrix::identity(2, 2) * 2.0;
        let f = QuadraticSaddle::new(q.clone(), vec![0.1; 3], a, r.clone(), vec![0.2; 2]).unwrap();
        let mi = saddle_to_mi(&SaddleProblem::unconstrained(Arc::new(f))).unwrap();
        for _ in 0..100 {
            let w: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let wb: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let (w, wb) = (v(&w), v(&wb));
            let d = w.sub(&wb);
            let lhs = mi.f.eval(&w).unwrap().sub(&mi.f.eval(&wb).unwrap()).dot(&d);
            let convex = 0.5 * d[..3].iter().map(|t| t * t).sum::<f64>()
                + 2.0 * d[3..].iter().map(|t| t * t).sum::<f64>();
            assert!((lhs - convex).abs() <= 1e-10 * (1.0 + convex));
        }
    }

    #[test]
    fn constrained_layout_and_blocks() {
        let f = Arc::new(QuadraticSaddle::bilinear(Matrix::from_element(1, 1, 1.0)));
        let prob = SaddleProblem {
            g: Some(Arc::new(AffineMap::new(Matrix::from_element(1, 1, 1.0), vec![-1.0]).unwrap())),
            k: ConeProduct::new(vec![Cone::Nonneg(1)]).unwrap(),
            ..SaddleProblem::unconstrained(f)
        };
        let mi = saddle_to_mi(&prob).unwrap();
        assert_eq!(mi.f.dim(), 3);
        assert_eq!(mi.layout, KktLayout::saddle(1, 1, 1, 0));
        // (x, y, λ) = (2, 3, 4): (y + λ, −x, −(x − 1))
        assert_eq!(mi.f.eval(&v(&[2.0, 3.0, 4.0])).unwrap(), v(&[7.0, -2.0, -1.0]));
    }
}
