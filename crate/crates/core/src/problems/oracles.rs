//! Ground-truth oracles for the test instances: bisection, active-set
//! enumeration and finite differences. None of these share code with the
//! solvers.

use crate::oplib::Matrix;
use nalgebra::DVector;

/// Root of a continuous increasing `f` on `[lo, hi]` by bisection, to `tol`.
pub fn bisection(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    assert!(lo <= hi && f(lo) <= 0.0 && f(hi) >= 0.0, "bracket does not contain a root");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// An affine variational problem on a box with linear inequalities:
/// find `x ∈ [lo, hi]`, `λ ≥ 0` with `Ax ≤ b`, `λᵀ(Ax − b) = 0` and
/// `−(Mx + c + Aᵀλ) ∈ N_[lo,hi](x)`.
///
/// With `M` symmetric PSD this is the KKT system of a box-constrained QP.
#[derive(Clone, Debug)]
pub struct AffineBoxSystem {
    pub m_mat: Matrix,
    pub c: Vec<f64>,
    pub a: Matrix,
    pub b: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KktPoint {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

const FEAS_TOL: f64 = 1e-9;

impl AffineBoxSystem {
    fn n(&self) -> usize {
        self.c.len()
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    /// Tries every `(bound pattern, active constraint set)` and returns all
    /// patterns whose linear solve satisfies the full KKT conditions.
    pub fn enumerate(&self) -> Vec<KktPoint> {
        let (n, m) = (self.n(), self.m());
        let mut found = Vec::new();
        let patterns = 3usize.pow(n as u32);
        for code in 0..patterns {
            let bounds = decode(code, n);
            if bounds.iter().zip(self.lo.iter().zip(&self.hi)).any(|(s, (l, h))| {
                (*s == Bound::Lower && !l.is_finite()) || (*s == Bound::Upper && !h.is_finite())
            }) {
                continue;
            }
            for active in 0..(1usize << m) {
                if let Some(p) = self.try_pattern(&bounds, active) {
                    found.push(p);
                }
            }
        }
        found
    }

    /// The unique KKT point, or `None` if there is none or the enumeration
    /// finds distinct ones (degenerate multipliers).
    pub fn solve_unique(&self) -> Option<KktPoint> {
        let all = self.enumerate();
        let first = all.first()?.clone();
        let close = |p: &KktPoint| {
            p.x.iter().zip(&first.x).all(|(a, b)| (a - b).abs() <= 1e-8)
                && p.lambda.iter().zip(&first.lambda).all(|(a, b)| (a - b).abs() <= 1e-8)
        };
        all.iter().all(close).then_some(first)
    }

    fn try_pattern(&self, bounds: &[Bound], active: usize) -> Option<KktPoint> {
        let (n, m) = (self.n(), self.m());
        let free: Vec<usize> = (0..n).filter(|&j| bounds[j] == Bound::Free).collect();
        let act: Vec<usize> = (0..m).filter(|&i| active >> i & 1 == 1).collect();
        let mut x = vec![0.0; n];
        for j in 0..n {
            match bounds[j] {
                Bound::Lower => x[j] = self.lo[j],
                Bound::Upper => x[j] = self.hi[j],
                Bound::Free => {}
            }
        }
        let size = free.len() + act.len();
        let mut lambda = vec![0.0; m];
        if size > 0 {
            // Unknowns: x_free, λ_active.
            // Rows j ∈ free:   (Mx + c + Aᵀλ)_j = 0
            // Rows i ∈ active: (Ax − b)_i = 0
            let mut lhs = Matrix::zeros(size, size);
            let mut rhs = DVector::zeros(size);
            for (r, &j) in free.iter().enumerate() {
                for (col, &k) in free.iter().enumerate() {
                    lhs[(r, col)] = self.m_mat[(j, k)];
                }
                for (col, &i) in act.iter().enumerate() {
                    lhs[(r, free.len() + col)] = self.a[(i, j)];
                }
                let fixed: f64 = (0..n)
                    .filter(|&k| bounds[k] != Bound::Free)
                    .map(|k| self.m_mat[(j, k)] * x[k])
                    .sum();
                rhs[r] = -self.c[j] - fixed;
            }
            for (r, &i) in act.iter().enumerate() {
                let row = free.len() + r;
                for (col, &k) in free.iter().enumerate() {
                    lhs[(row, col)] = self.a[(i, k)];
                }
                let fixed: f64 = (0..n)
                    .filter(|&k| bounds[k] != Bound::Free)
                    .map(|k| self.a[(i, k)] * x[k])
                    .sum();
                rhs[row] = self.b[i] - fixed;
            }
            let lu = lhs.full_piv_lu();
            if !lu.is_invertible() {
                return None;
            }
            let sol = lu.solve(&rhs)?;
            for (r, &j) in free.iter().enumerate() {
                x[j] = sol[r];
            }
            for (r, &i) in act.iter().enumerate() {
                lambda[i] = sol[free.len() + r];
            }
        }
        self.is_kkt(&x, &lambda, bounds).then_some(KktPoint { x, lambda })
    }

    fn is_kkt(&self, x: &[f64], lambda: &[f64], bounds: &[Bound]) -> bool {
        let (n, m) = (self.n(), self.m());
        let xv = DVector::from_column_slice(x);
        let lv = DVector::from_column_slice(lambda);
        let ax = &self.a * &xv;
        if (0..m).any(|i| ax[i] > self.b[i] + FEAS_TOL || lambda[i] < -FEAS_TOL) {
            return false;
        }
        let grad = &self.m_mat * &xv + DVector::from_column_slice(&self.c) + self.a.tr_mul(&lv);
        (0..n).all(|j| {
            let inside = x[j] >= self.lo[j] - FEAS_TOL && x[j] <= self.hi[j] + FEAS_TOL;
            // ν = −grad must lie in the normal cone of the box at x_j.
            inside
                && match bounds[j] {
                    Bound::Free => grad[j].abs() <= FEAS_TOL,
                    Bound::Lower => grad[j] >= -FEAS_TOL,
                    Bound::Upper => grad[j] <= FEAS_TOL,
                }
        })
    }
}

fn decode(mut code: usize, n: usize) -> Vec<Bound> {
    (0..n)
        .map(|_| {
            let s = match code % 3 {
                0 => Bound::Free,
                1 => Bound::Lower,
                _ => Bound::Upper,
            };
            code /= 3;
            s
        })
        .collect()
}

/// Central-difference gradient of `phi` with step `1e-6·(1 + ‖x‖)`.
pub fn fd_gradient(phi: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = 1e-6 * (1.0 + crate::vector::norm(x));
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = phi(&probe);
            probe[i] = x[i] - h;
            let down = phi(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_cubic_roots() {
        let root = |a: f64| bisection(|x| x * x * x + x - a, -20.0, 20.0, 1e-13);
        assert!(root(0.0).abs() < 1e-12);
        assert!((root(1.0) - 0.682327803828).abs() < 1e-11);
        assert!((root(10.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hand_qp_enumeration() {
        // min ½(x − 2)²  s.t.  x ≤ 1, free box
        let sys = AffineBoxSystem {
            m_mat: Matrix::identity(1, 1),
            c: vec![-2.0],
            a: Matrix::identity(1, 1),
            b: vec![1.0],
            lo: vec![f64::NEG_INFINITY],
            hi: vec![f64::INFINITY],
        };
        let p = sys.solve_unique().unwrap();
        assert!((p.x[0] - 1.0).abs() < 1e-14 && (p.lambda[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn box_bound_active() {
        // min ½x² − 3x on [−1, 1]: x* = 1 at the upper bound.
        let sys = AffineBoxSystem {
            m_mat: Matrix::identity(1, 1),
            c: vec![-3.0],
            a: Matrix::zeros(0, 1),
            b: vec![],
            lo: vec![-1.0],
            hi: vec![1.0],
        };
        assert_eq!(sys.solve_unique().unwrap().x, vec![1.0]);
    }

    #[test]
    fn fd_of_quadratic() {
        let g = fd_gradient(&|x: &[f64]| x[0] * x[0] + 3.0 * x[1], &[2.0, 5.0]);
        assert!((g[0] - 4.0).abs() < 1e-6 && (g[1] - 3.0).abs() < 1e-6);
    }
}
