//! User-supplied function, gradient and Jacobian-transpose oracles.

use crate::error::{Error, Result};
use crate::oplib::Matrix;
use nalgebra::DVector;

/// A smooth convex function with gradient.
pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

/// A smooth map `g: ℝⁿ → ℝᵐ` with `∇g(x)λ`, where `∇g` is the transposed Jacobian.
pub trait ConstraintMap: Send + Sync {
    /// `(n, m)`
    fn dims(&self) -> (usize, usize);
    fn value(&self, x: &[f64], out: &mut [f64]);
    fn jacobian_t_apply(&self, x: &[f64], lambda: &[f64], out: &mut [f64]);
}

/// A smooth convex-concave `f(x, y)` with partial gradients.
pub trait SaddleFunction: Send + Sync {
    /// `(n, m)`: dimensions of `x` and `y`.
    fn dims(&self) -> (usize, usize);
    fn value(&self, x: &[f64], y: &[f64]) -> f64;
    fn grad_x(&self, x: &[f64], y: &[f64], out: &mut [f64]);
    fn grad_y(&self, x: &[f64], y: &[f64], out: &mut [f64]);
}

fn mat_vec(m: &Matrix, x: &[f64]) -> DVector<f64> {
    m * DVector::from_column_slice(x)
}

fn mat_t_vec(m: &Matrix, x: &[f64]) -> DVector<f64> {
    m.tr_mul(&DVector::from_column_slice(x))
}

fn square(m: &Matrix, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "{what} must be {n}×{n}, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// `f(x) = ½xᵀQx + qᵀx`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFunction {
    pub q_mat: Matrix,
    pub q_vec: Vec<f64>,
}

impl QuadraticFunction {
    pub fn new(q_mat: Matrix, q_vec: Vec<f64>) -> Result<Self> {
        square(&q_mat, q_vec.len(), "Q")?;
        Ok(QuadraticFunction { q_mat, q_vec })
    }
}

impl SmoothFunction for QuadraticFunction {
    fn dim(&self) -> usize {
        self.q_vec.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let qx = mat_vec(&self.q_mat, x);
        0.5 * qx.as_slice().iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            + self.q_vec.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let qx = mat_vec(&self.q_mat, x);
        for (o, (a, b)) in out.iter_mut().zip(qx.iter().zip(&self.q_vec)) {
            *o = a + b;
        }
    }
}

/// `g(x) = Ax + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub a: Matrix,
    pub c: Vec<f64>,
}

impl AffineMap {
    pub fn new(a: Matrix, c: Vec<f64>) -> Result<Self> {
        if a.nrows() != c.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: c.len(),
            });
        }
        Ok(AffineMap { a, c })
    }
}

impl ConstraintMap for AffineMap {
    fn dims(&self) -> (usize, usize) {
        (self.a.ncols(), self.a.nrows())
    }

    fn value(&self, x: &[f64], out: &mut [f64]) {
        let ax = mat_vec(&self.a, x);
        for (o, (a, c)) in out.iter_mut().zip(ax.iter().zip(&self.c)) {
            *o = a + c;
        }
    }

    fn jacobian_t_apply(&self, _x: &[f64], lambda: &[f64], out: &mut [f64]) {
        out.copy_from_slice(mat_t_vec(&self.a, lambda).as_slice());
    }
}

/// `f(x, y) = ½xᵀQx + qᵀx + xᵀAy − ½yᵀRy − rᵀy`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticSaddle {
    pub q_mat: Matrix,
    pub q_vec: Vec<f64>,
    pub coupling: Matrix,
    pub r_mat: Matrix,
    pub r_vec: Vec<f64>,
}

impl QuadraticSaddle {
    pub fn new(
        q_mat: Matrix,
        q_vec: Vec<f64>,
        coupling: Matrix,
        r_mat: Matrix,
        r_vec: Vec<f64>,
    ) -> Result<Self> {
        let (n, m) = (q_vec.len(), r_vec.len());
        square(&q_mat, n, "Q")?;
        square(&r_mat, m, "R")?;
        if coupling.nrows() != n || coupling.ncols() != m {
            return Err(Error::InvalidParameter(format!(
                "coupling must be {n}×{m}, got {}×{}",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        Ok(QuadraticSaddle {
            q_mat,
            q_vec,
            coupling,
            r_mat,
            r_vec,
        })
    }

    /// `f(x, y) = xᵀAy`.
    pub fn bilinear(coupling: Matrix) -> Self {
        let (n, m) = coupling.shape();
        QuadraticSaddle {
            q_mat: Matrix::zeros(n, n),
            q_vec: vec![0.0; n],
            coupling,
            r_mat: Matrix::zeros(m, m),
            r_vec: vec![0.0; m],
        }
    }
}

impl SaddleFunction for QuadraticSaddle {
    fn dims(&self) -> (usize, usize) {
        (self.q_vec.len(), self.r_vec.len())
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        0.5 * dot(mat_vec(&self.q_mat, x).as_slice(), x)
            + dot(&self.q_vec, x)
            + dot(x, mat_vec(&self.coupling, y).as_slice())
            - 0.5 * dot(mat_vec(&self.r_mat, y).as_slice(), y)
            - dot(&self.r_vec, y)
    }

    fn grad_x(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let qx = mat_vec(&self.q_mat, x);
        let ay = mat_vec(&self.coupling, y);
        for i in 0..out.len() {
            out[i] = qx[i] + self.q_vec[i] + ay[i];
        }
    }

    fn grad_y(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let atx = mat_t_vec(&self.coupling, x);
        let ry = mat_vec(&self.r_mat, y);
        for i in 0..out.len() {
            out[i] = atx[i] - ry[i] - self.r_vec[i];
        }
    }
}
