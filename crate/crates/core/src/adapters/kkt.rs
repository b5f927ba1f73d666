use crate::certificate::Certificate;
use crate::error::Result;
use crate::vector::norm;
use serde::Serialize;

/// Block sizes of a reduced variable: primal blocks first, then multipliers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KktLayout {
    pub primal: Vec<usize>,
    pub dual: Vec<usize>,
}

impl KktLayout {
    /// `w = (x, λ)`
    pub fn conic(n: usize, m: usize) -> Self {
        KktLayout {
            primal: vec![n],
            dual: vec![m],
        }
    }

    /// `w = (x, y, λ, λ̃)`
    pub fn saddle(n: usize, m: usize, p: usize, p_tilde: usize) -> Self {
        KktLayout {
            primal: vec![n, m],
            dual: vec![p, p_tilde],
        }
    }

    pub fn dim(&self) -> usize {
        self.primal.iter().chain(&self.dual).sum()
    }

    fn sizes(&self) -> Vec<usize> {
        self.primal.iter().chain(&self.dual).copied().collect()
    }
}

/// ε-KKT point read off a certificate `v ∈ (F+B)(w)`.
///
/// The primal blocks of `v` are subgradients of the Lagrangian in the primal
/// variables, the dual blocks measure constraint violation, so every residual
/// below is at most `‖v‖`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KktReport {
    pub primal: Vec<Vec<f64>>,
    pub multipliers: Vec<Vec<f64>>,
    pub stationarity_residual: f64,
    pub feasibility_residual: f64,
    /// `‖v_i‖` for every block in layout order.
    pub block_residuals: Vec<f64>,
}

pub fn extract_kkt(cert: &Certificate, layout: &KktLayout) -> Result<KktReport> {
    let sizes = layout.sizes();
    let xs = cert.x.split_blocks(&sizes)?;
    let vs = cert.v.split_blocks(&sizes)?;
    let np = layout.primal.len();
    let block_residuals: Vec<f64> = vs.iter().map(|b| norm(b)).collect();
    let joint = |r: &[f64]| r.iter().map(|t| t * t).sum::<f64>().sqrt();
    Ok(KktReport {
        primal: xs[..np].iter().map(|b| b.to_vec()).collect(),
        multipliers: xs[np..].iter().map(|b| b.to_vec()).collect(),
        stationarity_residual: joint(&block_residuals[..np]),
        feasibility_residual: joint(&block_residuals[np..]),
        block_residuals,
    })
}
