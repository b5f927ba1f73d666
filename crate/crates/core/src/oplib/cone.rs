use super::{Block, ProxEntry};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A closed convex cone from the catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cone", content = "dim", rename_all = "snake_case")]
pub enum Cone {
    Nonneg(usize),
    Zero(usize),
    Free(usize),
    Soc(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Nonneg(d) | Cone::Zero(d) | Cone::Free(d) | Cone::Soc(d) => d,
        }
    }

    /// Dual cone: the orthant and the SOC are self-dual, `{0}` and ℝᵈ swap.
    pub fn dual(&self) -> Cone {
        match *self {
            Cone::Zero(d) => Cone::Free(d),
            Cone::Free(d) => Cone::Zero(d),
            c => c,
        }
    }

    /// Catalog entry whose resolvent is the projection onto this cone.
    pub fn projection(&self) -> ProxEntry {
        match self {
            Cone::Nonneg(_) => ProxEntry::NonnegOrthant,
            Cone::Zero(_) => ProxEntry::ZeroCone,
            Cone::Free(_) => ProxEntry::FreeCone,
            Cone::Soc(_) => ProxEntry::SecondOrderCone,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Cone::Soc(d) if d < 2 => Err(Error::InvalidParameter(format!(
                "second-order cone needs dimension ≥ 2, got {d}"
            ))),
            c if c.dim() == 0 => Err(Error::InvalidParameter("cone block of dimension 0".into())),
            _ => Ok(()),
        }
    }
}

/// Cartesian product of catalog cones, in order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConeProduct(Vec<Cone>);

impl ConeProduct {
    pub fn new(cones: Vec<Cone>) -> Result<Self> {
        for c in &cones {
            c.validate()?;
        }
        Ok(ConeProduct(cones))
    }

    pub fn cones(&self) -> &[Cone] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.iter().map(Cone::dim).sum()
    }

    pub fn dual(&self) -> ConeProduct {
        ConeProduct(self.0.iter().map(Cone::dual).collect())
    }

    /// Projection blocks onto this product.
    pub fn projection_blocks(&self) -> Vec<Block> {
        self.0
            .iter()
            .map(|c| Block::new_unchecked(c.projection(), c.dim()))
            .collect()
    }

    /// Membership of `z` in the product up to `tol`.
    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        let mut offset = 0;
        self.0.iter().all(|c| {
            let s = &z[offset..offset + c.dim()];
            offset += c.dim();
            match c {
                Cone::Nonneg(_) => s.iter().all(|v| *v >= -tol),
                Cone::Zero(_) => s.iter().all(|v| v.abs() <= tol),
                Cone::Free(_) => true,
                Cone::Soc(_) => {
                    let (head, t) = s.split_at(s.len() - 1);
                    crate::vector::norm(head) <= t[0] + tol
                }
            }
        })
    }
}
