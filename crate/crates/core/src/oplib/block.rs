use super::ProxEntry;
use crate::error::{Error, Result};
use crate::operator::{ResolventOperator, ResolventStep};
use crate::vector::RealVector;

/// A catalog entry acting on a contiguous slice of the given length.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub entry: ProxEntry,
    pub dim: usize,
}

impl Block {
    pub fn new(entry: ProxEntry, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("block of dimension 0".into()));
        }
        if let Some(n) = entry.fixed_dim() {
            if n != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: n });
            }
        }
        if matches!(entry, ProxEntry::SecondOrderCone) && dim < 2 {
            return Err(Error::InvalidParameter(
                "second-order cone block needs dimension ≥ 2".into(),
            ));
        }
        Ok(Block { entry, dim })
    }

    pub(crate) fn new_unchecked(entry: ProxEntry, dim: usize) -> Self {
        Block { entry, dim }
    }
}

/// Blockwise resolvent of a separable `B = B₁ × … × B_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockResolvent {
    blocks: Vec<Block>,
    dim: usize,
}

impl BlockResolvent {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("block resolvent needs at least one block".into()));
        }
        let blocks = blocks
            .into_iter()
            .map(|b| Block::new(b.entry, b.dim))
            .collect::<Result<Vec<_>>>()?;
        let dim = blocks.iter().map(|b| b.dim).sum();
        Ok(BlockResolvent { blocks, dim })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim).collect()
    }

    /// Applies each block's resolvent to its slice of `u`; the element is
    /// `(u − point)/γ`.
    pub fn apply(&self, gamma: f64, u: &RealVector) -> Result<ResolventStep> {
        let mut point = vec![0.0; u.dim()];
        self.resolve(gamma, u, &mut point)?;
        let point = RealVector::new(point)?;
        let element = RealVector::new(
            u.iter()
                .zip(point.iter())
                .map(|(a, b)| (a - b) / gamma)
                .collect(),
        )?;
        Ok(ResolventStep { point, element })
    }

    /// Sum of the blocks' function values at `x`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut offset = 0;
        self.blocks
            .iter()
            .map(|b| {
                let v = b.entry.value(&x[offset..offset + b.dim]);
                offset += b.dim;
                v
            })
            .sum()
    }
}

impl ResolventOperator for BlockResolvent {
    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn resolve(&self, gamma: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        let mut offset = 0;
        for b in &self.blocks {
            let range = offset..offset + b.dim;
            b.entry.prox_into(gamma, &u[range.clone()], &mut out[range])?;
            offset += b.dim;
        }
        Ok(())
    }
}
