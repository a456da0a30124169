//! Agent-state container shared by every model.

use crate::{Error, Result};

/// Positions of `N` agents in dimension `d`, plus optional velocities or
/// spins. Vectors are stored row-major: agent `i` occupies
/// `positions[i * d..(i + 1) * d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    dim: usize,
    positions: Vec<f64>,
    velocities: Option<Vec<f64>>,
    spins: Option<Vec<i8>>,
}

impl Ensemble {
    /// First-order ensemble (positions only).
    pub fn first_order(dim: usize, positions: Vec<f64>) -> Result<Self> {
        check_layout(dim, &positions)?;
        Ok(Self { dim, positions, velocities: None, spins: None })
    }

    /// One-dimensional first-order ensemble from scalar opinions.
    pub fn from_scalars(values: Vec<f64>) -> Result<Self> {
        Self::first_order(1, values)
    }

    pub fn second_order(dim: usize, positions: Vec<f64>, velocities: Vec<f64>) -> Result<Self> {
        check_layout(dim, &positions)?;
        if velocities.len() != positions.len() {
            return Err(Error::DimensionMismatch { expected: positions.len(), found: velocities.len() });
        }
        Ok(Self { dim, positions, velocities: Some(velocities), spins: None })
    }

    /// Ensemble carrying a `±1` spin per agent; positions give the node
    /// coordinates and take no part in spin updates.
    pub fn with_spins(dim: usize, positions: Vec<f64>, spins: Vec<i8>) -> Result<Self> {
        check_layout(dim, &positions)?;
        let n = positions.len() / dim;
        if spins.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: spins.len() });
        }
        if let Some(bad) = spins.iter().find(|s| **s != 1 && **s != -1) {
            return Err(Error::invalid("spins", format!("spin {bad} is not ±1")));
        }
        Ok(Self { dim, positions, velocities: None, spins: Some(spins) })
    }

    /// Build from one row per agent.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::Empty)?;
        let mut positions = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.len() });
            }
            positions.extend_from_slice(r);
        }
        Self::first_order(dim, positions)
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn positions_mut(&mut self) -> &mut [f64] {
        &mut self.positions
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocities(&self) -> Option<&[f64]> {
        self.velocities.as_deref()
    }

    pub fn velocities_mut(&mut self) -> Option<&mut [f64]> {
        self.velocities.as_deref_mut()
    }

    /// Velocities or [`Error::MissingVelocities`].
    pub fn require_velocities(&self) -> Result<&[f64]> {
        self.velocities().ok_or(Error::MissingVelocities)
    }

    pub fn velocity(&self, i: usize) -> Option<&[f64]> {
        self.velocities.as_ref().map(|v| &v[i * self.dim..(i + 1) * self.dim])
    }

    pub fn spins(&self) -> Option<&[i8]> {
        self.spins.as_deref()
    }

    pub fn has_velocities(&self) -> bool {
        self.velocities.is_some()
    }

    /// Replace the spin vector, re-checking the `±1` invariant.
    pub fn set_spins(&mut self, spins: Vec<i8>) -> Result<()> {
        let checked = Self::with_spins(self.dim, self.positions.clone(), spins)?;
        self.spins = checked.spins;
        Ok(())
    }

    pub(crate) fn from_parts_unchecked(dim: usize, positions: Vec<f64>, velocities: Option<Vec<f64>>) -> Self {
        Self { dim, positions, velocities, spins: None }
    }
}

fn check_layout(dim: usize, positions: &[f64]) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    if positions.is_empty() {
        return Err(Error::Empty);
    }
    if !positions.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: positions.len() % dim });
    }
    Ok(())
}
