//! Rectangular lattices, continuous fields with missing data, and the
//! sample/validation partition.
//!
//! Nodes are indexed row-major: node `i` sits at column `x = i % lx` and row
//! `y = i / lx`. The x axis runs along columns, the y axis along rows.
//! Boundaries are open; nothing wraps.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Lattice direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

/// Shape of a rectangular lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    lx: usize,
    ly: usize,
}

impl Lattice {
    pub fn new(lx: usize, ly: usize) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(Error::InvalidGrid(format!(
                "lattice must have at least one node per axis, got {lx}x{ly}"
            )));
        }
        lx.checked_mul(ly)
            .ok_or_else(|| Error::InvalidGrid(format!("{lx}x{ly} overflows")))?;
        Ok(Lattice { lx, ly })
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.lx, self.ly)
    }

    pub fn len(&self) -> usize {
        self.lx * self.ly
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.lx && y < self.ly);
        y * self.lx + x
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.lx, i / self.lx)
    }

    /// Nearest neighbours of node `i` (at most four).
    #[inline]
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> {
        let (x, y) = self.coords(i);
        let left = (x > 0).then(|| i - 1);
        let right = (x + 1 < self.lx).then(|| i + 1);
        let up = (y > 0).then(|| i - self.lx);
        let down = (y + 1 < self.ly).then(|| i + self.lx);
        [left, right, up, down].into_iter().flatten()
    }

    /// Number of nearest-neighbour pairs with open boundaries.
    pub fn pair_count(&self) -> usize {
        (self.lx - 1) * self.ly + self.lx * (self.ly - 1)
    }

    /// All nearest-neighbour pairs: horizontal pairs in row-major order,
    /// followed by vertical pairs in row-major order.
    pub fn neighbor_pairs(&self) -> Vec<NeighborPair> {
        let mut pairs = Vec::with_capacity(self.pair_count());
        for y in 0..self.ly {
            for x in 0..self.lx.saturating_sub(1) {
                let a = self.index(x, y);
                pairs.push(NeighborPair {
                    a,
                    b: a + 1,
                    axis: Axis::X,
                });
            }
        }
        for y in 0..self.ly.saturating_sub(1) {
            for x in 0..self.lx {
                let a = self.index(x, y);
                pairs.push(NeighborPair {
                    a,
                    b: a + self.lx,
                    axis: Axis::Y,
                });
            }
        }
        pairs
    }

    /// Splits the nodes by parity of `x + y`.
    pub fn checkerboard(&self) -> CheckerboardPartition {
        let (even, odd): (Vec<usize>, Vec<usize>) = (0..self.len()).partition(|&i| {
            let (x, y) = self.coords(i);
            (x + y) % 2 == 0
        });
        CheckerboardPartition { even, odd }
    }
}

/// An unordered pair of lattice nearest neighbours, stored with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NeighborPair {
    pub a: usize,
    pub b: usize,
    pub axis: Axis,
}

/// The two interpenetrating sublattices. No nearest-neighbour pair has both
/// endpoints in the same set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckerboardPartition {
    /// Nodes with even `x + y`, ascending.
    pub even: Vec<usize>,
    /// Nodes with odd `x + y`, ascending.
    pub odd: Vec<usize>,
}

impl CheckerboardPartition {
    pub fn sets(&self) -> [&[usize]; 2] {
        [&self.even, &self.odd]
    }
}

/// Continuous values on a lattice with a missing-data mask. Missing nodes
/// form the prediction set, the rest the sample set.
#[derive(Clone, Debug)]
pub struct GridField {
    lattice: Lattice,
    /// `NaN` at missing nodes.
    values: Vec<f64>,
    missing: Vec<bool>,
}

impl PartialEq for GridField {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice
            && self.missing == other.missing
            && (0..self.len()).all(|i| self.value(i) == other.value(i))
    }
}

impl GridField {
    /// Builds a field from per-node values, `None` marking a missing node.
    pub fn new(lx: usize, ly: usize, values: Vec<Option<f64>>) -> Result<Self> {
        let lattice = Lattice::new(lx, ly)?;
        if values.len() != lattice.len() {
            return Err(Error::InvalidGrid(format!(
                "{lx}x{ly} grid needs {} values, got {}",
                lattice.len(),
                values.len()
            )));
        }
        let mut missing = Vec::with_capacity(values.len());
        let mut out = Vec::with_capacity(values.len());
        for (i, v) in values.into_iter().enumerate() {
            match v {
                Some(z) if !z.is_finite() => {
                    return Err(Error::InvalidGrid(format!("node {i} holds non-finite value {z}")))
                }
                Some(z) => {
                    missing.push(false);
                    out.push(z);
                }
                None => {
                    missing.push(true);
                    out.push(f64::NAN);
                }
            }
        }
        Ok(GridField {
            lattice,
            values: out,
            missing,
        })
    }

    /// Builds a field with no missing values.
    pub fn complete(lx: usize, ly: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(lx, ly, values.into_iter().map(Some).collect())
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn lx(&self) -> usize {
        self.lattice.lx
    }

    pub fn ly(&self) -> usize {
        self.lattice.ly
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> Option<f64> {
        (!self.missing[i]).then(|| self.values[i])
    }

    pub fn is_missing(&self, i: usize) -> bool {
        self.missing[i]
    }

    /// Raw values with `NaN` at missing nodes.
    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    /// Number of sample (non-missing) nodes.
    pub fn sample_count(&self) -> usize {
        self.missing.iter().filter(|m| !**m).count()
    }

    /// Number of missing (prediction) nodes.
    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }

    /// `(index, value)` for every sample node.
    pub fn samples(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .zip(&self.missing)
            .enumerate()
            .filter(|(_, (_, m))| !**m)
            .map(|(i, (v, _))| (i, *v))
    }

    /// Copy of the field with the nodes of `mask` marked missing.
    pub fn with_masked(&self, mask: &ValidationMask) -> Result<Self> {
        if mask.lattice() != self.lattice {
            return Err(Error::DimensionMismatch {
                expected: self.lattice.dims(),
                found: mask.lattice().dims(),
            });
        }
        let mut out = self.clone();
        for &i in mask.indices() {
            out.missing[i] = true;
            out.values[i] = f64::NAN;
        }
        Ok(out)
    }
}

/// The set of nodes withheld for validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationMask {
    lattice: Lattice,
    indices: Vec<usize>,
    flags: Vec<bool>,
}

impl ValidationMask {
    pub fn from_flags(lattice: Lattice, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != lattice.len() {
            return Err(Error::InvalidGrid(format!(
                "mask needs {} entries, got {}",
                lattice.len(),
                flags.len()
            )));
        }
        let indices = flags
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.then_some(i))
            .collect();
        Ok(ValidationMask {
            lattice,
            indices,
            flags,
        })
    }

    pub fn from_indices(lattice: Lattice, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut flags = vec![false; lattice.len()];
        for i in indices {
            if i >= flags.len() {
                return Err(Error::InvalidArgument(format!(
                    "mask index {i} outside a grid of {} nodes",
                    flags.len()
                )));
            }
            flags[i] = true;
        }
        Self::from_flags(lattice, flags)
    }

    /// The prediction set of a field.
    pub fn of_missing(grid: &GridField) -> Self {
        Self::from_flags(grid.lattice(), grid.missing_mask().to_vec())
            .expect("mask built from the grid's own shape")
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    /// Masked node indices, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn contains(&self, i: usize) -> bool {
        self.flags[i]
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Number of nodes removed when thinning `total` nodes at fraction `p`,
/// rounded half up.
pub fn thinning_count(p: f64, total: usize) -> usize {
    (p * total as f64 + 0.5).floor() as usize
}

/// Removes `round(p * Lx * Ly)` nodes, drawn uniformly without replacement,
/// from a complete field. Returns the training field and the mask of
/// removed nodes.
pub fn thin_sample(full: &GridField, p: f64, seed: u64) -> Result<(GridField, ValidationMask)> {
    if full.missing_count() != 0 {
        return Err(Error::InvalidGrid(format!(
            "thinning needs a complete field, {} nodes are missing",
            full.missing_count()
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "thinning fraction must lie in (0, 1), got {p}"
        )));
    }
    let total = full.len();
    let removed = thinning_count(p, total);
    if removed == 0 || removed >= total {
        return Err(Error::DegenerateThinning {
            p,
            train: total - removed.min(total),
            validation: removed.min(total),
        });
    }
    let mut rng = rng_from_seed(seed);
    let picked = index::sample(&mut rng, total, removed);
    let mask = ValidationMask::from_indices(full.lattice(), picked)?;
    let train = full.with_masked(&mask)?;
    Ok((train, mask))
}
