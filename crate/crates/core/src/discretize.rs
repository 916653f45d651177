//! Class thresholds, the class indicator field and binary level spins.

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::grid::{GridField, Lattice};

/// A discrete node label that contributes to a nearest-neighbour pair
/// correlation.
pub trait Label: Copy + Eq + Debug + Send + Sync + 'static {
    /// Position of the label within its domain, starting at 0.
    fn index(self) -> usize;

    /// Contribution of the pair `(self, other)` to the unnormalized
    /// correlation sum.
    fn pair_score(self, other: Self) -> i64;
}

/// Ising spin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    /// `-1`
    Down,
    /// `+1`
    Up,
}

impl Spin {
    pub const DOMAIN: [Spin; 2] = [Spin::Down, Spin::Up];

    pub fn value(self) -> i64 {
        match self {
            Spin::Down => -1,
            Spin::Up => 1,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Down => Spin::Up,
            Spin::Up => Spin::Down,
        }
    }
}

impl Label for Spin {
    #[inline]
    fn index(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => 1,
        }
    }

    #[inline]
    fn pair_score(self, other: Self) -> i64 {
        self.value() * other.value()
    }
}

/// Class index `q` in `1..=N_c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Class(u16);

impl Class {
    /// # Panics
    ///
    /// If `q == 0`.
    pub fn new(q: u16) -> Self {
        assert!(q >= 1, "class indices start at 1");
        Class(q)
    }

    pub fn get(self) -> u16 {
        self.0
    }

    /// `[Class(1), ..., Class(n_classes)]`.
    pub fn domain(n_classes: u16) -> Vec<Class> {
        (1..=n_classes).map(Class).collect()
    }
}

impl Label for Class {
    #[inline]
    fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    fn pair_score(self, other: Self) -> i64 {
        (self == other) as i64
    }
}

/// Labels on a lattice, with per-node freeze flags. Frozen nodes carry
/// conditioning data and are never modified by an optimizer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelField<L> {
    lattice: Lattice,
    labels: Vec<Option<L>>,
    frozen: Vec<bool>,
}

/// The class indicator field.
pub type ClassField = LabelField<Class>;
/// Binary spins of one Ising level.
pub type SpinField = LabelField<Spin>;

impl<L: Label> LabelField<L> {
    /// All nodes unassigned and free.
    pub fn unassigned(lattice: Lattice) -> Self {
        LabelField {
            lattice,
            labels: vec![None; lattice.len()],
            frozen: vec![false; lattice.len()],
        }
    }

    pub fn from_parts(lattice: Lattice, labels: Vec<Option<L>>, frozen: Vec<bool>) -> Result<Self> {
        if labels.len() != lattice.len() || frozen.len() != lattice.len() {
            return Err(Error::InvalidGrid(format!(
                "{}x{} field needs {} labels and flags, got {} and {}",
                lattice.lx(),
                lattice.ly(),
                lattice.len(),
                labels.len(),
                frozen.len()
            )));
        }
        if let Some(i) = (0..labels.len()).find(|&i| frozen[i] && labels[i].is_none()) {
            return Err(Error::Unassigned(i));
        }
        Ok(LabelField {
            lattice,
            labels,
            frozen,
        })
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<L> {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Option<L>] {
        &self.labels
    }

    #[inline]
    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_flags(&self) -> &[bool] {
        &self.frozen
    }

    /// Sets the label of a free node.
    pub fn set(&mut self, i: usize, label: L) -> Result<()> {
        if self.frozen[i] {
            return Err(Error::FrozenNode(i));
        }
        self.labels[i] = Some(label);
        Ok(())
    }

    /// Sets a label and freezes the node.
    pub fn freeze(&mut self, i: usize, label: L) {
        self.labels[i] = Some(label);
        self.frozen[i] = true;
    }

    #[inline]
    pub(crate) fn put(&mut self, i: usize, label: L) {
        debug_assert!(!self.frozen[i]);
        self.labels[i] = Some(label);
    }

    /// Unfrozen node indices, ascending.
    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.frozen[i]).collect()
    }

    pub fn frozen_count(&self) -> usize {
        self.frozen.iter().filter(|f| **f).count()
    }

    pub fn first_unassigned(&self) -> Option<usize> {
        self.labels.iter().position(Option::is_none)
    }

    pub fn is_fully_assigned(&self) -> bool {
        self.first_unassigned().is_none()
    }

    /// Label of every node, failing on the first unassigned node.
    pub fn assigned_labels(&self) -> Result<Vec<L>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| l.ok_or(Error::Unassigned(i)))
            .collect()
    }

    /// Same labels, all nodes free.
    pub fn thawed(mut self) -> Self {
        self.frozen.iter_mut().for_each(|f| *f = false);
        self
    }
}

impl ClassField {
    /// Builds a field from 1-based class indices, 0 meaning unassigned. All
    /// nodes are free.
    pub fn from_indices(lattice: Lattice, classes: &[u16]) -> Result<Self> {
        let labels = classes.iter().map(|&q| (q > 0).then_some(Class(q))).collect();
        Self::from_parts(lattice, labels, vec![false; classes.len()])
    }

    /// Class indices with 0 at unassigned nodes.
    pub fn indices(&self) -> Vec<u16> {
        self.labels.iter().map(|l| l.map_or(0, Class::get)).collect()
    }
}

/// Boundaries `t_1 < t_2 < ... < t_{N_c+1}` of `N_c` classes; class `q`
/// covers `(t_q, t_{q+1}]`, the end classes reach to infinity and the
/// interior ones have uniform width.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdSet {
    thresholds: Vec<f64>,
    width: f64,
    z_min: f64,
    z_max: f64,
}

impl ThresholdSet {
    /// Thresholds of `n_classes` classes spanning `[z_min, z_max]`.
    pub fn uniform(z_min: f64, z_max: f64, n_classes: u16) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "at least 2 classes required, got {n_classes}"
            )));
        }
        if !(z_min.is_finite() && z_max.is_finite()) || z_max < z_min {
            return Err(Error::InvalidArgument(format!(
                "invalid range [{z_min}, {z_max}]"
            )));
        }
        let width = (z_max - z_min) / n_classes as f64;
        if width <= 0.0 {
            return Err(Error::DegenerateSample(z_min));
        }
        let mut thresholds = Vec::with_capacity(n_classes as usize + 1);
        thresholds.push(f64::NEG_INFINITY);
        let mut t = z_min + width;
        thresholds.push(t);
        for _ in 3..=n_classes {
            t += width;
            thresholds.push(t);
        }
        thresholds.push(f64::INFINITY);
        Ok(ThresholdSet {
            thresholds,
            width,
            z_min,
            z_max,
        })
    }

    pub fn n_classes(&self) -> u16 {
        (self.thresholds.len() - 1) as u16
    }

    /// `t_1 ..= t_{N_c+1}`.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// `t_k` with the 1-based index used in the class definition.
    pub fn threshold(&self, k: usize) -> f64 {
        self.thresholds[k - 1]
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// Class `q` with `t_q < z <= t_{q+1}`.
    pub fn classify(&self, z: f64) -> Class {
        let interior = &self.thresholds[1..self.thresholds.len() - 1];
        Class(1 + interior.partition_point(|&t| t < z) as u16)
    }

    pub fn domain(&self) -> Vec<Class> {
        Class::domain(self.n_classes())
    }
}

/// Thresholds from the extremes of the sample values of `train`.
pub fn build_thresholds(train: &GridField, n_classes: u16) -> Result<ThresholdSet> {
    let mut range: Option<(f64, f64)> = None;
    for (_, z) in train.samples() {
        range = Some(match range {
            None => (z, z),
            Some((lo, hi)) => (lo.min(z), hi.max(z)),
        });
    }
    let (lo, hi) = range.ok_or(Error::NotEnoughSamples {
        needed: 2,
        available: 0,
    })?;
    if lo == hi {
        return Err(Error::DegenerateSample(lo));
    }
    ThresholdSet::uniform(lo, hi, n_classes)
}

/// Class indicator field of a grid: sample nodes get their class and are
/// frozen, missing nodes stay unassigned and free.
pub fn classify_values(grid: &GridField, thresholds: &ThresholdSet) -> ClassField {
    let mut field = ClassField::unassigned(grid.lattice());
    for (i, z) in grid.samples() {
        field.freeze(i, thresholds.classify(z));
    }
    field
}

/// Binary spins of level `q`: class `<= q` maps to `-1`, class `> q` to
/// `+1`. A node is frozen at this level if it was frozen in `classes` or
/// if its spin is `-1` (it was absorbed at a lower level).
pub fn level_spins(classes: &ClassField, q: u16) -> Result<SpinField> {
    if q == 0 {
        return Err(Error::InvalidArgument("levels start at 1".into()));
    }
    let mut spins = SpinField::unassigned(classes.lattice());
    for i in 0..classes.len() {
        if let Some(c) = classes.get(i) {
            let spin = if c.get() <= q { Spin::Down } else { Spin::Up };
            spins.labels[i] = Some(spin);
            spins.frozen[i] = classes.is_frozen(i) || spin == Spin::Down;
        }
    }
    Ok(spins)
}

/// Relabels a fully assigned spin field as a two-class field (`-1 -> 1`,
/// `+1 -> 2`), keeping freeze flags.
pub fn binary_potts_of_ising(spins: &SpinField) -> Result<ClassField> {
    let labels = spins
        .assigned_labels()?
        .into_iter()
        .map(|s| {
            Some(match s {
                Spin::Down => Class(1),
                Spin::Up => Class(2),
            })
        })
        .collect();
    ClassField::from_parts(spins.lattice(), labels, spins.frozen.clone())
}

/// Inverse of [`binary_potts_of_ising`].
pub fn ising_of_binary_potts(classes: &ClassField) -> Result<SpinField> {
    let labels = classes
        .assigned_labels()?
        .into_iter()
        .enumerate()
        .map(|(i, c)| match c.get() {
            1 => Ok(Some(Spin::Down)),
            2 => Ok(Some(Spin::Up)),
            q => Err(Error::InvalidArgument(format!(
                "node {i} has class {q}, expected 1 or 2"
            ))),
        })
        .collect::<Result<_>>()?;
    SpinField::from_parts(classes.lattice(), labels, classes.frozen.clone())
}
