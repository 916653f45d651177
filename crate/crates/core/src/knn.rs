//! k-nearest-neighbour classification baseline.
//!
//! Distances are Euclidean on grid coordinates. Neighbours at equal distance
//! are ordered by node index. A plurality tie goes to the tied class whose
//! nearest member is closest, then to the lower class index.

use rayon::prelude::*;

use crate::discretize::{classify_values, Class, ClassField, ThresholdSet};
use crate::error::{Error, Result};
use crate::grid::{GridField, Lattice, ValidationMask};
use crate::metrics::misclassification_rate;

pub const DEFAULT_K_MAX: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KnnConfig {
    pub k_max: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k_max: DEFAULT_K_MAX }
    }
}

/// Best k found against known truth.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnBest {
    pub k: usize,
    pub f: f64,
    pub classes: ClassField,
    /// Misclassification rate for `k = 1, 2, ...`.
    pub rates: Vec<f64>,
}

/// The `k` sample nodes nearest to `node` as `(squared distance, index)`,
/// nearest first.
fn nearest_samples(lattice: Lattice, is_sample: &[bool], node: usize, k: usize) -> Vec<(usize, usize)> {
    let (x0, y0) = lattice.coords(node);
    let (x0, y0) = (x0 as isize, y0 as isize);
    let (lx, ly) = (lattice.lx() as isize, lattice.ly() as isize);
    let max_ring = lx.max(ly);
    let mut found: Vec<(usize, usize)> = Vec::new();
    let consider = |x: isize, y: isize, found: &mut Vec<(usize, usize)>| {
        if x < 0 || y < 0 || x >= lx || y >= ly {
            return;
        }
        let i = lattice.index(x as usize, y as usize);
        if is_sample[i] {
            let (dx, dy) = (x - x0, y - y0);
            found.push(((dx * dx + dy * dy) as usize, i));
        }
    };
    for r in 0..=max_ring {
        if r == 0 {
            consider(x0, y0, &mut found);
        } else {
            for dx in -r..=r {
                consider(x0 + dx, y0 - r, &mut found);
                consider(x0 + dx, y0 + r, &mut found);
            }
            for dy in -r + 1..r {
                consider(x0 - r, y0 + dy, &mut found);
                consider(x0 + r, y0 + dy, &mut found);
            }
        }
        if found.len() >= k {
            found.sort_unstable();
            // Unvisited nodes are at least r + 1 away.
            let bound = ((r + 1) * (r + 1)) as usize;
            if found[k - 1].0 < bound {
                break;
            }
        }
    }
    found.sort_unstable();
    found.truncate(k);
    found
}

/// Plurality class among the first `k` neighbours.
fn vote(
    neighbours: &[(usize, usize)],
    classes: &ClassField,
    k: usize,
    n_classes: usize,
    counts: &mut Vec<(u32, usize)>,
) -> Class {
    counts.clear();
    counts.resize(n_classes, (0, usize::MAX));
    for &(d2, i) in &neighbours[..k] {
        let c = classes.get(i).expect("sample nodes are classified").get() as usize - 1;
        let entry = &mut counts[c];
        entry.0 += 1;
        entry.1 = entry.1.min(d2);
    }
    let mut best = 0;
    for c in 1..n_classes {
        let (count, nearest) = counts[c];
        let (best_count, best_nearest) = counts[best];
        if count > best_count || (count == best_count && count > 0 && nearest < best_nearest) {
            best = c;
        }
    }
    Class::new(best as u16 + 1)
}

/// Per target node, its nearest samples as `(squared distance, index)`.
type Neighbours = Vec<Vec<(usize, usize)>>;

fn neighbour_table(train: &GridField, k: usize) -> Result<(Vec<usize>, Neighbours)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let available = train.sample_count();
    if available < k {
        return Err(Error::NotEnoughSamples { needed: k, available });
    }
    let is_sample: Vec<bool> = train.missing_mask().iter().map(|m| !m).collect();
    let targets: Vec<usize> = (0..train.len()).filter(|&i| train.is_missing(i)).collect();
    let lattice = train.lattice();
    let table = targets
        .par_iter()
        .map(|&node| nearest_samples(lattice, &is_sample, node, k))
        .collect();
    Ok((targets, table))
}

/// Classifies every missing node of `train` by majority of its `k`
/// nearest sample nodes. Sample nodes keep their own class and are frozen.
pub fn classify_knn(train: &GridField, thresholds: &ThresholdSet, k: usize) -> Result<ClassField> {
    let (targets, table) = neighbour_table(train, k)?;
    let mut classes = classify_values(train, thresholds);
    let n_classes = thresholds.n_classes() as usize;
    let mut counts = Vec::new();
    let picks: Vec<Class> = table
        .iter()
        .map(|nb| vote(nb, &classes, k, n_classes, &mut counts))
        .collect();
    for (node, c) in targets.into_iter().zip(picks) {
        classes.put(node, c);
    }
    Ok(classes)
}

/// Evaluates `k = 1 ..= k_max` against `truth` on `mask` and returns the
/// minimizing `k` (the lowest on ties).
pub fn knn_oracle_best(
    train: &GridField,
    thresholds: &ThresholdSet,
    truth: &ClassField,
    mask: &ValidationMask,
    cfg: &KnnConfig,
) -> Result<KnnBest> {
    if cfg.k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let k_max = cfg.k_max.min(train.sample_count());
    let (targets, table) = neighbour_table(train, k_max)?;
    let base = classify_values(train, thresholds);
    let n_classes = thresholds.n_classes() as usize;

    let mut best: Option<KnnBest> = None;
    let mut rates = Vec::with_capacity(k_max);
    let mut counts = Vec::new();
    for k in 1..=k_max {
        let mut classes = base.clone();
        for (&node, nb) in targets.iter().zip(&table) {
            classes.put(node, vote(nb, &base, k, n_classes, &mut counts));
        }
        let f = misclassification_rate(truth, &classes, mask)?;
        rates.push(f);
        if best.as_ref().map_or(true, |b| f < b.f) {
            best = Some(KnnBest {
                k,
                f,
                classes,
                rates: Vec::new(),
            });
        }
    }
    let mut best = best.expect("k_max >= 1");
    best.rates = rates;
    Ok(best)
}
