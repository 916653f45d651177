//! Majority-vote initialization of free nodes from frozen neighbours in
//! growing square windows.

use rand::Rng;
use rayon::prelude::*;

use crate::discretize::{Label, LabelField};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

/// Largest window side tried; 7 is enough in practice.
pub const DEFAULT_STENCIL_MAX: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StencilConfig {
    /// Largest window side `m_max`, odd and at least 3.
    pub max_size: usize,
    pub seed: u64,
}

impl StencilConfig {
    pub fn new(max_size: usize, seed: u64) -> Result<Self> {
        let cfg = StencilConfig { max_size, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.max_size < 3 || self.max_size % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "stencil size must be odd and at least 3, got {}",
                self.max_size
            )));
        }
        Ok(())
    }
}

/// Assigns every free node of `field`.
///
/// For `m = 3, 5, ..., m_max`, the frozen labels inside the `m × m` window
/// centred on the node (clipped at the grid edge) are counted, and the first
/// window with a unique most frequent label decides. Otherwise the label is
/// drawn uniformly among the labels tied at the top in the largest window,
/// or from the whole `domain` when that window holds no frozen node. Only
/// frozen nodes vote, so the result does not depend on visit order; random
/// draws use a per-node stream derived from `(seed, node)`.
///
/// `domain[k].index()` must equal `k`.
pub fn stencil_init<L: Label>(
    field: &LabelField<L>,
    domain: &[L],
    cfg: &StencilConfig,
) -> Result<LabelField<L>> {
    cfg.validate()?;
    if domain.is_empty() {
        return Err(Error::InvalidArgument("empty label domain".into()));
    }
    if let Some(k) = domain.iter().enumerate().position(|(k, l)| l.index() != k) {
        return Err(Error::InvalidArgument(format!(
            "domain label at position {k} has index {}",
            domain[k].index()
        )));
    }
    for i in 0..field.len() {
        if field.is_frozen(i) {
            match field.get(i) {
                Some(l) if l.index() < domain.len() => {}
                Some(l) => {
                    return Err(Error::InvalidArgument(format!(
                        "frozen node {i} holds {l:?}, outside the domain"
                    )))
                }
                None => return Err(Error::Unassigned(i)),
            }
        }
    }

    let free = field.free_nodes();
    let picks: Vec<L> = free
        .par_iter()
        .map_init(
            || vec![0u32; domain.len()],
            |counts, &node| pick_label(field, node, domain, cfg, counts),
        )
        .collect();

    let mut out = field.clone();
    for (&node, label) in free.iter().zip(picks) {
        out.put(node, label);
    }
    Ok(out)
}

fn pick_label<L: Label>(
    field: &LabelField<L>,
    node: usize,
    domain: &[L],
    cfg: &StencilConfig,
    counts: &mut [u32],
) -> L {
    let lattice = field.lattice();
    let (x0, y0) = lattice.coords(node);
    let (lx, ly) = (lattice.lx() as isize, lattice.ly() as isize);
    counts.iter_mut().for_each(|c| *c = 0);

    let frozen_label = |x: isize, y: isize| -> Option<usize> {
        if x < 0 || y < 0 || x >= lx || y >= ly {
            return None;
        }
        let i = lattice.index(x as usize, y as usize);
        if field.is_frozen(i) {
            field.get(i).map(L::index)
        } else {
            None
        }
    };

    let (x0, y0) = (x0 as isize, y0 as isize);
    let half_max = (cfg.max_size / 2) as isize;
    for half in 1..=half_max {
        // add the ring at Chebyshev distance `half`
        let top_bottom = (-half..=half).flat_map(|dx| [(x0 + dx, y0 - half), (x0 + dx, y0 + half)]);
        let sides = (-half + 1..half).flat_map(|dy| [(x0 - half, y0 + dy), (x0 + half, y0 + dy)]);
        for (x, y) in top_bottom.chain(sides) {
            if let Some(k) = frozen_label(x, y) {
                counts[k] += 1;
            }
        }
        if let Some(k) = unique_top(counts) {
            return domain[k];
        }
    }

    let mut rng = rng_from_seed(derive_seed(cfg.seed, node as u64, 0));
    let top = *counts.iter().max().unwrap_or(&0);
    if top == 0 {
        return domain[rng.random_range(0..domain.len())];
    }
    let tied: Vec<usize> = (0..counts.len()).filter(|&k| counts[k] == top).collect();
    domain[tied[rng.random_range(0..tied.len())]]
}

fn unique_top(counts: &[u32]) -> Option<usize> {
    let mut best = 0;
    let mut arg = None;
    let mut unique = false;
    for (k, &c) in counts.iter().enumerate() {
        if c > best {
            best = c;
            arg = Some(k);
            unique = true;
        } else if c == best && c > 0 {
            unique = false;
        }
    }
    if unique {
        arg
    } else {
        None
    }
}
