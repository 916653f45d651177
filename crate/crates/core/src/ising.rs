//! Sequential multilevel reconstruction with binary (Ising) spins.
//!
//! Levels `q = 1 .. N_c − 1` are resolved in increasing order. At level `q`
//! every node with class `<= q` carries spin `−1` and every other node `+1`.
//! Free spins are initialized by stencil majority and optimized; free nodes
//! ending at `−1` receive class `q` and join the conditioning set of all
//! higher levels. Nodes still unassigned after the last level get class
//! `N_c`.

use crate::discretize::{
    build_thresholds, classify_values, level_spins, Class, ClassField, Spin, ThresholdSet,
};
use crate::energy::{sample_correlation, EnergyState};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::optimizer::{greedy_optimize, OptimizerConfig};
use crate::seed::derive_seed;
use crate::stencil::{stencil_init, StencilConfig, DEFAULT_STENCIL_MAX};

/// Stream tags mixed into per-level seeds.
const STENCIL_STREAM: u64 = 1;
const OPTIMIZER_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IsingRunConfig {
    pub n_classes: u16,
    pub stencil_max: usize,
    /// Optimizer settings; the seed is replaced by a per-level seed.
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl IsingRunConfig {
    pub fn new(n_classes: u16, seed: u64) -> Self {
        IsingRunConfig {
            n_classes,
            stencil_max: DEFAULT_STENCIL_MAX,
            optimizer: OptimizerConfig::default(),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelDiagnostics {
    pub level: u16,
    /// Free spins at this level.
    pub free_nodes: usize,
    /// Conditioning nodes at this level (samples plus absorbed nodes).
    pub frozen_nodes: usize,
    pub sample_correlation: f64,
    pub sweeps: usize,
    pub accepted: usize,
    pub initial_cost: f64,
    pub terminal_cost: f64,
    pub converged: bool,
    /// Nodes that received class `q` here.
    pub absorbed: usize,
    /// The conditioning set held no `+1` spin; all free nodes were absorbed
    /// without optimization.
    pub skipped: bool,
    /// Cost after each accepted move when the optimizer records a trace.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsingOutcome {
    pub classes: ClassField,
    pub thresholds: ThresholdSet,
    pub levels: Vec<LevelDiagnostics>,
}

impl IsingOutcome {
    /// Levels that ran the optimizer.
    fn optimized(&self) -> impl Iterator<Item = &LevelDiagnostics> {
        self.levels.iter().filter(|l| !l.skipped && l.free_nodes > 0)
    }

    pub fn total_sweeps(&self) -> usize {
        self.levels.iter().map(|l| l.sweeps).sum()
    }

    /// Mean sweeps over optimized levels, 0 if none ran.
    pub fn mean_sweeps_per_level(&self) -> f64 {
        mean(self.optimized().map(|l| l.sweeps as f64))
    }

    /// Mean terminal cost over optimized levels, 0 if none ran.
    pub fn mean_terminal_cost(&self) -> f64 {
        mean(self.optimized().map(|l| l.terminal_cost))
    }

    pub fn converged(&self) -> bool {
        self.levels.iter().all(|l| l.converged)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Reconstructs the class field of `train` level by level.
pub fn classify_ising(train: &GridField, cfg: &IsingRunConfig) -> Result<IsingOutcome> {
    if cfg.n_classes < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least 2 classes required, got {}",
            cfg.n_classes
        )));
    }
    let thresholds = build_thresholds(train, cfg.n_classes)?;
    // Samples carry their class from the start; absorbed nodes get theirs
    // level by level and stay free in this field.
    let mut classes = classify_values(train, &thresholds);
    let mut levels = Vec::with_capacity(cfg.n_classes as usize - 1);

    for q in 1..cfg.n_classes {
        let spins = level_spins(&classes, q)?;
        let free = spins.free_nodes();
        let frozen_nodes = spins.len() - free.len();
        let target = sample_correlation(&spins)?;
        let mut diag = LevelDiagnostics {
            level: q,
            free_nodes: free.len(),
            frozen_nodes,
            sample_correlation: target.value(),
            sweeps: 0,
            accepted: 0,
            initial_cost: 0.0,
            terminal_cost: 0.0,
            converged: true,
            absorbed: 0,
            skipped: false,
            trace: Vec::new(),
        };

        let any_up = (0..spins.len()).any(|i| spins.is_frozen(i) && spins.get(i) == Some(Spin::Up));
        if !any_up {
            diag.skipped = true;
            for &i in &free {
                classes.put(i, Class::new(q));
            }
            diag.absorbed = free.len();
            levels.push(diag);
            continue;
        }
        if free.is_empty() {
            levels.push(diag);
            continue;
        }

        let stencil = StencilConfig::new(cfg.stencil_max, derive_seed(cfg.seed, q as u64, STENCIL_STREAM))?;
        let initial = stencil_init(&spins, &Spin::DOMAIN, &stencil)?;
        let energy = EnergyState::new(&initial, target)?;
        let opt_cfg = cfg
            .optimizer
            .with_seed(derive_seed(cfg.seed, q as u64, OPTIMIZER_STREAM));
        let result = greedy_optimize(initial, energy, &Spin::DOMAIN, &opt_cfg)?;

        for &i in &free {
            if result.field.get(i) == Some(Spin::Down) {
                classes.put(i, Class::new(q));
                diag.absorbed += 1;
            }
        }
        diag.sweeps = result.sweeps;
        diag.accepted = result.accepted;
        diag.initial_cost = result.initial_cost;
        diag.terminal_cost = result.terminal_cost;
        diag.converged = result.converged;
        diag.trace = result.trace;
        levels.push(diag);
    }

    let top = Class::new(cfg.n_classes);
    for i in 0..classes.len() {
        if classes.get(i).is_none() {
            classes.put(i, top);
        }
    }

    Ok(IsingOutcome {
        classes,
        thresholds,
        levels,
    })
}
