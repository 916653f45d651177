//! Simultaneous reconstruction over all classes with Potts labels.

use crate::discretize::{build_thresholds, classify_values, ClassField, ThresholdSet};
use crate::energy::{sample_correlation, EnergyState};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::optimizer::{greedy_optimize, OptimizerConfig};
use crate::seed::derive_seed;
use crate::stencil::{stencil_init, StencilConfig, DEFAULT_STENCIL_MAX};

const STENCIL_STREAM: u64 = 1;
const OPTIMIZER_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PottsRunConfig {
    pub n_classes: u16,
    pub stencil_max: usize,
    /// Optimizer settings; the seed is replaced by one derived from `seed`.
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl PottsRunConfig {
    pub fn new(n_classes: u16, seed: u64) -> Self {
        PottsRunConfig {
            n_classes,
            stencil_max: DEFAULT_STENCIL_MAX,
            optimizer: OptimizerConfig::default(),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PottsOutcome {
    pub classes: ClassField,
    pub thresholds: ThresholdSet,
    pub sample_correlation: f64,
    pub free_nodes: usize,
    pub sweeps: usize,
    pub accepted: usize,
    pub initial_cost: f64,
    pub terminal_cost: f64,
    pub converged: bool,
    /// Cost after each accepted move when the optimizer records a trace.
    pub trace: Vec<f64>,
}

pub fn classify_potts(train: &GridField, cfg: &PottsRunConfig) -> Result<PottsOutcome> {
    if cfg.n_classes < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least 2 classes required, got {}",
            cfg.n_classes
        )));
    }
    let thresholds = build_thresholds(train, cfg.n_classes)?;
    let sample = classify_values(train, &thresholds);
    let target = sample_correlation(&sample)?;
    let domain = thresholds.domain();
    let free_nodes = sample.len() - sample.frozen_count();

    let stencil = StencilConfig::new(cfg.stencil_max, derive_seed(cfg.seed, 0, STENCIL_STREAM))?;
    let initial = stencil_init(&sample, &domain, &stencil)?;
    let energy = EnergyState::new(&initial, target)?;
    let opt_cfg = cfg
        .optimizer
        .with_seed(derive_seed(cfg.seed, 0, OPTIMIZER_STREAM));
    let result = greedy_optimize(initial, energy, &domain, &opt_cfg)?;

    Ok(PottsOutcome {
        classes: result.field,
        thresholds,
        sample_correlation: target.value(),
        free_nodes,
        sweeps: result.sweeps,
        accepted: result.accepted,
        initial_cost: result.initial_cost,
        terminal_cost: result.terminal_cost,
        converged: result.converged,
        trace: result.trace,
    })
}
