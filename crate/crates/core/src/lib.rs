//! Reconstruction of missing values on regular 2-D grids.
//!
//! A continuous variable is discretized into `N_c` classes and the missing
//! nodes are filled in by conditional simulation: labels at sample nodes stay
//! fixed while a zero-temperature greedy Monte Carlo search matches the
//! normalized nearest-neighbour correlation energy of the whole grid to the
//! one measured on the sample. Two label models are provided:
//!
//! * [`ising`]: a sequential scheme that resolves one binary (`±1`) level at
//!   a time, from the lowest class upward;
//! * [`potts`]: a simultaneous scheme over all `N_c` classes.
//!
//! A k-nearest-neighbour baseline ([`knn`]), evaluation statistics
//! ([`metrics`]), a Whittle-Matérn Gaussian field generator ([`fieldgen`]),
//! the ASCII grid format ([`io`]) and a multi-realization experiment runner
//! ([`experiment`]) complete the toolkit.

pub mod discretize;
pub mod energy;
mod error;
pub mod experiment;
pub mod fieldgen;
pub mod grid;
pub mod io;
pub mod ising;
pub mod knn;
pub mod metrics;
pub mod optimizer;
pub mod potts;
pub mod seed;
pub mod special;
pub mod stencil;

pub use discretize::{
    build_thresholds, classify_values, Class, ClassField, Label, LabelField, Spin, SpinField, ThresholdSet,
};
pub use energy::{Correlation, EnergyState};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, Model};
pub use fieldgen::{generate_field, MaternGenerator, MaternSpec};
pub use grid::{Axis, CheckerboardPartition, GridField, Lattice, NeighborPair, ValidationMask};
pub use ising::{classify_ising, IsingOutcome, IsingRunConfig};
pub use knn::{classify_knn, knn_oracle_best, KnnConfig};
pub use metrics::{misclassification_rate, RunReport, VariogramCurve};
pub use optimizer::{greedy_optimize, OptimizerConfig, OptimizerResult, SweepMode};
pub use potts::{classify_potts, PottsOutcome, PottsRunConfig};
pub use stencil::{stencil_init, StencilConfig};
