//! Shared fixtures for the benchmarks.

use spinfill::discretize::{build_thresholds, classify_values, ClassField, ThresholdSet};
use spinfill::experiment::benchmark_spec;
use spinfill::fieldgen::generate_field;
use spinfill::grid::{thin_sample, GridField, ValidationMask};

/// The 50×50 benchmark field thinned at `p`, with its class thresholds.
pub struct Fixture {
    pub full: GridField,
    pub train: GridField,
    pub mask: ValidationMask,
    pub thresholds: ThresholdSet,
    pub truth: ClassField,
}

pub fn fixture(n_classes: u16, p: f64, seed: u64) -> Fixture {
    let full = generate_field(&benchmark_spec()).expect("benchmark field");
    let (train, mask) = thin_sample(&full, p, seed).expect("thinning");
    let thresholds = build_thresholds(&train, n_classes).expect("thresholds");
    let truth = classify_values(&full, &thresholds);
    Fixture {
        full,
        train,
        mask,
        thresholds,
        truth,
    }
}
