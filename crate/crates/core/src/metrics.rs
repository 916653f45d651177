//! Evaluation statistics for reconstructed class fields.

use serde::{Deserialize, Serialize};

use crate::discretize::{Class, ClassField};
use crate::error::{Error, Result};
use crate::grid::{Axis, Lattice, ValidationMask};

/// Outcome of one reconstruction run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: String,
    pub nc: u16,
    pub p: f64,
    pub realization: usize,
    pub seed: u64,
    /// Misclassification rate on the validation nodes.
    pub f: f64,
    /// Mean Monte Carlo sweeps per simulation level (0 for k-NN).
    pub sweeps: f64,
    /// Cost at termination, averaged over levels for the sequential model.
    pub terminal_cost: f64,
    pub wall_seconds: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spread {
    pub mean: f64,
    /// Sample standard deviation (divisor `n − 1`).
    pub std: f64,
}

fn check_same_shape(a: Lattice, b: Lattice) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    Ok(())
}

/// Fraction of validation nodes whose estimated class differs from the truth.
pub fn misclassification_rate(
    truth: &ClassField,
    estimate: &ClassField,
    mask: &ValidationMask,
) -> Result<f64> {
    check_same_shape(truth.lattice(), estimate.lattice())?;
    check_same_shape(truth.lattice(), mask.lattice())?;
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut wrong = 0usize;
    for &i in mask.indices() {
        let t = truth.get(i).ok_or(Error::Unassigned(i))?;
        let e = estimate.get(i).ok_or(Error::Unassigned(i))?;
        if t != e {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / mask.len() as f64)
}

/// Mean and Bessel-corrected standard deviation.
pub fn mean_and_std(values: &[f64]) -> Result<Spread> {
    if values.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Ok(Spread {
        mean,
        std: (ss / (n - 1.0)).sqrt(),
    })
}

/// Spread of the misclassification rate over realizations.
pub fn f_spread(reports: &[RunReport]) -> Result<Spread> {
    let f: Vec<f64> = reports.iter().map(|r| r.f).collect();
    mean_and_std(&f)
}

/// Class-index variogram along one lattice axis.
#[derive(Clone, Debug, PartialEq)]
pub struct VariogramCurve {
    pub axis: Axis,
    pub lags: Vec<usize>,
    pub gamma: Vec<f64>,
    pub pairs: Vec<u64>,
}

/// Default largest lag: a quarter of the shorter side, at least 1.
pub fn default_max_lag(lattice: Lattice) -> usize {
    (lattice.lx().min(lattice.ly()) / 4).max(1)
}

/// `γ(h) = Σ (I_i − I_j)² / (2 |N(h)|)` over node pairs `h` apart along
/// `axis`, for `h = 1 ..= h_max`. Lags without pairs are left out.
pub fn directional_variogram(classes: &ClassField, axis: Axis, h_max: usize) -> Result<VariogramCurve> {
    let lattice = classes.lattice();
    let extent = match axis {
        Axis::X => lattice.lx(),
        Axis::Y => lattice.ly(),
    };
    if h_max == 0 || h_max >= extent {
        return Err(Error::InvalidArgument(format!(
            "largest lag must lie in 1..{extent} along {}, got {h_max}",
            axis.name()
        )));
    }
    let values: Vec<i64> = classes
        .assigned_labels()?
        .into_iter()
        .map(|c| c.get() as i64)
        .collect();
    let mut curve = VariogramCurve {
        axis,
        lags: Vec::new(),
        gamma: Vec::new(),
        pairs: Vec::new(),
    };
    for h in 1..=h_max {
        let mut sum = 0i64;
        let mut n = 0u64;
        for y in 0..lattice.ly() {
            for x in 0..lattice.lx() {
                let (x2, y2) = match axis {
                    Axis::X => (x + h, y),
                    Axis::Y => (x, y + h),
                };
                if x2 < lattice.lx() && y2 < lattice.ly() {
                    let d = values[lattice.index(x, y)] - values[lattice.index(x2, y2)];
                    sum += d * d;
                    n += 1;
                }
            }
        }
        if n > 0 {
            curve.lags.push(h);
            curve.gamma.push(sum as f64 / (2.0 * n as f64));
            curve.pairs.push(n);
        }
    }
    Ok(curve)
}

/// Variograms as CSV with header `axis,lag,gamma,npairs`.
pub fn variogram_csv(curves: &[VariogramCurve]) -> String {
    let mut out = String::from("axis,lag,gamma,npairs\n");
    for c in curves {
        for ((h, g), n) in c.lags.iter().zip(&c.gamma).zip(&c.pairs) {
            out.push_str(&format!("{},{h},{g},{n}\n", c.axis.name()));
        }
    }
    out
}

/// Both axis variograms up to `h_max`, clipped to each axis extent. Axes of
/// length 1 are left out.
pub fn axis_variograms(classes: &ClassField, h_max: usize) -> Result<Vec<VariogramCurve>> {
    let lattice = classes.lattice();
    [(Axis::X, lattice.lx()), (Axis::Y, lattice.ly())]
        .into_iter()
        .filter(|&(_, extent)| extent > 1)
        .map(|(axis, extent)| directional_variogram(classes, axis, h_max.min(extent - 1)))
        .collect()
}

/// Histogram as CSV with header `class,count,log_count`; `log_count` is the
/// natural log, empty for empty classes.
pub fn histogram_csv(counts: &[u64]) -> String {
    let mut out = String::from("class,count,log_count\n");
    for (q, &count) in counts.iter().enumerate() {
        let log = if count > 0 {
            (count as f64).ln().to_string()
        } else {
            String::new()
        };
        out.push_str(&format!("{},{count},{log}\n", q + 1));
    }
    out
}

/// Node count per class `1 ..= n_classes`.
pub fn class_histogram(classes: &ClassField, n_classes: u16) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; n_classes as usize];
    for (i, c) in classes.labels().iter().enumerate() {
        let c = c.ok_or(Error::Unassigned(i))?;
        let slot = counts.get_mut(c.index_in(n_classes).ok_or_else(|| {
            Error::InvalidArgument(format!("node {i} has class {} above {n_classes}", c.get()))
        })?);
        *slot.expect("bounds checked") += 1;
    }
    Ok(counts)
}

impl Class {
    fn index_in(self, n_classes: u16) -> Option<usize> {
        (self.get() <= n_classes).then(|| self.get() as usize - 1)
    }
}

/// Per-node sample standard deviation of the class index across fields.
pub fn class_std_map(stack: &[ClassField]) -> Result<Vec<f64>> {
    if stack.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: stack.len(),
        });
    }
    let lattice = stack[0].lattice();
    let mut sum = vec![0.0; lattice.len()];
    let mut sum_sq = vec![0.0; lattice.len()];
    // two passes for accuracy: mean first
    for field in stack {
        check_same_shape(lattice, field.lattice())?;
        for (i, c) in field.labels().iter().enumerate() {
            sum[i] += c.ok_or(Error::Unassigned(i))?.get() as f64;
        }
    }
    let n = stack.len() as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    for field in stack {
        for (i, c) in field.labels().iter().enumerate() {
            let d = c.expect("checked above").get() as f64 - mean[i];
            sum_sq[i] += d * d;
        }
    }
    Ok(sum_sq.into_iter().map(|s| (s / (n - 1.0)).sqrt()).collect())
}
