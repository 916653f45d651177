//! Multi-realization experiments: thin, classify, score, aggregate.
//!
//! A configuration is a list of `key = value` lines (`#` starts a comment):
//!
//! ```text
//! input = synthetic            # or a path to a complete grid file
//! synth.lx = 50
//! synth.ly = 50
//! synth.mean = 50
//! synth.sigma = 10
//! synth.nu = 2.5
//! synth.kappa = 0.2
//! synth.seed = 0
//! synth.resample = false       # fresh field per realization
//! models = ising, potts, knn
//! nc = 8, 16
//! p = 0.33, 0.5, 0.66
//! realizations = 100
//! seed = 0
//! mmax = 7
//! kmax = 25
//! mode = sequential            # or checkerboard
//! max_sweeps = 1000
//! timing = true
//! output_dir = out
//! ```
//!
//! For every `(N_c, p)` pair and realization `r` the complete field is
//! thinned with seed `derive_seed(seed, cell, r)`, `cell` being the position
//! of the pair in `nc × p` order, and every model classifies the same
//! training set. With `synth.resample` each realization first draws its own
//! synthetic field with seed `derive_seed(synth.seed, FIELD_STREAM, r)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::discretize::{build_thresholds, classify_values, ClassField};
use crate::error::{Error, Result};
use crate::fieldgen::{generate_field, MaternGenerator, MaternSpec};
use crate::grid::{thin_sample, GridField, Lattice};
use crate::io::{load_grid, save_classes, save_values};
use crate::ising::{classify_ising, IsingRunConfig};
use crate::knn::{knn_oracle_best, KnnConfig, DEFAULT_K_MAX};
use crate::metrics::{
    axis_variograms, class_histogram, class_std_map, default_max_lag, histogram_csv, mean_and_std,
    misclassification_rate, variogram_csv, RunReport,
};
use crate::optimizer::{OptimizerConfig, SweepMode};
use crate::potts::{classify_potts, PottsRunConfig};
use crate::seed::derive_seed;
use crate::stencil::DEFAULT_STENCIL_MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Model {
    Ising,
    Potts,
    Knn,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Ising => "ising",
            Model::Potts => "potts",
            Model::Knn => "knn",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Model::Ising => 1,
            Model::Potts => 2,
            Model::Knn => 3,
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ising" => Ok(Model::Ising),
            "potts" => Ok(Model::Potts),
            "knn" => Ok(Model::Knn),
            other => Err(Error::InvalidArgument(format!(
                "unknown model `{other}` (expected ising, potts or knn)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InputSource {
    Synthetic(MaternSpec),
    File(PathBuf),
}

/// The 50×50 smooth benchmark field.
pub fn benchmark_spec() -> MaternSpec {
    MaternSpec {
        mean: 50.0,
        sigma: 10.0,
        nu: 2.5,
        kappa: 0.2,
        lx: 50,
        ly: 50,
        seed: 0,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub input: InputSource,
    /// Draw a new synthetic field for every realization.
    pub resample_field: bool,
    pub models: Vec<Model>,
    pub n_classes: Vec<u16>,
    pub p: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub stencil_max: usize,
    pub k_max: usize,
    pub mode: SweepMode,
    pub max_sweeps: usize,
    /// Record wall time; off gives byte-identical outputs across runs.
    pub timing: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            input: InputSource::Synthetic(benchmark_spec()),
            resample_field: false,
            models: vec![Model::Ising, Model::Potts, Model::Knn],
            n_classes: vec![8, 16],
            p: vec![0.33, 0.5, 0.66],
            realizations: 100,
            seed: 0,
            stencil_max: DEFAULT_STENCIL_MAX,
            k_max: DEFAULT_K_MAX,
            mode: SweepMode::Sequential,
            max_sweeps: OptimizerConfig::default().max_sweeps,
            timing: true,
            output_dir: None,
        }
    }
}

fn parse_list<T: FromStr>(value: &str, line: usize, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::parse(line, format!("bad `{key}` entry `{s}`")))
        })
        .collect()
}

fn parse_one<T: FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(line, format!("bad value `{value}` for `{key}`")))
}

impl ExperimentConfig {
    /// Parses `key = value` lines over the defaults. Relative input paths
    /// are resolved against `base_dir` when given.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut synth = benchmark_spec();
        let mut file: Option<PathBuf> = None;
        for (no, raw) in text.lines().enumerate() {
            let no = no + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(no, format!("expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "input" => {
                    file = if value == "synthetic" {
                        None
                    } else {
                        let p = PathBuf::from(value);
                        Some(match base_dir {
                            Some(b) if p.is_relative() => b.join(p),
                            _ => p,
                        })
                    }
                }
                "synth.lx" => synth.lx = parse_one(value, no, key)?,
                "synth.ly" => synth.ly = parse_one(value, no, key)?,
                "synth.mean" => synth.mean = parse_one(value, no, key)?,
                "synth.sigma" => synth.sigma = parse_one(value, no, key)?,
                "synth.nu" => synth.nu = parse_one(value, no, key)?,
                "synth.kappa" => synth.kappa = parse_one(value, no, key)?,
                "synth.seed" => synth.seed = parse_one(value, no, key)?,
                "synth.resample" => cfg.resample_field = parse_one(value, no, key)?,
                "models" => cfg.models = parse_list(value, no, key)?,
                "nc" => cfg.n_classes = parse_list(value, no, key)?,
                "p" => cfg.p = parse_list(value, no, key)?,
                "realizations" => cfg.realizations = parse_one(value, no, key)?,
                "seed" => cfg.seed = parse_one(value, no, key)?,
                "mmax" => cfg.stencil_max = parse_one(value, no, key)?,
                "kmax" => cfg.k_max = parse_one(value, no, key)?,
                "mode" => cfg.mode = parse_one(value, no, key)?,
                "max_sweeps" => cfg.max_sweeps = parse_one(value, no, key)?,
                "timing" => cfg.timing = parse_one(value, no, key)?,
                "output_dir" => {
                    cfg.output_dir = Some(match base_dir {
                        Some(b) if Path::new(value).is_relative() => b.join(value),
                        _ => PathBuf::from(value),
                    })
                }
                other => return Err(Error::parse(no, format!("unknown key `{other}`"))),
            }
        }
        cfg.input = match file {
            Some(f) => InputSource::File(f),
            None => InputSource::Synthetic(synth),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path)?, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.realizations == 0 {
            return bad("realizations must be at least 1".into());
        }
        if self.models.is_empty() || self.n_classes.is_empty() || self.p.is_empty() {
            return bad("models, nc and p must each list at least one entry".into());
        }
        if let Some(nc) = self.n_classes.iter().find(|&&n| n < 2) {
            return bad(format!("every nc must be at least 2, got {nc}"));
        }
        if let Some(p) = self.p.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return bad(format!("every p must lie in (0, 1), got {p}"));
        }
        if self.stencil_max < 3 || self.stencil_max % 2 == 0 {
            return bad(format!(
                "mmax must be odd and at least 3, got {}",
                self.stencil_max
            ));
        }
        if self.resample_field && matches!(self.input, InputSource::File(_)) {
            return bad("synth.resample needs a synthetic input".into());
        }
        if self.k_max == 0 || self.max_sweeps == 0 {
            return bad("kmax and max_sweeps must be positive".into());
        }
        Ok(())
    }

    /// The complete reference field (the first one when resampling).
    pub fn load_truth(&self) -> Result<GridField> {
        if let (true, InputSource::Synthetic(spec)) = (self.resample_field, &self.input) {
            return Ok(MaternGenerator::new(spec)?.sample(field_seed(spec.seed, 0)));
        }
        let field = match &self.input {
            InputSource::Synthetic(spec) => generate_field(spec)?,
            InputSource::File(path) => load_grid(path)?,
        };
        if field.missing_count() > 0 {
            return Err(Error::InvalidGrid(format!(
                "reference field has {} missing nodes; a complete grid is required",
                field.missing_count()
            )));
        }
        Ok(field)
    }

    fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            mode: self.mode,
            max_sweeps: self.max_sweeps,
            ..OptimizerConfig::default()
        }
    }
}

/// A run that returned an error.
#[derive(Clone, Debug, PartialEq)]
pub struct RunFailure {
    pub model: Model,
    pub nc: u16,
    pub p: f64,
    pub realization: usize,
    pub message: String,
}

/// Aggregates over the successful runs of one `(model, N_c, p)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub model: Model,
    pub nc: u16,
    pub p: f64,
    pub runs: usize,
    pub f_mean: f64,
    /// `NaN` with fewer than two runs.
    pub f_std: f64,
    pub sweeps_mean: f64,
    pub cost_mean: f64,
    pub time_mean: f64,
    pub nonconverged: usize,
    pub best_realization: Option<usize>,
    pub worst_realization: Option<usize>,
    /// Chosen `k` per realization for the k-NN oracle.
    pub knn_k: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub cells: Vec<CellSummary>,
    pub runs: Vec<RunReport>,
    pub failures: Vec<RunFailure>,
}

impl ExperimentReport {
    pub fn cell(&self, model: Model, nc: u16, p: f64) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.nc == nc && c.p == p)
    }

    pub fn nonconverged(&self) -> usize {
        self.runs.iter().filter(|r| !r.converged).count()
    }

    /// The aggregate CSV text.
    pub fn aggregates_csv(&self) -> String {
        let mut out = String::from("model,nc,p,f_mean,f_std,sweeps_mean,cost_mean,time_mean\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.model.name(),
                c.nc,
                c.p,
                c.f_mean,
                c.f_std,
                c.sweeps_mean,
                c.cost_mean,
                c.time_mean
            );
        }
        out
    }
}

/// Stream tag for per-realization synthetic fields.
pub const FIELD_STREAM: u64 = 0xF1E1D;

fn field_seed(base: u64, r: usize) -> u64 {
    derive_seed(base, FIELD_STREAM, r as u64)
}

enum Truth {
    Fixed(GridField),
    Resampled(MaternGenerator),
}

struct Run {
    report: RunReport,
    classes: Vec<u16>,
    knn_k: Option<usize>,
}

struct Realization {
    truth: ClassField,
    runs: Vec<(Model, std::result::Result<Run, String>)>,
}

fn classify_one(
    model: Model,
    cfg: &ExperimentConfig,
    train: &GridField,
    truth: &ClassField,
    mask: &crate::grid::ValidationMask,
    nc: u16,
    seed: u64,
) -> Result<(ClassField, f64, f64, bool, Option<usize>)> {
    Ok(match model {
        Model::Ising => {
            let run_cfg = IsingRunConfig {
                n_classes: nc,
                stencil_max: cfg.stencil_max,
                optimizer: cfg.optimizer(),
                seed,
            };
            let out = classify_ising(train, &run_cfg)?;
            let (sweeps, cost, conv) = (
                out.mean_sweeps_per_level(),
                out.mean_terminal_cost(),
                out.converged(),
            );
            (out.classes, sweeps, cost, conv, None)
        }
        Model::Potts => {
            let run_cfg = PottsRunConfig {
                n_classes: nc,
                stencil_max: cfg.stencil_max,
                optimizer: cfg.optimizer(),
                seed,
            };
            let out = classify_potts(train, &run_cfg)?;
            (
                out.classes,
                out.sweeps as f64,
                out.terminal_cost,
                out.converged,
                None,
            )
        }
        Model::Knn => {
            let thresholds = build_thresholds(train, nc)?;
            let best = knn_oracle_best(train, &thresholds, truth, mask, &KnnConfig { k_max: cfg.k_max })?;
            (best.classes, 0.0, 0.0, true, Some(best.k))
        }
    })
}

fn run_realization(
    cfg: &ExperimentConfig,
    full: &GridField,
    nc: u16,
    p: f64,
    r: usize,
    thin_seed: u64,
) -> Result<Realization> {
    let (train, mask) = thin_sample(full, p, thin_seed)?;
    let thresholds = build_thresholds(&train, nc)?;
    let truth = classify_values(full, &thresholds);
    let runs = cfg
        .models
        .iter()
        .map(|&model| {
            let seed = derive_seed(thin_seed, model.tag(), 0);
            let start = Instant::now();
            let outcome = classify_one(model, cfg, &train, &truth, &mask, nc, seed).and_then(
                |(classes, sweeps, cost, converged, knn_k)| {
                    let wall = if cfg.timing {
                        start.elapsed().as_secs_f64()
                    } else {
                        0.0
                    };
                    let f = misclassification_rate(&truth, &classes, &mask)?;
                    Ok(Run {
                        report: RunReport {
                            model: model.name().to_string(),
                            nc,
                            p,
                            realization: r,
                            seed: thin_seed,
                            f,
                            sweeps,
                            terminal_cost: cost,
                            wall_seconds: wall,
                            converged,
                        },
                        classes: classes.indices(),
                        knn_k,
                    })
                },
            );
            (model, outcome.map_err(|e| e.to_string()))
        })
        .collect();
    Ok(Realization { truth, runs })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn cell_dir_name(model: Model, nc: u16, p: f64) -> String {
    format!("{}_nc{}_p{}", model.name(), nc, p)
}

fn write_cell_outputs(
    dir: &Path,
    lattice: Lattice,
    nc: u16,
    summary: &CellSummary,
    runs: &BTreeMap<usize, (&Run, &ClassField)>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let h_max = default_max_lag(lattice);
    let mut picks = Vec::new();
    if let Some(b) = summary.best_realization {
        let (_, truth) = runs[&b];
        picks.push(("truth", truth.clone()));
        picks.push(("best", ClassField::from_indices(lattice, &runs[&b].0.classes)?));
    }
    if let Some(w) = summary.worst_realization {
        picks.push(("worst", ClassField::from_indices(lattice, &runs[&w].0.classes)?));
    }
    for (tag, classes) in &picks {
        let curves = axis_variograms(classes, h_max)?;
        fs::write(dir.join(format!("variogram_{tag}.csv")), variogram_csv(&curves))?;
        let counts = class_histogram(classes, nc)?;
        fs::write(dir.join(format!("histogram_{tag}.csv")), histogram_csv(&counts))?;
        save_classes(classes, dir.join(format!("classes_{tag}.asc")))?;
    }
    if runs.len() >= 2 {
        let stack = runs
            .values()
            .map(|(run, _)| ClassField::from_indices(lattice, &run.classes))
            .collect::<Result<Vec<_>>>()?;
        save_values(lattice, &class_std_map(&stack)?, dir.join("std_map.asc"))?;
    }
    Ok(())
}

/// Runs every cell of `cfg`. Outputs are written when `output_dir` is set.
/// Failed runs are recorded and excluded from the aggregates.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (truth, lattice) = match (&cfg.input, cfg.resample_field) {
        (InputSource::Synthetic(spec), true) => (
            Truth::Resampled(MaternGenerator::new(spec)?),
            Lattice::new(spec.lx, spec.ly)?,
        ),
        _ => {
            let full = cfg.load_truth()?;
            let lattice = full.lattice();
            (Truth::Fixed(full), lattice)
        }
    };
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir.join("runs"))?;
    }

    let mut report = ExperimentReport {
        cells: Vec::new(),
        runs: Vec::new(),
        failures: Vec::new(),
    };
    let mut cell = 0u64;
    for &nc in &cfg.n_classes {
        for &p in &cfg.p {
            let realizations: Vec<(usize, std::result::Result<Realization, String>)> = (0..cfg.realizations)
                .into_par_iter()
                .map(|r| {
                    let thin_seed = derive_seed(cfg.seed, cell, r as u64);
                    let outcome = match &truth {
                        Truth::Fixed(full) => run_realization(cfg, full, nc, p, r, thin_seed),
                        Truth::Resampled(g) => {
                            let full = g.sample(field_seed(g.spec().seed, r));
                            run_realization(cfg, &full, nc, p, r, thin_seed)
                        }
                    };
                    (r, outcome.map_err(|e| e.to_string()))
                })
                .collect();
            cell += 1;

            for &model in &cfg.models {
                let mut ok: BTreeMap<usize, (&Run, &ClassField)> = BTreeMap::new();
                for (r, real) in &realizations {
                    let outcome = match real {
                        Ok(real) => real
                            .runs
                            .iter()
                            .find(|(m, _)| *m == model)
                            .map(|(_, o)| o.as_ref().map(|run| (run, &real.truth)).map_err(Clone::clone))
                            .expect("every model runs on every realization"),
                        Err(e) => Err(e.clone()),
                    };
                    match outcome {
                        Ok(pair) => {
                            ok.insert(*r, pair);
                        }
                        Err(message) => report.failures.push(RunFailure {
                            model,
                            nc,
                            p,
                            realization: *r,
                            message,
                        }),
                    }
                }
                let reports: Vec<&RunReport> = ok.values().map(|(run, _)| &run.report).collect();
                let f: Vec<f64> = reports.iter().map(|r| r.f).collect();
                // lowest / highest F, earliest realization on ties
                let best = ok
                    .iter()
                    .min_by(|a, b| a.1 .0.report.f.total_cmp(&b.1 .0.report.f))
                    .map(|(r, _)| *r);
                let worst = ok
                    .iter()
                    .rev()
                    .max_by(|a, b| a.1 .0.report.f.total_cmp(&b.1 .0.report.f))
                    .map(|(r, _)| *r);
                let summary = CellSummary {
                    model,
                    nc,
                    p,
                    runs: ok.len(),
                    f_mean: mean(f.iter().copied()),
                    f_std: mean_and_std(&f).map(|s| s.std).unwrap_or(f64::NAN),
                    sweeps_mean: mean(reports.iter().map(|r| r.sweeps)),
                    cost_mean: mean(reports.iter().map(|r| r.terminal_cost)),
                    time_mean: mean(reports.iter().map(|r| r.wall_seconds)),
                    nonconverged: reports.iter().filter(|r| !r.converged).count(),
                    best_realization: best,
                    worst_realization: worst,
                    knn_k: ok.values().filter_map(|(run, _)| run.knn_k).collect(),
                };
                if let Some(dir) = &cfg.output_dir {
                    for (r, (run, _)) in &ok {
                        let name = format!("{}_r{r:04}.json", cell_dir_name(model, nc, p));
                        fs::write(
                            dir.join("runs").join(name),
                            serde_json::to_string_pretty(&run.report)?,
                        )?;
                    }
                    write_cell_outputs(
                        &dir.join("cells").join(cell_dir_name(model, nc, p)),
                        lattice,
                        nc,
                        &summary,
                        &ok,
                    )?;
                }
                report.runs.extend(reports.into_iter().cloned());
                report.cells.push(summary);
            }
        }
    }

    if let Some(dir) = &cfg.output_dir {
        fs::write(dir.join("aggregates.csv"), report.aggregates_csv())?;
        let mut failures = String::from("model,nc,p,realization,error\n");
        for f in &report.failures {
            let msg = f.message.replace(['\n', ','], " ");
            let _ = writeln!(
                failures,
                "{},{},{},{},{msg}",
                f.model.name(),
                f.nc,
                f.p,
                f.realization
            );
        }
        fs::write(dir.join("failures.csv"), failures)?;
    }
    Ok(report)
}
