//! `spinfill` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 non-convergence
//! under `--strict`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, Parser, Subcommand, ValueEnum};

use spinfill::discretize::build_thresholds;
use spinfill::experiment::{run_experiment, ExperimentConfig};
use spinfill::fieldgen::{generate_field, MaternSpec};
use spinfill::grid::thin_sample;
use spinfill::io;
use spinfill::ising::{classify_ising, IsingRunConfig};
use spinfill::knn::classify_knn;
use spinfill::metrics::{
    axis_variograms, class_histogram, default_max_lag, histogram_csv, misclassification_rate, variogram_csv,
};
use spinfill::optimizer::{OptimizerConfig, SweepMode};
use spinfill::potts::{classify_potts, PottsRunConfig};
use spinfill::stencil::DEFAULT_STENCIL_MAX;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "spinfill",
    version,
    about = "Gap filling on regular grids with spin-model correlation matching"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Ising,
    Potts,
    Knn,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Sequential,
    Checkerboard,
}

impl From<ModeArg> for SweepMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sequential => SweepMode::Sequential,
            ModeArg::Checkerboard => SweepMode::Checkerboard,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fill the missing nodes of a grid with class labels.
    Classify(ClassifyArgs),
    /// Remove a random fraction of nodes from a complete grid.
    Thin {
        #[arg(long)]
        input: PathBuf,
        /// Fraction of nodes to remove, in (0, 1).
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        mask_out: PathBuf,
    },
    /// Draw a Gaussian field with Whittle-Matérn covariance.
    Synth {
        #[arg(long, default_value_t = 50)]
        lx: usize,
        #[arg(long, default_value_t = 50)]
        ly: usize,
        #[arg(long, default_value_t = 50.0)]
        mean: f64,
        #[arg(long, default_value_t = 10.0)]
        sigma: f64,
        #[arg(long, default_value_t = 2.5)]
        nu: f64,
        #[arg(long, default_value_t = 0.2)]
        kappa: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score an estimated class grid against the true classes.
    Metrics {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
        /// Validation mask (0/1 grid); all nodes when omitted.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Write both axis variograms of the estimate as CSV.
        #[arg(long)]
        variograms: Option<PathBuf>,
        /// Write the class histogram of the estimate as CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
        /// Number of classes for the histogram; defaults to the largest class seen.
        #[arg(long)]
        nc: Option<u16>,
        /// Largest variogram lag; defaults to a quarter of the shorter side.
        #[arg(long)]
        max_lag: Option<usize>,
    },
    /// Run a multi-realization experiment from a key=value config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Exit with code 3 if any run hit the sweep cap.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Number of classes.
    #[arg(long)]
    nc: u16,
    /// Largest stencil window (odd, >= 3).
    #[arg(long, default_value_t = DEFAULT_STENCIL_MAX)]
    mmax: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output class grid.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "sequential")]
    mode: ModeArg,
    #[arg(long, default_value_t = OptimizerConfig::default().max_sweeps)]
    max_sweeps: usize,
    /// Neighbours for the k-NN model.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Exit with code 3 if the optimizer hits the sweep cap.
    #[arg(long)]
    strict: bool,
}

enum Failure {
    Data(String),
    NotConverged(String),
}

impl From<spinfill::Error> for Failure {
    fn from(e: spinfill::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn classify(args: ClassifyArgs) -> Outcome {
    let ClassifyArgs {
        input,
        model,
        nc,
        mmax,
        seed,
        output,
        mode,
        max_sweeps,
        k,
        strict,
    } = args;
    let optimizer = OptimizerConfig {
        mode: mode.into(),
        max_sweeps,
        ..OptimizerConfig::default()
    };
    let train = io::load_grid(&input)?;
    let (classes, converged) = match model {
        ModelArg::Ising => {
            let cfg = IsingRunConfig {
                n_classes: nc,
                stencil_max: mmax,
                optimizer,
                seed,
            };
            let out = classify_ising(&train, &cfg)?;
            println!(
                "ising: {} levels, {:.2} sweeps/level, terminal cost {:.3e}, converged {}",
                out.levels.len(),
                out.mean_sweeps_per_level(),
                out.mean_terminal_cost(),
                out.converged()
            );
            let converged = out.converged();
            (out.classes, converged)
        }
        ModelArg::Potts => {
            let cfg = PottsRunConfig {
                n_classes: nc,
                stencil_max: mmax,
                optimizer,
                seed,
            };
            let out = classify_potts(&train, &cfg)?;
            println!(
                "potts: {} sweeps, terminal cost {:.3e}, converged {}",
                out.sweeps, out.terminal_cost, out.converged
            );
            (out.classes, out.converged)
        }
        ModelArg::Knn => {
            let thresholds = build_thresholds(&train, nc)?;
            let classes = classify_knn(&train, &thresholds, k)?;
            println!("knn: k = {k}");
            (classes, true)
        }
    };
    io::save_classes(&classes, &output)?;
    if strict && !converged {
        return Err(Failure::NotConverged(format!(
            "optimizer stopped at the sweep cap of {}",
            optimizer.max_sweeps
        )));
    }
    Ok(())
}

fn metrics(
    truth: PathBuf,
    estimate: PathBuf,
    mask: Option<PathBuf>,
    variograms: Option<PathBuf>,
    histogram: Option<PathBuf>,
    nc: Option<u16>,
    max_lag: Option<usize>,
) -> Outcome {
    let truth = io::load_classes(&truth)?;
    let estimate = io::load_classes(&estimate)?;
    let mask = match mask {
        Some(path) => io::load_mask(&path)?,
        None => spinfill::ValidationMask::from_flags(truth.lattice(), vec![true; truth.len()])?,
    };
    let f = misclassification_rate(&truth, &estimate, &mask)?;
    println!("f = {f}");
    println!("validation nodes = {}", mask.len());
    if let Some(path) = variograms {
        let h = max_lag.unwrap_or_else(|| default_max_lag(estimate.lattice()));
        let curves = axis_variograms(&estimate, h)?;
        std::fs::write(&path, variogram_csv(&curves)).map_err(spinfill::Error::from)?;
    }
    if let Some(path) = histogram {
        let top = truth
            .indices()
            .into_iter()
            .chain(estimate.indices())
            .max()
            .unwrap_or(1);
        let counts = class_histogram(&estimate, nc.unwrap_or(top))?;
        std::fs::write(&path, histogram_csv(&counts)).map_err(spinfill::Error::from)?;
    }
    Ok(())
}

fn bench(config: PathBuf, output_dir: Option<PathBuf>, strict: bool) -> Outcome {
    let mut cfg = ExperimentConfig::from_file(&config)?;
    if output_dir.is_some() {
        cfg.output_dir = output_dir;
    }
    let report = run_experiment(&cfg)?;
    print!("{}", report.aggregates_csv());
    if !report.failures.is_empty() {
        eprintln!("{} runs failed", report.failures.len());
    }
    let nonconverged = report.nonconverged();
    if strict && nonconverged > 0 {
        return Err(Failure::NotConverged(format!(
            "{nonconverged} runs hit the sweep cap"
        )));
    }
    Ok(())
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Classify(args) => classify(args),
        Command::Thin {
            input,
            p,
            seed,
            train_out,
            mask_out,
        } => {
            let full = io::load_grid(&input)?;
            let (train, mask) = thin_sample(&full, p, seed)?;
            io::save_grid(&train, &train_out)?;
            io::save_mask(&mask, &mask_out)?;
            println!("removed {} of {} nodes", mask.len(), full.len());
            Ok(())
        }
        Command::Synth {
            lx,
            ly,
            mean,
            sigma,
            nu,
            kappa,
            seed,
            output,
        } => {
            let field = generate_field(&MaternSpec {
                mean,
                sigma,
                nu,
                kappa,
                lx,
                ly,
                seed,
            })?;
            io::save_grid(&field, &output)?;
            Ok(())
        }
        Command::Metrics {
            truth,
            estimate,
            mask,
            variograms,
            histogram,
            nc,
            max_lag,
        } => metrics(truth, estimate, mask, variograms, histogram, nc, max_lag),
        Command::Bench {
            config,
            output_dir,
            strict,
        } => bench(config, output_dir, strict),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
    }
}
