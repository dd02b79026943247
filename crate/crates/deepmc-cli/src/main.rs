//! `deepmc` — matrix completion experiments from the command line.
//!
//! Exit codes: 0 on success, 2 for configuration/usage errors, 3 for data
//! errors, 4 for numerical failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use deepmc::datasets::{
    apply_mask, gen_synthetic, load_matrix_csv, load_observed_csv, save_image_matrix,
    save_matrix_csv, save_observed_csv,
};
use deepmc::fcnn::{Activation, NetworkParams};
use deepmc::matrix::Matrix;
use deepmc::metrics::{aggregate, TrialReport};
use deepmc::rng::Rng;
use deepmc::trainer::{complete, train, StopReason, TrainSchedule};
use deepmc::{Error, Result};

use deepmc_cli::checkpoint::{load_checkpoint, save_checkpoint};
use deepmc_cli::config::{parse_arch, parse_omega, Settings};
use deepmc_cli::experiment::{
    apply_schedule_settings, net_dims, paste_observed, run_annealing, run_extrapolation,
    run_image, run_ratings, run_synthetic, scale_factor, write_comparison_outputs,
    write_extrapolation_outputs, write_metrics_csv, write_trace_csv, ComparisonOutcome,
    ImageSpec, MethodRuns, Preset, RatingsSpec, SyntheticSpec,
};

#[derive(Parser)]
#[command(name = "deepmc", version, about = "Matrix completion with a prox-regularized autoencoder")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

/// Flags shared by training-flavored commands. Every field is optional so a
/// config file can fill it; a flag given on the command line always wins.
#[derive(Args, Debug, Default)]
struct OverrideArgs {
    /// Plain-text key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hidden layer widths, e.g. 128-64-128
    #[arg(long)]
    arch: Option<String>,
    /// Hidden activation: tanh, sigmoid, softplus, or scaled-tanh
    #[arg(long)]
    activation: Option<String>,
    /// Synthetic data height
    #[arg(long)]
    rows: Option<usize>,
    /// Synthetic data width
    #[arg(long)]
    cols: Option<usize>,
    /// Synthetic data rank
    #[arg(long)]
    rank: Option<usize>,
    /// Fraction of entries removed
    #[arg(long)]
    rho: Option<f64>,
    /// Number of independent trials
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial t uses seed + t
    #[arg(long)]
    seed: Option<u64>,
    /// Training epochs K
    #[arg(long)]
    epochs: Option<usize>,
    /// Warm epochs E before adaptation kicks in
    #[arg(long)]
    warmup: Option<usize>,
    /// Final penalty weight
    #[arg(long)]
    mu_min: Option<f64>,
    /// Initial penalty weight
    #[arg(long)]
    mu_max: Option<f64>,
    /// Step damping γ > 1
    #[arg(long)]
    gamma: Option<f64>,
    /// ℓ1 strength on hidden codes
    #[arg(long)]
    alpha: Option<f64>,
    /// Nuclear-norm strength on weight surrogates
    #[arg(long)]
    beta: Option<f64>,
    /// Weight decay
    #[arg(long)]
    lambda: Option<f64>,
    /// Extrapolation: "adaptive" or a fixed weight such as 0
    #[arg(long)]
    omega: Option<String>,
    /// Methods to run: all, or a comma list of dnn-nsr, aemc, soft-impute
    #[arg(long)]
    method: Option<String>,
    /// Data file for the ratings and image presets
    #[arg(long)]
    dataset: Option<PathBuf>,
}

impl OverrideArgs {
    /// Flag values layered over the config file.
    fn resolve(&self) -> Result<Settings> {
        let flags = Settings {
            rows: self.rows,
            cols: self.cols,
            rank: self.rank,
            rho: self.rho,
            trials: self.trials,
            seed: self.seed,
            arch: self.arch.as_deref().map(parse_arch).transpose()?,
            activation: self.activation.as_deref().map(Activation::from_name).transpose()?,
            epochs: self.epochs,
            warmup: self.warmup,
            mu_min: self.mu_min,
            mu_max: self.mu_max,
            gamma: self.gamma,
            alpha: self.alpha,
            beta: self.beta,
            lambda: self.lambda,
            omega: self.omega.as_deref().map(parse_omega).transpose()?,
            method: self.method.clone(),
            dataset: self.dataset.clone(),
        };
        let file = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        Ok(flags.or(file))
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic nonlinear low-rank matrix as dense CSV
    Synthesize {
        #[arg(long, default_value_t = 300)]
        rows: usize,
        #[arg(long, default_value_t = 200)]
        cols: usize,
        #[arg(long, default_value_t = 10)]
        rank: usize,
        #[arg(long, default_value_t = 11)]
        seed: u64,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove a random fraction of entries from a dense CSV matrix
    Mask {
        /// Dense matrix CSV
        #[arg(long)]
        input: PathBuf,
        /// Fraction of entries removed
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 11)]
        seed: u64,
        /// Output CSV with empty cells for missing entries
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the prox-regularized autoencoder on an observed-matrix CSV
    Train {
        /// Observed matrix CSV (empty cells = missing)
        #[arg(long)]
        input: PathBuf,
        /// Checkpoint output path
        #[arg(long)]
        out: PathBuf,
        /// Optional per-epoch training trace CSV
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Data scaling before training: "auto" (1/max|x|) or a number
        #[arg(long, default_value = "auto")]
        scale: String,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Fill the missing entries of an observed matrix with a trained model
    Complete {
        /// Observed matrix CSV (empty cells = missing)
        #[arg(long)]
        input: PathBuf,
        /// Model checkpoint from `train`
        #[arg(long)]
        model: PathBuf,
        /// Must match the scale the model was trained with
        #[arg(long, default_value = "auto")]
        scale: String,
        /// Output dense CSV
        #[arg(long)]
        out: PathBuf,
    },
    /// Score an estimate against a reference matrix
    Evaluate {
        /// Ground-truth dense CSV
        #[arg(long)]
        reference: PathBuf,
        /// Estimate dense CSV
        #[arg(long)]
        estimate: PathBuf,
        /// Observed CSV whose mask marks the held-out entries
        #[arg(long)]
        observed: PathBuf,
        /// Rating-scale lower bound; enables NMAE together with --nmae-max
        #[arg(long)]
        nmae_min: Option<f64>,
        /// Rating-scale upper bound; enables NMAE together with --nmae-min
        #[arg(long)]
        nmae_max: Option<f64>,
        /// Optional metrics CSV output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a preset experiment end to end and write its reports
    Experiment {
        /// synthetic, annealing, extrapolation, ratings, or image
        #[arg(long)]
        preset: String,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Run one preset across a grid of values for a single hyperparameter
    Sweep {
        /// synthetic, annealing, ratings, or image
        #[arg(long)]
        preset: String,
        /// Hyperparameter to vary: mu-max, mu-min, rho, epochs, gamma, alpha, beta, lambda, or rank
        #[arg(long)]
        param: String,
        /// Comma-separated values for the parameter
        #[arg(long)]
        values: String,
        /// Output directory; each value gets a subdirectory
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(match e {
            Error::Config(_) => 2,
            Error::Data(_) => 3,
            Error::Numerical(_) => 4,
        });
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Synthesize {
            rows,
            cols,
            rank,
            seed,
            out,
        } => {
            let mut rng = Rng::seed_from_u64(seed);
            let x = gen_synthetic(rows, cols, rank, &mut rng)?;
            save_matrix_csv(&out, &x)?;
            println!("wrote {} ({rows}x{cols}, rank {rank}, seed {seed})", out.display());
            Ok(())
        }
        Cmd::Mask { input, rho, seed, out } => {
            let x = load_matrix_csv(&input)?;
            let (observed, mask) = apply_mask(&x, rho, &mut Rng::seed_from_u64(seed))?;
            save_observed_csv(&out, &observed, &mask)?;
            println!(
                "wrote {} ({} of {} entries observed)",
                out.display(),
                mask.sum() as usize,
                x.len()
            );
            Ok(())
        }
        Cmd::Train {
            input,
            out,
            trace,
            scale,
            overrides,
        } => {
            let settings = overrides.resolve()?;
            let (x, mask) = load_observed_csv(&input)?;
            let factor = parse_scale(&scale, &x)?;
            let xs = x.scale(factor);

            let hidden = settings.arch.clone().unwrap_or_else(|| vec![64, 32, 64]);
            let activation = settings.activation.unwrap_or(Activation::Tanh);
            let seed = settings.seed.unwrap_or(0);
            let mut schedule = TrainSchedule::default();
            apply_schedule_settings(&mut schedule, &settings);

            let dims = net_dims(x.rows(), &hidden);
            let init = NetworkParams::new_glorot(&dims, activation, &mut Rng::seed_from_u64(seed))?;
            let outcome = train(&xs, &mask, init, &schedule)?;
            save_checkpoint(&out, &outcome.params)?;
            if let Some(path) = &trace {
                write_trace_csv(path, &outcome.history)?;
            }
            let stop = match outcome.stop {
                StopReason::Converged { epoch } => format!("converged at epoch {epoch}"),
                StopReason::EpochLimit => "epoch budget exhausted".to_string(),
            };
            println!(
                "trained {} epochs, Q {:.6e} -> {:.6e} ({stop})",
                outcome.history.len(),
                outcome.q_initial,
                outcome.q_final
            );
            println!("wrote {}", out.display());
            Ok(())
        }
        Cmd::Complete {
            input,
            model,
            scale,
            out,
        } => {
            let (x, mask) = load_observed_csv(&input)?;
            let params = load_checkpoint(&model)?;
            if params.dims()[0] != x.rows() {
                return Err(Error::data(format!(
                    "model expects input height {} but the matrix has {} rows",
                    params.dims()[0],
                    x.rows()
                )));
            }
            let factor = parse_scale(&scale, &x)?;
            let xs = x.scale(factor);
            let mut completed = complete(&params, &xs, &mask).scale(1.0 / factor);
            paste_observed(&mut completed, &x, &mask);
            save_matrix_csv(&out, &completed)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Cmd::Evaluate {
            reference,
            estimate,
            observed,
            nmae_min,
            nmae_max,
            out,
        } => {
            let reference_m = load_matrix_csv(&reference)?;
            let estimate_m = load_matrix_csv(&estimate)?;
            let (_, mask) = load_observed_csv(&observed)?;
            for (name, m) in [("estimate", &estimate_m), ("observed", &mask)] {
                if m.shape() != reference_m.shape() {
                    return Err(Error::data(format!(
                        "{name} is {:?} but the reference is {:?}",
                        m.shape(),
                        reference_m.shape()
                    )));
                }
            }
            let range = match (nmae_min, nmae_max) {
                (Some(lo), Some(hi)) => Some((lo, hi)),
                (None, None) => None,
                _ => {
                    return Err(Error::config(
                        "--nmae-min and --nmae-max must be given together",
                    ))
                }
            };
            let report = TrialReport::new(&reference_m, &estimate_m, &mask, range, 0, 0.0);
            println!("psnr={}", report.psnr);
            println!("mse={}", report.mse);
            println!("ssim={}", report.ssim);
            println!("ssim_raw={}", report.ssim_raw);
            if let Some(nmae) = report.nmae {
                println!("nmae={nmae}");
            }
            if let Some(path) = out {
                write_metrics_csv(
                    &path,
                    &[MethodRuns {
                        method: "estimate".into(),
                        reports: vec![report],
                    }],
                )?;
            }
            Ok(())
        }
        Cmd::Experiment { preset, out, overrides } => {
            let preset = Preset::parse(&preset)?;
            let settings = overrides.resolve()?;
            let comparison = execute_preset(preset, &settings, &out)?;
            if let Some(outcome) = comparison {
                print_comparison(&outcome);
            }
            println!("reports in {}", out.display());
            Ok(())
        }
        Cmd::Sweep {
            preset,
            param,
            values,
            out,
            overrides,
        } => {
            let preset = Preset::parse(&preset)?;
            if preset == Preset::Extrapolation {
                return Err(Error::config(
                    "sweep needs a method comparison; the extrapolation preset has none",
                ));
            }
            let base = overrides.resolve()?;
            let mut rows: Vec<(String, ComparisonOutcome)> = Vec::new();
            for raw in values.split(',') {
                let value = raw.trim();
                if value.is_empty() {
                    return Err(Error::config("empty value in sweep list"));
                }
                let settings = settings_with(&base, &param, value)?;
                let sub = out.join(format!("{}-{}", param.replace('-', "_"), value));
                println!("── {param} = {value} ──");
                let outcome = execute_preset(preset, &settings, &sub)?
                    .expect("non-extrapolation presets always return a comparison");
                print_comparison(&outcome);
                rows.push((value.to_string(), outcome));
            }
            write_sweep_csv(&out.join("sweep.csv"), &param, &rows)?;
            println!("sweep summary in {}", out.join("sweep.csv").display());
            Ok(())
        }
    }
}

/// Runs one preset with resolved settings, writes its reports under
/// `out_dir`, and returns the comparison when the preset produces one.
fn execute_preset(preset: Preset, settings: &Settings, out_dir: &Path) -> Result<Option<ComparisonOutcome>> {
    match preset {
        Preset::Synthetic => {
            let mut spec = SyntheticSpec::default();
            spec.apply(settings)?;
            let outcome = run_synthetic(&spec)?;
            write_comparison_outputs(out_dir, preset.name(), &outcome, &spec.describe())?;
            Ok(Some(outcome))
        }
        Preset::Annealing => {
            let mut spec = SyntheticSpec::annealing_preset();
            spec.apply(settings)?;
            let outcome = run_annealing(&spec, spec.schedule.mu_min)?;
            write_comparison_outputs(out_dir, preset.name(), &outcome, &spec.describe())?;
            Ok(Some(outcome))
        }
        Preset::Extrapolation => {
            let mut spec = SyntheticSpec::extrapolation_preset();
            spec.apply(settings)?;
            let outcome = run_extrapolation(&spec)?;
            write_extrapolation_outputs(out_dir, &outcome, &spec.describe())?;
            match outcome.epochs_to_target {
                Some(k) => println!(
                    "adaptive extrapolation reached the frozen run's final Q ({:.6e}) at epoch {k} of {}",
                    outcome.target_q,
                    outcome.frozen.len()
                ),
                None => println!(
                    "adaptive extrapolation never reached the frozen run's final Q ({:.6e})",
                    outcome.target_q
                ),
            }
            Ok(None)
        }
        Preset::Ratings => {
            let mut spec = RatingsSpec::default();
            spec.apply(settings)?;
            let outcome = run_ratings(&spec)?;
            write_comparison_outputs(out_dir, preset.name(), &outcome, &spec.describe())?;
            Ok(Some(outcome))
        }
        Preset::Image => {
            let mut spec = ImageSpec::default();
            spec.apply(settings)?;
            let outcome = run_image(&spec)?;
            write_comparison_outputs(out_dir, preset.name(), &outcome.comparison, &spec.describe())?;
            save_image_matrix(&out_dir.join("completed_dnn-nsr.png"), &outcome.dnn_image)?;
            save_image_matrix(&out_dir.join("completed_soft-impute.png"), &outcome.soft_image)?;
            save_image_matrix(&out_dir.join("observed.png"), &outcome.observed_image)?;
            Ok(Some(outcome.comparison))
        }
    }
}

fn print_comparison(outcome: &ComparisonOutcome) {
    for m in &outcome.methods {
        let psnr: Vec<f64> = m.reports.iter().map(|r| r.psnr).collect();
        let mse: Vec<f64> = m.reports.iter().map(|r| r.mse).collect();
        let ssim: Vec<f64> = m.reports.iter().map(|r| r.ssim).collect();
        let (psnr_mean, psnr_sd) = aggregate(&psnr);
        let (mse_mean, _) = aggregate(&mse);
        let (ssim_mean, _) = aggregate(&ssim);
        let mut line = format!(
            "  {:<12} PSNR {:.2} ± {:.2} dB, MSE {:.4e}, SSIM {:.4}",
            m.method, psnr_mean, psnr_sd, mse_mean, ssim_mean
        );
        let nmae: Vec<f64> = m.reports.iter().filter_map(|r| r.nmae).collect();
        if nmae.len() == m.reports.len() && !nmae.is_empty() {
            let (nmae_mean, _) = aggregate(&nmae);
            line.push_str(&format!(", NMAE {nmae_mean:.4}"));
        }
        println!("{line}");
    }
}

/// Applies one sweep value on top of the base settings.
fn settings_with(base: &Settings, param: &str, value: &str) -> Result<Settings> {
    let mut s = base.clone();
    let bad = |what: &str| Error::config(format!("sweep value {value:?} is not a valid {what}"));
    match param.replace('-', "_").as_str() {
        "mu_max" => s.mu_max = Some(value.parse().map_err(|_| bad("number"))?),
        "mu_min" => s.mu_min = Some(value.parse().map_err(|_| bad("number"))?),
        "rho" => s.rho = Some(value.parse().map_err(|_| bad("number"))?),
        "epochs" => s.epochs = Some(value.parse().map_err(|_| bad("count"))?),
        "gamma" => s.gamma = Some(value.parse().map_err(|_| bad("number"))?),
        "alpha" => s.alpha = Some(value.parse().map_err(|_| bad("number"))?),
        "beta" => s.beta = Some(value.parse().map_err(|_| bad("number"))?),
        "lambda" => s.lambda = Some(value.parse().map_err(|_| bad("number"))?),
        "rank" => s.rank = Some(value.parse().map_err(|_| bad("count"))?),
        other => {
            return Err(Error::config(format!(
                "cannot sweep over {other:?}; supported: mu-max, mu-min, rho, epochs, gamma, alpha, beta, lambda, rank"
            )))
        }
    }
    Ok(s)
}

/// One row per (value, method): the sweep's headline numbers.
fn write_sweep_csv(path: &Path, param: &str, rows: &[(String, ComparisonOutcome)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))?;
    let fail = |e: csv::Error| Error::data(format!("cannot write {}: {e}", path.display()));
    w.write_record([param, "method", "psnr_mean", "psnr_sd", "mse_mean", "ssim_mean"])
        .map_err(fail)?;
    for (value, outcome) in rows {
        for m in &outcome.methods {
            let psnr: Vec<f64> = m.reports.iter().map(|r| r.psnr).collect();
            let mse: Vec<f64> = m.reports.iter().map(|r| r.mse).collect();
            let ssim: Vec<f64> = m.reports.iter().map(|r| r.ssim).collect();
            let (psnr_mean, psnr_sd) = aggregate(&psnr);
            w.write_record(&[
                value.clone(),
                m.method.clone(),
                format!("{psnr_mean}"),
                format!("{psnr_sd}"),
                format!("{}", aggregate(&mse).0),
                format!("{}", aggregate(&ssim).0),
            ])
            .map_err(fail)?;
        }
    }
    w.flush()
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))
}

/// `auto` → 1/max|x| over the observed entries; otherwise a positive number.
fn parse_scale(text: &str, observed: &Matrix) -> Result<f64> {
    if text == "auto" {
        return Ok(scale_factor(observed));
    }
    let v: f64 = text
        .parse()
        .map_err(|_| Error::config(format!("scale must be \"auto\" or a number, got {text:?}")))?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::config(format!("scale must be positive and finite, got {v}")));
    }
    Ok(v)
}
