//! Preset experiment drivers: build or load a completion problem, run the
//! selected methods, score them, and write deterministic reports.
//!
//! Every driver returns its results in memory; the `write_*` helpers put
//! them on disk. Metric files (`metrics.csv`, `summary.csv`, `report.json`,
//! trace CSVs) contain no timing data and are byte-identical across reruns
//! with the same configuration; wall-clock times go to `metadata.txt` only.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use deepmc::baselines::{soft_impute, train_aemc, AemcConfig, SoftImputeConfig};
use deepmc::datasets::{
    apply_mask, gen_synthetic, load_image_matrix, parse_movielens, split_ratings, MovieLensFormat,
    RatingsTable,
};
use deepmc::fcnn::{Activation, NetworkParams};
use deepmc::matrix::Matrix;
use deepmc::metrics::{aggregate, TrialReport};
use deepmc::rng::Rng;
use deepmc::trainer::{complete, train, EpochRecord, OmegaMode, TrainOutcome, TrainSchedule};
use deepmc::{Error, Result};

use crate::config::Settings;

pub const METHOD_DNN: &str = "dnn-nsr";
pub const METHOD_AEMC: &str = "aemc";
pub const METHOD_SOFT_IMPUTE: &str = "soft-impute";
pub const METHOD_ZERO_FILL: &str = "zero-fill";

// ─── presets ───

/// The experiment families the CLI knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Synthetic nonlinear low-rank data: the full method comparison.
    Synthetic,
    /// Penalty annealing ablation: annealed μ versus flat μ.
    Annealing,
    /// Extrapolation ablation: adaptive ω versus ω = 0.
    Extrapolation,
    /// Held-out ratings prediction (real table if present, synthetic
    /// fallback otherwise).
    Ratings,
    /// RGB image inpainting.
    Image,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Preset> {
        match name {
            "synthetic" => Ok(Preset::Synthetic),
            "annealing" => Ok(Preset::Annealing),
            "extrapolation" => Ok(Preset::Extrapolation),
            "ratings" => Ok(Preset::Ratings),
            "image" => Ok(Preset::Image),
            other => Err(Error::config(format!(
                "unknown preset {other:?}; expected synthetic, annealing, extrapolation, ratings, or image"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Synthetic => "synthetic",
            Preset::Annealing => "annealing",
            Preset::Extrapolation => "extrapolation",
            Preset::Ratings => "ratings",
            Preset::Image => "image",
        }
    }
}

// ─── shared pieces ───

/// Which completion methods a comparison run includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodSelection {
    pub dnn: bool,
    pub aemc: bool,
    pub soft_impute: bool,
}

impl MethodSelection {
    pub fn all() -> Self {
        MethodSelection {
            dnn: true,
            aemc: true,
            soft_impute: true,
        }
    }
}

/// Parses `all` or a comma list of method names.
pub fn parse_methods(text: &str) -> Result<MethodSelection> {
    if text == "all" {
        return Ok(MethodSelection::all());
    }
    let mut sel = MethodSelection {
        dnn: false,
        aemc: false,
        soft_impute: false,
    };
    for part in text.split(',') {
        match part.trim() {
            METHOD_DNN => sel.dnn = true,
            METHOD_AEMC => sel.aemc = true,
            METHOD_SOFT_IMPUTE => sel.soft_impute = true,
            other => {
                return Err(Error::config(format!(
                    "unknown method {other:?}; expected {METHOD_DNN}, {METHOD_AEMC}, or {METHOD_SOFT_IMPUTE}"
                )))
            }
        }
    }
    if sel == (MethodSelection { dnn: false, aemc: false, soft_impute: false }) {
        return Err(Error::config("method list selects nothing"));
    }
    Ok(sel)
}

/// `1 / max|x|` over the observed entries — the factor that maps the data
/// into the activation's comfortable range. Identity for all-zero input.
pub fn scale_factor(observed: &Matrix) -> f64 {
    let m = observed.max_abs();
    if m > 0.0 {
        1.0 / m
    } else {
        1.0
    }
}

/// Autoencoder layer widths for a given input height and hidden stack.
pub fn net_dims(input: usize, hidden: &[usize]) -> Vec<usize> {
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(input);
    dims.extend_from_slice(hidden);
    dims.push(input);
    dims
}

/// Overwrites the observed entries of `estimate` with their known values.
pub fn paste_observed(estimate: &mut Matrix, observed: &Matrix, mask: &Matrix) {
    for idx in 0..estimate.len() {
        if mask.as_slice()[idx] != 0.0 {
            estimate.as_mut_slice()[idx] = observed.as_slice()[idx];
        }
    }
}

// ─── single-method trial runners ───

/// One trained completion, with its training history and wall time.
pub struct DnnTrial {
    pub completed: Matrix,
    pub outcome: TrainOutcome,
    pub seconds: f64,
}

/// Trains the penalized autoencoder on `scale·X` and returns the completion
/// mapped back to the original scale, observed entries verbatim.
pub fn run_dnn_trial(
    observed: &Matrix,
    mask: &Matrix,
    hidden: &[usize],
    activation: Activation,
    schedule: &TrainSchedule,
    seed: u64,
) -> Result<DnnTrial> {
    let start = Instant::now();
    let s = scale_factor(observed);
    let xs = observed.scale(s);
    let dims = net_dims(observed.rows(), hidden);
    let init = NetworkParams::new_glorot(&dims, activation, &mut Rng::seed_from_u64(seed))?;
    let outcome = train(&xs, mask, init, schedule)?;
    let mut completed = complete(&outcome.params, &xs, mask).scale(1.0 / s);
    paste_observed(&mut completed, observed, mask);
    Ok(DnnTrial {
        completed,
        outcome,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// The plain-gradient-descent autoencoder under the same scaling contract.
pub fn run_aemc_trial(
    observed: &Matrix,
    mask: &Matrix,
    hidden: &[usize],
    activation: Activation,
    config: &AemcConfig,
    seed: u64,
) -> Result<(Matrix, f64)> {
    let start = Instant::now();
    let s = scale_factor(observed);
    let xs = observed.scale(s);
    let dims = net_dims(observed.rows(), hidden);
    let init = NetworkParams::new_glorot(&dims, activation, &mut Rng::seed_from_u64(seed))?;
    let outcome = train_aemc(&xs, mask, init, config)?;
    let mut completed = complete(&outcome.params, &xs, mask).scale(1.0 / s);
    paste_observed(&mut completed, observed, mask);
    Ok((completed, start.elapsed().as_secs_f64()))
}

/// Iterative singular value thresholding; scale-free, runs on the raw data.
pub fn run_soft_impute_trial(
    observed: &Matrix,
    mask: &Matrix,
    config: &SoftImputeConfig,
) -> Result<(Matrix, f64)> {
    let start = Instant::now();
    let outcome = soft_impute(observed, mask, config)?;
    Ok((outcome.completed, start.elapsed().as_secs_f64()))
}

// ─── comparison results ───

/// All trials of one method.
pub struct MethodRuns {
    pub method: String,
    pub reports: Vec<TrialReport>,
}

impl MethodRuns {
    /// Mean PSNR across trials.
    pub fn psnr_mean(&self) -> f64 {
        aggregate(&self.reports.iter().map(|r| r.psnr).collect::<Vec<_>>()).0
    }

    /// Mean held-out MSE across trials.
    pub fn mse_mean(&self) -> f64 {
        aggregate(&self.reports.iter().map(|r| r.mse).collect::<Vec<_>>()).0
    }
}

/// A finished comparison: per-method trial reports plus the training traces
/// of every penalized-autoencoder run, keyed by a file-name-safe label.
pub struct ComparisonOutcome {
    pub methods: Vec<MethodRuns>,
    pub traces: Vec<(String, Vec<EpochRecord>)>,
}

impl ComparisonOutcome {
    pub fn method(&self, name: &str) -> Option<&MethodRuns> {
        self.methods.iter().find(|m| m.method == name)
    }
}

// ─── synthetic comparison ───

/// Configuration of the synthetic-data method comparison.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    /// Fraction of entries removed.
    pub rho: f64,
    pub trials: usize,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub schedule: TrainSchedule,
    pub aemc: AemcConfig,
    pub soft_impute: SoftImputeConfig,
    pub methods: MethodSelection,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            rows: 300,
            cols: 200,
            rank: 10,
            rho: 0.5,
            trials: 5,
            seed: 11,
            hidden: vec![128, 64, 128],
            activation: Activation::Tanh,
            schedule: TrainSchedule {
                epochs: 400,
                warmup_epochs: 200,
                gamma: 2.0,
                ..TrainSchedule::default()
            },
            aemc: AemcConfig {
                epochs: 1500,
                lambda: 1e-3,
                step: 1e-2,
            },
            soft_impute: SoftImputeConfig {
                tau: 5.0,
                max_iters: 300,
                tol: 1e-5,
            },
            methods: MethodSelection::all(),
        }
    }
}

impl SyntheticSpec {
    /// Folds command-line / config-file overrides into the spec.
    pub fn apply(&mut self, s: &Settings) -> Result<()> {
        if let Some(v) = s.rows {
            self.rows = v;
        }
        if let Some(v) = s.cols {
            self.cols = v;
        }
        if let Some(v) = s.rank {
            self.rank = v;
        }
        if let Some(v) = s.rho {
            self.rho = v;
        }
        if let Some(v) = s.trials {
            self.trials = v;
        }
        if let Some(v) = s.seed {
            self.seed = v;
        }
        if let Some(v) = &s.arch {
            self.hidden = v.clone();
        }
        if let Some(v) = s.activation {
            self.activation = v;
        }
        if let Some(v) = &s.method {
            self.methods = parse_methods(v)?;
        }
        apply_schedule_settings(&mut self.schedule, s);
        Ok(())
    }

    /// Defaults of the annealing ablation: a smaller problem, three trials,
    /// and the flat-penalty variant supplied at run time.
    pub fn annealing_preset() -> Self {
        SyntheticSpec {
            trials: 3,
            seed: 19,
            ..SyntheticSpec::default()
        }
    }

    /// Defaults of the extrapolation ablation: a heavily damped step
    /// (large γ), warm phase the whole way, and a sparser mask, where the
    /// momentum term has the most room to help.
    pub fn extrapolation_preset() -> Self {
        SyntheticSpec {
            rho: 0.8,
            trials: 1,
            seed: 23,
            schedule: TrainSchedule {
                epochs: 400,
                warmup_epochs: 400,
                gamma: 1e3,
                mu_max: 1e5,
                ..TrainSchedule::default()
            },
            ..SyntheticSpec::default()
        }
    }

    /// Resolved configuration, echoed into run metadata.
    pub fn describe(&self) -> Vec<String> {
        let mut lines = vec![
            format!("rows={}", self.rows),
            format!("cols={}", self.cols),
            format!("rank={}", self.rank),
            format!("rho={}", self.rho),
            format!("trials={}", self.trials),
            format!("seed={}", self.seed),
            format!("arch={}", arch_string(&self.hidden)),
            format!("activation={}", self.activation.name()),
        ];
        lines.extend(describe_schedule(&self.schedule));
        lines
    }
}

fn arch_string(hidden: &[usize]) -> String {
    hidden.iter().map(ToString::to_string).collect::<Vec<_>>().join("-")
}

/// Folds the schedule-shaped overrides into an existing schedule.
pub fn apply_schedule_settings(schedule: &mut TrainSchedule, s: &Settings) {
    if let Some(v) = s.epochs {
        schedule.epochs = v;
    }
    if let Some(v) = s.warmup {
        schedule.warmup_epochs = v;
    }
    if let Some(v) = s.mu_min {
        schedule.mu_min = v;
    }
    if let Some(v) = s.mu_max {
        schedule.mu_max = v;
    }
    if let Some(v) = s.gamma {
        schedule.gamma = v;
    }
    if let Some(v) = s.alpha {
        schedule.alpha = v;
    }
    if let Some(v) = s.beta {
        schedule.beta = v;
    }
    if let Some(v) = s.lambda {
        schedule.lambda = v;
    }
    if let Some(v) = s.omega {
        schedule.omega = v;
    }
}

fn describe_schedule(sch: &TrainSchedule) -> Vec<String> {
    vec![
        format!("epochs={}", sch.epochs),
        format!("warmup={}", sch.warmup_epochs),
        format!("mu_min={}", sch.mu_min),
        format!("mu_max={}", sch.mu_max),
        format!("gamma={}", sch.gamma),
        format!("alpha={}", sch.alpha),
        format!("beta={}", sch.beta),
        format!("lambda={}", sch.lambda),
        format!(
            "omega={}",
            match sch.omega {
                OmegaMode::Adaptive => "adaptive".to_string(),
                OmegaMode::Fixed(w) => format!("{w}"),
            }
        ),
    ]
}

fn synthetic_problem(
    rows: usize,
    cols: usize,
    rank: usize,
    rho: f64,
    seed: u64,
) -> Result<(Matrix, Matrix, Matrix)> {
    let mut rng = Rng::seed_from_u64(seed);
    let x = gen_synthetic(rows, cols, rank, &mut rng)?;
    let (observed, mask) = apply_mask(&x, rho, &mut rng)?;
    Ok((x, observed, mask))
}

/// Runs the synthetic method comparison and returns per-method reports.
pub fn run_synthetic(spec: &SyntheticSpec) -> Result<ComparisonOutcome> {
    if spec.trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    let mut dnn = MethodRuns {
        method: METHOD_DNN.into(),
        reports: Vec::new(),
    };
    let mut aemc = MethodRuns {
        method: METHOD_AEMC.into(),
        reports: Vec::new(),
    };
    let mut soft = MethodRuns {
        method: METHOD_SOFT_IMPUTE.into(),
        reports: Vec::new(),
    };
    let mut traces = Vec::new();

    for t in 0..spec.trials {
        let seed_t = spec.seed.wrapping_add(t as u64);
        let (x, observed, mask) = synthetic_problem(spec.rows, spec.cols, spec.rank, spec.rho, seed_t)?;

        if spec.methods.dnn {
            let trial = run_dnn_trial(&observed, &mask, &spec.hidden, spec.activation, &spec.schedule, seed_t)?;
            dnn.reports
                .push(TrialReport::new(&x, &trial.completed, &mask, None, seed_t, trial.seconds));
            traces.push((format!("{METHOD_DNN}_trial{}", t + 1), trial.outcome.history));
        }
        if spec.methods.aemc {
            let (completed, secs) =
                run_aemc_trial(&observed, &mask, &spec.hidden, spec.activation, &spec.aemc, seed_t)?;
            aemc.reports
                .push(TrialReport::new(&x, &completed, &mask, None, seed_t, secs));
        }
        if spec.methods.soft_impute {
            let (completed, secs) = run_soft_impute_trial(&observed, &mask, &spec.soft_impute)?;
            soft.reports
                .push(TrialReport::new(&x, &completed, &mask, None, seed_t, secs));
        }
    }

    let methods = [dnn, aemc, soft]
        .into_iter()
        .filter(|m| !m.reports.is_empty())
        .collect();
    Ok(ComparisonOutcome { methods, traces })
}

// ─── annealing ablation ───

/// Same data and training budget, two penalty schedules: the spec's
/// annealed μ_max versus a flat μ fixed at `mu_flat`.
pub fn run_annealing(spec: &SyntheticSpec, mu_flat: f64) -> Result<ComparisonOutcome> {
    if spec.trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    let mut annealed = MethodRuns {
        method: "annealed".into(),
        reports: Vec::new(),
    };
    let mut flat = MethodRuns {
        method: "flat".into(),
        reports: Vec::new(),
    };
    let mut traces = Vec::new();

    let mut flat_schedule = spec.schedule.clone();
    flat_schedule.mu_min = mu_flat;
    flat_schedule.mu_max = mu_flat;

    for t in 0..spec.trials {
        let seed_t = spec.seed.wrapping_add(t as u64);
        let (x, observed, mask) = synthetic_problem(spec.rows, spec.cols, spec.rank, spec.rho, seed_t)?;

        let a = run_dnn_trial(&observed, &mask, &spec.hidden, spec.activation, &spec.schedule, seed_t)?;
        annealed
            .reports
            .push(TrialReport::new(&x, &a.completed, &mask, None, seed_t, a.seconds));
        traces.push((format!("annealed_trial{}", t + 1), a.outcome.history));

        let f = run_dnn_trial(&observed, &mask, &spec.hidden, spec.activation, &flat_schedule, seed_t)?;
        flat.reports
            .push(TrialReport::new(&x, &f.completed, &mask, None, seed_t, f.seconds));
        traces.push((format!("flat_trial{}", t + 1), f.outcome.history));
    }

    Ok(ComparisonOutcome {
        methods: vec![annealed, flat],
        traces,
    })
}

// ─── extrapolation ablation ───

/// Q of a committed epoch re-evaluated at a different penalty weight. The
/// slack residuals enter Q as `(c1 + c2)/(2μ)`, so moving from the record's
/// μ to `mu_final` is an exact arithmetic shift — no retraining needed.
pub fn q_at_mu(record: &EpochRecord, mu_final: f64) -> f64 {
    let slack = 0.5 * (record.c1 + record.c2);
    record.q - slack / record.mu + slack / mu_final
}

/// Outcome of the extrapolation ablation: the two training traces and where
/// the adaptive run first matches the frozen run's final objective.
pub struct ExtrapolationOutcome {
    pub frozen: Vec<EpochRecord>,
    pub adaptive: Vec<EpochRecord>,
    /// Final Q of the ω = 0 run (its last epoch, μ = μ_min).
    pub target_q: f64,
    /// First adaptive epoch whose μ_min-adjusted Q is at or below the
    /// target; `None` if the adaptive run never got there.
    pub epochs_to_target: Option<usize>,
}

/// Runs the same problem twice — adaptive ω and ω = 0 — from the same
/// initialization, and measures how much sooner the adaptive run reaches
/// the frozen run's final objective value.
pub fn run_extrapolation(spec: &SyntheticSpec) -> Result<ExtrapolationOutcome> {
    let seed = spec.seed;
    let (_x, observed, mask) = synthetic_problem(spec.rows, spec.cols, spec.rank, spec.rho, seed)?;

    let mut frozen_schedule = spec.schedule.clone();
    frozen_schedule.omega = OmegaMode::Fixed(0.0);
    let mut adaptive_schedule = spec.schedule.clone();
    adaptive_schedule.omega = OmegaMode::Adaptive;

    let frozen = run_dnn_trial(&observed, &mask, &spec.hidden, spec.activation, &frozen_schedule, seed)?;
    let adaptive =
        run_dnn_trial(&observed, &mask, &spec.hidden, spec.activation, &adaptive_schedule, seed)?;

    let frozen_hist = frozen.outcome.history;
    let adaptive_hist = adaptive.outcome.history;
    let target_q = frozen_hist
        .last()
        .map(|r| r.q)
        .ok_or_else(|| Error::numerical("frozen run produced no epochs"))?;
    let mu_final = frozen_hist.last().map(|r| r.mu).unwrap();

    let epochs_to_target = adaptive_hist
        .iter()
        .find(|r| q_at_mu(r, mu_final) <= target_q)
        .map(|r| r.epoch);

    Ok(ExtrapolationOutcome {
        frozen: frozen_hist,
        adaptive: adaptive_hist,
        target_q,
        epochs_to_target,
    })
}

// ─── ratings ───

/// Configuration of the held-out ratings experiment.
#[derive(Debug, Clone)]
pub struct RatingsSpec {
    /// Path to a ratings table on disk; when absent a synthetic table is
    /// generated instead.
    pub dataset: Option<PathBuf>,
    pub format: MovieLensFormat,
    /// Synthetic fallback shape.
    pub users: usize,
    pub items: usize,
    pub rank: usize,
    /// Fraction of the synthetic table that is rated.
    pub density: f64,
    /// Fraction of known ratings used for training; the rest are held out.
    pub train_fraction: f64,
    pub trials: usize,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub schedule: TrainSchedule,
    pub aemc: AemcConfig,
}

impl Default for RatingsSpec {
    fn default() -> Self {
        RatingsSpec {
            dataset: None,
            format: MovieLensFormat::Ml100kTab,
            users: 200,
            items: 150,
            rank: 8,
            density: 0.25,
            train_fraction: 0.7,
            trials: 3,
            seed: 29,
            hidden: vec![96, 48, 96],
            activation: Activation::Tanh,
            schedule: TrainSchedule {
                epochs: 300,
                warmup_epochs: 150,
                gamma: 2.0,
                ..TrainSchedule::default()
            },
            aemc: AemcConfig {
                epochs: 1500,
                lambda: 1e-3,
                step: 1e-2,
            },
        }
    }
}

impl RatingsSpec {
    pub fn apply(&mut self, s: &Settings) -> Result<()> {
        if let Some(v) = &s.dataset {
            self.dataset = Some(v.clone());
        }
        if let Some(v) = s.rows {
            self.users = v;
        }
        if let Some(v) = s.cols {
            self.items = v;
        }
        if let Some(v) = s.rank {
            self.rank = v;
        }
        if let Some(v) = s.trials {
            self.trials = v;
        }
        if let Some(v) = s.seed {
            self.seed = v;
        }
        if let Some(v) = &s.arch {
            self.hidden = v.clone();
        }
        if let Some(v) = s.activation {
            self.activation = v;
        }
        apply_schedule_settings(&mut self.schedule, s);
        Ok(())
    }

    pub fn describe(&self) -> Vec<String> {
        let mut lines = vec![
            format!(
                "dataset={}",
                self.dataset
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "synthetic".into())
            ),
            format!("train_fraction={}", self.train_fraction),
            format!("trials={}", self.trials),
            format!("seed={}", self.seed),
            format!("arch={}", arch_string(&self.hidden)),
            format!("activation={}", self.activation.name()),
        ];
        lines.extend(describe_schedule(&self.schedule));
        lines
    }
}

/// A synthetic ratings table: a nonlinear low-rank score matrix quantized
/// to the 1–5 star scale and sampled at the given density.
pub fn synthetic_ratings(
    users: usize,
    items: usize,
    rank: usize,
    density: f64,
    rng: &mut Rng,
) -> Result<RatingsTable> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::config(format!("density must lie in [0, 1], got {density}")));
    }
    let x = gen_synthetic(users, items, rank, rng)?;
    let m = x.max_abs();
    if m == 0.0 {
        return Err(Error::numerical("synthetic score matrix is identically zero"));
    }
    let mut entries = Vec::new();
    for u in 0..users {
        for i in 0..items {
            if rng.uniform01() < density {
                let score = (3.0 + 2.0 * x.get(u, i) / m).round().clamp(1.0, 5.0);
                entries.push((u, i, score));
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::data("synthetic ratings table came out empty; raise the density"));
    }
    Ok(RatingsTable {
        n_users: users,
        n_items: items,
        entries,
    })
}

const RATING_MIN: f64 = 1.0;
const RATING_MAX: f64 = 5.0;

/// Train on the known ratings (scaled into [0.2, 1]), predict the held-out
/// ones, and score NMAE on exactly those entries. Predictions are mapped
/// back to the star scale and clamped to `[1, 5]`.
pub fn run_ratings(spec: &RatingsSpec) -> Result<ComparisonOutcome> {
    if spec.trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    let loaded = match &spec.dataset {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::data(format!("cannot read ratings table {}: {e}", path.display())))?;
            Some(parse_movielens(&text, spec.format)?)
        }
        None => None,
    };

    let mut dnn = MethodRuns {
        method: METHOD_DNN.into(),
        reports: Vec::new(),
    };
    let mut aemc = MethodRuns {
        method: METHOD_AEMC.into(),
        reports: Vec::new(),
    };
    let mut traces = Vec::new();

    for t in 0..spec.trials {
        let seed_t = spec.seed.wrapping_add(t as u64);
        let mut rng = Rng::seed_from_u64(seed_t);
        let table = match &loaded {
            Some(table) => table.clone(),
            None => synthetic_ratings(spec.users, spec.items, spec.rank, spec.density, &mut rng)?,
        };
        let (train_table, test_table) = split_ratings(&table, spec.train_fraction, &mut rng)?;
        if test_table.entries.is_empty() {
            return Err(Error::data("held-out split is empty; lower the train fraction"));
        }
        let (train_x, train_mask) = train_table.to_matrices();
        let (test_x, test_mask) = test_table.to_matrices();
        // Metrics run over entries where this mask is zero — exactly the
        // held-out ratings.
        let eval_mask = Matrix::filled(test_mask.rows(), test_mask.cols(), 1.0).sub(&test_mask);

        {
            let start = Instant::now();
            let xs = train_x.scale(1.0 / RATING_MAX);
            let dims = net_dims(xs.rows(), &spec.hidden);
            let init = NetworkParams::new_glorot(&dims, spec.activation, &mut Rng::seed_from_u64(seed_t))?;
            let outcome = train(&xs, &train_mask, init, &spec.schedule)?;
            let pred = complete(&outcome.params, &xs, &train_mask)
                .scale(RATING_MAX)
                .map(|v| v.clamp(RATING_MIN, RATING_MAX));
            let pred_on_test = pred.hadamard(&test_mask);
            dnn.reports.push(TrialReport::new(
                &test_x,
                &pred_on_test,
                &eval_mask,
                Some((RATING_MIN, RATING_MAX)),
                seed_t,
                start.elapsed().as_secs_f64(),
            ));
            traces.push((format!("{METHOD_DNN}_trial{}", t + 1), outcome.history));
        }
        {
            let start = Instant::now();
            let xs = train_x.scale(1.0 / RATING_MAX);
            let dims = net_dims(xs.rows(), &spec.hidden);
            let init = NetworkParams::new_glorot(&dims, spec.activation, &mut Rng::seed_from_u64(seed_t))?;
            let outcome = train_aemc(&xs, &train_mask, init, &spec.aemc)?;
            let pred = complete(&outcome.params, &xs, &train_mask)
                .scale(RATING_MAX)
                .map(|v| v.clamp(RATING_MIN, RATING_MAX));
            let pred_on_test = pred.hadamard(&test_mask);
            aemc.reports.push(TrialReport::new(
                &test_x,
                &pred_on_test,
                &eval_mask,
                Some((RATING_MIN, RATING_MAX)),
                seed_t,
                start.elapsed().as_secs_f64(),
            ));
        }
    }

    Ok(ComparisonOutcome {
        methods: vec![dnn, aemc],
        traces,
    })
}

// ─── image inpainting ───

/// Configuration of the image inpainting experiment.
#[derive(Debug, Clone)]
pub struct ImageSpec {
    pub image: PathBuf,
    /// Fraction of pixels removed (per channel entry).
    pub rho: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub schedule: TrainSchedule,
    pub soft_impute: SoftImputeConfig,
}

impl Default for ImageSpec {
    fn default() -> Self {
        ImageSpec {
            image: PathBuf::from("testdata/scene64.png"),
            rho: 0.5,
            seed: 31,
            hidden: vec![48, 24, 48],
            activation: Activation::Tanh,
            schedule: TrainSchedule {
                epochs: 400,
                warmup_epochs: 200,
                gamma: 2.0,
                ..TrainSchedule::default()
            },
            soft_impute: SoftImputeConfig {
                tau: 1.0,
                max_iters: 300,
                tol: 1e-5,
            },
        }
    }
}

impl ImageSpec {
    pub fn apply(&mut self, s: &Settings) -> Result<()> {
        if let Some(v) = &s.dataset {
            self.image = v.clone();
        }
        if let Some(v) = s.rho {
            self.rho = v;
        }
        if let Some(v) = s.seed {
            self.seed = v;
        }
        if let Some(v) = &s.arch {
            self.hidden = v.clone();
        }
        if let Some(v) = s.activation {
            self.activation = v;
        }
        apply_schedule_settings(&mut self.schedule, s);
        Ok(())
    }

    pub fn describe(&self) -> Vec<String> {
        let mut lines = vec![
            format!("image={}", self.image.display()),
            format!("rho={}", self.rho),
            format!("seed={}", self.seed),
            format!("arch={}", arch_string(&self.hidden)),
            format!("activation={}", self.activation.name()),
        ];
        lines.extend(describe_schedule(&self.schedule));
        lines
    }
}

/// The image comparison plus the reconstructed channel-stacked matrices,
/// so callers can save them back as PNGs.
pub struct ImageOutcome {
    pub comparison: ComparisonOutcome,
    pub dnn_image: Matrix,
    pub soft_image: Matrix,
    pub observed_image: Matrix,
}

/// Inpaints a masked RGB image with the penalized autoencoder, iterative
/// thresholding, and the zero-fill strawman.
pub fn run_image(spec: &ImageSpec) -> Result<ImageOutcome> {
    let x = load_image_matrix(&spec.image)?;
    let mut rng = Rng::seed_from_u64(spec.seed);
    let (observed, mask) = apply_mask(&x, spec.rho, &mut rng)?;

    let dnn_trial = run_dnn_trial(&observed, &mask, &spec.hidden, spec.activation, &spec.schedule, spec.seed)?;
    let (soft_completed, soft_secs) = run_soft_impute_trial(&observed, &mask, &spec.soft_impute)?;

    let dnn = MethodRuns {
        method: METHOD_DNN.into(),
        reports: vec![TrialReport::new(
            &x,
            &dnn_trial.completed,
            &mask,
            None,
            spec.seed,
            dnn_trial.seconds,
        )],
    };
    let soft = MethodRuns {
        method: METHOD_SOFT_IMPUTE.into(),
        reports: vec![TrialReport::new(&x, &soft_completed, &mask, None, spec.seed, soft_secs)],
    };
    let zero = MethodRuns {
        method: METHOD_ZERO_FILL.into(),
        reports: vec![TrialReport::new(&x, &observed, &mask, None, spec.seed, 0.0)],
    };

    Ok(ImageOutcome {
        comparison: ComparisonOutcome {
            methods: vec![dnn, soft, zero],
            traces: vec![(METHOD_DNN.to_string(), dnn_trial.outcome.history)],
        },
        dnn_image: dnn_trial.completed,
        soft_image: soft_completed,
        observed_image: observed,
    })
}

// ─── report writing ───

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::data(format!("cannot write {}: {e}", path.display()))
}

/// Writes one training trace with the fixed column set
/// `epoch,Q,mu_theta,omega,L_theta,backtracks,c1,c2`.
pub fn write_trace_csv(path: &Path, records: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["epoch", "Q", "mu_theta", "omega", "L_theta", "backtracks", "c1", "c2"])
        .map_err(|e| csv_error(path, e))?;
    for r in records {
        w.write_record(&[
            r.epoch.to_string(),
            fmt(r.q),
            fmt(r.mu_theta),
            fmt(r.omega),
            fmt(r.l_theta),
            r.backtracks.to_string(),
            fmt(r.c1),
            fmt(r.c2),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| csv_error(path, e))
}

/// Per-trial metric rows. Timing never appears here: the file is
/// byte-identical across reruns.
pub fn write_metrics_csv(path: &Path, methods: &[MethodRuns]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["method", "trial", "seed", "psnr", "mse", "ssim", "nmae"])
        .map_err(|e| csv_error(path, e))?;
    for m in methods {
        for (i, r) in m.reports.iter().enumerate() {
            w.write_record(&[
                m.method.clone(),
                (i + 1).to_string(),
                r.seed.to_string(),
                fmt(r.psnr),
                fmt(r.mse),
                fmt(r.ssim),
                r.nmae.map(fmt).unwrap_or_default(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| csv_error(path, e))
}

/// Mean and population standard deviation of every metric, per method.
pub fn write_summary_csv(path: &Path, methods: &[MethodRuns]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["method", "metric", "mean", "sd"])
        .map_err(|e| csv_error(path, e))?;
    for m in methods {
        let columns: [(&str, Vec<f64>); 3] = [
            ("psnr", m.reports.iter().map(|r| r.psnr).collect()),
            ("mse", m.reports.iter().map(|r| r.mse).collect()),
            ("ssim", m.reports.iter().map(|r| r.ssim).collect()),
        ];
        for (name, values) in columns {
            let (mean, sd) = aggregate(&values);
            w.write_record(&[m.method.clone(), name.to_string(), fmt(mean), fmt(sd)])
                .map_err(|e| csv_error(path, e))?;
        }
        let nmae: Vec<f64> = m.reports.iter().filter_map(|r| r.nmae).collect();
        if nmae.len() == m.reports.len() && !nmae.is_empty() {
            let (mean, sd) = aggregate(&nmae);
            w.write_record(&[m.method.clone(), "nmae".to_string(), fmt(mean), fmt(sd)])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| csv_error(path, e))
}

#[derive(Serialize)]
struct TrialJson {
    trial: usize,
    seed: u64,
    psnr: f64,
    mse: f64,
    ssim: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nmae: Option<f64>,
}

#[derive(Serialize)]
struct MethodJson {
    method: String,
    psnr_mean: f64,
    psnr_sd: f64,
    mse_mean: f64,
    mse_sd: f64,
    ssim_mean: f64,
    ssim_sd: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nmae_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nmae_sd: Option<f64>,
    trials: Vec<TrialJson>,
}

#[derive(Serialize)]
struct ReportJson {
    preset: String,
    methods: Vec<MethodJson>,
}

/// Structured mirror of the two CSVs, for programmatic consumers.
pub fn write_report_json(path: &Path, preset: &str, methods: &[MethodRuns]) -> Result<()> {
    let mut out = ReportJson {
        preset: preset.to_string(),
        methods: Vec::new(),
    };
    for m in methods {
        let psnr: Vec<f64> = m.reports.iter().map(|r| r.psnr).collect();
        let mse: Vec<f64> = m.reports.iter().map(|r| r.mse).collect();
        let ssim: Vec<f64> = m.reports.iter().map(|r| r.ssim).collect();
        let nmae: Vec<f64> = m.reports.iter().filter_map(|r| r.nmae).collect();
        let (psnr_mean, psnr_sd) = aggregate(&psnr);
        let (mse_mean, mse_sd) = aggregate(&mse);
        let (ssim_mean, ssim_sd) = aggregate(&ssim);
        let nmae_agg = if nmae.len() == m.reports.len() && !nmae.is_empty() {
            Some(aggregate(&nmae))
        } else {
            None
        };
        out.methods.push(MethodJson {
            method: m.method.clone(),
            psnr_mean,
            psnr_sd,
            mse_mean,
            mse_sd,
            ssim_mean,
            ssim_sd,
            nmae_mean: nmae_agg.map(|(mean, _)| mean),
            nmae_sd: nmae_agg.map(|(_, sd)| sd),
            trials: m
                .reports
                .iter()
                .enumerate()
                .map(|(i, r)| TrialJson {
                    trial: i + 1,
                    seed: r.seed,
                    psnr: r.psnr,
                    mse: r.mse,
                    ssim: r.ssim,
                    nmae: r.nmae,
                })
                .collect(),
        });
    }
    let text = serde_json::to_string_pretty(&out)
        .map_err(|e| Error::data(format!("cannot serialize report: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|e| csv_error(path, e))
}

/// Free-form run notes (configuration echo, wall times). This is the one
/// output file allowed to differ between reruns.
pub fn write_metadata(path: &Path, lines: &[String]) -> Result<()> {
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| csv_error(path, e))
}

/// Writes the full output set of a comparison run into `dir`.
pub fn write_comparison_outputs(
    dir: &Path,
    preset: &str,
    outcome: &ComparisonOutcome,
    metadata: &[String],
) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::data(format!("cannot create {}: {e}", dir.display())))?;
    for (label, records) in &outcome.traces {
        write_trace_csv(&dir.join(format!("trace_{label}.csv")), records)?;
    }
    write_metrics_csv(&dir.join("metrics.csv"), &outcome.methods)?;
    write_summary_csv(&dir.join("summary.csv"), &outcome.methods)?;
    write_report_json(&dir.join("report.json"), preset, &outcome.methods)?;

    let mut lines = metadata.to_vec();
    lines.push(String::new());
    for m in &outcome.methods {
        for (i, r) in m.reports.iter().enumerate() {
            lines.push(format!("wall_seconds {} trial {} = {:.3}", m.method, i + 1, r.wall_time));
        }
    }
    write_metadata(&dir.join("metadata.txt"), &lines)
}

#[derive(Serialize)]
struct ExtrapolationJson {
    preset: String,
    target_q: f64,
    frozen_epochs: usize,
    epochs_to_target: Option<usize>,
    epoch_ratio: Option<f64>,
}

/// Writes the extrapolation ablation: both traces plus the headline
/// epochs-to-target comparison.
pub fn write_extrapolation_outputs(
    dir: &Path,
    outcome: &ExtrapolationOutcome,
    metadata: &[String],
) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::data(format!("cannot create {}: {e}", dir.display())))?;
    write_trace_csv(&dir.join("trace_adaptive.csv"), &outcome.adaptive)?;
    write_trace_csv(&dir.join("trace_frozen.csv"), &outcome.frozen)?;
    let report = ExtrapolationJson {
        preset: "extrapolation".into(),
        target_q: outcome.target_q,
        frozen_epochs: outcome.frozen.len(),
        epochs_to_target: outcome.epochs_to_target,
        epoch_ratio: outcome
            .epochs_to_target
            .map(|k| k as f64 / outcome.frozen.len().max(1) as f64),
    };
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::data(format!("cannot serialize report: {e}")))?;
    std::fs::write(&path, text + "\n").map_err(|e| csv_error(&path, e))?;
    write_metadata(&dir.join("metadata.txt"), metadata)
}

// ─── tests ───
