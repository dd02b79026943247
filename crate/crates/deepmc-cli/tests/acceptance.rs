//! End-to-end acceptance suite.
//!
//! Each test prints one `PASS:`/`FAIL:` line (plus its measurements) before
//! asserting, so a full run reads as a checklist. Budgeted runtimes are
//! printed for reference, never asserted — wall time is hardware-dependent.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use deepmc::datasets::{apply_mask, gen_synthetic};
use deepmc::fcnn::{
    grad_theta, smooth_objective, Activation, NetworkParams, SlackTerms,
};
use deepmc::matrix::{svd, Matrix};
use deepmc::prox::{clip_linf, soft_threshold, svt};
use deepmc::rng::Rng;
use deepmc::trainer::{train, StopReason, TrainSchedule};
use deepmc_cli::experiment::{
    self, net_dims, run_annealing, run_extrapolation, run_image, run_ratings,
    run_synthetic, ImageSpec, RatingsSpec, SyntheticSpec, METHOD_AEMC,
    METHOD_DNN, METHOD_SOFT_IMPUTE, METHOD_ZERO_FILL,
};

/// Prints the checklist verdict line and panics on failure.
fn verdict(name: &str, pass: bool, detail: &str) {
    if pass {
        println!("PASS: {name} — {detail}");
    } else {
        println!("FAIL: {name} — {detail}");
        panic!("{name} failed: {detail}");
    }
}

// ─── proximal operators against brute force ───

/// `soft_threshold` must agree with direct grid minimization of
/// `½(z − x)² + τ|z|`, `svt` must be a local minimizer of
/// `½‖Z − A‖²_F + τ‖Z‖_*`, and `clip_linf` must be an idempotent projection
/// into the box. Budget: 10 s.
#[test]
fn prox_closed_forms_match_bruteforce_oracles() {
    let start = Instant::now();
    let mut rng = Rng::seed_from_u64(401);

    // Scalar shrinkage vs. coordinatewise grid search on a 1e-4 lattice.
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = 3.0 * rng.normal();
        let tau = rng.uniform(0.0, 1.0) * 2.0;
        let closed = soft_threshold(x, tau);
        let lo = x - 2.0 * tau - 1.0;
        let steps = ((2.0 * (2.0 * tau + 1.0)) / 1e-4).ceil() as usize;
        let mut best = (f64::INFINITY, lo);
        for k in 0..=steps {
            let z = lo + k as f64 * 1e-4;
            let f = 0.5 * (z - x) * (z - x) + tau * z.abs();
            if f < best.0 {
                best = (f, z);
            }
        }
        worst = worst.max((closed - best.1).abs());
    }
    verdict(
        "prox/soft-threshold",
        worst < 1e-4,
        &format!("max |closed-form − grid argmin| = {worst:.2e} (tolerance 1e-4)"),
    );

    // SVT output beats 200 random perturbations per matrix.
    let objective = |z: &Matrix, a: &Matrix, tau: f64| -> f64 {
        let fit = 0.5 * z.sub(a).frobenius_norm_sq();
        let nuc: f64 = svd(z).expect("perturbation svd").s.iter().sum();
        fit + tau * nuc
    };
    let mut violations = 0usize;
    for _ in 0..50 {
        let rows = 2 + (rng.uniform(0.0, 1.0) * 5.0) as usize;
        let cols = 2 + (rng.uniform(0.0, 1.0) * 5.0) as usize;
        let a = Matrix::from_vec(
            rows,
            cols,
            (0..rows * cols).map(|_| 2.0 * rng.normal()).collect(),
        );
        let tau = 0.1 + rng.uniform(0.0, 1.0);
        let z = svt(&a, tau).expect("svt");
        let fz = objective(&z, &a, tau);
        for _ in 0..200 {
            let eps = 1e-4;
            let p = Matrix::from_vec(
                rows,
                cols,
                (0..rows * cols).map(|_| eps * rng.normal()).collect(),
            );
            if objective(&z.add(&p), &a, tau) < fz - 1e-12 {
                violations += 1;
            }
        }
    }
    verdict(
        "prox/svt-local-min",
        violations == 0,
        &format!("{violations} of 10000 perturbations beat the closed form"),
    );

    // Projection: idempotent and inside the box.
    let mut idempotent = true;
    let mut feasible = true;
    for _ in 0..100 {
        let m = Matrix::from_vec(4, 3, (0..12).map(|_| 5.0 * rng.normal()).collect());
        let bound = 0.5 + rng.uniform(0.0, 1.0);
        let once = clip_linf(&m, bound);
        let twice = clip_linf(&once, bound);
        idempotent &= once == twice;
        feasible &= once.as_slice().iter().all(|v| v.abs() <= bound);
    }
    verdict(
        "prox/clip-idempotent-feasible",
        idempotent && feasible,
        &format!("idempotent={idempotent} feasible={feasible}"),
    );
    println!("  prox oracle block took {:.1}s (budget 10s)", start.elapsed().as_secs_f64());
}

// ─── analytic gradient against central finite differences ───

/// Reverse-mode gradients of the smooth objective must match central finite
/// differences to < 1e-5 relative error on two architectures, two
/// activations, and with the slack penalties both on and off. Budget: 30 s.
#[test]
fn backprop_matches_finite_differences() {
    let start = Instant::now();
    let mut worst = 0.0f64;

    for dims in [vec![6usize, 4, 6], vec![10, 8, 5, 8, 10]] {
        for activation in [Activation::Tanh, Activation::Sigmoid] {
            for with_slack in [false, true] {
                let mut rng = Rng::seed_from_u64(
                    7 + dims.len() as u64 * 10 + with_slack as u64,
                );
                let params =
                    NetworkParams::new_glorot(&dims, activation, &mut rng).expect("init");
                let n = 5;
                let m = dims[0];
                let x = Matrix::from_vec(m, n, (0..m * n).map(|_| rng.normal()).collect());
                let mask = Matrix::from_vec(
                    m,
                    n,
                    (0..m * n)
                        .map(|_| if rng.uniform(0.0, 1.0) < 0.4 { 0.0 } else { 1.0 })
                        .collect(),
                );

                // Fixed, slightly off-anchor slack targets exercise the
                // penalty gradients.
                let trace = params.forward(&x);
                let h: Vec<Matrix> = (0..params.n_hidden())
                    .map(|i| trace.hidden(i).map(|v| 0.9 * v + 0.01))
                    .collect();
                let v: Vec<Matrix> =
                    params.weights.iter().map(|w| w.map(|e| 0.95 * e)).collect();
                let (mu_h, mu_v) = (0.7, 1.3);
                let lambda = 1e-2;

                let slack = SlackTerms { h: &h, mu_h, v: &v, mu_v };
                let slack_opt = with_slack.then_some(&slack);

                let analytic = grad_theta(&params, &trace, &x, &mask, lambda, slack_opt);
                let mut flat_grad = Vec::new();
                for w in &analytic.weights {
                    for j in 0..w.cols() {
                        for i in 0..w.rows() {
                            flat_grad.push(w.get(i, j));
                        }
                    }
                }
                for b in &analytic.biases {
                    flat_grad.extend_from_slice(b.as_slice());
                }

                let theta = params.flatten();
                let eval = |flat: &[f64]| -> f64 {
                    let p = NetworkParams::unflatten(&dims, activation, flat)
                        .expect("unflatten");
                    let t = p.forward(&x);
                    let s = SlackTerms { h: &h, mu_h, v: &v, mu_v };
                    smooth_objective(&p, &t, &x, &mask, lambda, with_slack.then_some(&s))
                        .total()
                };
                let eps = 1e-6;
                let scale = flat_grad
                    .iter()
                    .fold(1.0f64, |a, g| a.max(g.abs()));
                for (k, g) in flat_grad.iter().enumerate() {
                    let mut plus = theta.clone();
                    plus[k] += eps;
                    let mut minus = theta.clone();
                    minus[k] -= eps;
                    let fd = (eval(&plus) - eval(&minus)) / (2.0 * eps);
                    worst = worst.max((fd - g).abs() / scale);
                }
            }
        }
    }
    verdict(
        "gradient/finite-difference",
        worst < 1e-5,
        &format!("max relative error {worst:.2e} (tolerance 1e-5)"),
    );
    println!("  gradient block took {:.1}s (budget 30s)", start.elapsed().as_secs_f64());
}

// ─── objective descent and box feasibility over many seeded runs ───

/// Over 20 seeded 300-epoch runs on 40×30 data the final objective never
/// exceeds the initial one, and any per-epoch increase beyond 1e-9 relative
/// slack happens only on epochs that took the retry branch. Parameters stay
/// inside the ℓ∞ box after every epoch. Budget: 5 min.
#[test]
fn objective_descends_and_parameters_stay_in_box() {
    let start = Instant::now();
    let schedule = TrainSchedule {
        epochs: 300,
        warmup_epochs: 150,
        gamma: 1e3,
        ..TrainSchedule::default()
    };
    let dims = net_dims(40, &[24, 12, 24]);

    let mut end_to_end_ok = true;
    let mut step_violations = 0usize;
    let mut off_retry_violations = 0usize;
    let mut box_ok = true;
    for run in 0..20u64 {
        let mut rng = Rng::seed_from_u64(500 + run);
        let x = gen_synthetic(40, 30, 5, &mut rng).expect("gen");
        let (observed, mask) = apply_mask(&x, 0.5, &mut rng).expect("mask");
        let s = experiment::scale_factor(&observed);
        let xs = observed.scale(s);
        let init = NetworkParams::new_glorot(&dims, Activation::Tanh, &mut rng).expect("init");
        let outcome = train(&xs, &mask, init, &schedule).expect("train");

        end_to_end_ok &= outcome.q_final <= outcome.q_initial;
        for rec in &outcome.history {
            if rec.q > rec.q_prev_same_mu + 1e-9 * rec.q_prev_same_mu.abs() {
                step_violations += 1;
                if rec.retries == 0 {
                    off_retry_violations += 1;
                }
            }
            box_ok &= rec.theta_linf <= schedule.box_bound;
        }
    }
    verdict(
        "trainer/objective-descends",
        end_to_end_ok && off_retry_violations == 0,
        &format!(
            "final ≤ initial in all 20 runs: {end_to_end_ok}; per-step increases {step_violations} \
             (all on retry epochs: {})",
            off_retry_violations == 0
        ),
    );
    verdict(
        "trainer/parameters-in-box",
        box_ok,
        "‖θ‖∞ ≤ box bound after every epoch of every run",
    );
    println!("  descent block took {:.1}s (budget 5min)", start.elapsed().as_secs_f64());
}

// ─── determinism of the command-line pipeline ───

/// Two executions of the same experiment configuration must produce
/// byte-identical metric and trace files (timestamps live in metadata.txt,
/// which is exempt).
#[test]
fn reruns_are_byte_identical() {
    let bin = env!("CARGO_BIN_EXE_deepmc");
    let tmp = std::env::temp_dir().join("deepmc-acceptance-determinism");
    let _ = std::fs::remove_dir_all(&tmp);
    let run = |dir: &Path| {
        let out = Command::new(bin)
            .args([
                "experiment",
                "--preset",
                "synthetic",
                "--rows",
                "40",
                "--cols",
                "30",
                "--rank",
                "3",
                "--trials",
                "2",
                "--epochs",
                "60",
                "--out",
            ])
            .arg(dir)
            .output()
            .expect("spawn deepmc");
        assert!(
            out.status.success(),
            "experiment run failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let (a, b) = (tmp.join("a"), tmp.join("b"));
    run(&a);
    run(&b);

    let mut compared = 0usize;
    let mut identical = true;
    for entry in std::fs::read_dir(&a).expect("read out dir") {
        let name = entry.expect("dir entry").file_name();
        let fname = name.to_string_lossy().to_string();
        if fname == "metadata.txt" {
            continue;
        }
        let left = std::fs::read(a.join(&fname)).expect("read first run");
        let right = std::fs::read(b.join(&fname)).expect("read second run");
        identical &= left == right;
        compared += 1;
    }
    verdict(
        "cli/deterministic-reruns",
        identical && compared >= 4,
        &format!("{compared} artifact files compared byte-for-byte"),
    );
    let _ = std::fs::remove_dir_all(&tmp);
}

// ─── synthetic completion beats both baselines ───

/// On the 300×200 rank-10 half-observed benchmark (5 trials) the penalized
/// network must beat the plain-gradient autoencoder and soft-impute by
/// ≥ 1 dB mean PSNR, stay above 24 dB itself, and post the smallest mean
/// held-out MSE. Budget: 20 min.
#[test]
fn beats_baselines_on_synthetic_completion() {
    let start = Instant::now();
    let spec = SyntheticSpec::default();
    let outcome = run_synthetic(&spec).expect("synthetic comparison");
    let dnn = outcome.method(METHOD_DNN).expect("dnn runs");
    let aemc = outcome.method(METHOD_AEMC).expect("aemc runs");
    let si = outcome.method(METHOD_SOFT_IMPUTE).expect("soft-impute runs");

    let (p_dnn, p_aemc, p_si) = (dnn.psnr_mean(), aemc.psnr_mean(), si.psnr_mean());
    let (m_dnn, m_aemc, m_si) = (dnn.mse_mean(), aemc.mse_mean(), si.mse_mean());
    println!(
        "  psnr: dnn {p_dnn:.2} dB, aemc {p_aemc:.2} dB, soft-impute {p_si:.2} dB; \
         mse: {m_dnn:.4} / {m_aemc:.4} / {m_si:.4}"
    );
    verdict(
        "synthetic/psnr-floor",
        p_dnn >= 24.0,
        &format!("dnn mean PSNR {p_dnn:.2} dB (floor 24 dB)"),
    );
    verdict(
        "synthetic/margin-over-aemc",
        p_dnn >= p_aemc + 1.0,
        &format!("margin {:.2} dB (needs ≥ 1 dB)", p_dnn - p_aemc),
    );
    verdict(
        "synthetic/margin-over-soft-impute",
        p_dnn >= p_si + 1.0,
        &format!("margin {:.2} dB (needs ≥ 1 dB)", p_dnn - p_si),
    );
    verdict(
        "synthetic/smallest-mse",
        m_dnn < m_aemc && m_dnn < m_si,
        &format!("dnn {m_dnn:.4} vs aemc {m_aemc:.4}, soft-impute {m_si:.4}"),
    );
    println!("  synthetic block took {:.0}s (budget 20min)", start.elapsed().as_secs_f64());
}

// ─── gradual penalty tightening ablation ───

/// Annealing from a large μ_max down to μ_min = 1 must beat holding μ at 1
/// throughout by ≥ 3 dB mean PSNR on the same benchmark. Budget: 30 min.
#[test]
fn annealing_ablation_shows_gap() {
    let start = Instant::now();
    let spec = SyntheticSpec::annealing_preset();
    let outcome = run_annealing(&spec, 1.0).expect("annealing ablation");
    let annealed = outcome.method("annealed").expect("annealed arm");
    let flat = outcome.method("flat").expect("flat arm");
    let gap = annealed.psnr_mean() - flat.psnr_mean();
    println!(
        "  annealed {:.2} dB vs flat {:.2} dB",
        annealed.psnr_mean(),
        flat.psnr_mean()
    );
    verdict(
        "annealing/gap",
        gap >= 3.0,
        &format!("gap {gap:.2} dB (needs ≥ 3 dB)"),
    );
    println!("  annealing block took {:.0}s (budget 30min)", start.elapsed().as_secs_f64());
}

// ─── extrapolation accelerates convergence ───

/// With the sparse 80%-missing mask, the adaptive extrapolation run must
/// reach the ω = 0 run's final objective within 80% of its epoch count.
/// Budget: 20 min.
#[test]
fn extrapolation_accelerates_convergence() {
    let start = Instant::now();
    let spec = SyntheticSpec::extrapolation_preset();
    let outcome = run_extrapolation(&spec).expect("extrapolation ablation");
    let frozen_epochs = outcome.frozen.len();
    let reached = outcome.epochs_to_target;
    let detail = match reached {
        Some(e) => format!(
            "adaptive reached the frozen run's final Q at epoch {e} of {frozen_epochs} \
             ({:.0}%)",
            100.0 * e as f64 / frozen_epochs as f64
        ),
        None => format!("adaptive never reached the frozen run's final Q in {frozen_epochs} epochs"),
    };
    verdict(
        "extrapolation/epochs-to-target",
        reached.is_some_and(|e| (e as f64) <= 0.8 * frozen_epochs as f64),
        &detail,
    );
    println!("  extrapolation block took {:.0}s (budget 20min)", start.elapsed().as_secs_f64());
}

// ─── held-out ratings error ───

/// On the ratings benchmark (real MovieLens 100k at data/ml-100k/u.data when
/// present, otherwise the bundled synthetic fallback) the penalized network's
/// held-out NMAE must beat the plain autoencoder's and stay ≤ 0.22.
/// Budget: 45 min; marked extended for nightly runs.
#[test]
#[ignore = "extended"]
fn ratings_heldout_nmae() {
    let start = Instant::now();
    let mut spec = RatingsSpec::default();
    let real = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/ml-100k/u.data");
    if real.exists() {
        spec.dataset = Some(real);
    } else {
        println!("  (data/ml-100k/u.data not present; using the synthetic fallback)");
    }
    let outcome = run_ratings(&spec).expect("ratings comparison");
    let dnn = outcome.method(METHOD_DNN).expect("dnn runs");
    let aemc = outcome.method(METHOD_AEMC).expect("aemc runs");
    let nmae = |runs: &experiment::MethodRuns| {
        let vals: Vec<f64> = runs.reports.iter().filter_map(|r| r.nmae).collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    let (n_dnn, n_aemc) = (nmae(dnn), nmae(aemc));
    println!("  nmae: dnn {n_dnn:.4}, aemc {n_aemc:.4}");
    verdict(
        "ratings/beats-plain-autoencoder",
        n_dnn < n_aemc,
        &format!("dnn {n_dnn:.4} vs aemc {n_aemc:.4}"),
    );
    verdict(
        "ratings/nmae-ceiling",
        n_dnn <= 0.22,
        &format!("dnn NMAE {n_dnn:.4} (ceiling 0.22)"),
    );
    println!("  ratings block took {:.0}s (budget 45min)", start.elapsed().as_secs_f64());
}

// ─── image inpainting ───

/// On the bundled 64×64 image with half the pixels hidden, the network must
/// beat soft-impute on SSIM and the zero-filled observation by ≥ 6 dB PSNR.
/// Budget: 10 min.
#[test]
fn image_inpainting_quality() {
    let start = Instant::now();
    let mut spec = ImageSpec::default();
    spec.image = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../testdata/scene64.png");
    let outcome = run_image(&spec).expect("image comparison");
    let dnn = outcome.comparison.method(METHOD_DNN).expect("dnn runs");
    let si = outcome.comparison.method(METHOD_SOFT_IMPUTE).expect("soft-impute runs");
    let zero = outcome.comparison.method(METHOD_ZERO_FILL).expect("zero-fill baseline");
    let (s_dnn, s_si) = (dnn.reports[0].ssim, si.reports[0].ssim);
    let (p_dnn, p_zero) = (dnn.reports[0].psnr, zero.reports[0].psnr);
    println!(
        "  dnn SSIM {s_dnn:.4} vs soft-impute {s_si:.4}; dnn PSNR {p_dnn:.2} dB vs zero-fill {p_zero:.2} dB"
    );
    verdict(
        "image/ssim-over-soft-impute",
        s_dnn > s_si,
        &format!("ssim {s_dnn:.4} vs {s_si:.4}"),
    );
    verdict(
        "image/psnr-over-zero-fill",
        p_dnn >= p_zero + 6.0,
        &format!("improvement {:.2} dB (needs ≥ 6 dB)", p_dnn - p_zero),
    );
    println!("  image block took {:.0}s (budget 10min)", start.elapsed().as_secs_f64());
}

// ─── guard: the training loop's stop reasons stay meaningful ───

/// A tiny run that hits the epoch limit must say so; this keeps the
/// acceptance suite honest about which stop path the long runs took.
#[test]
fn stop_reason_reports_epoch_limit_on_short_runs() {
    let mut rng = Rng::seed_from_u64(2);
    let x = gen_synthetic(12, 9, 2, &mut rng).expect("gen");
    let (observed, mask) = apply_mask(&x, 0.4, &mut rng).expect("mask");
    let s = experiment::scale_factor(&observed);
    let init = NetworkParams::new_glorot(&net_dims(12, &[8, 4, 8]), Activation::Tanh, &mut rng)
        .expect("init");
    let schedule = TrainSchedule {
        epochs: 8,
        warmup_epochs: 8,
        ..TrainSchedule::default()
    };
    let outcome = train(&observed.scale(s), &mask, init, &schedule).expect("train");
    verdict(
        "trainer/stop-reason",
        matches!(outcome.stop, StopReason::EpochLimit) && outcome.history.len() == 8,
        &format!("stop {:?} after {} epochs", outcome.stop, outcome.history.len()),
    );
}
