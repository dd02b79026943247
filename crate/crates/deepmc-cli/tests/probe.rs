//! Scratch calibration probe (temporary).

use deepmc::baselines::AemcConfig;
use deepmc::fcnn::Activation;
use deepmc::metrics::TrialReport;
use deepmc::trainer::TrainSchedule;
use deepmc_cli::experiment::{run_aemc_trial, run_dnn_trial, SyntheticSpec};

#[test]
#[ignore = "calibration probe"]
fn probe_aemc_lambda() {
    let spec = SyntheticSpec::default();
    let mut rng = deepmc::rng::Rng::seed_from_u64(spec.seed);
    let x = deepmc::datasets::gen_synthetic(spec.rows, spec.cols, spec.rank, &mut rng).unwrap();
    let (observed, mask) = deepmc::datasets::apply_mask(&x, spec.rho, &mut rng).unwrap();

    for lambda in [1e-3, 0.1, 0.3, 1.0, 3.0] {
        for epochs in [1500usize, 4000] {
            let cfg = AemcConfig {
                epochs,
                lambda,
                step: 1e-2,
            };
            let (completed, secs) =
                run_aemc_trial(&observed, &mask, &[128, 64, 128], Activation::Tanh, &cfg, spec.seed).unwrap();
            let rep = TrialReport::new(&x, &completed, &mask, None, spec.seed, secs);
            println!("aemc lambda={lambda} epochs={epochs}: psnr={:.3} mse={:.4} ({secs:.1}s)", rep.psnr, rep.mse);
        }
    }
}

#[test]
#[ignore = "calibration probe"]
fn probe_dnn_penalties_at_tuned_lambda() {
    let spec = SyntheticSpec::default();
    let mut rng = deepmc::rng::Rng::seed_from_u64(spec.seed);
    let x = deepmc::datasets::gen_synthetic(spec.rows, spec.cols, spec.rank, &mut rng).unwrap();
    let (observed, mask) = deepmc::datasets::apply_mask(&x, spec.rho, &mut rng).unwrap();

    for (alpha, beta) in [(0.1, 0.1), (0.03, 0.03), (0.1, 0.01), (0.01, 0.1)] {
        let schedule = TrainSchedule {
            epochs: 600,
            warmup_epochs: 200,
            gamma: 2.0,
            lambda: 1.0,
            alpha,
            beta,
            ..TrainSchedule::default()
        };
        let trial =
            run_dnn_trial(&observed, &mask, &[128, 64, 128], Activation::Tanh, &schedule, spec.seed).unwrap();
        let rep = TrialReport::new(&x, &trial.completed, &mask, None, spec.seed, trial.seconds);
        println!(
            "dnn alpha={alpha} beta={beta}: psnr={:.3} mse={:.4} ({:.1}s)",
            rep.psnr, rep.mse, trial.seconds
        );
    }
}

#[test]
#[ignore = "calibration probe"]
fn probe_scale() {
    use deepmc::fcnn::NetworkParams;
    use deepmc::trainer::complete;
    use deepmc::trainer::train;
    use deepmc_cli::experiment::{net_dims, paste_observed};

    let spec = SyntheticSpec::default();
    let mut rng = deepmc::rng::Rng::seed_from_u64(spec.seed);
    let x = deepmc::datasets::gen_synthetic(spec.rows, spec.cols, spec.rank, &mut rng).unwrap();
    let (observed, mask) = deepmc::datasets::apply_mask(&x, spec.rho, &mut rng).unwrap();

    let n_obs = mask.as_slice().iter().filter(|&&v| v != 0.0).count() as f64;
    let mean = observed.as_slice().iter().sum::<f64>() / n_obs;
    let var = observed
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .filter(|(_, &m)| m != 0.0)
        .map(|(&v, _)| (v - mean) * (v - mean))
        .sum::<f64>()
        / n_obs;
    let sigma = var.sqrt();
    let max_abs = observed.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    println!("observed sigma={sigma:.3} max={max_abs:.3}");

    for (name, s) in [
        ("1/max", 1.0 / max_abs),
        ("0.5/sigma", 0.5 / sigma),
        ("1/sigma", 1.0 / sigma),
        ("1.5/sigma", 1.5 / sigma),
    ] {
        for activation in [Activation::Tanh, Activation::ScaledTanh] {
            let start = std::time::Instant::now();
            let xs = observed.scale(s);
            let dims = net_dims(observed.rows(), &[128, 64, 128]);
            let init = NetworkParams::new_glorot(
                &dims,
                activation,
                &mut deepmc::rng::Rng::seed_from_u64(spec.seed),
            )
            .unwrap();
            let schedule = TrainSchedule {
                epochs: 400,
                warmup_epochs: 200,
                gamma: 2.0,
                ..TrainSchedule::default()
            };
            let outcome = train(&xs, &mask, init, &schedule).unwrap();
            let mut completed = complete(&outcome.params, &xs, &mask).scale(1.0 / s);
            paste_observed(&mut completed, &observed, &mask);
            let rep = TrialReport::new(&x, &completed, &mask, None, spec.seed, 0.0);
            println!(
                "dnn scale={name} act={activation:?}: psnr={:.3} mse={:.4} ({:.0}s)",
                rep.psnr,
                rep.mse,
                start.elapsed().as_secs_f64()
            );
        }
        let xs = observed.scale(s);
        let dims = net_dims(observed.rows(), &[128, 64, 128]);
        let init = NetworkParams::new_glorot(
            &dims,
            Activation::Tanh,
            &mut deepmc::rng::Rng::seed_from_u64(spec.seed),
        )
        .unwrap();
        let cfg = AemcConfig {
            epochs: 1500,
            lambda: 1e-3,
            step: 1e-2,
        };
        let outcome = deepmc::baselines::train_aemc(&xs, &mask, init, &cfg).unwrap();
        let mut completed = complete(&outcome.params, &xs, &mask).scale(1.0 / s);
        paste_observed(&mut completed, &observed, &mask);
        let rep = TrialReport::new(&x, &completed, &mask, None, spec.seed, 0.0);
        println!("aemc scale={name}: psnr={:.3} mse={:.4}", rep.psnr, rep.mse);
    }
}

#[test]
#[ignore = "calibration probe"]
fn probe_scale_lambda() {
    use deepmc::fcnn::NetworkParams;
    use deepmc::trainer::{complete, train};
    use deepmc_cli::experiment::{net_dims, paste_observed};

    let spec = SyntheticSpec::default();
    let mut rng = deepmc::rng::Rng::seed_from_u64(spec.seed);
    let x = deepmc::datasets::gen_synthetic(spec.rows, spec.cols, spec.rank, &mut rng).unwrap();
    let (observed, mask) = deepmc::datasets::apply_mask(&x, spec.rho, &mut rng).unwrap();
    let n_obs = mask.as_slice().iter().filter(|&&v| v != 0.0).count() as f64;
    let mean = observed.as_slice().iter().sum::<f64>() / n_obs;
    let var = observed
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .filter(|(_, &m)| m != 0.0)
        .map(|(&v, _)| (v - mean) * (v - mean))
        .sum::<f64>()
        / n_obs;
    let sigma = var.sqrt();

    for (sname, s) in [("1.5/sigma", 1.5 / sigma), ("2/sigma", 2.0 / sigma), ("3/sigma", 3.0 / sigma)] {
        for lambda in [0.03, 0.1, 0.3] {
            let start = std::time::Instant::now();
            let xs = observed.scale(s);
            let dims = net_dims(observed.rows(), &[128, 64, 128]);
            let init = NetworkParams::new_glorot(
                &dims,
                Activation::Tanh,
                &mut deepmc::rng::Rng::seed_from_u64(spec.seed),
            )
            .unwrap();
            let schedule = TrainSchedule {
                epochs: 600,
                warmup_epochs: 200,
                gamma: 2.0,
                lambda,
                alpha: 0.01,
                beta: 0.01,
                ..TrainSchedule::default()
            };
            let outcome = train(&xs, &mask, init, &schedule).unwrap();
            let mut completed = complete(&outcome.params, &xs, &mask).scale(1.0 / s);
            paste_observed(&mut completed, &observed, &mask);
            let rep = TrialReport::new(&x, &completed, &mask, None, spec.seed, 0.0);
            println!(
                "dnn scale={sname} lambda={lambda}: psnr={:.3} mse={:.4} ({:.0}s)",
                rep.psnr,
                rep.mse,
                start.elapsed().as_secs_f64()
            );
        }
    }
}

#[test]
#[ignore = "calibration probe"]
fn probe_long_runs() {
    use deepmc::fcnn::NetworkParams;
    use deepmc::trainer::{complete, train};
    use deepmc_cli::experiment::{net_dims, paste_observed};

    let spec = SyntheticSpec::default();
    let mut rng = deepmc::rng::Rng::seed_from_u64(spec.seed);
    let x = deepmc::datasets::gen_synthetic(spec.rows, spec.cols, spec.rank, &mut rng).unwrap();
    let (observed, mask) = deepmc::datasets::apply_mask(&x, spec.rho, &mut rng).unwrap();
    let n_obs = mask.as_slice().iter().filter(|&&v| v != 0.0).count() as f64;
    let mean = observed.as_slice().iter().sum::<f64>() / n_obs;
    let var = observed
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .filter(|(_, &m)| m != 0.0)
        .map(|(&v, _)| (v - mean) * (v - mean))
        .sum::<f64>()
        / n_obs;
    let sigma = var.sqrt();
    let s = 3.0 / sigma;
    let xs = observed.scale(s);

    for (hidden, epochs, warmup) in [
        (vec![128usize, 64, 128], 1200usize, 400usize),
        (vec![128, 64, 128], 2400, 800),
        (vec![160, 80, 160], 1200, 400),
    ] {
        let start = std::time::Instant::now();
        let dims = net_dims(observed.rows(), &hidden);
        let init = NetworkParams::new_glorot(
            &dims,
            Activation::Tanh,
            &mut deepmc::rng::Rng::seed_from_u64(spec.seed),
        )
        .unwrap();
        let schedule = TrainSchedule {
            epochs,
            warmup_epochs: warmup,
            gamma: 2.0,
            lambda: 0.1,
            alpha: 0.01,
            beta: 0.01,
            ..TrainSchedule::default()
        };
        let outcome = train(&xs, &mask, init, &schedule).unwrap();
        let mut completed = complete(&outcome.params, &xs, &mask).scale(1.0 / s);
        paste_observed(&mut completed, &observed, &mask);
        let rep = TrialReport::new(&x, &completed, &mask, None, spec.seed, 0.0);
        println!(
            "dnn hidden={hidden:?} epochs={epochs}: psnr={:.3} mse={:.4} ({:.0}s)",
            rep.psnr,
            rep.mse,
            start.elapsed().as_secs_f64()
        );
    }

    for lambda in [1e-3, 0.1, 1.0] {
        for epochs in [4000usize, 12000] {
            let dims = net_dims(observed.rows(), &[128, 64, 128]);
            let init = NetworkParams::new_glorot(
                &dims,
                Activation::Tanh,
                &mut deepmc::rng::Rng::seed_from_u64(spec.seed),
            )
            .unwrap();
            let cfg = AemcConfig {
                epochs,
                lambda,
                step: 1e-2,
            };
            let outcome = deepmc::baselines::train_aemc(&xs, &mask, init, &cfg).unwrap();
            let mut completed = complete(&outcome.params, &xs, &mask).scale(1.0 / s);
            paste_observed(&mut completed, &observed, &mask);
            let rep = TrialReport::new(&x, &completed, &mask, None, spec.seed, 0.0);
            println!(
                "aemc lambda={lambda} epochs={epochs}: psnr={:.3} mse={:.4}",
                rep.psnr, rep.mse
            );
        }
    }
}

#[test]
#[ignore = "calibration probe"]
fn probe_penalties_engaged() {
    use deepmc::baselines::{soft_impute, SoftImputeConfig};
    use deepmc::fcnn::NetworkParams;
    use deepmc::trainer::{complete, train};
    use deepmc_cli::experiment::{net_dims, paste_observed};

    let spec = SyntheticSpec::default();
    let mut rng = deepmc::rng::Rng::seed_from_u64(spec.seed);
    let x = deepmc::datasets::gen_synthetic(spec.rows, spec.cols, spec.rank, &mut rng).unwrap();
    let (observed, mask) = deepmc::datasets::apply_mask(&x, spec.rho, &mut rng).unwrap();

    for tau in [2.0, 3.0, 5.0, 8.0, 12.0] {
        let cfg = SoftImputeConfig {
            tau,
            max_iters: 1000,
            tol: 1e-6,
        };
        let m = soft_impute(&observed, &mask, &cfg).unwrap();
        let rep = TrialReport::new(&x, &m.completed, &mask, None, spec.seed, 0.0);
        println!("si tau={tau}: psnr={:.3} mse={:.4}", rep.psnr, rep.mse);
    }

    let n_obs = mask.as_slice().iter().filter(|&&v| v != 0.0).count() as f64;
    let mean = observed.as_slice().iter().sum::<f64>() / n_obs;
    let var = observed
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .filter(|(_, &m)| m != 0.0)
        .map(|(&v, _)| (v - mean) * (v - mean))
        .sum::<f64>()
        / n_obs;
    let sigma = var.sqrt();
    let s = 3.0 / sigma;
    let xs = observed.scale(s);

    let combos: Vec<(Vec<usize>, f64, f64, f64)> = vec![
        (vec![128, 64, 128], 0.03, 0.03, 0.1),
        (vec![128, 64, 128], 0.1, 0.1, 0.1),
        (vec![128, 64, 128], 0.1, 0.01, 0.1),
        (vec![128, 64, 128], 0.01, 0.01, 1.0),
        (vec![128, 96, 64, 96, 128], 0.01, 0.01, 0.1),
        (vec![128, 96, 64, 96, 128], 0.03, 0.03, 0.1),
    ];
    for (hidden, alpha, beta, lambda) in combos {
        let start = std::time::Instant::now();
        let dims = net_dims(observed.rows(), &hidden);
        let init = NetworkParams::new_glorot(
            &dims,
            Activation::Tanh,
            &mut deepmc::rng::Rng::seed_from_u64(spec.seed),
        )
        .unwrap();
        let schedule = TrainSchedule {
            epochs: 1200,
            warmup_epochs: 400,
            gamma: 2.0,
            lambda,
            alpha,
            beta,
            ..TrainSchedule::default()
        };
        let outcome = train(&xs, &mask, init, &schedule).unwrap();
        let mut completed = complete(&outcome.params, &xs, &mask).scale(1.0 / s);
        paste_observed(&mut completed, &observed, &mask);
        let rep = TrialReport::new(&x, &completed, &mask, None, spec.seed, 0.0);
        println!(
            "dnn hidden={hidden:?} a={alpha} b={beta} l={lambda}: psnr={:.3} mse={:.4} ({:.0}s)",
            rep.psnr,
            rep.mse,
            start.elapsed().as_secs_f64()
        );
    }
}

#[test]
#[ignore = "calibration probe"]
fn probe_mu_gamma_scale() {
    use deepmc::fcnn::NetworkParams;
    use deepmc::trainer::{complete, train};
    use deepmc_cli::experiment::{net_dims, paste_observed};

    let spec = SyntheticSpec::default();
    let mut rng = deepmc::rng::Rng::seed_from_u64(spec.seed);
    let x = deepmc::datasets::gen_synthetic(spec.rows, spec.cols, spec.rank, &mut rng).unwrap();
    let (observed, mask) = deepmc::datasets::apply_mask(&x, spec.rho, &mut rng).unwrap();
    let n_obs = mask.as_slice().iter().filter(|&&v| v != 0.0).count() as f64;
    let mean = observed.as_slice().iter().sum::<f64>() / n_obs;
    let var = observed
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .filter(|(_, &m)| m != 0.0)
        .map(|(&v, _)| (v - mean) * (v - mean))
        .sum::<f64>()
        / n_obs;
    let sigma = var.sqrt();

    // (scale multiple, mu_max, mu_min, gamma)
    let grid: Vec<(f64, f64, f64, f64)> = vec![
        (3.0, 1e4, 1.0, 2.0),
        (3.0, 1e3, 1.0, 2.0),
        (3.0, 1e4, 0.3, 2.0),
        (3.0, 1e6, 1.0, 1.2),
        (3.0, 1e6, 1.0, 1.5),
        (4.5, 1e6, 1.0, 2.0),
    ];
    for (mult, mu_max, mu_min, gamma) in grid {
        let start = std::time::Instant::now();
        let s = mult / sigma;
        let xs = observed.scale(s);
        let dims = net_dims(observed.rows(), &[128, 64, 128]);
        let init = NetworkParams::new_glorot(
            &dims,
            Activation::Tanh,
            &mut deepmc::rng::Rng::seed_from_u64(spec.seed),
        )
        .unwrap();
        let schedule = TrainSchedule {
            epochs: 1200,
            warmup_epochs: 400,
            gamma,
            lambda: 0.1,
            alpha: 0.1,
            beta: 0.1,
            mu_max,
            mu_min,
            ..TrainSchedule::default()
        };
        let outcome = train(&xs, &mask, init, &schedule).unwrap();
        let mut completed = complete(&outcome.params, &xs, &mask).scale(1.0 / s);
        paste_observed(&mut completed, &observed, &mask);
        let rep = TrialReport::new(&x, &completed, &mask, None, spec.seed, 0.0);
        println!(
            "dnn scale={mult}/sigma mu_max={mu_max:.0e} mu_min={mu_min} gamma={gamma}: psnr={:.3} mse={:.4} ({:.0}s)",
            rep.psnr,
            rep.mse,
            start.elapsed().as_secs_f64()
        );
    }
}
