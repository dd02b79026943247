//! Classical completion baselines: iterative singular value thresholding
//! over imputed entries, and a plain gradient-descent autoencoder.

use crate::fcnn::{grad_theta, smooth_objective, NetworkParams};
use crate::matrix::Matrix;
use crate::prox::svt_with_values;
use crate::{Error, Result};

// ─── soft-impute ───

/// Configuration of the iterative-SVT baseline.
#[derive(Debug, Clone)]
pub struct SoftImputeConfig {
    /// Nuclear-norm threshold τ.
    pub tau: f64,
    /// Iteration cap.
    pub max_iters: usize,
    /// Stop when the relative Frobenius change of the iterate drops below
    /// this.
    pub tol: f64,
}

impl Default for SoftImputeConfig {
    fn default() -> Self {
        SoftImputeConfig {
            tau: 1.0,
            max_iters: 300,
            tol: 1e-4,
        }
    }
}

/// Result of a soft-impute run.
#[derive(Debug)]
pub struct SoftImputeOutcome {
    /// The completion, with observed entries pasted back verbatim.
    pub completed: Matrix,
    /// Iterations actually performed.
    pub iterations: usize,
    /// Objective `τ‖M‖_* + ½‖P_Ω(M − X)‖²_F` after every iteration; the
    /// algorithm guarantees this sequence is nonincreasing.
    pub objective: Vec<f64>,
}

/// Matrix completion by repeated singular value thresholding:
///
/// ```text
/// M ← svt(P_Ω(X) + P_Ω̄(M), τ)
/// ```
///
/// i.e. re-impute the missing entries from the current iterate, threshold
/// the spectrum, repeat until the iterate stops moving.
pub fn soft_impute(x: &Matrix, mask: &Matrix, config: &SoftImputeConfig) -> Result<SoftImputeOutcome> {
    validate_masked_input(x, mask)?;
    if !(config.tau >= 0.0) {
        return Err(Error::config(format!("tau must be nonnegative, got {}", config.tau)));
    }
    if config.max_iters == 0 {
        return Err(Error::config("max_iters must be at least 1"));
    }

    let observed = mask.hadamard(x);
    let mut m = observed.clone();
    let mut objective = Vec::new();
    let mut iterations = 0;
    for _ in 0..config.max_iters {
        // Observed entries from the data, missing ones from the iterate.
        let mut filled = observed.clone();
        for idx in 0..filled.len() {
            if mask.as_slice()[idx] == 0.0 {
                filled.as_mut_slice()[idx] = m.as_slice()[idx];
            }
        }
        let (next, values) = svt_with_values(&filled, config.tau)?;
        iterations += 1;

        let nuclear: f64 = values.iter().sum();
        let fit = mask.hadamard(&next.sub(x)).frobenius_norm_sq();
        objective.push(config.tau * nuclear + 0.5 * fit);

        let change = next.sub(&m).frobenius_norm() / m.frobenius_norm().max(1.0);
        m = next;
        if change < config.tol {
            break;
        }
    }

    // Paste the observed entries back: completion never alters them.
    let mut completed = m;
    for idx in 0..completed.len() {
        if mask.as_slice()[idx] != 0.0 {
            completed.as_mut_slice()[idx] = x.as_slice()[idx];
        }
    }
    Ok(SoftImputeOutcome {
        completed,
        iterations,
        objective,
    })
}

// ─── gradient-descent autoencoder ───

/// Configuration of the plain autoencoder baseline.
#[derive(Debug, Clone)]
pub struct AemcConfig {
    /// Gradient-evaluation budget.
    pub epochs: usize,
    /// Weight decay λ.
    pub lambda: f64,
    /// Initial step size; halved whenever a step would increase the loss.
    pub step: f64,
}

impl Default for AemcConfig {
    fn default() -> Self {
        AemcConfig {
            epochs: 2000,
            lambda: 1e-3,
            step: 1e-3,
        }
    }
}

/// Result of an autoencoder-baseline run.
#[derive(Debug)]
pub struct AemcOutcome {
    pub params: NetworkParams,
    /// Loss after the initial evaluation and after every accepted step.
    pub loss_history: Vec<f64>,
}

/// Trains an autoencoder on the observed entries by steepest descent on
/// `‖N ⊙ (X − X̂)‖²_F + λΣ‖W‖²_F` — no auxiliaries, no prox steps. A step
/// that would increase the loss is reverted and the step size halved;
/// training stops early once the step underflows `1e-15`.
pub fn train_aemc(
    x: &Matrix,
    mask: &Matrix,
    init: NetworkParams,
    config: &AemcConfig,
) -> Result<AemcOutcome> {
    validate_masked_input(x, mask)?;
    let dims = init.dims();
    if dims[0] != x.rows() || *dims.last().unwrap() != x.rows() {
        return Err(Error::config(format!(
            "network widths {dims:?} do not form an autoencoder for {}-row data",
            x.rows()
        )));
    }
    if !(config.step > 0.0) {
        return Err(Error::config(format!("step must be positive, got {}", config.step)));
    }

    let mut params = init;
    let mut step = config.step;
    let mut trace = params.forward(x);
    let mut loss = smooth_objective(&params, &trace, x, mask, config.lambda, None).total();
    let mut history = vec![loss];

    for _ in 0..config.epochs {
        let grad = grad_theta(&params, &trace, x, mask, config.lambda, None);
        let candidate = descend(&params, &grad, step);
        let trace_c = candidate.forward(x);
        let loss_c = smooth_objective(&candidate, &trace_c, x, mask, config.lambda, None).total();
        if !loss_c.is_finite() || loss_c > 1e12 {
            return Err(Error::numerical(format!(
                "autoencoder baseline diverged (loss {loss_c}); lower the step size"
            )));
        }
        if loss_c > loss {
            // Revert and damp.
            step *= 0.5;
            if step < 1e-15 {
                break;
            }
            continue;
        }
        params = candidate;
        trace = trace_c;
        loss = loss_c;
        history.push(loss);
    }

    Ok(AemcOutcome {
        params,
        loss_history: history,
    })
}

fn descend(params: &NetworkParams, grad: &crate::fcnn::GradTheta, step: f64) -> NetworkParams {
    let weights = params
        .weights
        .iter()
        .zip(&grad.weights)
        .map(|(w, g)| {
            let mut c = w.clone();
            c.axpy(-step, g);
            c
        })
        .collect();
    let biases = params
        .biases
        .iter()
        .zip(&grad.biases)
        .map(|(b, g)| {
            let mut c = b.clone();
            c.axpy(-step, g);
            c
        })
        .collect();
    NetworkParams::from_parts(params.dims().to_vec(), weights, biases, params.activation)
        .expect("gradient step preserves every shape")
}

fn validate_masked_input(x: &Matrix, mask: &Matrix) -> Result<()> {
    if x.shape() != mask.shape() {
        return Err(Error::config(format!(
            "data is {:?} but mask is {:?}",
            x.shape(),
            mask.shape()
        )));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::data("data contains non-finite entries"));
    }
    if mask.as_slice().iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::data("mask entries must be exactly 0 or 1"));
    }
    if mask.as_slice().iter().all(|&v| v == 0.0) {
        return Err(Error::data("mask observes no entries at all"));
    }
    Ok(())
}

// ─── tests ───

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcnn::Activation;
    use crate::matrix::svd;
    use crate::rng::Rng;

    fn rank_one_problem(rows: usize, cols: usize, observed: f64, seed: u64) -> (Matrix, Matrix) {
        let mut rng = Rng::seed_from_u64(seed);
        let a = Matrix::from_vec(rows, 1, (0..rows).map(|_| rng.uniform(-1.0, 1.0)).collect());
        let b = Matrix::from_vec(1, cols, (0..cols).map(|_| rng.uniform(-1.0, 1.0)).collect());
        let x = a.matmul(&b);
        let mask = Matrix::from_vec(
            rows,
            cols,
            (0..rows * cols)
                .map(|_| if rng.uniform01() < observed { 1.0 } else { 0.0 })
                .collect(),
        );
        (x, mask)
    }

    // ── soft-impute ──

    #[test]
    fn soft_impute_objective_never_increases() {
        let (x, mask) = rank_one_problem(8, 7, 0.6, 61);
        let out = soft_impute(
            &x,
            &mask,
            &SoftImputeConfig {
                tau: 0.2,
                max_iters: 100,
                tol: 1e-8,
            },
        )
        .expect("soft-impute runs");
        assert!(out.iterations >= 2, "the problem should need several sweeps");
        for w in out.objective.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-10 * (1.0 + w[0].abs()),
                "objective rose from {} to {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn soft_impute_keeps_observed_entries_verbatim() {
        let (x, mask) = rank_one_problem(6, 6, 0.5, 62);
        let out = soft_impute(&x, &mask, &SoftImputeConfig::default()).expect("runs");
        for i in 0..6 {
            for j in 0..6 {
                if mask.get(i, j) == 1.0 {
                    assert_eq!(
                        out.completed.get(i, j),
                        x.get(i, j),
                        "observed entry ({i},{j}) was altered"
                    );
                }
            }
        }
    }

    #[test]
    fn soft_impute_recovers_an_easy_low_rank_matrix() {
        // Rank-1, 80% observed, tiny threshold: the missing fifth should be
        // recovered to good accuracy.
        // Factor magnitudes bounded away from zero keep every row and column
        // informative, so the thresholding fixed point matches the ground
        // truth tightly.
        let mut rng = Rng::seed_from_u64(63);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let sign = if rng.uniform01() < 0.5 { -1.0 } else { 1.0 };
                    sign * rng.uniform(0.5, 1.5)
                })
                .collect()
        };
        let a = Matrix::from_vec(20, 1, draw(20));
        let b = Matrix::from_vec(1, 15, draw(15));
        let x = a.matmul(&b);
        let mask = Matrix::from_vec(
            20,
            15,
            (0..300)
                .map(|_| if rng.uniform01() < 0.9 { 1.0 } else { 0.0 })
                .collect(),
        );
        let out = soft_impute(
            &x,
            &mask,
            &SoftImputeConfig {
                tau: 0.01,
                max_iters: 20000,
                tol: 1e-12,
            },
        )
        .expect("runs");
        let err = out.completed.sub(&x).frobenius_norm() / x.frobenius_norm();
        assert!(
            err < 0.05,
            "relative recovery error {err} is too large for rank 1 ({} iterations)",
            out.iterations
        );
    }

    #[test]
    fn soft_impute_with_huge_threshold_zeroes_missing_entries() {
        let (x, mask) = rank_one_problem(5, 5, 0.6, 64);
        let tau = 1e6; // far above any singular value: SVT collapses to 0
        let out = soft_impute(
            &x,
            &mask,
            &SoftImputeConfig {
                tau,
                max_iters: 10,
                tol: 1e-12,
            },
        )
        .expect("runs");
        for i in 0..5 {
            for j in 0..5 {
                let want = if mask.get(i, j) == 1.0 { x.get(i, j) } else { 0.0 };
                assert_eq!(out.completed.get(i, j), want);
            }
        }
    }

    #[test]
    fn soft_impute_rejects_bad_input() {
        let x = Matrix::zeros(3, 3);
        assert!(matches!(
            soft_impute(&x, &Matrix::zeros(3, 2), &SoftImputeConfig::default()),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            soft_impute(&x, &Matrix::zeros(3, 3), &SoftImputeConfig::default()),
            Err(Error::Data(_))
        ));
        let cfg = SoftImputeConfig {
            tau: -1.0,
            ..SoftImputeConfig::default()
        };
        assert!(matches!(
            soft_impute(&x, &Matrix::filled(3, 3, 1.0), &cfg),
            Err(Error::Config(_))
        ));
    }

    // ── autoencoder baseline ──

    #[test]
    fn aemc_single_linear_layer_reaches_the_least_squares_optimum() {
        // One linear layer with bias is affine regression X ≈ WX + b1ᵀ; the
        // optimal loss has a closed form through the pseudoinverse of the
        // augmented inputs. Steepest descent must get there.
        let mut rng = Rng::seed_from_u64(71);
        let n = 12;
        let x = Matrix::from_vec(2, n, (0..2 * n).map(|_| rng.uniform(-1.0, 1.0)).collect());
        let mask = Matrix::filled(2, n, 1.0);

        // Augmented input A = [X; 1ᵀ]; optimum [W b] = X·A⁺.
        let mut a = Matrix::zeros(3, n);
        for j in 0..n {
            a.set(0, j, x.get(0, j));
            a.set(1, j, x.get(1, j));
            a.set(2, j, 1.0);
        }
        let f = svd(&a).expect("SVD");
        // A⁺ = V·diag(1/s)·Uᵀ.
        let mut v_scaled = f.vt.transpose(); // n×3, columns are v_i
        for (i, &s) in f.s.iter().enumerate() {
            assert!(s > 1e-12, "augmented inputs should have full rank here");
            for r in 0..n {
                let val = v_scaled.get(r, i) / s;
                v_scaled.set(r, i, val);
            }
        }
        let pinv = v_scaled.matmul_a_bt(&f.u); // n×3
        let wb = x.matmul(&pinv); // 2×3
        let fitted = wb.matmul(&a);
        let optimal_loss = x.sub(&fitted).frobenius_norm_sq();

        let init = NetworkParams::new_glorot(&[2, 2], Activation::Tanh, &mut rng).unwrap();
        let out = train_aemc(
            &x,
            &mask,
            init,
            &AemcConfig {
                epochs: 6000,
                lambda: 0.0,
                step: 0.02,
            },
        )
        .expect("baseline trains");
        let final_loss = *out.loss_history.last().unwrap();
        assert!(
            final_loss <= optimal_loss + 1e-6 * (1.0 + optimal_loss),
            "descent stalled at {final_loss}, least-squares optimum is {optimal_loss}"
        );
    }

    #[test]
    fn aemc_loss_history_is_nonincreasing() {
        let (x, mask) = rank_one_problem(6, 8, 0.7, 72);
        let mut rng = Rng::seed_from_u64(73);
        let init = NetworkParams::new_glorot(&[6, 3, 6], Activation::Tanh, &mut rng).unwrap();
        let out = train_aemc(&x, &mask, init, &AemcConfig::default()).expect("trains");
        assert!(out.loss_history.len() > 1, "no step was ever accepted");
        for w in out.loss_history.windows(2) {
            assert!(w[1] <= w[0], "accepted a loss increase: {} -> {}", w[0], w[1]);
        }
        let first = out.loss_history.first().unwrap();
        let last = out.loss_history.last().unwrap();
        assert!(last < first, "training made no progress at all");
    }

    #[test]
    fn aemc_diverges_loudly_on_an_absurd_step() {
        let (x, mask) = rank_one_problem(5, 5, 0.8, 74);
        let x = x.scale(1e3); // large data so one huge step overshoots hard
        let mut rng = Rng::seed_from_u64(75);
        let init = NetworkParams::new_glorot(&[5, 3, 5], Activation::Tanh, &mut rng).unwrap();
        let result = train_aemc(
            &x,
            &mask,
            init,
            &AemcConfig {
                epochs: 50,
                lambda: 0.0,
                step: 1e9,
            },
        );
        assert!(
            matches!(result, Err(Error::Numerical(_))),
            "a 1e9 step on 1e3-scale data must be reported as divergence"
        );
    }

    #[test]
    fn aemc_is_deterministic() {
        let (x, mask) = rank_one_problem(5, 6, 0.7, 76);
        let run = || {
            let mut rng = Rng::seed_from_u64(77);
            let init = NetworkParams::new_glorot(&[5, 2, 5], Activation::Tanh, &mut rng).unwrap();
            train_aemc(
                &x,
                &mask,
                init,
                &AemcConfig {
                    epochs: 200,
                    ..AemcConfig::default()
                },
            )
            .expect("trains")
        };
        let a = run();
        let b = run();
        assert_eq!(a.loss_history.len(), b.loss_history.len());
        for (la, lb) in a.loss_history.iter().zip(&b.loss_history) {
            assert_eq!(la.to_bits(), lb.to_bits());
        }
    }
}
