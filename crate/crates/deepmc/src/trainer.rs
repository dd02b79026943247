//! Alternating proximal training of the autoencoder under nonsmooth
//! regularization.
//!
//! One training epoch `k` updates three blocks of variables in turn, each by
//! an exact or prox-linear minimization of the penalized objective
//!
//! ```text
//! Q(θ, H, V; μ) = g(θ; H, V, μ) + Σ_i α‖H⁽ⁱ⁾‖₁ + Σ_l β‖V⁽ˡ⁾‖_* + 𝟙{‖θ‖∞ ≤ M}
//! ```
//!
//! where `g` is the smooth part from [`crate::fcnn::smooth_objective`]:
//!
//! ```text
//! 1. H⁽ⁱ⁾ ← soft_threshold(A⁽ⁱ⁾(θ_{k-1}), α·μ)        (sparse codes)
//! 2. V⁽ˡ⁾ ← svt(W⁽ˡ⁾_{k-1}, β·μ)                       (weight surrogates)
//! 3. θ̂   ← θ_{k-1} + ω_k (θ_{k-1} − θ_{k-2})           (extrapolation)
//!    θ_k  ← clip_linf(θ̂ − μ_θ ∇g(θ̂), M),  μ_θ = 1/(γ·L_θ)
//! ```
//!
//! The penalty weight `μ` anneals from `mu_max` to `mu_min` on a cosine
//! schedule, so the auxiliary variables are loosely tied early and converge
//! onto the network as training ends. The local Lipschitz constant `L_θ` is
//! found by doubling backtracking against the descent lemma; in adaptive
//! mode the extrapolation weight
//!
//! ```text
//! ω_1 = (γ−1)/(2(γ+1)) · √δ₁
//! ω_k = (γ−1)/(2(γ+1)) · √(δ_k · L_{θ,k−1} / L_{θ,k})     k ≥ 2
//! ```
//!
//! depends on the very `L_θ` being searched for, so each backtracking step
//! recomputes ω for its candidate `L` and tests the descent lemma at the
//! matching extrapolation point — the accepted pair satisfies both formulas
//! simultaneously.
//!
//! After a warm-up of `warmup_epochs` epochs, the loop turns adaptive: an
//! epoch that increases `Q` is rolled back and retried with a damped
//! schedule (`δ ← max(s₂δ, δ_min)`, `μ_max ← s₁·μ_max`), and an epoch that
//! decreases `Q` relaxes `δ ← min(s₃δ, δ_max)` and tests the two-part
//! termination criterion (per-layer residuals of the auxiliaries).

use crate::fcnn::{
    grad_theta, smooth_objective, ForwardTrace, GradTheta, NetworkParams, SlackTerms,
    SmoothObjectiveParts,
};
use crate::matrix::{svd, Matrix};
use crate::prox::{clip_linf, soft_threshold_matrix, svt_with_values};
use crate::{Error, Result};

/// Hard cap on doubling steps in one Lipschitz search.
const BACKTRACK_LIMIT: usize = 60;
/// Relative slack for the descent-lemma and Q-comparison tests, absorbing
/// floating-point noise without hiding real increases.
const COMPARISON_SLACK: f64 = 1e-12;

// ─── configuration ───

/// Extrapolation weight policy for the θ update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaMode {
    /// ω from the δ- and L-dependent formula above.
    Adaptive,
    /// Constant ω; `Fixed(0.0)` disables extrapolation entirely.
    Fixed(f64),
}

/// All hyperparameters of one training run.
#[derive(Debug, Clone)]
pub struct TrainSchedule {
    /// Number of epochs `K`.
    pub epochs: usize,
    /// ℓ1 strength α on the sparse codes (uniform over hidden layers).
    pub alpha: f64,
    /// Nuclear-norm strength β on the weight surrogates (uniform over layers).
    pub beta: f64,
    /// Weight decay λ.
    pub lambda: f64,
    /// Step damping γ > 1; the gradient step is `μ_θ = 1/(γ·L_θ)`.
    pub gamma: f64,
    /// Final (smallest) penalty weight.
    pub mu_min: f64,
    /// Initial (largest) penalty weight.
    pub mu_max: f64,
    /// Factor applied to `mu_max` when an epoch is rejected (0 < s₁ < 1).
    pub s1: f64,
    /// Factor applied to δ when Q increases (0 < s₂ < 1).
    pub s2: f64,
    /// Factor applied to δ when Q decreases (s₃ ≥ 1).
    pub s3: f64,
    /// Warm-up length `E`: adaptation and termination start at epoch E+1.
    pub warmup_epochs: usize,
    /// ℓ∞ box radius `M` for all parameters.
    pub box_bound: f64,
    /// Initial δ.
    pub delta_init: f64,
    /// Lower clamp for δ.
    pub delta_min: f64,
    /// Upper clamp for δ.
    pub delta_max: f64,
    /// Extrapolation policy.
    pub omega: OmegaMode,
    /// Maximum rejected attempts per epoch before forcing a commit (or, if
    /// no attempt produced a candidate at all, failing).
    pub max_retries: usize,
    /// Termination tolerance per auxiliary block is `tol_scale × entries`.
    pub termination_tol_scale: f64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        TrainSchedule {
            epochs: 300,
            alpha: 0.1,
            beta: 0.1,
            lambda: 1e-3,
            gamma: 1e3,
            mu_min: 1.0,
            mu_max: 1e6,
            s1: 0.1,
            s2: 0.5,
            s3: 1.1,
            warmup_epochs: 200,
            box_bound: 1e3,
            delta_init: 0.99,
            delta_min: 0.01,
            delta_max: 0.99,
            omega: OmegaMode::Adaptive,
            max_retries: 5,
            termination_tol_scale: 1e-3,
        }
    }
}

impl TrainSchedule {
    /// Rejects inconsistent hyperparameters before any computation starts.
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if !(self.mu_min > 0.0) || !(self.mu_max >= self.mu_min) {
            return Err(Error::config(format!(
                "need 0 < mu_min <= mu_max, got mu_min={}, mu_max={}",
                self.mu_min, self.mu_max
            )));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::config(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if self.alpha < 0.0 || self.beta < 0.0 || self.lambda < 0.0 {
            return Err(Error::config("alpha, beta, and lambda must be nonnegative"));
        }
        if !(self.s1 > 0.0 && self.s1 < 1.0) || !(self.s2 > 0.0 && self.s2 < 1.0) {
            return Err(Error::config(format!(
                "s1 and s2 must lie in (0, 1), got s1={}, s2={}",
                self.s1, self.s2
            )));
        }
        if !(self.s3 >= 1.0) {
            return Err(Error::config(format!("s3 must be at least 1, got {}", self.s3)));
        }
        if !(self.box_bound > 0.0) {
            return Err(Error::config("box_bound must be positive"));
        }
        let d_ok = |d: f64| d > 0.0 && d <= 1.0;
        if !d_ok(self.delta_init) || !d_ok(self.delta_min) || !d_ok(self.delta_max) {
            return Err(Error::config("delta_init, delta_min, delta_max must lie in (0, 1]"));
        }
        if self.delta_min > self.delta_max {
            return Err(Error::config("delta_min must not exceed delta_max"));
        }
        if let OmegaMode::Fixed(w) = self.omega {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::config(format!(
                    "fixed extrapolation weight must be finite and nonnegative, got {w}"
                )));
            }
        }
        if !(self.termination_tol_scale > 0.0) {
            return Err(Error::config("termination_tol_scale must be positive"));
        }
        Ok(())
    }
}

// ─── state and records ───

/// Auxiliary variables of the alternating scheme: the sparse codes `H⁽ⁱ⁾`
/// (one per hidden layer) and the weight surrogates `V⁽ˡ⁾` (one per layer).
#[derive(Debug, Clone)]
pub struct AuxState {
    pub h: Vec<Matrix>,
    pub v: Vec<Matrix>,
}

impl AuxState {
    /// Anchors the auxiliaries at the network itself: `H⁽ⁱ⁾ = A⁽ⁱ⁾(θ)` and
    /// `V⁽ˡ⁾ = W⁽ˡ⁾`, so all slack penalties start at exactly zero.
    pub fn anchored(params: &NetworkParams, trace: &ForwardTrace) -> AuxState {
        AuxState {
            h: (0..params.n_hidden()).map(|i| trace.hidden(i).clone()).collect(),
            v: params.weights.clone(),
        }
    }
}

/// The full objective Q at one iterate, split into its pieces.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveValue {
    pub smooth: SmoothObjectiveParts,
    /// `α Σ_i ‖H⁽ⁱ⁾‖₁`
    pub l1: f64,
    /// `β Σ_l ‖V⁽ˡ⁾‖_*`
    pub nuclear: f64,
}

impl ObjectiveValue {
    /// Q itself.
    pub fn total(&self) -> f64 {
        self.smooth.total() + self.l1 + self.nuclear
    }
}

/// One committed epoch of training.
#[derive(Debug, Clone, Copy)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Q at the committed iterate, under this epoch's μ.
    pub q: f64,
    /// Gradient step size `1/(γ·L_θ)`.
    pub mu_theta: f64,
    /// Extrapolation weight actually used.
    pub omega: f64,
    /// Accepted local Lipschitz estimate.
    pub l_theta: f64,
    /// Doubling steps spent in the Lipschitz search of the accepted attempt.
    pub backtracks: usize,
    /// Σ_i ‖H⁽ⁱ⁾ − A⁽ⁱ⁾(θ_k)‖²_F — first termination residual.
    pub c1: f64,
    /// Σ_l ‖V⁽ˡ⁾ − W⁽ˡ⁾_k‖²_F — second termination residual.
    pub c2: f64,
    /// Annealed penalty weight μ of this epoch.
    pub mu: f64,
    /// Q at the previous iterate re-evaluated under this epoch's μ — the
    /// value the committed Q was compared against.
    pub q_prev_same_mu: f64,
    /// Rejected attempts before this commit.
    pub retries: usize,
    /// ‖θ_k‖∞ after the commit.
    pub theta_linf: f64,
}

/// Why training stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Both per-layer residual criteria held after a Q decrease.
    Converged { epoch: usize },
    /// The epoch budget ran out.
    EpochLimit,
}

/// Everything a finished run hands back.
#[derive(Debug)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    pub aux: AuxState,
    pub history: Vec<EpochRecord>,
    /// Q(ξ₀): with the auxiliaries anchored at the initial network this
    /// value contains no slack terms and is independent of μ.
    pub q_initial: f64,
    pub q_final: f64,
    pub stop: StopReason,
}

/// Result of the two-part termination test.
#[derive(Debug, Clone, Copy)]
pub struct TerminationCheck {
    pub c1_total: f64,
    pub c2_total: f64,
    pub satisfied: bool,
}

// ─── schedule pieces ───

/// Cosine annealing of the penalty weight, from `mu_max` toward `mu_min`:
///
/// ```text
/// μ(k) = mu_min + ½ (mu_max − mu_min) (1 + cos(π k / K))
/// ```
///
/// `epoch` is 1-based; `μ(K) = mu_min` exactly.
pub fn anneal_mu(mu_min: f64, mu_max: f64, epoch: usize, total_epochs: usize) -> f64 {
    debug_assert!(epoch >= 1 && epoch <= total_epochs);
    let phase = std::f64::consts::PI * epoch as f64 / total_epochs as f64;
    mu_min + 0.5 * (mu_max - mu_min) * (1.0 + phase.cos())
}

/// Extrapolation weight for the adaptive mode.
///
/// On the first epoch there is no previous Lipschitz estimate and the weight
/// is `(γ−1)/(2(γ+1))·√δ`; afterwards the ratio `L_prev/L_current` scales it.
pub fn compute_omega(gamma: f64, delta: f64, l_prev: Option<f64>, l_current: f64) -> f64 {
    let c = (gamma - 1.0) / (2.0 * (gamma + 1.0));
    match l_prev {
        None => c * delta.sqrt(),
        Some(lp) => c * (delta * lp / l_current).sqrt(),
    }
}

/// θ̂ = current + ω (current − previous), layer by layer.
pub fn extrapolate(current: &NetworkParams, previous: &NetworkParams, omega: f64) -> NetworkParams {
    if omega == 0.0 {
        return current.clone();
    }
    let combine = |c: &Matrix, p: &Matrix| {
        let mut m = c.scale(1.0 + omega);
        m.axpy(-omega, p);
        m
    };
    let weights = current
        .weights
        .iter()
        .zip(&previous.weights)
        .map(|(c, p)| combine(c, p))
        .collect();
    let biases = current
        .biases
        .iter()
        .zip(&previous.biases)
        .map(|(c, p)| combine(c, p))
        .collect();
    NetworkParams::from_parts(current.dims().to_vec(), weights, biases, current.activation)
        .expect("extrapolation preserves every shape")
}

/// Adjusts δ after an epoch: shrink toward `delta_min` when Q increased,
/// relax toward `delta_max` when it decreased.
pub fn adapt_delta(delta: f64, q_increased: bool, schedule: &TrainSchedule) -> f64 {
    if q_increased {
        (schedule.s2 * delta).max(schedule.delta_min)
    } else {
        (schedule.s3 * delta).min(schedule.delta_max)
    }
}

// ─── block updates ───

/// Exact update of the sparse codes: entrywise shrinkage of the hidden
/// outputs of the *previous* iterate, `H⁽ⁱ⁾ = soft_threshold(A⁽ⁱ⁾, α·μ)`.
pub fn update_h(trace_prev: &ForwardTrace, alpha: f64, mu_h: f64) -> Vec<Matrix> {
    (0..trace_prev.n_hidden())
        .map(|i| soft_threshold_matrix(trace_prev.hidden(i), alpha * mu_h))
        .collect()
}

/// Exact update of the weight surrogates: `V⁽ˡ⁾ = svt(W⁽ˡ⁾, β·μ)`.
///
/// Also returns `Σ_l ‖V⁽ˡ⁾‖_*`, which the objective needs and the SVT
/// computes for free.
pub fn update_v(params: &NetworkParams, beta: f64, mu_v: f64) -> Result<(Vec<Matrix>, f64)> {
    let mut v = Vec::with_capacity(params.n_layers());
    let mut nuclear_sum = 0.0;
    for w in &params.weights {
        let (vl, values) = svt_with_values(w, beta * mu_v)?;
        nuclear_sum += values.iter().sum::<f64>();
        v.push(vl);
    }
    Ok((v, nuclear_sum))
}

/// Evaluates Q at an arbitrary iterate (recomputing the nuclear norms).
pub fn objective_q(
    params: &NetworkParams,
    trace: &ForwardTrace,
    x: &Matrix,
    mask: &Matrix,
    aux: &AuxState,
    alpha: f64,
    beta: f64,
    lambda: f64,
    mu: f64,
) -> Result<ObjectiveValue> {
    let slack = SlackTerms {
        h: &aux.h,
        mu_h: mu,
        v: &aux.v,
        mu_v: mu,
    };
    let smooth = smooth_objective(params, trace, x, mask, lambda, Some(&slack));
    let l1 = alpha * aux.h.iter().map(Matrix::sum_abs).sum::<f64>();
    let mut nuclear = 0.0;
    for v in &aux.v {
        nuclear += svd(v)?.s.iter().sum::<f64>();
    }
    Ok(ObjectiveValue {
        smooth,
        l1,
        nuclear: beta * nuclear,
    })
}

/// Per-layer termination test against `tol_scale × entries` thresholds.
pub fn check_termination(
    params: &NetworkParams,
    trace: &ForwardTrace,
    aux: &AuxState,
    tol_scale: f64,
) -> TerminationCheck {
    let h_resid: Vec<f64> = aux
        .h
        .iter()
        .enumerate()
        .map(|(i, h)| trace.hidden(i).sub(h).frobenius_norm_sq())
        .collect();
    let v_resid: Vec<f64> = aux
        .v
        .iter()
        .zip(&params.weights)
        .map(|(v, w)| v.sub(w).frobenius_norm_sq())
        .collect();
    let h_sizes: Vec<usize> = aux.h.iter().map(Matrix::len).collect();
    let v_sizes: Vec<usize> = aux.v.iter().map(Matrix::len).collect();
    termination_from_residuals(&h_resid, &h_sizes, &v_resid, &v_sizes, tol_scale)
}

fn termination_from_residuals(
    h_resid: &[f64],
    h_sizes: &[usize],
    v_resid: &[f64],
    v_sizes: &[usize],
    tol_scale: f64,
) -> TerminationCheck {
    let c1_ok = h_resid
        .iter()
        .zip(h_sizes)
        .all(|(&r, &n)| r <= tol_scale * n as f64);
    let c2_ok = v_resid
        .iter()
        .zip(v_sizes)
        .all(|(&r, &n)| r <= tol_scale * n as f64);
    TerminationCheck {
        c1_total: h_resid.iter().sum(),
        c2_total: v_resid.iter().sum(),
        satisfied: c1_ok && c2_ok,
    }
}

// ─── Lipschitz search ───

/// Outcome of a standalone Lipschitz search at a fixed evaluation point.
#[derive(Debug)]
pub struct LipschitzEstimate {
    /// Accepted constant.
    pub l: f64,
    /// Doubling steps taken.
    pub backtracks: usize,
    /// The clipped gradient-step candidate `clip(θ̂ − ∇g/(γL), M)` at the
    /// accepted `L`.
    pub candidate: NetworkParams,
}

/// `⟨grad, a − b⟩` over all parameters.
fn grad_inner(grad: &GradTheta, a: &NetworkParams, b: &NetworkParams) -> f64 {
    let mut acc = 0.0;
    for ((g, wa), wb) in grad.weights.iter().zip(&a.weights).zip(&b.weights) {
        for ((&gv, &av), &bv) in g.as_slice().iter().zip(wa.as_slice()).zip(wb.as_slice()) {
            acc += gv * (av - bv);
        }
    }
    for ((g, ba), bb) in grad.biases.iter().zip(&a.biases).zip(&b.biases) {
        for ((&gv, &av), &bv) in g.as_slice().iter().zip(ba.as_slice()).zip(bb.as_slice()) {
            acc += gv * (av - bv);
        }
    }
    acc
}

/// `‖a − b‖²` over all parameters.
fn params_dist_sq(a: &NetworkParams, b: &NetworkParams) -> f64 {
    let mut acc = 0.0;
    for (wa, wb) in a.weights.iter().zip(&b.weights) {
        acc += wa.sub(wb).frobenius_norm_sq();
    }
    for (ba, bb) in a.biases.iter().zip(&b.biases) {
        acc += ba.sub(bb).frobenius_norm_sq();
    }
    acc
}

/// `clip(θ̂ − step·∇g, M)` layer by layer.
fn clipped_gradient_step(
    hat: &NetworkParams,
    grad: &GradTheta,
    step: f64,
    bound: f64,
) -> NetworkParams {
    let weights = hat
        .weights
        .iter()
        .zip(&grad.weights)
        .map(|(w, g)| {
            let mut c = w.clone();
            c.axpy(-step, g);
            clip_linf(&c, bound)
        })
        .collect();
    let biases = hat
        .biases
        .iter()
        .zip(&grad.biases)
        .map(|(b, g)| {
            let mut c = b.clone();
            c.axpy(-step, g);
            clip_linf(&c, bound)
        })
        .collect();
    NetworkParams::from_parts(hat.dims().to_vec(), weights, biases, hat.activation)
        .expect("gradient step preserves every shape")
}

/// Descent-lemma test for a candidate constant `L`:
///
/// ```text
/// g(θ⁺) ≤ g(θ̂) + ⟨∇g(θ̂), θ⁺ − θ̂⟩ + L/2 ‖θ⁺ − θ̂‖²  (+ relative slack)
/// ```
fn descent_lemma_holds(
    g_candidate: f64,
    g_hat: f64,
    inner: f64,
    dist_sq: f64,
    l: f64,
) -> bool {
    g_candidate <= g_hat + inner + 0.5 * l * dist_sq + COMPARISON_SLACK * (1.0 + g_hat.abs())
}

/// Doubling search for a local Lipschitz constant of `∇g` at the fixed
/// point `params_hat`, starting from `l_init`.
///
/// For each candidate `L` the clipped step `clip(θ̂ − ∇g(θ̂)/(γL), M)` is
/// formed and the descent lemma tested there; the first `L` that validates
/// is returned together with its candidate. Fails with a numerical error
/// if the search exceeds its doubling budget.
pub fn estimate_lipschitz_theta(
    params_hat: &NetworkParams,
    x: &Matrix,
    mask: &Matrix,
    lambda: f64,
    slack: Option<&SlackTerms>,
    gamma: f64,
    box_bound: f64,
    l_init: f64,
) -> Result<LipschitzEstimate> {
    let trace_hat = params_hat.forward(x);
    let g_hat = smooth_objective(params_hat, &trace_hat, x, mask, lambda, slack).total();
    let grad = grad_theta(params_hat, &trace_hat, x, mask, lambda, slack);
    let mut l = l_init;
    for t in 0..=BACKTRACK_LIMIT {
        let candidate = clipped_gradient_step(params_hat, &grad, 1.0 / (gamma * l), box_bound);
        let trace_c = candidate.forward(x);
        let g_c = smooth_objective(&candidate, &trace_c, x, mask, lambda, slack).total();
        let inner = grad_inner(&grad, &candidate, params_hat);
        let dist_sq = params_dist_sq(&candidate, params_hat);
        if descent_lemma_holds(g_c, g_hat, inner, dist_sq, l) {
            return Ok(LipschitzEstimate {
                l,
                backtracks: t,
                candidate,
            });
        }
        l *= 2.0;
    }
    Err(Error::numerical(format!(
        "Lipschitz search exceeded {BACKTRACK_LIMIT} doublings from L={l_init}"
    )))
}

// ─── the θ update inside an epoch ───

/// An accepted θ step with everything the commit needs.
struct ThetaStep {
    params: NetworkParams,
    trace: ForwardTrace,
    l: f64,
    omega: f64,
    mu_theta: f64,
    backtracks: usize,
}

/// One prox-linear θ update with self-consistent extrapolation.
///
/// Returns `None` when the doubling budget is exhausted (the epoch is then
/// rejected and retried with a shrunk schedule).
#[allow(clippy::too_many_arguments)]
fn theta_update(
    current: &NetworkParams,
    previous: &NetworkParams,
    x: &Matrix,
    mask: &Matrix,
    lambda: f64,
    slack: &SlackTerms,
    schedule: &TrainSchedule,
    delta: f64,
    l_prev: Option<f64>,
    epoch_is_first: bool,
) -> Option<ThetaStep> {
    let gamma = schedule.gamma;
    let bound = schedule.box_bound;
    // Warm start: an accepted constant rarely moves by more than one
    // doubling between epochs, so start half a step below the last one.
    let l_start = match l_prev {
        Some(lp) => lp / 2.0,
        None => 1.0,
    };

    match schedule.omega {
        OmegaMode::Fixed(w) => {
            // The evaluation point does not depend on L: extrapolate and
            // differentiate once, then search.
            let hat = extrapolate(current, previous, w);
            let trace_hat = hat.forward(x);
            let g_hat = smooth_objective(&hat, &trace_hat, x, mask, lambda, Some(slack)).total();
            let grad = grad_theta(&hat, &trace_hat, x, mask, lambda, Some(slack));
            let mut l = l_start;
            for t in 0..=BACKTRACK_LIMIT {
                let mu_theta = 1.0 / (gamma * l);
                let candidate = clipped_gradient_step(&hat, &grad, mu_theta, bound);
                let trace_c = candidate.forward(x);
                let g_c =
                    smooth_objective(&candidate, &trace_c, x, mask, lambda, Some(slack)).total();
                let inner = grad_inner(&grad, &candidate, &hat);
                let dist_sq = params_dist_sq(&candidate, &hat);
                if descent_lemma_holds(g_c, g_hat, inner, dist_sq, l) {
                    return Some(ThetaStep {
                        params: candidate,
                        trace: trace_c,
                        l,
                        omega: w,
                        mu_theta,
                        backtracks: t,
                    });
                }
                l *= 2.0;
            }
            None
        }
        OmegaMode::Adaptive => {
            // ω depends on the candidate L, so every doubling step gets its
            // own extrapolation point and gradient; the accepted (ω, L)
            // pair satisfies the ω formula and the descent lemma at once.
            let mut l = l_start;
            for t in 0..=BACKTRACK_LIMIT {
                let omega = if epoch_is_first {
                    compute_omega(gamma, delta, None, l)
                } else {
                    compute_omega(gamma, delta, l_prev, l)
                };
                let hat = extrapolate(current, previous, omega);
                let trace_hat = hat.forward(x);
                let g_hat =
                    smooth_objective(&hat, &trace_hat, x, mask, lambda, Some(slack)).total();
                let grad = grad_theta(&hat, &trace_hat, x, mask, lambda, Some(slack));
                let mu_theta = 1.0 / (gamma * l);
                let candidate = clipped_gradient_step(&hat, &grad, mu_theta, bound);
                let trace_c = candidate.forward(x);
                let g_c =
                    smooth_objective(&candidate, &trace_c, x, mask, lambda, Some(slack)).total();
                let inner = grad_inner(&grad, &candidate, &hat);
                let dist_sq = params_dist_sq(&candidate, &hat);
                if descent_lemma_holds(g_c, g_hat, inner, dist_sq, l) {
                    return Some(ThetaStep {
                        params: candidate,
                        trace: trace_c,
                        l,
                        omega,
                        mu_theta,
                        backtracks: t,
                    });
                }
                l *= 2.0;
            }
            None
        }
    }
}

// ─── the training loop ───

/// Cached pieces of Q at the last committed iterate, so the next epoch's
/// Q-comparison needs no recomputation: only the μ-dependent penalty
/// weights change between epochs.
#[derive(Clone)]
struct EpochCache {
    masked_loss: f64,
    weight_decay: f64,
    h_resid: Vec<f64>,
    v_resid: Vec<f64>,
    l1: f64,
    nuclear: f64,
}

impl EpochCache {
    fn q_at(&self, mu: f64) -> f64 {
        self.masked_loss
            + self.weight_decay
            + self.h_resid.iter().sum::<f64>() / (2.0 * mu)
            + self.v_resid.iter().sum::<f64>() / (2.0 * mu)
            + self.l1
            + self.nuclear
    }
}

/// A fully evaluated epoch attempt, ready to commit or discard.
struct Attempt {
    params: NetworkParams,
    trace: ForwardTrace,
    aux: AuxState,
    cache: EpochCache,
    q: f64,
    q_prev_same_mu: f64,
    mu: f64,
    l: f64,
    omega: f64,
    mu_theta: f64,
    backtracks: usize,
}

/// Trains the autoencoder on the observed entries of `x`.
///
/// `mask` is 1 on observed and 0 on missing entries; the network `init`
/// must be an autoencoder for `x`'s row dimension. Returns the final
/// parameters, auxiliaries, and the per-epoch history.
pub fn train(
    x: &Matrix,
    mask: &Matrix,
    init: NetworkParams,
    schedule: &TrainSchedule,
) -> Result<TrainOutcome> {
    schedule.validate()?;
    validate_problem(x, mask, &init)?;

    let k_total = schedule.epochs;
    let tol = schedule.termination_tol_scale;

    // ξ₀: parameters at the Glorot draw, auxiliaries anchored on them. The
    // two extrapolation inputs start equal (θ₀ = θ₋₁).
    let mut current = init;
    let mut previous = current.clone();
    let mut trace = current.forward(x);
    let mut aux = AuxState::anchored(&current, &trace);

    let mut nuclear0 = 0.0;
    for v in &aux.v {
        nuclear0 += svd(v)?.s.iter().sum::<f64>();
    }
    let smooth0 = smooth_objective(&current, &trace, x, mask, schedule.lambda, None);
    let mut cache = EpochCache {
        masked_loss: smooth0.masked_loss,
        weight_decay: smooth0.weight_decay,
        h_resid: vec![0.0; current.n_hidden()],
        v_resid: vec![0.0; current.n_layers()],
        l1: schedule.alpha * aux.h.iter().map(Matrix::sum_abs).sum::<f64>(),
        nuclear: schedule.beta * nuclear0,
    };
    // Residual-free, hence independent of μ.
    let q_initial = cache.q_at(1.0);

    let mut delta = schedule.delta_init;
    let mut mu_max_live = schedule.mu_max;
    let mut l_prev: Option<f64> = None;
    let mut history: Vec<EpochRecord> = Vec::with_capacity(k_total);
    let mut stop = StopReason::EpochLimit;

    let h_sizes: Vec<usize> = aux.h.iter().map(Matrix::len).collect();
    let v_sizes: Vec<usize> = aux.v.iter().map(Matrix::len).collect();

    'epochs: for k in 1..=k_total {
        let adaptive_phase = k > schedule.warmup_epochs;
        let mut best: Option<Attempt> = None;
        let mut failures = 0usize;

        loop {
            let mu = anneal_mu(schedule.mu_min, mu_max_live, k, k_total);

            // Exact block updates from the last committed iterate.
            let h_new = update_h(&trace, schedule.alpha, mu);
            let (v_new, nuclear_raw) = update_v(&current, schedule.beta, mu)?;
            let l1_new = schedule.alpha * h_new.iter().map(Matrix::sum_abs).sum::<f64>();
            let nuclear_new = schedule.beta * nuclear_raw;

            let slack = SlackTerms {
                h: &h_new,
                mu_h: mu,
                v: &v_new,
                mu_v: mu,
            };
            let step = theta_update(
                &current,
                &previous,
                x,
                mask,
                schedule.lambda,
                &slack,
                schedule,
                delta,
                l_prev,
                k == 1 && history.is_empty(),
            );

            let attempt = match step {
                Some(s) => {
                    // Assemble Q(ξ_k; μ) from the pieces the step already
                    // produced; the residuals double as the termination
                    // quantities and as the next epoch's cache.
                    let h_resid: Vec<f64> = h_new
                        .iter()
                        .enumerate()
                        .map(|(i, h)| s.trace.hidden(i).sub(h).frobenius_norm_sq())
                        .collect();
                    let v_resid: Vec<f64> = v_new
                        .iter()
                        .zip(&s.params.weights)
                        .map(|(v, w)| v.sub(w).frobenius_norm_sq())
                        .collect();
                    let parts =
                        smooth_objective(&s.params, &s.trace, x, mask, schedule.lambda, None);
                    let cache_new = EpochCache {
                        masked_loss: parts.masked_loss,
                        weight_decay: parts.weight_decay,
                        h_resid,
                        v_resid,
                        l1: l1_new,
                        nuclear: nuclear_new,
                    };
                    Some(Attempt {
                        q: cache_new.q_at(mu),
                        q_prev_same_mu: cache.q_at(mu),
                        cache: cache_new,
                        aux: AuxState { h: h_new, v: v_new },
                        params: s.params,
                        trace: s.trace,
                        mu,
                        l: s.l,
                        omega: s.omega,
                        mu_theta: s.mu_theta,
                        backtracks: s.backtracks,
                    })
                }
                None => None,
            };

            match attempt {
                Some(a) => {
                    let tolerance = COMPARISON_SLACK * (1.0 + a.q_prev_same_mu.abs());
                    let increased = a.q > a.q_prev_same_mu + tolerance;
                    if increased && adaptive_phase && failures <= schedule.max_retries {
                        // Reject: damp δ, cool the annealing ceiling, retry
                        // the epoch from the committed iterate. Keep the
                        // best-Q attempt in case every retry fails.
                        delta = adapt_delta(delta, true, schedule);
                        mu_max_live = (schedule.s1 * mu_max_live).max(schedule.mu_min);
                        if best.as_ref().map_or(true, |b| a.q < b.q) {
                            best = Some(a);
                        }
                        failures += 1;
                        if failures > schedule.max_retries {
                            // Budget exhausted: commit the least-bad attempt.
                            let b = best.take().expect("at least one rejected attempt is stored");
                            commit(
                                b,
                                k,
                                failures,
                                &mut current,
                                &mut previous,
                                &mut trace,
                                &mut aux,
                                &mut cache,
                                &mut l_prev,
                                &mut history,
                            );
                            continue 'epochs;
                        }
                        continue;
                    }

                    let decreased = a.q < a.q_prev_same_mu - tolerance;
                    if decreased && adaptive_phase {
                        delta = adapt_delta(delta, false, schedule);
                    }
                    let term = termination_from_residuals(
                        &a.cache.h_resid,
                        &h_sizes,
                        &a.cache.v_resid,
                        &v_sizes,
                        tol,
                    );
                    let converged = adaptive_phase && decreased && term.satisfied;
                    commit(
                        a,
                        k,
                        failures,
                        &mut current,
                        &mut previous,
                        &mut trace,
                        &mut aux,
                        &mut cache,
                        &mut l_prev,
                        &mut history,
                    );
                    if converged {
                        stop = StopReason::Converged { epoch: k };
                        break 'epochs;
                    }
                    continue 'epochs;
                }
                None => {
                    // The Lipschitz search blew its budget: no candidate to
                    // keep. Cool the schedule and retry — in any phase; this
                    // is a numerical guard, not an adaptation rule.
                    mu_max_live = (schedule.s1 * mu_max_live).max(schedule.mu_min);
                    failures += 1;
                    if failures > schedule.max_retries {
                        match best.take() {
                            Some(b) => {
                                commit(
                                    b,
                                    k,
                                    failures,
                                    &mut current,
                                    &mut previous,
                                    &mut trace,
                                    &mut aux,
                                    &mut cache,
                                    &mut l_prev,
                                    &mut history,
                                );
                                continue 'epochs;
                            }
                            None => {
                                return Err(Error::numerical(format!(
                                    "epoch {k}: gradient step search failed {failures} times \
                                     with no usable attempt"
                                )));
                            }
                        }
                    }
                    continue;
                }
            }
        }
    }

    let q_final = history.last().map_or(q_initial, |r| r.q);
    Ok(TrainOutcome {
        params: current,
        aux,
        history,
        q_initial,
        q_final,
        stop,
    })
}

/// Installs an accepted attempt as the committed iterate and records it.
#[allow(clippy::too_many_arguments)]
fn commit(
    a: Attempt,
    epoch: usize,
    retries: usize,
    current: &mut NetworkParams,
    previous: &mut NetworkParams,
    trace: &mut ForwardTrace,
    aux: &mut AuxState,
    cache: &mut EpochCache,
    l_prev: &mut Option<f64>,
    history: &mut Vec<EpochRecord>,
) {
    history.push(EpochRecord {
        epoch,
        q: a.q,
        mu_theta: a.mu_theta,
        omega: a.omega,
        l_theta: a.l,
        backtracks: a.backtracks,
        c1: a.cache.h_resid.iter().sum(),
        c2: a.cache.v_resid.iter().sum(),
        mu: a.mu,
        q_prev_same_mu: a.q_prev_same_mu,
        retries,
        theta_linf: a.params.linf_norm(),
    });
    *previous = std::mem::replace(current, a.params);
    *trace = a.trace;
    *aux = a.aux;
    *cache = a.cache;
    *l_prev = Some(a.l);
}

fn validate_problem(x: &Matrix, mask: &Matrix, init: &NetworkParams) -> Result<()> {
    if x.shape() != mask.shape() {
        return Err(Error::config(format!(
            "data is {:?} but mask is {:?}",
            x.shape(),
            mask.shape()
        )));
    }
    let dims = init.dims();
    if dims[0] != x.rows() || *dims.last().unwrap() != x.rows() {
        return Err(Error::config(format!(
            "network widths {dims:?} do not form an autoencoder for {} -row data",
            x.rows()
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

/// Fills a partially observed matrix: observed entries are kept verbatim,
/// missing ones come from the trained network's reconstruction.
pub fn complete(params: &NetworkParams, x: &Matrix, mask: &Matrix) -> Matrix {
    let trace = params.forward(x);
    let xhat = trace.xhat();
    let mut out = x.clone();
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            if mask.get(i, j) == 0.0 {
                out.set(i, j, xhat.get(i, j));
            }
        }
    }
    out
}

// ─── tests ───
