//! Fully connected autoencoder: forward pass, smooth training objective,
//! and its exact gradient.
//!
//! The network maps a whole data matrix at once. With widths
//! `dims = [d₀, d₁, …, d_p]` and input `X ∈ ℝ^{d₀×q}` (columns are samples):
//!
//! ```text
//! A⁽⁰⁾ = X
//! P⁽ˡ⁾ = W⁽ˡ⁾ A⁽ˡ⁾ + b⁽ˡ⁾ 1ᵀ          l = 0 … p-1   (pre-activations)
//! A⁽ˡ⁺¹⁾ = σ(P⁽ˡ⁾)                     l = 0 … p-2   (hidden outputs)
//! X̂ = A⁽ᵖ⁾ = P⁽ᵖ⁻¹⁾                                  (linear output layer)
//! ```
//!
//! The output layer is linear: reconstructions must be able to leave the
//! bounded range of the hidden nonlinearity, and recovering arbitrary data
//! (an identity map, say) is otherwise impossible.
//!
//! The smooth objective this module differentiates is
//!
//! ```text
//! g(θ) = ‖N ⊙ (X − X̂(θ))‖²_F  +  λ Σ_l ‖W⁽ˡ⁾‖²_F
//!      + Σ_i 1/(2μ_h) ‖A⁽ⁱ⁾(θ) − H⁽ⁱ⁾‖²_F          (hidden-code slack)
//!      + Σ_l 1/(2μ_v) ‖W⁽ˡ⁾ − V⁽ˡ⁾‖²_F             (weight-surrogate slack)
//! ```
//!
//! where `N` is the observation mask and the slack terms tie the network to
//! the auxiliary variables of the alternating scheme; passing no slack gives
//! the plain masked autoencoder objective.

use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::{Error, Result};

// ─── activations ───

/// Hidden-layer nonlinearity. All choices are C² with cheap derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// `tanh(x)` — the default.
    Tanh,
    /// Logistic `1 / (1 + e^{-x})`.
    Sigmoid,
    /// `ln(1 + eˣ)`, evaluated in overflow-free form.
    Softplus,
    /// `1.71 · tanh(2x/3)`, a gain-scaled tanh whose output range slightly
    /// exceeds `[-1, 1]`; also the nonlinearity of the synthetic generator.
    ScaledTanh,
}

/// Gain of [`Activation::ScaledTanh`].
pub const SCALED_TANH_GAIN: f64 = 1.71;
/// Input slope of [`Activation::ScaledTanh`].
pub const SCALED_TANH_SLOPE: f64 = 2.0 / 3.0;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    /// Value at pre-activation `x`.
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            // max(x, 0) + ln(1 + e^{-|x|}) equals ln(1 + eˣ) without overflow.
            Activation::Softplus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
            Activation::ScaledTanh => SCALED_TANH_GAIN * (SCALED_TANH_SLOPE * x).tanh(),
        }
    }

    /// Derivative at pre-activation `x`.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Softplus => sigmoid(x),
            Activation::ScaledTanh => {
                let t = (SCALED_TANH_SLOPE * x).tanh();
                SCALED_TANH_GAIN * SCALED_TANH_SLOPE * (1.0 - t * t)
            }
        }
    }

    /// Stable lowercase identifier, used in configs and checkpoints.
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Softplus => "softplus",
            Activation::ScaledTanh => "scaled-tanh",
        }
    }

    /// Inverse of [`Activation::name`].
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "softplus" => Ok(Activation::Softplus),
            "scaled-tanh" => Ok(Activation::ScaledTanh),
            other => Err(Error::config(format!(
                "unknown activation {other:?}; expected tanh, sigmoid, softplus, or scaled-tanh"
            ))),
        }
    }
}

// ─── parameters ───

/// All trainable parameters of the network.
///
/// Layer `l` maps width `dims[l]` to `dims[l+1]`; `weights[l]` has shape
/// `(dims[l+1], dims[l])` and `biases[l]` is a `(dims[l+1], 1)` column.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    dims: Vec<usize>,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Matrix>,
    pub activation: Activation,
}

impl NetworkParams {
    /// Glorot-uniform initialization: `W⁽ˡ⁾ ~ U(-a, a)` with
    /// `a = √(6 / (fan_in + fan_out))`, biases zero.
    pub fn new_glorot(dims: &[usize], activation: Activation, rng: &mut Rng) -> Result<Self> {
        Self::validate_dims(dims)?;
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_out * fan_in).map(|_| rng.uniform(-a, a)).collect();
            weights.push(Matrix::from_vec(fan_out, fan_in, data));
            biases.push(Matrix::zeros(fan_out, 1));
        }
        Ok(NetworkParams {
            dims: dims.to_vec(),
            weights,
            biases,
            activation,
        })
    }

    /// Wraps pre-built layers, validating every shape against `dims`.
    pub fn from_parts(
        dims: Vec<usize>,
        weights: Vec<Matrix>,
        biases: Vec<Matrix>,
        activation: Activation,
    ) -> Result<Self> {
        Self::validate_dims(&dims)?;
        if weights.len() != dims.len() - 1 || biases.len() != dims.len() - 1 {
            return Err(Error::config(format!(
                "expected {} layers, got {} weight and {} bias blocks",
                dims.len() - 1,
                weights.len(),
                biases.len()
            )));
        }
        for l in 0..weights.len() {
            if weights[l].shape() != (dims[l + 1], dims[l]) {
                return Err(Error::config(format!(
                    "layer {l}: weight shape {:?} does not match widths ({}, {})",
                    weights[l].shape(),
                    dims[l + 1],
                    dims[l]
                )));
            }
            if biases[l].shape() != (dims[l + 1], 1) {
                return Err(Error::config(format!(
                    "layer {l}: bias shape {:?} is not a ({}, 1) column",
                    biases[l].shape(),
                    dims[l + 1]
                )));
            }
        }
        Ok(NetworkParams {
            dims,
            weights,
            biases,
            activation,
        })
    }

    fn validate_dims(dims: &[usize]) -> Result<()> {
        if dims.len() < 2 {
            return Err(Error::config(format!(
                "a network needs at least an input and an output width, got {dims:?}"
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::config(format!("zero-width layer in {dims:?}")));
        }
        Ok(())
    }

    /// Layer widths, input first.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of weight layers.
    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    /// Number of hidden layers (= weight layers − 1; the output is linear).
    pub fn n_hidden(&self) -> usize {
        self.weights.len() - 1
    }

    /// Total number of scalar parameters.
    pub fn n_params(&self) -> usize {
        self.weights.iter().map(Matrix::len).sum::<usize>()
            + self.biases.iter().map(Matrix::len).sum::<usize>()
    }

    /// Largest absolute parameter value.
    pub fn linf_norm(&self) -> f64 {
        let w = self.weights.iter().map(Matrix::max_abs).fold(0.0, f64::max);
        let b = self.biases.iter().map(Matrix::max_abs).fold(0.0, f64::max);
        w.max(b)
    }

    /// Serializes all parameters into one vector.
    ///
    /// Layout: each weight matrix in layer order, column-major, followed by
    /// each bias column in layer order. [`NetworkParams::unflatten`] inverts
    /// this exactly.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for w in &self.weights {
            for j in 0..w.cols() {
                for i in 0..w.rows() {
                    out.push(w.get(i, j));
                }
            }
        }
        for b in &self.biases {
            out.extend_from_slice(b.as_slice());
        }
        out
    }

    /// Rebuilds parameters from [`NetworkParams::flatten`] output.
    pub fn unflatten(dims: &[usize], activation: Activation, flat: &[f64]) -> Result<Self> {
        Self::validate_dims(dims)?;
        let n_weights: usize = (0..dims.len() - 1).map(|l| dims[l + 1] * dims[l]).sum();
        let n_biases: usize = dims[1..].iter().sum();
        if flat.len() != n_weights + n_biases {
            return Err(Error::config(format!(
                "flat buffer has {} values but widths {dims:?} need {}",
                flat.len(),
                n_weights + n_biases
            )));
        }
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        let mut at = 0;
        for l in 0..dims.len() - 1 {
            let (rows, cols) = (dims[l + 1], dims[l]);
            let mut w = Matrix::zeros(rows, cols);
            for j in 0..cols {
                for i in 0..rows {
                    w.set(i, j, flat[at]);
                    at += 1;
                }
            }
            weights.push(w);
        }
        for &rows in &dims[1..] {
            biases.push(Matrix::from_vec(rows, 1, flat[at..at + rows].to_vec()));
            at += rows;
        }
        NetworkParams::from_parts(dims.to_vec(), weights, biases, activation)
    }

    /// Runs the network on `x` (columns are samples), recording every
    /// intermediate needed for the objective and the backward pass.
    pub fn forward(&self, x: &Matrix) -> ForwardTrace {
        assert_eq!(
            x.rows(),
            self.dims[0],
            "input has {} rows but the network expects {}",
            x.rows(),
            self.dims[0]
        );
        let p = self.n_layers();
        let mut pre = Vec::with_capacity(p);
        let mut post = Vec::with_capacity(p + 1);
        post.push(x.clone());
        for l in 0..p {
            let mut z = self.weights[l].matmul(&post[l]);
            // Broadcast the bias column across samples.
            for i in 0..z.rows() {
                let bi = self.biases[l].get(i, 0);
                for v in z.row_mut(i) {
                    *v += bi;
                }
            }
            let a = if l + 1 == p {
                z.clone() // linear output layer
            } else {
                z.map(|v| self.activation.apply(v))
            };
            pre.push(z);
            post.push(a);
        }
        ForwardTrace { pre, post }
    }
}

// ─── forward trace ───

/// Every intermediate of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `pre[l] = W⁽ˡ⁾ A⁽ˡ⁾ + b⁽ˡ⁾1ᵀ` for each weight layer `l`.
    pub pre: Vec<Matrix>,
    /// `post[0]` is the input; `post[l+1]` is layer `l`'s output. The last
    /// entry is the reconstruction.
    pub post: Vec<Matrix>,
}

impl ForwardTrace {
    /// The reconstruction `X̂`.
    pub fn xhat(&self) -> &Matrix {
        self.post.last().expect("trace has at least the input")
    }

    /// Output of hidden layer `i` (0-based; `i < n_hidden`).
    pub fn hidden(&self, i: usize) -> &Matrix {
        &self.post[i + 1]
    }

    /// Number of hidden layers in the trace.
    pub fn n_hidden(&self) -> usize {
        self.post.len() - 2
    }
}

// ─── objective ───

/// Ties the smooth objective to the auxiliary variables of the alternating
/// scheme. `h[i]` matches the shape of hidden output `i`; `v[l]` matches
/// `weights[l]`.
#[derive(Debug)]
pub struct SlackTerms<'a> {
    pub h: &'a [Matrix],
    pub mu_h: f64,
    pub v: &'a [Matrix],
    pub mu_v: f64,
}

/// The smooth objective, split into its four summands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothObjectiveParts {
    /// `‖N ⊙ (X − X̂)‖²_F`
    pub masked_loss: f64,
    /// `λ Σ ‖W⁽ˡ⁾‖²_F`
    pub weight_decay: f64,
    /// `Σ_i 1/(2μ_h) ‖A⁽ⁱ⁾ − H⁽ⁱ⁾‖²_F`
    pub h_penalty: f64,
    /// `Σ_l 1/(2μ_v) ‖W⁽ˡ⁾ − V⁽ˡ⁾‖²_F`
    pub v_penalty: f64,
}

impl SmoothObjectiveParts {
    /// Sum of all four terms.
    pub fn total(&self) -> f64 {
        self.masked_loss + self.weight_decay + self.h_penalty + self.v_penalty
    }
}

/// Evaluates the smooth objective at the parameters that produced `trace`.
///
/// `mask` holds 1 for observed entries and 0 for missing ones; `lambda` is
/// the weight-decay strength. Without `slack` the two penalty terms are 0.
pub fn smooth_objective(
    params: &NetworkParams,
    trace: &ForwardTrace,
    x: &Matrix,
    mask: &Matrix,
    lambda: f64,
    slack: Option<&SlackTerms>,
) -> SmoothObjectiveParts {
    let masked_loss = mask.hadamard(&x.sub(trace.xhat())).frobenius_norm_sq();
    let weight_decay = lambda * params.weights.iter().map(Matrix::frobenius_norm_sq).sum::<f64>();
    let (mut h_penalty, mut v_penalty) = (0.0, 0.0);
    if let Some(s) = slack {
        assert_eq!(s.h.len(), trace.n_hidden(), "one H block per hidden layer");
        assert_eq!(s.v.len(), params.n_layers(), "one V block per weight layer");
        for (i, h) in s.h.iter().enumerate() {
            h_penalty += trace.hidden(i).sub(h).frobenius_norm_sq() / (2.0 * s.mu_h);
        }
        for (w, v) in params.weights.iter().zip(s.v) {
            v_penalty += w.sub(v).frobenius_norm_sq() / (2.0 * s.mu_v);
        }
    }
    SmoothObjectiveParts {
        masked_loss,
        weight_decay,
        h_penalty,
        v_penalty,
    }
}

/// Gradient of the smooth objective with respect to every parameter.
#[derive(Debug, Clone)]
pub struct GradTheta {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Matrix>,
}

impl GradTheta {
    /// Squared Euclidean norm over all parameters.
    pub fn norm_sq(&self) -> f64 {
        self.weights.iter().map(Matrix::frobenius_norm_sq).sum::<f64>()
            + self.biases.iter().map(Matrix::frobenius_norm_sq).sum::<f64>()
    }
}

/// Exact gradient of [`smooth_objective`] by reverse accumulation.
///
/// The backward pass reuses the forward `trace`. With `D⁽ˡ⁾` the gradient
/// with respect to `pre[l]`:
///
/// ```text
/// D⁽ᵖ⁻¹⁾ = 2 N ⊙ (X̂ − X)                       (linear output layer)
/// ∂g/∂W⁽ˡ⁾ = D⁽ˡ⁾ A⁽ˡ⁾ᵀ + 2λW⁽ˡ⁾ + (W⁽ˡ⁾ − V⁽ˡ⁾)/μ_v
/// ∂g/∂b⁽ˡ⁾ = D⁽ˡ⁾ 1
/// S⁽ˡ⁾     = W⁽ˡ⁾ᵀ D⁽ˡ⁾ + (A⁽ˡ⁾ − H⁽ˡ⁾)/μ_h     (slack enters at the output
/// D⁽ˡ⁻¹⁾   = S⁽ˡ⁾ ⊙ σ′(pre[l-1])                of each hidden layer)
/// ```
pub fn grad_theta(
    params: &NetworkParams,
    trace: &ForwardTrace,
    x: &Matrix,
    mask: &Matrix,
    lambda: f64,
    slack: Option<&SlackTerms>,
) -> GradTheta {
    let p = params.n_layers();
    let mut d_weights = vec![Matrix::zeros(0, 0); p];
    let mut d_biases = vec![Matrix::zeros(0, 0); p];

    // Linear output layer: gradient w.r.t. the final pre-activation.
    let mut d = mask.hadamard(&trace.xhat().sub(x)).scale(2.0);

    for l in (0..p).rev() {
        let mut gw = d.matmul_a_bt(&trace.post[l]);
        gw.axpy(2.0 * lambda, &params.weights[l]);
        if let Some(s) = slack {
            gw.axpy(1.0 / s.mu_v, &params.weights[l].sub(&s.v[l]));
        }
        let mut gb = Matrix::zeros(d.rows(), 1);
        for i in 0..d.rows() {
            gb.set(i, 0, d.row(i).iter().sum());
        }
        d_weights[l] = gw;
        d_biases[l] = gb;

        if l > 0 {
            // Gradient w.r.t. hidden output l-1 (stored as post[l]) …
            let mut s_grad = params.weights[l].matmul_at_b(&d);
            if let Some(s) = slack {
                s_grad.axpy(1.0 / s.mu_h, &trace.post[l].sub(&s.h[l - 1]));
            }
            // … pulled through the activation to the pre-activation.
            let act = params.activation;
            d = s_grad.hadamard(&trace.pre[l - 1].map(|v| act.derivative(v)));
        }
    }

    GradTheta { weights: d_weights, biases: d_biases }
}

// ─── tests ───
