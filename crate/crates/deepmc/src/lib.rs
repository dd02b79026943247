//! Matrix completion with a deep autoencoder trained by alternating proximal
//! updates under nonsmooth (ℓ1 + nuclear-norm) regularization, together with
//! classical baselines and evaluation utilities.
//!
//! The crate is organized bottom-up:
//!
//! * [`matrix`] — dense row-major matrix substrate and a thin SVD wrapper
//! * [`rng`] — seeded, portable random number generation (xoshiro256++)
//! * [`prox`] — closed-form proximal operators (soft-threshold, singular
//!   value thresholding, ℓ∞ box clipping)
//! * [`fcnn`] — fully connected autoencoder: forward pass, smooth objective,
//!   and its exact gradient
//! * [`trainer`] — the alternating proximal training loop with penalty
//!   annealing, extrapolation, and adaptive restart
//! * [`baselines`] — soft-impute and a plain gradient-descent autoencoder
//! * [`datasets`] — synthetic generator, masking, image and ratings adapters
//! * [`metrics`] — PSNR / MSE / SSIM / NMAE and trial aggregation

pub mod baselines;
pub mod datasets;
mod error;
pub mod fcnn;
pub mod matrix;
pub mod metrics;
pub mod prox;
pub mod rng;
pub mod trainer;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
