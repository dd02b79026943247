//! Completion quality metrics and per-trial reporting.

use crate::matrix::Matrix;

/// Peak signal-to-noise ratio in decibels:
///
/// ```text
/// PSNR = 10 · log₁₀( m·n · max(X)² / ‖X̂ − X‖²_F )
/// ```
///
/// where `max(X)` is the largest *entry* of the reference. A perfect
/// reconstruction yields `+∞`.
pub fn psnr(reference: &Matrix, estimate: &Matrix) -> f64 {
    assert_eq!(reference.shape(), estimate.shape(), "psnr shape mismatch");
    let err = estimate.sub(reference).frobenius_norm_sq();
    if err == 0.0 {
        return f64::INFINITY;
    }
    let peak = reference.max();
    10.0 * ((reference.len() as f64) * peak * peak / err).log10()
}

/// Normalized squared error over the *missing* entries:
///
/// ```text
/// MSE = Σ_Ω̄ (x̂ − x)² / Σ_Ω̄ x²
/// ```
///
/// Degenerate cases: with no signal on the missing set the ratio is 0 when
/// the error is also 0, `+∞` otherwise.
pub fn mse_unobserved(reference: &Matrix, estimate: &Matrix, mask: &Matrix) -> f64 {
    assert_eq!(reference.shape(), estimate.shape(), "mse shape mismatch");
    assert_eq!(reference.shape(), mask.shape(), "mse mask mismatch");
    let mut num = 0.0;
    let mut den = 0.0;
    for idx in 0..reference.len() {
        if mask.as_slice()[idx] == 0.0 {
            let x = reference.as_slice()[idx];
            let d = estimate.as_slice()[idx] - x;
            num += d * d;
            den += x * x;
        }
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    num / den
}

/// Global structural similarity with fixed stabilizers `C₁ = 0.01`,
/// `C₂ = 0.03`, using population moments over the whole matrix:
///
/// ```text
/// SSIM = (2 μₐ μᵦ + C₁)(2 cov + C₂) / ((μₐ² + μᵦ² + C₁)(σₐ² + σᵦ² + C₂))
/// ```
///
/// Returns the raw value in `[-1, 1]`; meaningful for data in `[0, 1]`
/// such as the image channel stacks.
pub fn ssim(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "ssim shape mismatch");
    const C1: f64 = 0.01;
    const C2: f64 = 0.03;
    let n = a.len() as f64;
    let mu_a = a.sum() / n;
    let mu_b = b.sum() / n;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    let mut cov = 0.0;
    for idx in 0..a.len() {
        let da = a.as_slice()[idx] - mu_a;
        let db = b.as_slice()[idx] - mu_b;
        var_a += da * da;
        var_b += db * db;
        cov += da * db;
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2))
        / ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2))
}

/// Normalized mean absolute error over the missing entries:
///
/// ```text
/// NMAE = Σ_Ω̄ |x̂ − x| / ((x_max − x_min) · |Ω̄|)
/// ```
///
/// The value range `[x_min, x_max]` is passed explicitly (for ratings it is
/// the rating scale, not the observed extremes).
pub fn nmae(reference: &Matrix, estimate: &Matrix, mask: &Matrix, x_min: f64, x_max: f64) -> f64 {
    assert_eq!(reference.shape(), estimate.shape(), "nmae shape mismatch");
    assert_eq!(reference.shape(), mask.shape(), "nmae mask mismatch");
    assert!(x_max > x_min, "value range must be nonempty");
    let mut total = 0.0;
    let mut count = 0usize;
    for idx in 0..reference.len() {
        if mask.as_slice()[idx] == 0.0 {
            total += (estimate.as_slice()[idx] - reference.as_slice()[idx]).abs();
            count += 1;
        }
    }
    if count == 0 {
        return 0.0;
    }
    total / ((x_max - x_min) * count as f64)
}

/// Mean and population standard deviation of a sample.
pub fn aggregate(values: &[f64]) -> (f64, f64) {
    assert!(!values.is_empty(), "cannot aggregate zero values");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Quality summary of one completion trial.
#[derive(Debug, Clone, Copy)]
pub struct TrialReport {
    pub psnr: f64,
    pub mse: f64,
    /// SSIM clamped to `[0, 1]` for reporting.
    pub ssim: f64,
    /// The unclamped SSIM value.
    pub ssim_raw: f64,
    /// Only for ratings-style data with a fixed scale.
    pub nmae: Option<f64>,
    pub seed: u64,
    /// Wall-clock seconds of the trial. Excluded from metric files (kept in
    /// run metadata) so that repeated runs produce byte-identical reports.
    pub wall_time: f64,
}

impl TrialReport {
    /// Builds a report from reference, estimate, and mask; `nmae_range`
    /// supplies the rating scale when NMAE applies.
    pub fn new(
        reference: &Matrix,
        estimate: &Matrix,
        mask: &Matrix,
        nmae_range: Option<(f64, f64)>,
        seed: u64,
        wall_time: f64,
    ) -> TrialReport {
        let raw = ssim(reference, estimate);
        TrialReport {
            psnr: psnr(reference, estimate),
            mse: mse_unobserved(reference, estimate, mask),
            ssim: raw.clamp(0.0, 1.0),
            ssim_raw: raw,
            nmae: nmae_range.map(|(lo, hi)| nmae(reference, estimate, mask, lo, hi)),
            seed,
            wall_time,
        }
    }
}

// ─── tests ───
