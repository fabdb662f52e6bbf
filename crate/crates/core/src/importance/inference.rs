//! Wald-type inference from estimated influence values.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{DfiError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceSettings {
    pub alpha: f64,
    /// Add `n^{-1/2} / z_{1-α}` to the variance so intervals and tests stay
    /// valid for near-null targets.
    pub inflate_near_null: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inference {
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub z_score: f64,
    pub p_value: f64,
}

/// Upper standard normal quantile `z_{1-q}`.
pub fn normal_upper_quantile(q: f64) -> f64 {
    let std = Normal::standard();
    std.inverse_cdf(1.0 - q)
}

/// `1 - Φ(z)`, computed through erfc to keep precision in the tail.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Standard error, two-sided interval and one-sided test of `H₀: φ ≤ 0`.
///
/// `se² = V_n[φ̂] / n` with the n - 1 sample variance. With inflation on,
/// the interval and the z-score both use `se² + n^{-1/2} / z_{1-α}`.
pub fn infer(estimate: f64, influence: &[f64], settings: InferenceSettings) -> Result<Inference> {
    let n = influence.len();
    if n < 2 {
        return Err(DfiError::InvalidDataset(format!(
            "inference needs at least 2 influence values, got {n}"
        )));
    }
    if !(settings.alpha > 0.0 && settings.alpha < 1.0) {
        return Err(DfiError::InvalidConfig(format!("alpha must lie in (0, 1), got {}", settings.alpha)));
    }
    if settings.inflate_near_null && settings.alpha >= 0.5 {
        return Err(DfiError::InvalidConfig(format!(
            "near-null inflation needs alpha < 0.5, got {}",
            settings.alpha
        )));
    }
    let nf = n as f64;
    let mean = influence.iter().sum::<f64>() / nf;
    let var = influence.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    let std_error = (var / nf).sqrt();
    let se_used = if settings.inflate_near_null {
        (std_error * std_error + nf.powf(-0.5) / normal_upper_quantile(settings.alpha)).sqrt()
    } else {
        std_error
    };
    let half = normal_upper_quantile(settings.alpha / 2.0) * se_used;
    let (z_score, p_value) = if se_used > 0.0 {
        let z = estimate / se_used;
        (z, normal_sf(z))
    } else if estimate == 0.0 {
        // degenerate null: no spread and nothing to detect
        (0.0, 1.0)
    } else {
        // no spread but a nonzero estimate; f64::MAX keeps the report finite
        let z = f64::MAX.copysign(estimate);
        (z, if estimate > 0.0 { 0.0 } else { 1.0 })
    };
    Ok(Inference {
        std_error,
        ci_low: estimate - half,
        ci_high: estimate + half,
        z_score,
        p_value: p_value.clamp(0.0, 1.0),
    })
}
