//! Occupancy losses used to train learned geometry codecs, evaluated as
//! standalone diagnostics.

use crate::error::{Error, Result};

pub const PROBABILITY_CLAMP: f64 = 1e-12;

fn clamp(p: f64) -> f64 {
    p.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
}

fn check(occupancy: &[bool], probability: &[f64]) -> Result<()> {
    if occupancy.len() != probability.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} probabilities",
            occupancy.len(),
            probability.len()
        )));
    }
    if occupancy.is_empty() {
        return Err(Error::InvalidArgument("empty input".into()));
    }
    Ok(())
}

/// Mean binary cross-entropy.
pub fn bce(occupancy: &[bool], probability: &[f64]) -> Result<f64> {
    check(occupancy, probability)?;
    let total: f64 = occupancy
        .iter()
        .zip(probability)
        .map(|(&x, &p)| {
            let p = clamp(p);
            if x {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / occupancy.len() as f64)
}

/// Mean focal loss: `−α(1−p)^γ log p` for occupied voxels and
/// `−(1−α) p^γ log(1−p)` for empty ones.
pub fn focal_bce(occupancy: &[bool], probability: &[f64], alpha: f64, gamma: f64) -> Result<f64> {
    check(occupancy, probability)?;
    let total: f64 = occupancy
        .iter()
        .zip(probability)
        .map(|(&x, &p)| {
            let p = clamp(p);
            if x {
                -alpha * (1.0 - p).powf(gamma) * p.ln()
            } else {
                -(1.0 - alpha) * p.powf(gamma) * (1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / occupancy.len() as f64)
}
