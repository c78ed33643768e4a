use serde::Serialize;

use super::correlation::{check_pair, correlation_report, CorrelationSummary};
use crate::error::{Error, Result};

/// Maps a score on the 1–5 opinion scale onto [0, 1].
pub fn normalize_opinion(score: f64) -> f64 {
    (score - 1.0) / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearComparison {
    pub slope: f64,
    pub intercept: f64,
    #[serde(flatten)]
    pub summary: CorrelationSummary,
}

/// Ordinary least-squares line `b ≈ slope·a + intercept`, then the
/// correlation suite of the fitted values against `b`.
///
/// Inputs are used as given; callers normalize opinion scores with
/// [`normalize_opinion`] (and scale `ci_b` to match) beforehand.
pub fn linear_fit_compare(mos_a: &[f64], mos_b: &[f64], ci_b: &[f64]) -> Result<LinearComparison> {
    check_pair(mos_a, mos_b, 3)?;
    let n = mos_a.len() as f64;
    let (ma, mb) = (mos_a.iter().sum::<f64>() / n, mos_b.iter().sum::<f64>() / n);
    let (mut sab, mut saa) = (0.0, 0.0);
    for (a, b) in mos_a.iter().zip(mos_b) {
        sab += (a - ma) * (b - mb);
        saa += (a - ma) * (a - ma);
    }
    if saa == 0.0 {
        return Err(Error::Degenerate("zero variance in the first score set".into()));
    }
    let slope = sab / saa;
    let intercept = mb - slope * ma;
    let fitted: Vec<f64> = mos_a.iter().map(|a| slope * a + intercept).collect();
    Ok(LinearComparison {
        slope,
        intercept,
        summary: correlation_report(&fitted, mos_b, ci_b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let a = [0.1, 0.4, 0.35, 0.9];
        let r = linear_fit_compare(&a, &a, &[0.05; 4]).unwrap();
        assert!((r.slope - 1.0).abs() < 1e-15);
        assert!(r.intercept.abs() < 1e-15);
        assert!((r.summary.pcc - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_line() {
        let a = [0.0, 0.25, 0.5, 0.6, 1.0];
        let b: Vec<f64> = a.iter().map(|v| 0.5 * v + 0.1).collect();
        let r = linear_fit_compare(&a, &b, &[0.0; 5]).unwrap();
        assert!((r.slope - 0.5).abs() < 1e-12);
        assert!((r.intercept - 0.1).abs() < 1e-12);
        assert!(r.summary.rmse < 1e-12);
    }

    #[test]
    fn zero_variance() {
        assert!(linear_fit_compare(&[0.5; 3], &[0.1, 0.2, 0.3], &[0.0; 3]).is_err());
    }

    #[test]
    fn opinion_scale() {
        assert_eq!(normalize_opinion(1.0), 0.0);
        assert_eq!(normalize_opinion(5.0), 1.0);
    }
}
