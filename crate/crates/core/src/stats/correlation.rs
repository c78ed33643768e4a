use serde::Serialize;

use crate::error::{Error, Result};

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("correlation undefined for a zero-variance input".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

pub fn rmse(predictions: &[f64], targets: &[f64]) -> f64 {
    let n = predictions.len() as f64;
    (predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
}

/// Fraction of stimuli whose absolute prediction error exceeds their own
/// 95% confidence half-width.
pub fn outlier_ratio(predictions: &[f64], mos: &[f64], ci95: &[f64]) -> f64 {
    let outliers = predictions
        .iter()
        .zip(mos)
        .zip(ci95)
        .filter(|((p, m), c)| (*p - *m).abs() > **c)
        .count();
    outliers as f64 / predictions.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationSummary {
    pub pcc: f64,
    pub srocc: f64,
    pub rmse: f64,
    #[serde(rename = "or")]
    pub or_: f64,
}

pub fn correlation_report(predictions: &[f64], mos: &[f64], ci95: &[f64]) -> Result<CorrelationSummary> {
    check_pair(predictions, mos, 3)?;
    if ci95.len() != mos.len() {
        return Err(Error::InvalidArgument(format!(
            "{} confidence intervals for {} scores",
            ci95.len(),
            mos.len()
        )));
    }
    Ok(CorrelationSummary {
        pcc: pearson(predictions, mos)?,
        srocc: spearman(predictions, mos)?,
        rmse: rmse(predictions, mos),
        or_: outlier_ratio(predictions, mos, ci95),
    })
}

pub(crate) fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < min {
        return Err(Error::InvalidArgument(format!("need at least {min} samples, got {}", x.len())));
    }
    Ok(())
}
