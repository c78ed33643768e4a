//! Subjective-score statistics and metric benchmarking.

use std::collections::BTreeMap;

use serde::Serialize;

pub mod correlation;
pub mod kruskal;
pub mod linear;
pub mod logistic;
pub mod loss;
pub mod mos;
pub mod rate;

pub use correlation::{correlation_report, pearson, spearman, CorrelationSummary};
pub use kruskal::{kruskal_wallis, KruskalWallis};
pub use linear::{linear_fit_compare, normalize_opinion, LinearComparison};
pub use logistic::{fit_logistic, LogisticFit};
pub use loss::{bce, focal_bce};
pub use mos::mos_with_ci;
pub use rate::{bitrate, bpp, Bitrate};

use crate::error::{Error, Result};

/// One codec/content/rate point of a subjective test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StimulusRecord {
    pub stimulus_id: String,
    pub content: String,
    pub codec: String,
    pub rate: String,
    pub geometry_bits: u64,
    pub texture_bits: u64,
    pub points: u64,
    pub raw_scores: Vec<u8>,
    pub mos: f64,
    pub ci95: f64,
    pub metrics: BTreeMap<String, f64>,
}

impl StimulusRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        stimulus_id: impl Into<String>,
        content: impl Into<String>,
        codec: impl Into<String>,
        rate: impl Into<String>,
        geometry_bits: u64,
        texture_bits: u64,
        points: u64,
        raw_scores: Vec<u8>,
    ) -> Result<Self> {
        if let Some(s) = raw_scores.iter().find(|s| !(1..=5).contains(*s)) {
            return Err(Error::InvalidArgument(format!("opinion score {s} outside 1..=5")));
        }
        let as_f64: Vec<f64> = raw_scores.iter().map(|&s| s as f64).collect();
        let (mos, ci95) = mos_with_ci(&as_f64)?;
        Ok(Self {
            stimulus_id: stimulus_id.into(),
            content: content.into(),
            codec: codec.into(),
            rate: rate.into(),
            geometry_bits,
            texture_bits,
            points,
            raw_scores,
            mos,
            ci95,
            metrics: BTreeMap::new(),
        })
    }

    pub fn bitrate(&self) -> Result<Bitrate> {
        bitrate(self.geometry_bits, self.texture_bits, self.points)
    }
}

/// Metric-versus-MOS benchmark for one metric on one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub metric: String,
    pub evaluation: String,
    pub logistic: [f64; 4],
    pub logistic_form: &'static str,
    pub degenerate_fit: bool,
    pub stimuli: Vec<String>,
    pub predictions: Vec<f64>,
    pub pcc: f64,
    pub srocc: f64,
    pub rmse: f64,
    #[serde(rename = "or")]
    pub or_: f64,
}

/// Fits the logistic mapping and reports PCC/SROCC/RMSE/OR of its
/// predictions against MOS.
pub fn benchmark_metric(
    metric: &str,
    evaluation: &str,
    stimuli: Vec<String>,
    objective: &[f64],
    mos: &[f64],
    ci95: &[f64],
) -> Result<BenchmarkReport> {
    let fit = fit_logistic(objective, mos)?;
    let summary = correlation_report(&fit.predictions, mos, ci95)?;
    Ok(BenchmarkReport {
        metric: metric.to_string(),
        evaluation: evaluation.to_string(),
        logistic: fit.params,
        logistic_form: "4-parameter monotone logistic",
        degenerate_fit: fit.degenerate,
        stimuli,
        predictions: fit.predictions,
        pcc: summary.pcc,
        srocc: summary.srocc,
        rmse: summary.rmse,
        or_: summary.or_,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_validation() {
        assert!(StimulusRecord::new("s", "c", "k", "R01", 0, 0, 1, vec![1, 6]).is_err());
        let r = StimulusRecord::new("s", "c", "k", "R01", 10, 6, 8, vec![4, 5]).unwrap();
        assert_eq!(r.mos, 4.5);
        assert_eq!(r.bitrate().unwrap().bpp_total, 2.0);
    }
}
