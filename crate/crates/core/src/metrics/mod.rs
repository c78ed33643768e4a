//! Full-reference objective quality metrics.
//!
//! Every metric is a pure function of `(reference, distorted, config)`.
//! Per-point work runs in parallel, but partial results are collected in
//! point order and reduced serially, so the thread count never changes a
//! result bit.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::color::YcbcrMatrix;
use crate::error::{Error, Result};
use crate::normals::estimate_normals;

pub mod graphsim;
pub mod p2d;
pub mod pcmrr;
pub mod pcqm;
pub mod pointssim;
pub mod psnr;

pub use graphsim::graph_sim;
pub use p2d::p2d;
pub use pcmrr::pcm_rr;
pub use pcqm::pcqm;
pub use pointssim::point_ssim;
pub use psnr::{d1_psnr, d2_psnr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    D1,
    D2,
    #[serde(rename = "pssim")]
    PointSsim,
    Pcqm,
    P2d,
    #[serde(rename = "pcmrr")]
    PcmRr,
    #[serde(rename = "graphsim")]
    GraphSim,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::D1,
        MetricKind::D2,
        MetricKind::PointSsim,
        MetricKind::Pcqm,
        MetricKind::P2d,
        MetricKind::PcmRr,
        MetricKind::GraphSim,
    ];

    pub fn id(self) -> &'static str {
        match self {
            MetricKind::D1 => "d1",
            MetricKind::D2 => "d2",
            MetricKind::PointSsim => "pssim",
            MetricKind::Pcqm => "pcqm",
            MetricKind::P2d => "p2d",
            MetricKind::PcmRr => "pcmrr",
            MetricKind::GraphSim => "graphsim",
        }
    }

    pub fn polarity(self) -> Polarity {
        match self {
            MetricKind::D1 | MetricKind::D2 | MetricKind::P2d | MetricKind::GraphSim => {
                Polarity::HigherBetter
            }
            MetricKind::PointSsim | MetricKind::Pcqm | MetricKind::PcmRr => Polarity::LowerBetter,
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.id() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    HigherBetter,
    LowerBetter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricResult {
    pub name: MetricKind,
    /// `+inf` for PSNR-style metrics on identical inputs.
    pub value: f64,
    pub polarity: Polarity,
    pub identical: bool,
    pub aux: BTreeMap<String, f64>,
}

impl MetricResult {
    fn new(name: MetricKind, value: f64) -> Self {
        Self {
            name,
            value,
            polarity: name.polarity(),
            identical: false,
            aux: BTreeMap::new(),
        }
    }

    fn with_aux(mut self, key: &str, value: f64) -> Self {
        self.aux.insert(key.to_string(), value);
        self
    }
}

/// Parameters for every metric. Weight vectors have no defaults: they must
/// come from a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    /// PSNR peak. `None` uses the reference bounding-box diagonal.
    pub peak_value: Option<f64>,
    /// Report the worse of both directions for D1/D2; otherwise only
    /// distorted → reference.
    pub symmetric: bool,
    /// Neighborhood radius for normal estimation.
    pub normal_radius: f64,
    /// Estimate normals when a metric needs them and the cloud has none.
    pub estimate_normals: bool,
    pub ycbcr_matrix: YcbcrMatrix,

    pub pointssim_neighbors: usize,
    pub pointssim_pooling_exponent: f64,

    /// Surface-fitting radius for PCQM. `None` uses twice the reference
    /// sparsity.
    pub pcqm_radius: Option<f64>,
    pub pcqm_weights: Option<Vec<f64>>,

    pub p2d_neighbors: usize,

    pub pcmrr_bins: usize,
    pub pcmrr_neighbors: usize,
    pub pcmrr_weights: Option<Vec<f64>>,

    /// Per-channel pooling factors for Y, Cb, Cr.
    pub graph_channel_pooling: [f64; 3],
    pub graph_keypoints: usize,
    pub graph_neighbors: usize,
    /// Local-graph radius. `None` uses three times the reference sparsity.
    pub graph_radius: Option<f64>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            peak_value: None,
            symmetric: true,
            normal_radius: 5.0,
            estimate_normals: true,
            ycbcr_matrix: YcbcrMatrix::Bt709,
            pointssim_neighbors: 12,
            pointssim_pooling_exponent: 1.0,
            pcqm_radius: None,
            pcqm_weights: None,
            p2d_neighbors: 31,
            pcmrr_bins: 256,
            pcmrr_neighbors: 12,
            pcmrr_weights: None,
            graph_channel_pooling: [1.0, 1.0, 1.0],
            graph_keypoints: 32,
            graph_neighbors: 12,
            graph_radius: None,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidArgument(what));
        if let Some(p) = self.peak_value {
            if !(p > 0.0) || !p.is_finite() {
                return bad(format!("peak_value must be > 0, got {p}"));
            }
        }
        if !(self.normal_radius > 0.0) {
            return bad(format!("normal_radius must be > 0, got {}", self.normal_radius));
        }
        for (name, v) in [
            ("pointssim_neighbors", self.pointssim_neighbors),
            ("p2d_neighbors", self.p2d_neighbors),
            ("pcmrr_bins", self.pcmrr_bins),
            ("pcmrr_neighbors", self.pcmrr_neighbors),
            ("graph_keypoints", self.graph_keypoints),
            ("graph_neighbors", self.graph_neighbors),
        ] {
            if v == 0 {
                return bad(format!("{name} must be >= 1"));
            }
        }
        if self.p2d_neighbors < 4 {
            return bad("p2d_neighbors must be >= 4".into());
        }
        if !(self.pointssim_pooling_exponent > 0.0) {
            return bad("pointssim_pooling_exponent must be > 0".into());
        }
        for r in [self.pcqm_radius, self.graph_radius].into_iter().flatten() {
            if !(r > 0.0) {
                return bad(format!("radius must be > 0, got {r}"));
            }
        }
        if self.graph_channel_pooling.iter().any(|g| !(*g >= 0.0))
            || self.graph_channel_pooling.iter().sum::<f64>() <= 0.0
        {
            return bad("graph_channel_pooling needs non-negative factors with a positive sum".into());
        }
        if let Some(w) = &self.pcqm_weights {
            if w.len() != pcqm::FEATURE_COUNT {
                return bad(format!("pcqm_weights needs {} entries, got {}", pcqm::FEATURE_COUNT, w.len()));
            }
        }
        if let Some(w) = &self.pcmrr_weights {
            if w.len() != pcmrr::FEATURE_COUNT {
                return bad(format!("pcmrr_weights needs {} entries, got {}", pcmrr::FEATURE_COUNT, w.len()));
            }
        }
        Ok(())
    }
}

/// Runs one metric by id.
pub fn compute(kind: MetricKind, reference: &PointCloud, distorted: &PointCloud, cfg: &MetricConfig) -> Result<MetricResult> {
    cfg.validate()?;
    match kind {
        MetricKind::D1 => d1_psnr(reference, distorted, cfg),
        MetricKind::D2 => d2_psnr(reference, distorted, cfg),
        MetricKind::PointSsim => point_ssim(reference, distorted, cfg),
        MetricKind::Pcqm => pcqm(reference, distorted, cfg),
        MetricKind::P2d => p2d(reference, distorted, cfg),
        MetricKind::PcmRr => pcm_rr(reference, distorted, cfg),
        MetricKind::GraphSim => graph_sim(reference, distorted, cfg),
    }
}

/// Returns the cloud's normals, estimating them when allowed.
pub(crate) fn ensure_normals<'a>(
    cloud: &'a PointCloud,
    cfg: &MetricConfig,
) -> Result<std::borrow::Cow<'a, PointCloud>> {
    if cloud.normals().is_some() {
        return Ok(std::borrow::Cow::Borrowed(cloud));
    }
    if !cfg.estimate_normals {
        return Err(Error::MissingAttribute("normals"));
    }
    let est = estimate_normals(cloud, cfg.normal_radius)?;
    Ok(std::borrow::Cow::Owned(est.apply(cloud.clone())?))
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn psnr_db(peak: f64, mse: f64) -> f64 {
    10.0 * (peak * peak / mse).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_ids_round_trip() {
        for k in MetricKind::ALL {
            assert_eq!(k.id().parse::<MetricKind>().unwrap(), k);
        }
        assert!("psnr".parse::<MetricKind>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(MetricConfig::default().validate().is_ok());
        let bad = MetricConfig {
            pcqm_weights: Some(vec![1.0; 3]),
            ..MetricConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = MetricConfig {
            peak_value: Some(0.0),
            ..MetricConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = MetricConfig {
            p2d_neighbors: 3,
            ..MetricConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
