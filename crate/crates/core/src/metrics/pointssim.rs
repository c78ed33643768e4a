//! Structural similarity over local luminance dispersion.
//!
//! The feature of a point is the coefficient of variation of luminance over
//! its `K` nearest neighbors (itself included) within its own cloud. Each
//! distorted point `p` is compared with its nearest reference point `q`,
//! and the relative feature differences are pooled by a power mean.

use rayon::prelude::*;

use super::{MetricConfig, MetricKind, MetricResult};
use crate::cloud::PointCloud;
use crate::color::rgb_to_ycbcr;
use crate::error::Result;
use crate::index::NeighborIndex;

/// Standard deviation (n − 1 normalization) over mean. Zero for a single
/// sample or a zero mean.
pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    // Shifted by the first sample so flat neighborhoods give exactly 0.
    let shift = values[0];
    let offset = values.iter().map(|v| v - shift).sum::<f64>() / n as f64;
    let mean = shift + offset;
    if mean == 0.0 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - shift - offset).powi(2)).sum::<f64>() / (n - 1) as f64;
    var.sqrt() / mean.abs()
}

/// Relative difference of two features; 0 when both are 0.
pub fn relative_difference(fx: f64, fy: f64) -> f64 {
    let denom = fx.abs().max(fy.abs());
    if denom == 0.0 {
        0.0
    } else {
        (fx - fy).abs() / denom
    }
}

fn dispersion_features(cloud: &PointCloud, index: &NeighborIndex, luma: &[f64], k: usize) -> Vec<f64> {
    cloud
        .positions()
        .par_iter()
        .map(|p| {
            let hood: Vec<f64> = index
                .k_nearest_clamped(p, k)
                .iter()
                .map(|n| luma[n.index])
                .collect();
            coefficient_of_variation(&hood)
        })
        .collect()
}

pub fn point_ssim(reference: &PointCloud, distorted: &PointCloud, cfg: &MetricConfig) -> Result<MetricResult> {
    let luma_of = |c: &PointCloud| -> Result<Vec<f64>> {
        Ok(c.require_colors()?
            .iter()
            .map(|&rgb| rgb_to_ycbcr(rgb, cfg.ycbcr_matrix).y)
            .collect())
    };
    let (ref_luma, dist_luma) = (luma_of(reference)?, luma_of(distorted)?);
    let ref_index = NeighborIndex::new(reference.positions());
    let dist_index = NeighborIndex::new(distorted.positions());
    let k = cfg.pointssim_neighbors;

    let fx = dispersion_features(reference, &ref_index, &ref_luma, k);
    let fy = dispersion_features(distorted, &dist_index, &dist_luma, k);
    let exponent = cfg.pointssim_pooling_exponent;
    let scores: Vec<f64> = distorted
        .positions()
        .par_iter()
        .zip(fy.par_iter())
        .map(|(p, &f_p)| {
            let q = ref_index.nearest(p).index;
            relative_difference(fx[q], f_p).powf(exponent)
        })
        .collect();
    let value = scores.iter().sum::<f64>() / scores.len() as f64;
    let mut r = MetricResult::new(MetricKind::PointSsim, value);
    r.identical = value == 0.0;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cov_edge_cases() {
        assert_eq!(coefficient_of_variation(&[0.4]), 0.0);
        assert_eq!(coefficient_of_variation(&[0.0, 0.0]), 0.0);
        assert_eq!(coefficient_of_variation(&[0.3; 5]), 0.0);
        assert!((coefficient_of_variation(&[1.0, 3.0]) - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn both_zero_features_score_zero() {
        assert_eq!(relative_difference(0.0, 0.0), 0.0);
        assert_eq!(relative_difference(0.5, 0.0), 1.0);
        assert_eq!(relative_difference(0.2, 0.4), 0.5);
    }

    #[test]
    fn flat_luminance_on_both_sides() {
        let pts: Vec<_> = (0..20).map(|i| [i as f64, 0.0, 0.0]).collect();
        let a = PointCloud::new(pts.clone()).unwrap().with_colors(vec![[90, 90, 90]; 20]).unwrap();
        let b = PointCloud::new(pts).unwrap().with_colors(vec![[10, 200, 30]; 20]).unwrap();
        assert_eq!(point_ssim(&a, &b, &MetricConfig::default()).unwrap().value, 0.0);
    }

    #[test]
    fn needs_colors() {
        let c = PointCloud::new(vec![[0.0; 3]]).unwrap();
        assert!(point_ssim(&c, &c, &MetricConfig::default()).is_err());
    }
}
